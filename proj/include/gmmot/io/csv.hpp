#pragma once

#include <charconv>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "gmmot/io/files.hpp"
#include "gmmot/mixture.hpp"

namespace gmmot::io {

namespace detail {

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace detail

/// Parses `f0,...,f{d-1},label` CSV text. An empty label column marks an unlabeled dataset;
/// labels must be either all present or all empty. n_classes is max label + 1.
inline LabeledDataset parse_csv(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto pos = text.find('\n', start);
    if (pos == std::string_view::npos) pos = text.size();
    lines.push_back(text.substr(start, pos - start));
    start = pos + 1;
  }
  while (!lines.empty() && detail::trim(lines.back()).empty()) lines.pop_back();
  if (lines.empty()) throw ParseError(1, "missing header");

  const auto header = detail::split_commas(detail::trim(lines.front()));
  if (header.size() < 2 || detail::trim(header.back()) != "label")
    throw ParseError(1, "header must be f0,...,f{d-1},label");
  const std::size_t d = header.size() - 1;
  for (std::size_t j = 0; j < d; ++j)
    if (detail::trim(header[j]) != "f" + std::to_string(j))
      throw ParseError(1, "expected column f" + std::to_string(j) + ", found '" + std::string(header[j]) + "'");
  if (lines.size() < 2) throw ParseError(0, "dataset is empty (header only)");

  const std::size_t n = lines.size() - 1;
  LabeledDataset ds;
  ds.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  std::vector<int> labels(n, -1);
  int labeled_rows = 0;
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t lineno = r + 2;
    const auto cols = detail::split_commas(detail::trim(lines[r + 1]));
    if (cols.size() != d + 1)
      throw ParseError(lineno, "expected " + std::to_string(d + 1) + " columns, found " + std::to_string(cols.size()));
    for (std::size_t j = 0; j < d; ++j) {
      const auto tok = detail::trim(cols[j]);
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (ec != std::errc() || ptr != tok.data() + tok.size() || tok.empty())
        throw ParseError(lineno, "non-numeric feature '" + std::string(tok) + "' in column f" + std::to_string(j));
      ds.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = v;
    }
    const auto tok = detail::trim(cols[d]);
    if (!tok.empty()) {
      int y = -1;
      const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), y);
      if (ec != std::errc() || ptr != tok.data() + tok.size() || y < 0)
        throw ParseError(lineno, "unknown label token '" + std::string(tok) + "'");
      labels[r] = y;
      ++labeled_rows;
    }
  }
  if (labeled_rows != 0 && labeled_rows != static_cast<int>(n))
    throw ParseError(0, "labels must be present on every row or on none");
  if (labeled_rows > 0) {
    int mx = 0;
    for (int y : labels) mx = std::max(mx, y);
    ds.n_classes = mx + 1;
    ds.labels = std::move(labels);
  }
  if (!ds.features.allFinite()) throw ParseError(0, "non-finite feature value");
  return ds;
}

inline LabeledDataset load_csv(const std::filesystem::path& path) {
  return parse_csv(read_file(path));
}

inline std::string format_csv(const LabeledDataset& ds) {
  std::string out;
  for (Eigen::Index j = 0; j < ds.dim(); ++j) out += "f" + std::to_string(j) + ",";
  out += "label\n";
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    for (Eigen::Index j = 0; j < ds.dim(); ++j) out += detail::format_double(ds.features(i, j)) + ",";
    if (ds.labels) out += std::to_string((*ds.labels)[static_cast<std::size_t>(i)]);
    out += "\n";
  }
  return out;
}

inline void save_csv(const LabeledDataset& ds, const std::filesystem::path& path) {
  ds.validate();
  write_file_atomic(path, format_csv(ds));
}

}  // namespace gmmot::io
