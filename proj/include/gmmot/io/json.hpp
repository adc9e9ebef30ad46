#pragma once

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "gmmot/barycenter.hpp"
#include "gmmot/dadil.hpp"
#include "gmmot/io/files.hpp"
#include "gmmot/mixture.hpp"
#include "gmmot/transport.hpp"

namespace gmmot::io {

using Json = nlohmann::ordered_json;

namespace detail {

inline void dump_into(const Json& j, std::string& out, int indent, int level) {
  const std::string pad(static_cast<std::size_t>(indent * (level + 1)), ' ');
  const std::string pad_close(static_cast<std::size_t>(indent * level), ' ');
  switch (j.type()) {
    case Json::value_t::number_float: {
      const double v = j.get<double>();
      if (!std::isfinite(v)) throw NumericalFailure("json", "cannot serialize a non-finite number");
      out += format_double(v);
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      // arrays of scalars stay on one line
      bool flat = true;
      for (const auto& e : j) flat = flat && !e.is_structured();
      out += '[';
      bool first = true;
      for (const auto& e : j) {
        if (!first) out += flat ? ", " : ",";
        first = false;
        if (!flat) out += "\n" + pad;
        dump_into(e, out, indent, level + 1);
      }
      if (!flat) out += "\n" + pad_close;
      out += ']';
      return;
    }
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ',';
        first = false;
        out += "\n" + pad + Json(it.key()).dump() + ": ";
        dump_into(it.value(), out, indent, level + 1);
      }
      out += "\n" + pad_close + '}';
      return;
    }
    default:
      out += j.dump();
  }
}

inline Json matrix_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Json vector_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

inline Matrix json_matrix(const Json& j, const char* what) {
  if (!j.is_array() || j.empty()) throw ParseError(0, std::string(what) + " must be a non-empty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j.front().size());
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& r = j[static_cast<std::size_t>(i)];
    if (!r.is_array() || static_cast<Eigen::Index>(r.size()) != cols)
      throw ParseError(0, std::string(what) + " rows must all have length " + std::to_string(cols));
    for (Eigen::Index c = 0; c < cols; ++c) {
      const auto& e = r[static_cast<std::size_t>(c)];
      if (!e.is_number()) throw ParseError(0, std::string(what) + " entries must be numbers");
      m(i, c) = e.get<double>();
    }
  }
  return m;
}

inline Vector json_vector(const Json& j, const char* what) {
  if (!j.is_array() || j.empty()) throw ParseError(0, std::string(what) + " must be a non-empty array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ParseError(0, std::string(what) + " entries must be numbers");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

inline const Json& field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw ParseError(0, std::string("missing field '") + key + "'");
  return j.at(key);
}

}  // namespace detail

/// Pretty-prints with every double in shortest round-trip form, so values reload bit-exactly.
inline std::string dump(const Json& j, int indent = 2) {
  std::string out;
  detail::dump_into(j, out, indent, 0);
  out += '\n';
  return out;
}

inline Json parse(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(0, std::string("invalid JSON: ") + e.what());
  }
}

inline Json to_json(const GaussianMixture& g) {
  Json j;
  j["d"] = g.dim();
  j["weights"] = detail::vector_json(g.weights());
  j["means"] = detail::matrix_json(g.means());
  j["stds"] = detail::matrix_json(g.stds());
  j["labels"] = g.labeled() ? detail::matrix_json(g.labels()) : Json(nullptr);
  return j;
}

inline GaussianMixture gmm_from_json(const Json& j) {
  const auto d = detail::field(j, "d");
  if (!d.is_number_integer()) throw ParseError(0, "'d' must be an integer");
  Vector w = detail::json_vector(detail::field(j, "weights"), "weights");
  Matrix m = detail::json_matrix(detail::field(j, "means"), "means");
  Matrix s = detail::json_matrix(detail::field(j, "stds"), "stds");
  if (m.cols() != d.get<Eigen::Index>()) throw ParseError(0, "'d' disagrees with the mean rows");
  std::optional<Matrix> labels;
  if (j.contains("labels") && !j.at("labels").is_null()) labels = detail::json_matrix(j.at("labels"), "labels");
  try {
    return {std::move(w), std::move(m), std::move(s), std::move(labels)};
  } catch (const InvalidInput& e) {
    throw ParseError(0, std::string("invalid mixture: ") + e.what());
  }
}

inline Json to_json(const TransportPlan& p) {
  Json j;
  j["omega"] = detail::matrix_json(p.omega);
  j["p"] = detail::vector_json(p.p);
  j["q"] = detail::vector_json(p.q);
  j["objective"] = p.objective;
  return j;
}

inline TransportPlan plan_from_json(const Json& j) {
  TransportPlan p;
  p.omega = detail::json_matrix(detail::field(j, "omega"), "omega");
  p.p = detail::json_vector(detail::field(j, "p"), "p");
  p.q = detail::json_vector(detail::field(j, "q"), "q");
  p.objective = detail::field(j, "objective").get<double>();
  return p;
}

inline Json to_json(const Dictionary& dict) {
  Json j;
  Json atoms = Json::array();
  for (int c = 0; c < dict.n_atoms(); ++c) atoms.push_back(to_json(dict.atom(c)));
  j["atoms"] = std::move(atoms);
  j["coords"] = detail::matrix_json(dict.coords);
  Json logits = Json::array();
  for (const auto& u : dict.logits) logits.push_back(detail::matrix_json(u));
  j["logits"] = std::move(logits);
  return j;
}

inline Dictionary dictionary_from_json(const Json& j) {
  Dictionary dict;
  const auto& atoms = detail::field(j, "atoms");
  if (!atoms.is_array() || atoms.empty()) throw ParseError(0, "'atoms' must be a non-empty array");
  for (std::size_t c = 0; c < atoms.size(); ++c) {
    const GaussianMixture g = gmm_from_json(atoms[c]);
    if (!g.labeled()) throw ParseError(0, "dictionary atoms must be labeled");
    dict.means.push_back(g.means());
    dict.stds.push_back(g.stds());
    if (j.contains("logits")) {
      dict.logits.push_back(detail::json_matrix(j.at("logits").at(c), "logits"));
    } else {
      dict.logits.push_back(g.labels().cwiseMax(1e-300).array().log().matrix());
    }
  }
  dict.coords = detail::json_matrix(detail::field(j, "coords"), "coords");
  if (dict.coords.cols() != dict.n_atoms()) throw ParseError(0, "'coords' must have one column per atom");
  return dict;
}

inline Json trace_json(const std::vector<double>& v) {
  Json out = Json::array();
  for (double x : v) out.push_back(x);
  return out;
}

inline Json coords_trace_json(const std::vector<Matrix>& snaps) {
  Json out = Json::array();
  for (const auto& m : snaps) out.push_back(detail::matrix_json(m));
  return out;
}

inline void save_json(const Json& j, const std::filesystem::path& path) { write_file_atomic(path, dump(j)); }

inline Json load_json(const std::filesystem::path& path) { return parse(read_file(path)); }

inline GaussianMixture load_gmm(const std::filesystem::path& path) { return gmm_from_json(load_json(path)); }

}  // namespace gmmot::io
