#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "gmmot/mixture.hpp"
#include "gmmot/random.hpp"

namespace gmmot::io {

/// Shifted-and-rotated classification domains. Domain l is the image of one shared base sample
/// under x -> R(l * rot_step) x + l * shift_step (rotation about the origin, d == 2 only).
struct ToyConfig {
  int n_domains = 4;
  int n_classes = 3;
  int n_per_class = 200;
  int d = 2;
  Vector shift_step = (Vector(2) << 2.0, 0.5).finished();
  double rot_step = std::numbers::pi / 12.0;
  double class_radius = 4.0;
  /// Per-axis std of every class cluster; entries beyond the second reuse the second.
  Vector cluster_std = (Vector(2) << 0.8, 0.4).finished();
  Seed seed = 0;

  void validate() const {
    if (n_domains < 2) throw InvalidInput("toy: n_domains must be >= 2");
    if (n_classes < 2) throw InvalidInput("toy: n_classes must be >= 2");
    if (n_per_class < 1) throw InvalidInput("toy: n_per_class must be positive");
    if (d < 1) throw InvalidInput("toy: d must be positive");
    if (shift_step.size() != d) throw InvalidInput("toy: shift_step must have d entries");
    if (cluster_std.size() < 1 || cluster_std.minCoeff() <= 0.0) throw InvalidInput("toy: cluster_std must be positive");
  }

  double axis_std(Eigen::Index j) const {
    return cluster_std[std::min<Eigen::Index>(j, cluster_std.size() - 1)];
  }
};

/// Centre of class c in the base domain: evenly spaced on a circle (d >= 2) or a line (d == 1).
inline Vector toy_class_center(const ToyConfig& cfg, int c) {
  Vector m = Vector::Zero(cfg.d);
  if (cfg.d == 1) {
    m[0] = cfg.class_radius * (static_cast<double>(c) - 0.5 * (cfg.n_classes - 1));
  } else {
    const double a = 2.0 * std::numbers::pi * c / cfg.n_classes + std::numbers::pi / 2.0;
    m[0] = cfg.class_radius * std::cos(a);
    m[1] = cfg.class_radius * std::sin(a);
  }
  return m;
}

inline Vector toy_map(const ToyConfig& cfg, int domain, const Vector& x) {
  Vector y = x;
  if (cfg.d == 2 && cfg.rot_step != 0.0) {
    const double a = cfg.rot_step * domain;
    const double c = std::cos(a), s = std::sin(a);
    y[0] = c * x[0] - s * x[1];
    y[1] = s * x[0] + c * x[1];
  }
  return y + static_cast<double>(domain) * cfg.shift_step;
}

inline std::vector<LabeledDataset> make_toy(const ToyConfig& cfg) {
  cfg.validate();
  Engine eng = make_engine(cfg.seed, stream::toy);
  std::normal_distribution<double> normal(0.0, 1.0);
  const Eigen::Index n = static_cast<Eigen::Index>(cfg.n_classes) * cfg.n_per_class;
  Matrix base(n, cfg.d);
  std::vector<int> labels(static_cast<std::size_t>(n));
  Eigen::Index row = 0;
  for (int c = 0; c < cfg.n_classes; ++c) {
    const Vector center = toy_class_center(cfg, c);
    for (int i = 0; i < cfg.n_per_class; ++i, ++row) {
      for (Eigen::Index j = 0; j < cfg.d; ++j) base(row, j) = center[j] + cfg.axis_std(j) * normal(eng);
      labels[static_cast<std::size_t>(row)] = c;
    }
  }
  std::vector<LabeledDataset> out;
  for (int l = 0; l < cfg.n_domains; ++l) {
    LabeledDataset ds{Matrix(n, cfg.d), labels, cfg.n_classes};
    for (Eigen::Index i = 0; i < n; ++i) ds.features.row(i) = toy_map(cfg, l, base.row(i).transpose()).transpose();
    out.push_back(std::move(ds));
  }
  return out;
}

}  // namespace gmmot::io
