#pragma once

#include <algorithm>
#include <functional>
#include <vector>

#include "gmmot/mixture.hpp"

namespace gmmot {

/// Euclidean projection onto the probability simplex (sort and threshold).
inline Vector project_simplex(const Eigen::Ref<const Vector>& v) {
  if (!v.allFinite()) throw InvalidInput("project_simplex: non-finite input");
  const auto n = v.size();
  if (n == 0) throw InvalidInput("project_simplex: empty input");
  std::vector<double> u(v.data(), v.data() + n);
  std::sort(u.begin(), u.end(), std::greater<>());
  double css = 0.0, theta = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    css += u[static_cast<std::size_t>(j)];
    const double t = (css - 1.0) / static_cast<double>(j + 1);
    if (u[static_cast<std::size_t>(j)] - t > 0.0) theta = t;
  }
  return (v.array() - theta).cwiseMax(0.0).matrix();
}

/// Elementwise max(v, floor).
inline Vector project_nonneg(const Eigen::Ref<const Vector>& v, double floor) {
  return v.cwiseMax(floor);
}

/// Row-wise softmax.
inline Matrix softmax_rows(const Matrix& u) {
  Matrix out(u.rows(), u.cols());
  for (Eigen::Index i = 0; i < u.rows(); ++i) {
    const double m = u.row(i).maxCoeff();
    out.row(i) = (u.row(i).array() - m).exp().matrix();
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

}  // namespace gmmot
