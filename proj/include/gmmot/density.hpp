#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include "gmmot/mixture.hpp"
#include "gmmot/random.hpp"

namespace gmmot {

namespace detail {

inline constexpr double kLogTwoPi = 1.8378770664093454835606594728112;

inline void check_point(const GaussianMixture& gmm, Eigen::Index dim) {
  if (dim != gmm.dim())
    throw InvalidInput("point has dimension " + std::to_string(dim) + ", mixture has " +
                       std::to_string(gmm.dim()));
}

/// log p_k + log N(x; m_k, diag(s_k^2)) for every component k.
inline Vector joint_log(const GaussianMixture& gmm, const Eigen::Ref<const Vector>& x) {
  const auto k = gmm.size();
  const auto d = gmm.dim();
  Vector out(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) {
      const double s = gmm.stds()(i, j);
      const double z = (x[j] - gmm.means()(i, j)) / s;
      acc += z * z + 2.0 * std::log(s);
    }
    const double w = gmm.weights()[i];
    out[i] = (w > 0.0 ? std::log(w) : -std::numeric_limits<double>::infinity()) -
             0.5 * (acc + static_cast<double>(d) * kLogTwoPi);
  }
  return out;
}

inline double log_sum_exp(const Eigen::Ref<const Vector>& a) {
  const double m = a.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((a.array() - m).exp().sum());
}

}  // namespace detail

/// log sum_k p_k N(x; m_k, diag(s_k^2)), evaluated with log-sum-exp.
inline double log_density(const GaussianMixture& gmm, const Eigen::Ref<const Vector>& x) {
  detail::check_point(gmm, x.size());
  return detail::log_sum_exp(detail::joint_log(gmm, x));
}

/// Posterior over components, P(k | x).
inline Vector responsibilities(const GaussianMixture& gmm, const Eigen::Ref<const Vector>& x) {
  detail::check_point(gmm, x.size());
  Vector lj = detail::joint_log(gmm, x);
  const double lse = detail::log_sum_exp(lj);
  Vector r = (lj.array() - lse).exp().matrix();
  return r / r.sum();
}

struct Classification {
  int label = 0;
  Vector posterior;
};

/// MAP class under a labeled mixture: posterior = responsibilities^T * labels, argmax with the
/// lowest index winning ties.
inline Classification map_classify(const GaussianMixture& gmm, const Eigen::Ref<const Vector>& x) {
  if (!gmm.labeled()) throw InvalidState("map_classify requires a labeled mixture");
  const Vector r = responsibilities(gmm, x);
  Vector post = gmm.labels().transpose() * r;
  return {static_cast<int>(argmax_first(post)), std::move(post)};
}

inline std::vector<int> map_classify_all(const GaussianMixture& gmm, const Matrix& points) {
  std::vector<int> out(static_cast<std::size_t>(points.rows()));
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    out[static_cast<std::size_t>(i)] = map_classify(gmm, points.row(i).transpose()).label;
  return out;
}

inline double accuracy(const std::vector<int>& predicted, const std::vector<int>& truth) {
  if (predicted.size() != truth.size() || truth.empty())
    throw InvalidInput("accuracy needs two equally sized, non-empty label vectors");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hit += predicted[i] == truth[i];
  return static_cast<double>(hit) / static_cast<double>(truth.size());
}

/// Fraction of labeled rows whose MAP class matches the stored label.
inline double accuracy(const GaussianMixture& gmm, const LabeledDataset& data) {
  if (!data.labels) throw InvalidInput("accuracy needs a labeled dataset");
  return accuracy(map_classify_all(gmm, data.features), *data.labels);
}

/// Mean log-likelihood of the rows of `points`.
inline double mean_log_likelihood(const GaussianMixture& gmm, const Matrix& points) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) acc += log_density(gmm, points.row(i).transpose());
  return acc / static_cast<double>(points.rows());
}

struct SampleResult {
  Matrix points;
  std::vector<int> component_ids;
  std::optional<std::vector<int>> class_ids;

  LabeledDataset as_dataset(int n_classes) const {
    return {points, class_ids, n_classes};
  }
};

/// Draws n i.i.d. points. Bitwise reproducible for a given (gmm, n, seed) on one platform.
inline SampleResult sample(const GaussianMixture& gmm, Eigen::Index n, Seed seed) {
  if (n < 1) throw InvalidInput("sample count must be positive");
  Engine eng = make_engine(seed, stream::sample);
  std::discrete_distribution<int> pick(gmm.weights().data(), gmm.weights().data() + gmm.size());
  std::normal_distribution<double> normal(0.0, 1.0);

  SampleResult out;
  out.points.resize(n, gmm.dim());
  out.component_ids.resize(static_cast<std::size_t>(n));
  if (gmm.labeled()) out.class_ids.emplace(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const int k = pick(eng);
    out.component_ids[static_cast<std::size_t>(i)] = k;
    for (Eigen::Index j = 0; j < gmm.dim(); ++j)
      out.points(i, j) = gmm.means()(k, j) + gmm.stds()(k, j) * normal(eng);
    if (out.class_ids)
      (*out.class_ids)[static_cast<std::size_t>(i)] =
          static_cast<int>(argmax_first(gmm.labels().row(k).transpose()));
  }
  return out;
}

}  // namespace gmmot
