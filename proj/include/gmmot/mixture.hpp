#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "gmmot/error.hpp"

namespace gmmot {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr double kSimplexTol = 1e-9;
inline constexpr double kDefaultSMin = 1e-3;

/// One axis-aligned Gaussian N(mean, diag(std^2)).
struct DiagGaussian {
  Vector mean;
  Vector std;

  Eigen::Index dim() const { return mean.size(); }
};

namespace detail {

inline bool all_finite(const auto& m) { return m.allFinite(); }

inline void check_simplex(const Eigen::Ref<const Vector>& w, double tol, const std::string& what) {
  if (!w.allFinite()) throw InvalidInput(what + " has non-finite entries");
  if (w.size() > 0 && w.minCoeff() < -tol) throw InvalidInput(what + " has negative entries");
  if (std::abs(w.sum() - 1.0) > tol)
    throw InvalidInput(what + " does not sum to 1 (sum = " + std::to_string(w.sum()) + ")");
}

}  // namespace detail

/// Weighted collection of axis-aligned Gaussians, optionally carrying one soft-label row per
/// component. Immutable after construction; invariants are checked once in the constructor.
class GaussianMixture {
 public:
  GaussianMixture() = default;

  GaussianMixture(Vector weights, Matrix means, Matrix stds,
                  std::optional<Matrix> labels = std::nullopt)
      : weights_(std::move(weights)),
        means_(std::move(means)),
        stds_(std::move(stds)),
        labels_(std::move(labels)) {
    validate();
  }

  Eigen::Index size() const { return weights_.size(); }
  Eigen::Index dim() const { return means_.cols(); }
  bool labeled() const { return labels_.has_value(); }
  Eigen::Index n_classes() const { return labels_ ? labels_->cols() : 0; }

  const Vector& weights() const { return weights_; }
  const Matrix& means() const { return means_; }
  const Matrix& stds() const { return stds_; }
  const Matrix& labels() const {
    if (!labels_) throw InvalidState("mixture is unlabeled");
    return *labels_;
  }
  const std::optional<Matrix>& maybe_labels() const { return labels_; }

  DiagGaussian component(Eigen::Index i) const {
    return {means_.row(i).transpose(), stds_.row(i).transpose()};
  }

  GaussianMixture unlabeled() const { return {weights_, means_, stds_}; }
  GaussianMixture with_labels(Matrix labels) const {
    return {weights_, means_, stds_, std::move(labels)};
  }

 private:
  void validate() const {
    const auto k = weights_.size();
    if (k < 1) throw InvalidInput("mixture needs at least one component");
    if (means_.rows() != k || stds_.rows() != k)
      throw InvalidInput("means/stds row count differs from the number of weights");
    if (means_.cols() < 1 || stds_.cols() != means_.cols())
      throw InvalidInput("means and stds must share a dimension d >= 1");
    detail::check_simplex(weights_, kSimplexTol, "mixture weights");
    if (!means_.allFinite() || !stds_.allFinite())
      throw InvalidInput("mixture parameters must be finite");
    if (stds_.minCoeff() <= 0.0) throw InvalidInput("standard deviations must be positive");
    if (labels_) {
      if (labels_->rows() != k || labels_->cols() < 1)
        throw InvalidInput("label matrix must have one row per component");
      for (Eigen::Index i = 0; i < k; ++i)
        detail::check_simplex(labels_->row(i).transpose(), kSimplexTol,
                              "label row " + std::to_string(i));
    }
  }

  Vector weights_;
  Matrix means_;
  Matrix stds_;
  std::optional<Matrix> labels_;
};

/// Features with optional integer class labels in [0, n_classes).
struct LabeledDataset {
  Matrix features;
  std::optional<std::vector<int>> labels;
  int n_classes = 0;

  Eigen::Index size() const { return features.rows(); }
  Eigen::Index dim() const { return features.cols(); }

  void validate() const {
    if (features.rows() < 1) throw InvalidInput("dataset is empty");
    if (features.cols() < 1) throw InvalidInput("dataset has no feature columns");
    if (!features.allFinite()) throw InvalidInput("dataset contains non-finite features");
    if (labels) {
      if (static_cast<Eigen::Index>(labels->size()) != features.rows())
        throw InvalidInput("label count differs from sample count");
      for (int y : *labels)
        if (y < 0 || y >= n_classes)
          throw InvalidInput("label " + std::to_string(y) + " outside [0, n_classes)");
    }
  }
};

/// Row-wise index of the largest entry, lowest index on ties.
inline Eigen::Index argmax_first(const Eigen::Ref<const Vector>& v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

}  // namespace gmmot
