#pragma once

#include <cmath>

#include "gmmot/mixture.hpp"

namespace gmmot {

enum class OptimizerKind { sgd, adam };

struct AdamParams {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First-order optimizer over one flat parameter vector.
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, double lr, Eigen::Index size, AdamParams adam = {})
      : kind_(kind), lr_(lr), adam_(adam), m_(Vector::Zero(size)), v_(Vector::Zero(size)) {}

  void step(Vector& x, const Vector& grad) {
    if (kind_ == OptimizerKind::sgd) {
      x.noalias() -= lr_ * grad;
      return;
    }
    ++t_;
    m_ = adam_.beta1 * m_ + (1.0 - adam_.beta1) * grad;
    v_ = adam_.beta2 * v_ + (1.0 - adam_.beta2) * grad.cwiseAbs2();
    const double c1 = 1.0 - std::pow(adam_.beta1, t_);
    const double c2 = 1.0 - std::pow(adam_.beta2, t_);
    x.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + adam_.eps);
  }

  int steps() const { return t_; }

 private:
  OptimizerKind kind_;
  double lr_;
  AdamParams adam_;
  Vector m_, v_;
  int t_ = 0;
};

}  // namespace gmmot
