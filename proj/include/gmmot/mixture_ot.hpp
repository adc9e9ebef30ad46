#pragma once

#include <optional>
#include <string>

#include "gmmot/mixture.hpp"
#include "gmmot/transport.hpp"

namespace gmmot {

/// Squared 2-Wasserstein distance between axis-aligned Gaussians:
/// ||m_P - m_Q||^2 + ||s_P - s_Q||^2.
inline double gauss_w2_sq(const DiagGaussian& a, const DiagGaussian& b) {
  if (a.dim() != b.dim() || a.std.size() != b.std.size())
    throw InvalidInput("gauss_w2_sq: dimension mismatch");
  return (a.mean - b.mean).squaredNorm() + (a.std - b.std).squaredNorm();
}

/// Pairwise component cost W2(P_i, Q_j)^2 + beta ||v_i - v_j||^2.
/// With beta == 0 label rows are ignored and either mixture may be unlabeled.
inline Matrix mixture_cost(const GaussianMixture& P, const GaussianMixture& Q, double beta = 0.0) {
  if (P.dim() != Q.dim()) throw InvalidInput("mixture_cost: dimension mismatch");
  if (!(beta >= 0.0)) throw InvalidInput("mixture_cost: beta must be >= 0");
  const bool use_labels = beta > 0.0;
  if (use_labels) {
    if (!P.labeled() || !Q.labeled())
      throw InvalidState("mixture_cost: beta > 0 needs two labeled mixtures");
    if (P.n_classes() != Q.n_classes())
      throw InvalidInput("mixture_cost: mixtures disagree on n_classes");
  }
  const auto kp = P.size(), kq = Q.size();
  Matrix c(kp, kq);
  for (Eigen::Index i = 0; i < kp; ++i)
    for (Eigen::Index j = 0; j < kq; ++j) {
      double v = (P.means().row(i) - Q.means().row(j)).squaredNorm() +
                 (P.stds().row(i) - Q.stds().row(j)).squaredNorm();
      if (use_labels) v += beta * (P.labels().row(i) - Q.labels().row(j)).squaredNorm();
      c(i, j) = v;
    }
  return c;
}

/// Optimal component coupling between P and Q under the W2^2 component cost.
inline TransportPlan gmmot(const GaussianMixture& P, const GaussianMixture& Q,
                           TransportWarmStart* warm = nullptr) {
  return solve_transport(P.weights(), Q.weights(), mixture_cost(P, Q, 0.0), warm);
}

/// Optimal coupling under the label-augmented cost.
inline TransportPlan smw_plan(const GaussianMixture& P, const GaussianMixture& Q, double beta,
                              TransportWarmStart* warm = nullptr) {
  return solve_transport(P.weights(), Q.weights(), mixture_cost(P, Q, beta), warm);
}

/// Squared Mixture-Wasserstein distance.
inline double mw2_sq(const GaussianMixture& P, const GaussianMixture& Q) {
  return gmmot(P, Q).objective;
}

/// Squared supervised Mixture-Wasserstein distance; beta == 0 reduces to mw2_sq.
inline double smw2_sq(const GaussianMixture& P, const GaussianMixture& Q, double beta) {
  if (!P.labeled() || !Q.labeled()) throw InvalidState("smw2_sq needs two labeled mixtures");
  return smw_plan(P, Q, beta).objective;
}

struct MappedParams {
  Matrix means;
  Matrix stds;
  std::optional<Matrix> labels;
};

/// Barycentric images of the source components under a plan:
/// x_i -> sum_j (omega_ij / p_i) x_j^Q for means, stds and (when present) label rows.
inline MappedParams transport_params(const TransportPlan& plan, const Vector& source_weights,
                                     const GaussianMixture& target) {
  if (plan.omega.rows() != source_weights.size())
    throw InvalidInput("transport_params: plan rows differ from source component count");
  if (plan.omega.cols() != target.size())
    throw InvalidInput("transport_params: plan columns differ from target component count");
  const double tol = plan_tolerance(plan.omega.rows(), plan.omega.cols());
  for (Eigen::Index i = 0; i < source_weights.size(); ++i) {
    if (!(source_weights[i] > 0.0))
      throw InvalidInput("transport_params: source weight " + std::to_string(i) + " is zero");
    if (std::abs(plan.omega.row(i).sum() - source_weights[i]) > std::max(tol, 1e-6 * source_weights[i]))
      throw InvalidInput("transport_params: plan row marginal differs from source weights");
  }
  // rows of omega / p_i
  Matrix a = source_weights.cwiseInverse().asDiagonal() * plan.omega;
  MappedParams out;
  out.means = a * target.means();
  out.stds = a * target.stds();
  if (target.labeled()) out.labels = a * target.labels();
  return out;
}

}  // namespace gmmot
