#pragma once

#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "gmmot/mixture.hpp"
#include "gmmot/mixture_ot.hpp"
#include "gmmot/parallel.hpp"
#include "gmmot/random.hpp"
#include "gmmot/transport.hpp"

namespace gmmot {

enum class BarycenterInit { random_normal, from_measure };

struct BarycenterConfig {
  int n_components = 0;  // K_B; 0 picks the size of the measure used for initialization
  double beta = 1.0;
  double tol = 1e-6;
  int max_iter = 100;
  Seed seed = 0;
  BarycenterInit init = BarycenterInit::random_normal;
  int init_index = 0;  // measure copied by from_measure
  double s_min = kDefaultSMin;
  int threads = 1;

  void validate() const {
    if (n_components < 0) throw InvalidInput("barycenter: n_components must be positive");
    if (!(beta >= 0.0)) throw InvalidInput("barycenter: beta must be >= 0");
    if (!(tol > 0.0)) throw InvalidInput("barycenter: tol must be positive");
    if (max_iter < 1) throw InvalidInput("barycenter: max_iter must be positive");
    if (!(s_min > 0.0)) throw InvalidInput("barycenter: s_min must be positive");
  }
};

struct BarycenterTrace {
  std::vector<double> losses;
  int iterations_run = 0;
  bool converged = false;
};

struct BarycenterResult {
  GaussianMixture barycenter;
  BarycenterTrace trace;
  /// Plans used by the final parameter update, one per measure (K_B x K_c). With these frozen the
  /// barycenter parameters are exactly sum_c lambda_c diag(1/w) omega_c X_c.
  std::vector<TransportPlan> plans;
};

namespace detail {

inline void check_measures(const std::vector<GaussianMixture>& measures, const Vector& lambda,
                           bool labeled) {
  if (measures.empty()) throw InvalidInput("barycenter: empty measure list");
  if (lambda.size() != static_cast<Eigen::Index>(measures.size()))
    throw InvalidInput("barycenter: lambda has " + std::to_string(lambda.size()) +
                       " entries for " + std::to_string(measures.size()) + " measures");
  check_simplex(lambda, 1e-6, "barycenter: lambda");
  const auto d = measures.front().dim();
  for (const auto& m : measures) {
    if (m.dim() != d) throw InvalidInput("barycenter: measures disagree on dimension");
    if (labeled) {
      if (!m.labeled()) throw InvalidState("barycenter: labeled barycenter needs labeled measures");
      if (m.n_classes() != measures.front().n_classes())
        throw InvalidInput("barycenter: measures disagree on n_classes");
    }
  }
}

inline void project_label_rows(Matrix& v) {
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    v.row(i) = v.row(i).cwiseMax(0.0);
    const double s = v.row(i).sum();
    if (s > 0.0)
      v.row(i) /= s;
    else
      v.row(i).setConstant(1.0 / static_cast<double>(v.cols()));
  }
}

/// Block-coordinate fixed point: optimal plans for fixed parameters, then the closed-form
/// parameter update for fixed plans. Loss is evaluated between the two steps.
inline BarycenterResult run_barycenter(const std::vector<GaussianMixture>& measures,
                                       const Vector& lambda, const BarycenterConfig& cfg,
                                       bool labeled, const GaussianMixture& init,
                                       std::vector<TransportWarmStart>* bases) {
  const auto c_count = static_cast<int>(measures.size());
  const double beta = labeled ? cfg.beta : 0.0;
  const Vector w = init.weights();
  Matrix means = init.means();
  Matrix stds = init.stds();
  std::optional<Matrix> labels;
  if (labeled) labels = init.labels();

  std::vector<TransportWarmStart> local(static_cast<std::size_t>(c_count));
  if (!bases) bases = &local;
  bases->resize(static_cast<std::size_t>(c_count));

  BarycenterResult out;
  out.plans.resize(static_cast<std::size_t>(c_count));
  double prev = 0.0;
  const Vector inv_w = w.cwiseInverse();
  for (int it = 1; it <= cfg.max_iter; ++it) {
    const GaussianMixture cur(w, means, stds, labels);
    parallel_for(c_count, cfg.threads, [&](int c) {
      const auto& pc = measures[static_cast<std::size_t>(c)];
      out.plans[static_cast<std::size_t>(c)] =
          solve_transport(w, pc.weights(), mixture_cost(cur, pc, beta), &(*bases)[static_cast<std::size_t>(c)]);
    });
    double loss = 0.0;
    for (int c = 0; c < c_count; ++c) loss += lambda[c] * out.plans[static_cast<std::size_t>(c)].objective;
    if (!std::isfinite(loss)) throw NumericalFailure("barycenter", "non-finite loss at iteration " + std::to_string(it));
    out.trace.losses.push_back(loss);

    Matrix nm = Matrix::Zero(means.rows(), means.cols());
    Matrix ns = Matrix::Zero(stds.rows(), stds.cols());
    Matrix nv;
    if (labeled) nv = Matrix::Zero(labels->rows(), labels->cols());
    for (int c = 0; c < c_count; ++c) {
      const auto& pc = measures[static_cast<std::size_t>(c)];
      const Matrix a = lambda[c] * (inv_w.asDiagonal() * out.plans[static_cast<std::size_t>(c)].omega);
      nm.noalias() += a * pc.means();
      ns.noalias() += a * pc.stds();
      if (labeled) nv.noalias() += a * pc.labels();
    }
    means = std::move(nm);
    stds = ns.cwiseMax(cfg.s_min);
    if (labeled) {
      project_label_rows(nv);
      labels = std::move(nv);
    }
    out.trace.iterations_run = it;
    if (it > 1 && std::abs(loss - prev) < cfg.tol) {
      out.trace.converged = true;
      break;
    }
    prev = loss;
  }
  out.barycenter = GaussianMixture(w, means, stds, labels);
  return out;
}

inline GaussianMixture initial_barycenter(const std::vector<GaussianMixture>& measures,
                                         const BarycenterConfig& cfg, bool labeled) {
  if (cfg.init == BarycenterInit::from_measure) {
    if (cfg.init_index < 0 || cfg.init_index >= static_cast<int>(measures.size()))
      throw InvalidInput("barycenter: init index out of range");
    const auto& src = measures[static_cast<std::size_t>(cfg.init_index)];
    if (cfg.n_components != 0 && cfg.n_components != src.size())
      throw InvalidInput("barycenter: from-measure init needs n_components equal to that measure's size");
    const Matrix s = src.stds().cwiseMax(cfg.s_min);
    if (labeled) return {src.weights(), src.means(), s, src.labels()};
    return {src.weights(), src.means(), s};
  }
  const Eigen::Index k = cfg.n_components != 0 ? cfg.n_components : measures.front().size();
  const Eigen::Index d = measures.front().dim();
  Engine eng = make_engine(cfg.seed, stream::barycenter_init);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(k, d);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < d; ++j) m(i, j) = normal(eng);
  const Vector w = Vector::Constant(k, 1.0 / static_cast<double>(k));
  const Matrix s = Matrix::Ones(k, d);
  if (labeled) {
    const auto nc = measures.front().n_classes();
    return {w, m, s, Matrix::Constant(k, nc, 1.0 / static_cast<double>(nc))};
  }
  return {w, m, s};
}

inline std::vector<GaussianMixture> strip_labels(const std::vector<GaussianMixture>& measures) {
  std::vector<GaussianMixture> out;
  out.reserve(measures.size());
  for (const auto& m : measures) out.push_back(m.unlabeled());
  return out;
}

}  // namespace detail

/// Barycenter of labeled mixtures under the label-augmented mixture distance.
inline BarycenterResult smw_barycenter(const std::vector<GaussianMixture>& measures,
                                       const Vector& lambda, const BarycenterConfig& cfg) {
  cfg.validate();
  detail::check_measures(measures, lambda, true);
  const auto init = detail::initial_barycenter(measures, cfg, true);
  return detail::run_barycenter(measures, lambda, cfg, true, init, nullptr);
}

/// Same as smw_barycenter but starting from a caller-supplied mixture and reusing LP bases.
inline BarycenterResult smw_barycenter(const std::vector<GaussianMixture>& measures,
                                       const Vector& lambda, const BarycenterConfig& cfg,
                                       const GaussianMixture& init,
                                       std::vector<TransportWarmStart>* bases = nullptr) {
  cfg.validate();
  detail::check_measures(measures, lambda, true);
  if (!init.labeled() || init.n_classes() != measures.front().n_classes() || init.dim() != measures.front().dim())
    throw InvalidInput("barycenter: initial mixture does not match the measures");
  return detail::run_barycenter(measures, lambda, cfg, true, init, bases);
}

/// Unlabeled barycenter under the mixture distance. Label rows of the inputs, if any, are ignored.
inline BarycenterResult mw_barycenter(const std::vector<GaussianMixture>& measures,
                                      const Vector& lambda, const BarycenterConfig& cfg) {
  cfg.validate();
  const auto plain = detail::strip_labels(measures);
  detail::check_measures(plain, lambda, false);
  const auto init = detail::initial_barycenter(plain, cfg, false);
  return detail::run_barycenter(plain, lambda, cfg, false, init, nullptr);
}

inline BarycenterResult mw_barycenter(const std::vector<GaussianMixture>& measures,
                                      const Vector& lambda, const BarycenterConfig& cfg,
                                      const GaussianMixture& init,
                                      std::vector<TransportWarmStart>* bases = nullptr) {
  cfg.validate();
  const auto plain = detail::strip_labels(measures);
  detail::check_measures(plain, lambda, false);
  if (init.dim() != plain.front().dim()) throw InvalidInput("barycenter: initial mixture has the wrong dimension");
  return detail::run_barycenter(plain, lambda, cfg, false, init.unlabeled(), bases);
}

/// sum_c lambda_c * SMW2^2(B, P_c) (plain MW2^2 when beta == 0).
inline double barycenter_loss(const GaussianMixture& B, const std::vector<GaussianMixture>& measures,
                              const Vector& lambda, double beta) {
  if (lambda.size() != static_cast<Eigen::Index>(measures.size()))
    throw InvalidInput("barycenter_loss: lambda size differs from measure count");
  double acc = 0.0;
  for (std::size_t c = 0; c < measures.size(); ++c)
    acc += lambda[static_cast<Eigen::Index>(c)] *
           (beta > 0.0 ? smw2_sq(B, measures[c], beta) : mw2_sq(B, measures[c]));
  return acc;
}

}  // namespace gmmot
