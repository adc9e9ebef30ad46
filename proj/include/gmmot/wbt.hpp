#pragma once

#include <vector>

#include "gmmot/barycenter.hpp"
#include "gmmot/mixture_ot.hpp"

namespace gmmot {

/// Output of an adaptation run: a labeled mixture living in the target domain.
struct AdaptationResult {
  GaussianMixture target_gmm;
  std::vector<double> loss_trace;
  std::vector<Matrix> coords_trace;  // DaDiL only: one (N+1) x C snapshot per iteration
};

struct WbtConfig {
  BarycenterConfig barycenter{};
};

namespace detail {

inline void check_domains(const std::vector<GaussianMixture>& sources, const GaussianMixture& target) {
  if (sources.empty()) throw InvalidInput("at least one source mixture is required");
  const auto d = sources.front().dim();
  const auto nc = sources.front().n_classes();
  for (std::size_t i = 0; i < sources.size(); ++i) {
    const auto& s = sources[i];
    if (!s.labeled()) throw InvalidState("source " + std::to_string(i) + " is unlabeled");
    if (s.dim() != d) throw InvalidInput("source " + std::to_string(i) + " has a different dimension");
    if (s.n_classes() != nc)
      throw InvalidInput("source " + std::to_string(i) + " has a different number of classes");
  }
  if (target.dim() != d) throw InvalidInput("target dimension differs from the sources");
}

}  // namespace detail

/// Barycenter-then-transport: computes the uniform-weight barycenter of the labeled sources,
/// couples it with the target mixture, and moves every barycenter component to the barycentric
/// image of its coupled target components while keeping its label row.
/// Target labels, if present, are ignored.
inline AdaptationResult gmm_wbt(const std::vector<GaussianMixture>& sources,
                                const GaussianMixture& target, const WbtConfig& cfg = {}) {
  detail::check_domains(sources, target);
  const auto n = static_cast<Eigen::Index>(sources.size());
  const Vector lambda = Vector::Constant(n, 1.0 / static_cast<double>(n));
  const BarycenterResult bary = smw_barycenter(sources, lambda, cfg.barycenter);
  const GaussianMixture& B = bary.barycenter;
  const GaussianMixture qt = target.unlabeled();

  const TransportPlan plan = gmmot(B, qt);
  const MappedParams mapped = transport_params(plan, B.weights(), qt);
  AdaptationResult out;
  out.target_gmm = GaussianMixture(B.weights(), mapped.means,
                                   mapped.stds.cwiseMax(cfg.barycenter.s_min), B.labels());
  out.loss_trace = bary.trace.losses;
  return out;
}

}  // namespace gmmot
