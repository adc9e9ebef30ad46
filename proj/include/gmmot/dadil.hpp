#pragma once

#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "gmmot/barycenter.hpp"
#include "gmmot/mixture_ot.hpp"
#include "gmmot/optimizer.hpp"
#include "gmmot/parallel.hpp"
#include "gmmot/projection.hpp"
#include "gmmot/wbt.hpp"

namespace gmmot {

/// Atom mixtures (uniform weights, softmax-parametrized labels) and barycentric coordinates.
/// Row l of coords is lambda_l; the last row belongs to the target.
struct Dictionary {
  std::vector<Matrix> means;   // C x (K x d)
  std::vector<Matrix> stds;    // C x (K x d)
  std::vector<Matrix> logits;  // C x (K x n_classes)
  Matrix coords;               // (N+1) x C

  int n_atoms() const { return static_cast<int>(means.size()); }
  Eigen::Index k_atom() const { return means.front().rows(); }
  Eigen::Index dim() const { return means.front().cols(); }
  Eigen::Index n_classes() const { return logits.front().cols(); }
  Eigen::Index n_domains() const { return coords.rows(); }

  Vector atom_weights() const {
    return Vector::Constant(k_atom(), 1.0 / static_cast<double>(k_atom()));
  }

  GaussianMixture atom(int c) const {
    const auto i = static_cast<std::size_t>(c);
    return {atom_weights(), means[i], stds[i], softmax_rows(logits[i])};
  }

  std::vector<GaussianMixture> atoms() const {
    std::vector<GaussianMixture> out;
    for (int c = 0; c < n_atoms(); ++c) out.push_back(atom(c));
    return out;
  }

  /// Flattened (M, S, U, Lambda) in that order.
  Eigen::Index parameter_count() const {
    const auto c = static_cast<Eigen::Index>(n_atoms());
    return c * k_atom() * (2 * dim() + n_classes()) + coords.size();
  }

  Vector pack() const {
    Vector out(parameter_count());
    Eigen::Index off = 0;
    auto put = [&](const Matrix& m) {
      out.segment(off, m.size()) = Eigen::Map<const Vector>(m.data(), m.size());
      off += m.size();
    };
    for (const auto& m : means) put(m);
    for (const auto& m : stds) put(m);
    for (const auto& m : logits) put(m);
    put(coords);
    return out;
  }

  void unpack(const Vector& x) {
    if (x.size() != parameter_count()) throw InvalidInput("dictionary: parameter vector has the wrong size");
    Eigen::Index off = 0;
    auto get = [&](Matrix& m) {
      Eigen::Map<Vector>(m.data(), m.size()) = x.segment(off, m.size());
      off += m.size();
    };
    for (auto& m : means) get(m);
    for (auto& m : stds) get(m);
    for (auto& m : logits) get(m);
    get(coords);
  }
};

struct DadilConfig {
  int n_atoms = 0;  // 0 picks N + 1
  int k_atom = 0;   // 0 picks the target mixture's component count
  double eta = 0.1;
  int n_iter = 200;
  double beta = 1.0;
  double inner_tol = 1e-5;
  int inner_max_iter = 20;
  double s_min = kDefaultSMin;
  Seed seed = 0;
  OptimizerKind optimizer = OptimizerKind::adam;
  AdamParams adam{};
  int threads = 1;
  bool record_coords = true;
  /// Budget of the final target reconstruction.
  BarycenterConfig reconstruction{};

  void validate() const {
    if (n_atoms < 0 || k_atom < 0) throw InvalidInput("dadil: n_atoms and k_atom must be positive");
    if (!(eta > 0.0)) throw InvalidInput("dadil: eta must be positive");
    if (n_iter < 1) throw InvalidInput("dadil: n_iter must be positive");
    if (!(beta >= 0.0)) throw InvalidInput("dadil: beta must be >= 0");
    if (!(inner_tol > 0.0) || inner_max_iter < 1) throw InvalidInput("dadil: invalid inner barycenter budget");
    if (!(s_min > 0.0)) throw InvalidInput("dadil: s_min must be positive");
  }

  BarycenterConfig inner() const {
    BarycenterConfig b;
    b.beta = beta;
    b.tol = inner_tol;
    b.max_iter = inner_max_iter;
    b.s_min = s_min;
    b.seed = seed;
    b.threads = 1;
    return b;
  }
};

/// Transport plans held fixed while differentiating. For domain l, inner[l][c] couples the
/// barycenter B_l (rows) with atom c (columns); outer[l] couples the domain mixture (rows) with
/// B_l (columns).
struct FrozenPlans {
  std::vector<std::vector<Matrix>> inner;
  std::vector<Matrix> outer;
  Vector bary_weights;
};

/// Loss and gradients with respect to the raw (pre-projection) parameters.
struct LossGrad {
  double loss = 0.0;
  std::vector<double> domain_loss;
  std::vector<Matrix> grad_means, grad_stds, grad_logits;
  Matrix grad_coords;

  Vector pack() const {
    Eigen::Index total = grad_coords.size();
    for (const auto& g : grad_means) total += g.size();
    for (const auto& g : grad_stds) total += g.size();
    for (const auto& g : grad_logits) total += g.size();
    Vector out(total);
    Eigen::Index off = 0;
    auto put = [&](const Matrix& m) {
      out.segment(off, m.size()) = Eigen::Map<const Vector>(m.data(), m.size());
      off += m.size();
    };
    for (const auto& m : grad_means) put(m);
    for (const auto& m : grad_stds) put(m);
    for (const auto& m : grad_logits) put(m);
    put(grad_coords);
    return out;
  }
};

namespace detail {

struct DomainBary {
  Matrix means, stds, labels;
};

/// Barycenter parameters as the explicit linear map of atom parameters under frozen plans:
/// X_B = sum_c lambda_c diag(1/w) omega_c X_c.
inline DomainBary frozen_barycenter(const Dictionary& dict, const std::vector<Matrix>& atom_labels,
                                    const std::vector<Matrix>& inner, const Vector& lambda,
                                    const Vector& w) {
  const auto kb = w.size();
  DomainBary b{Matrix::Zero(kb, dict.dim()), Matrix::Zero(kb, dict.dim()),
               Matrix::Zero(kb, dict.n_classes())};
  const Vector inv_w = w.cwiseInverse();
  for (int c = 0; c < dict.n_atoms(); ++c) {
    const auto ci = static_cast<std::size_t>(c);
    const Matrix a = lambda[c] * (inv_w.asDiagonal() * inner[ci]);
    b.means.noalias() += a * dict.means[ci];
    b.stds.noalias() += a * dict.stds[ci];
    b.labels.noalias() += a * atom_labels[ci];
  }
  return b;
}

inline void check_dictionary_domains(const Dictionary& dict, const std::vector<GaussianMixture>& sources,
                                     const GaussianMixture& target) {
  check_domains(sources, target);
  if (dict.n_atoms() < 1) throw InvalidInput("dictionary has no atoms");
  if (dict.n_domains() != static_cast<Eigen::Index>(sources.size()) + 1)
    throw InvalidInput("dictionary coords must have one row per source plus one for the target");
  if (dict.dim() != target.dim()) throw InvalidInput("dictionary dimension differs from the domains");
  if (dict.n_classes() != sources.front().n_classes())
    throw InvalidInput("dictionary n_classes differs from the sources");
}

}  // namespace detail

/// Loss and gradients of sum_l SMW2^2(Q_l, B_l) + MW2^2(Q_T, B_T) with every plan frozen.
/// Domains 0..N-1 are the sources (label term weighted by beta), domain N is the target.
inline LossGrad frozen_loss_grad(const Dictionary& dict, const std::vector<GaussianMixture>& sources,
                                 const GaussianMixture& target, const FrozenPlans& plans, double beta) {
  const int c_count = dict.n_atoms();
  const auto n_dom = static_cast<int>(sources.size()) + 1;
  std::vector<Matrix> v(static_cast<std::size_t>(c_count));
  for (int c = 0; c < c_count; ++c) v[static_cast<std::size_t>(c)] = softmax_rows(dict.logits[static_cast<std::size_t>(c)]);

  LossGrad g;
  g.domain_loss.assign(static_cast<std::size_t>(n_dom), 0.0);
  for (int c = 0; c < c_count; ++c) {
    const auto ci = static_cast<std::size_t>(c);
    g.grad_means.push_back(Matrix::Zero(dict.means[ci].rows(), dict.means[ci].cols()));
    g.grad_stds.push_back(Matrix::Zero(dict.stds[ci].rows(), dict.stds[ci].cols()));
    g.grad_logits.push_back(Matrix::Zero(v[ci].rows(), v[ci].cols()));
  }
  std::vector<Matrix> grad_v = g.grad_logits;
  g.grad_coords = Matrix::Zero(dict.coords.rows(), dict.coords.cols());
  const Vector inv_w = plans.bary_weights.cwiseInverse();

  for (int l = 0; l < n_dom; ++l) {
    const auto li = static_cast<std::size_t>(l);
    const bool is_source = l < n_dom - 1;
    const GaussianMixture& q = is_source ? sources[li] : target;
    const double bl = is_source ? beta : 0.0;
    const Vector lambda = dict.coords.row(l).transpose();
    const auto b = detail::frozen_barycenter(dict, v, plans.inner[li], lambda, plans.bary_weights);
    const Matrix& gam = plans.outer[li];  // K_Q x K_B
    const Vector col = gam.colwise().sum().transpose();

    double loss = 0.0;
    for (Eigen::Index k = 0; k < gam.rows(); ++k)
      for (Eigen::Index i = 0; i < gam.cols(); ++i) {
        const double wki = gam(k, i);
        if (wki == 0.0) continue;
        double cst = (q.means().row(k) - b.means.row(i)).squaredNorm() +
                     (q.stds().row(k) - b.stds.row(i)).squaredNorm();
        if (bl > 0.0) cst += bl * (q.labels().row(k) - b.labels.row(i)).squaredNorm();
        loss += wki * cst;
      }
    g.domain_loss[li] = loss;
    g.loss += loss;

    // dL/dX_B = 2 (diag(col) X_B - gamma^T X_Q)
    const Matrix gm = 2.0 * (col.asDiagonal() * b.means - gam.transpose() * q.means());
    const Matrix gs = 2.0 * (col.asDiagonal() * b.stds - gam.transpose() * q.stds());
    Matrix gv;
    if (bl > 0.0) gv = 2.0 * bl * (col.asDiagonal() * b.labels - gam.transpose() * q.labels());

    for (int c = 0; c < c_count; ++c) {
      const auto ci = static_cast<std::size_t>(c);
      const Matrix a = inv_w.asDiagonal() * plans.inner[li][ci];  // K_B x K_atom
      const Matrix am = a * dict.means[ci];
      const Matrix as = a * dict.stds[ci];
      double dl = (gm.array() * am.array()).sum() + (gs.array() * as.array()).sum();
      g.grad_means[ci].noalias() += lambda[c] * (a.transpose() * gm);
      g.grad_stds[ci].noalias() += lambda[c] * (a.transpose() * gs);
      if (bl > 0.0) {
        const Matrix av = a * v[ci];
        dl += (gv.array() * av.array()).sum();
        grad_v[ci].noalias() += lambda[c] * (a.transpose() * gv);
      }
      g.grad_coords(l, c) = dl;
    }
  }
  // through the softmax: du = v * (dv - <dv, v>)
  for (int c = 0; c < c_count; ++c) {
    const auto ci = static_cast<std::size_t>(c);
    const Vector inner = (grad_v[ci].array() * v[ci].array()).rowwise().sum();
    g.grad_logits[ci] = (v[ci].array() * (grad_v[ci].colwise() - inner).array()).matrix();
  }
  return g;
}

/// Mutable per-domain solver state reused across outer iterations.
struct DadilWarmState {
  std::vector<std::optional<GaussianMixture>> bary;
  std::vector<std::vector<TransportWarmStart>> inner_bases;
  std::vector<TransportWarmStart> outer_bases;

  void resize(std::size_t domains) {
    bary.resize(domains);
    inner_bases.resize(domains);
    outer_bases.resize(domains);
  }
};

/// Computes every barycenter B(lambda_l, atoms) with the fixed-point solver, then the optimal
/// plans between each domain mixture and the frozen-plan image of its barycenter.
inline FrozenPlans solve_dadil_plans(const Dictionary& dict, const std::vector<GaussianMixture>& sources,
                                     const GaussianMixture& target, const DadilConfig& cfg,
                                     DadilWarmState* warm = nullptr) {
  const auto n_dom = static_cast<int>(sources.size()) + 1;
  DadilWarmState local;
  if (!warm) warm = &local;
  warm->resize(static_cast<std::size_t>(n_dom));

  const auto atoms = dict.atoms();
  std::vector<Matrix> v;
  for (const auto& a : atoms) v.push_back(a.labels());
  FrozenPlans fp;
  fp.inner.resize(static_cast<std::size_t>(n_dom));
  fp.outer.resize(static_cast<std::size_t>(n_dom));
  fp.bary_weights = Vector::Constant(dict.k_atom(), 1.0 / static_cast<double>(dict.k_atom()));
  const BarycenterConfig inner_cfg = cfg.inner();

  detail::parallel_for(n_dom, cfg.threads, [&](int l) {
    const auto li = static_cast<std::size_t>(l);
    const Vector lambda = dict.coords.row(l).transpose();
    BarycenterResult res;
    if (warm->bary[li]) {
      res = smw_barycenter(atoms, lambda, inner_cfg, *warm->bary[li], &warm->inner_bases[li]);
    } else {
      BarycenterConfig first = inner_cfg;
      first.seed = split_seed(cfg.seed, 100 + static_cast<std::uint64_t>(l));
      const auto init = detail::initial_barycenter(atoms, first, true);
      res = smw_barycenter(atoms, lambda, first, init, &warm->inner_bases[li]);
    }
    warm->bary[li] = res.barycenter;
    fp.inner[li].reserve(res.plans.size());
    for (auto& p : res.plans) fp.inner[li].push_back(std::move(p.omega));

    const auto b = detail::frozen_barycenter(dict, v, fp.inner[li], lambda, fp.bary_weights);
    const bool is_source = l < n_dom - 1;
    const GaussianMixture& q = is_source ? sources[li] : target;
    Matrix cost(q.size(), dict.k_atom());
    for (Eigen::Index k = 0; k < q.size(); ++k)
      for (Eigen::Index i = 0; i < dict.k_atom(); ++i) {
        double c = (q.means().row(k) - b.means.row(i)).squaredNorm() +
                   (q.stds().row(k) - b.stds.row(i)).squaredNorm();
        if (is_source && cfg.beta > 0.0) c += cfg.beta * (q.labels().row(k) - b.labels.row(i)).squaredNorm();
        cost(k, i) = c;
      }
    fp.outer[li] = solve_transport(q.weights(), fp.bary_weights, cost, &warm->outer_bases[li]).omega;
  });
  return fp;
}

/// Loss and plan-frozen gradients at the current dictionary (plans re-solved from scratch).
inline LossGrad dadil_loss_grad(const Dictionary& dict, const std::vector<GaussianMixture>& sources,
                                const GaussianMixture& target, const DadilConfig& cfg) {
  detail::check_dictionary_domains(dict, sources, target);
  const FrozenPlans fp = solve_dadil_plans(dict, sources, target, cfg);
  return frozen_loss_grad(dict, sources, target, fp, cfg.beta);
}

/// Initial dictionary: atom means ~ N(0, I), stds 1, uniform label logits, coords 1/C.
inline Dictionary initial_dictionary(int n_atoms, Eigen::Index k_atom, Eigen::Index d,
                                     Eigen::Index n_classes, Eigen::Index n_domains, Seed seed) {
  Engine eng = make_engine(seed, stream::dadil_init);
  std::normal_distribution<double> normal(0.0, 1.0);
  Dictionary dict;
  for (int c = 0; c < n_atoms; ++c) {
    Matrix m(k_atom, d);
    for (Eigen::Index i = 0; i < k_atom; ++i)
      for (Eigen::Index j = 0; j < d; ++j) m(i, j) = normal(eng);
    dict.means.push_back(std::move(m));
    dict.stds.push_back(Matrix::Ones(k_atom, d));
    dict.logits.push_back(Matrix::Constant(k_atom, n_classes, 1.0 / static_cast<double>(n_classes)));
  }
  dict.coords = Matrix::Constant(n_domains, n_atoms, 1.0 / static_cast<double>(n_atoms));
  return dict;
}

/// Barycenter of the dictionary atoms at coordinates lambda.
inline GaussianMixture reconstruct(const Dictionary& dict, const Vector& lambda, const BarycenterConfig& cfg) {
  return smw_barycenter(dict.atoms(), lambda, cfg).barycenter;
}

inline GaussianMixture reconstruct(const Dictionary& dict, const Vector& lambda, const BarycenterConfig& cfg,
                                   const GaussianMixture& init) {
  return smw_barycenter(dict.atoms(), lambda, cfg, init).barycenter;
}

struct DadilResult {
  Dictionary dictionary;
  AdaptationResult adaptation;
};

/// Dictionary learning over atom mixtures: each iteration re-solves all barycenters and plans,
/// takes one optimizer step on (M, S, U, Lambda), floors S at s_min and projects every
/// coordinate row onto the simplex. The target reconstruction B(lambda_T, atoms) is returned
/// as the adapted, labeled target mixture.
inline DadilResult dadil_fit(const std::vector<GaussianMixture>& sources, const GaussianMixture& target_in,
                             const DadilConfig& cfg) {
  cfg.validate();
  const GaussianMixture target = target_in.unlabeled();
  detail::check_domains(sources, target);
  const int n_atoms = cfg.n_atoms > 0 ? cfg.n_atoms : static_cast<int>(sources.size()) + 1;
  const Eigen::Index k_atom = cfg.k_atom > 0 ? cfg.k_atom : target.size();
  const auto n_dom = static_cast<Eigen::Index>(sources.size()) + 1;

  DadilResult out;
  Dictionary& dict = out.dictionary;
  dict = initial_dictionary(n_atoms, k_atom, target.dim(), sources.front().n_classes(), n_dom, cfg.seed);
  Vector theta = dict.pack();
  Optimizer opt(cfg.optimizer, cfg.eta, theta.size(), cfg.adam);
  DadilWarmState warm;

  const Eigen::Index kd = k_atom * dict.dim();
  const Eigen::Index s_off = static_cast<Eigen::Index>(n_atoms) * kd;
  const Eigen::Index lam_off = theta.size() - dict.coords.size();

  for (int it = 1; it <= cfg.n_iter; ++it) {
    const FrozenPlans fp = solve_dadil_plans(dict, sources, target, cfg, &warm);
    const LossGrad lg = frozen_loss_grad(dict, sources, target, fp, cfg.beta);
    if (!std::isfinite(lg.loss))
      throw NumericalFailure("dadil", "non-finite loss at iteration " + std::to_string(it));
    out.adaptation.loss_trace.push_back(lg.loss);
    if (cfg.record_coords) out.adaptation.coords_trace.push_back(dict.coords);

    opt.step(theta, lg.pack());
    theta.segment(s_off, kd * n_atoms) = project_nonneg(theta.segment(s_off, kd * n_atoms), cfg.s_min);
    for (Eigen::Index l = 0; l < n_dom; ++l) {
      const Eigen::Index off = lam_off + l * n_atoms;
      theta.segment(off, n_atoms) = project_simplex(theta.segment(off, n_atoms));
    }
    dict.unpack(theta);
  }

  BarycenterConfig rc = cfg.reconstruction;
  rc.beta = cfg.beta;
  rc.s_min = cfg.s_min;
  const Vector lambda_t = dict.coords.row(n_dom - 1).transpose();
  const auto& last = warm.bary[static_cast<std::size_t>(n_dom - 1)];
  out.adaptation.target_gmm = last ? reconstruct(dict, lambda_t, rc, *last) : reconstruct(dict, lambda_t, rc);
  return out;
}

}  // namespace gmmot
