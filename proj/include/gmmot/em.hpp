#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "gmmot/density.hpp"
#include "gmmot/mixture.hpp"
#include "gmmot/random.hpp"

namespace gmmot {

struct EmConfig {
  int n_components = 1;
  int max_iter = 100;
  double tol = 1e-5;  // stop once |Δ mean log-likelihood| < tol
  double s_min = kDefaultSMin;
  Seed seed = 0;

  void validate() const {
    if (n_components < 1) throw InvalidInput("EM: n_components must be positive");
    if (max_iter < 1) throw InvalidInput("EM: max_iter must be positive");
    if (!(tol > 0.0)) throw InvalidInput("EM: tol must be positive");
    if (!(s_min > 0.0)) throw InvalidInput("EM: s_min must be positive");
  }
};

struct EmTrace {
  GaussianMixture gmm;
  std::vector<double> log_likelihood;  // [0] is the initialization, one entry per iteration after
  int iterations = 0;
  bool converged = false;
  int reseeds = 0;
};

namespace detail {

/// Per-coordinate population standard deviation, floored at s_min.
inline Vector clamped_std(const Matrix& x, double s_min) {
  const Vector mu = x.colwise().mean().transpose();
  Vector s(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double var = (x.col(j).array() - mu[j]).square().mean();
    s[j] = std::max(std::sqrt(var), s_min);
  }
  return s;
}

/// k-means++ seeding of K means from the rows of x.
inline Matrix kmeanspp(const Matrix& x, int k, Engine& eng) {
  const auto n = x.rows();
  Matrix centers(k, x.cols());
  std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
  centers.row(0) = x.row(first(eng));
  Vector d2 = (x.rowwise() - centers.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    Eigen::Index pick = 0;
    const double total = d2.sum();
    if (total > 0.0) {
      std::uniform_real_distribution<double> u(0.0, total);
      double target = u(eng);
      for (pick = 0; pick < n - 1; ++pick) {
        target -= d2[pick];
        if (target < 0.0) break;
      }
      while (d2[pick] == 0.0 && pick > 0) --pick;
    } else {
      pick = first(eng);
    }
    centers.row(c) = x.row(pick);
    d2 = d2.cwiseMin((x.rowwise() - centers.row(c)).rowwise().squaredNorm());
  }
  return centers;
}

/// E-step: fills log joint densities (n x K) and returns per-point log-density.
inline Vector e_step(const Matrix& x, const Vector& w, const Matrix& mu, const Matrix& s,
                     Matrix& resp) {
  const auto n = x.rows();
  const auto k = w.size();
  const auto d = x.cols();
  resp.resize(n, k);
  for (Eigen::Index c = 0; c < k; ++c) {
    const double logw = w[c] > 0.0 ? std::log(w[c]) : -std::numeric_limits<double>::infinity();
    const double norm = s.row(c).array().log().sum() + 0.5 * static_cast<double>(d) * kLogTwoPi;
    const auto inv = s.row(c).array().inverse().eval();
    for (Eigen::Index i = 0; i < n; ++i) {
      const double q = ((x.row(i).array() - mu.row(c).array()) * inv).square().sum();
      resp(i, c) = logw - norm - 0.5 * q;
    }
  }
  Vector lse(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double m = resp.row(i).maxCoeff();
    double acc = 0.0;
    for (Eigen::Index c = 0; c < k; ++c) acc += std::exp(resp(i, c) - m);
    lse[i] = m + std::log(acc);
    for (Eigen::Index c = 0; c < k; ++c) resp(i, c) = std::exp(resp(i, c) - lse[i]);
  }
  return lse;
}

}  // namespace detail

/// Maximum-likelihood fit of an axis-aligned mixture by EM, recording the log-likelihood trace.
inline EmTrace em_fit_traced(const Matrix& x, const EmConfig& cfg) {
  cfg.validate();
  const auto n = x.rows();
  const auto d = x.cols();
  const int k = cfg.n_components;
  if (n < 1 || d < 1) throw InvalidInput("EM: empty data");
  if (!x.allFinite()) throw InvalidInput("EM: data contains non-finite features");
  if (n < k)
    throw InvalidInput("EM: " + std::to_string(n) + " samples for " + std::to_string(k) +
                       " components");

  Engine eng = make_engine(cfg.seed, stream::em_init);
  const Vector global_std = detail::clamped_std(x, cfg.s_min);
  Vector w = Vector::Constant(k, 1.0 / k);
  Matrix mu = detail::kmeanspp(x, k, eng);
  Matrix s = global_std.transpose().replicate(k, 1);

  EmTrace out;
  Matrix resp;
  Vector lse = detail::e_step(x, w, mu, s, resp);
  double ll = lse.mean();
  out.log_likelihood.push_back(ll);

  for (int it = 1; it <= cfg.max_iter; ++it) {
    Vector nk = resp.colwise().sum().transpose();
    for (int c = 0; c < k; ++c) {
      if (nk[c] >= 1e-10) {
        const Vector shift = (resp.col(c).transpose() * (x.rowwise() - mu.row(c))).transpose() / nk[c];
        mu.row(c) += shift.transpose();
        const Vector var =
            (resp.col(c).transpose() * (x.rowwise() - mu.row(c)).array().square().matrix())
                .transpose() / nk[c];
        for (Eigen::Index j = 0; j < d; ++j) s(c, j) = std::max(std::sqrt(var[j]), cfg.s_min);
      } else {
        // collapsed component: restart it on the worst-explained point
        Eigen::Index worst = 0;
        lse.minCoeff(&worst);
        mu.row(c) = x.row(worst);
        s.row(c) = global_std.transpose();
        nk[c] = 1.0;
        ++out.reseeds;
      }
    }
    w = nk / nk.sum();

    lse = detail::e_step(x, w, mu, s, resp);
    const double ll_new = lse.mean();
    if (!std::isfinite(ll_new)) throw NumericalFailure("em", "non-finite log-likelihood");
    out.log_likelihood.push_back(ll_new);
    out.iterations = it;
    if (std::abs(ll_new - ll) < cfg.tol) {
      out.converged = true;
      break;
    }
    ll = ll_new;
  }
  out.gmm = GaussianMixture(w, mu, s);
  return out;
}

inline GaussianMixture em_fit(const Matrix& x, const EmConfig& cfg) {
  return em_fit_traced(x, cfg).gmm;
}

/// Fits P(x | y) with k_per_class components per class and concatenates the class mixtures.
/// Component weights are scaled by the empirical class frequency; label rows are one-hot.
inline GaussianMixture fit_labeled(const LabeledDataset& data, int k_per_class, const EmConfig& cfg) {
  data.validate();
  if (!data.labels) throw InvalidInput("fit_labeled needs labels");
  if (k_per_class < 1) throw InvalidInput("k_per_class must be positive");
  const int nc = data.n_classes;
  const auto n = data.size();
  const auto d = data.dim();
  const auto& y = *data.labels;

  std::vector<std::vector<Eigen::Index>> members(static_cast<std::size_t>(nc));
  for (Eigen::Index i = 0; i < n; ++i) members[static_cast<std::size_t>(y[static_cast<std::size_t>(i)])].push_back(i);
  for (int c = 0; c < nc; ++c) {
    const auto cnt = members[static_cast<std::size_t>(c)].size();
    if (cnt < static_cast<std::size_t>(k_per_class))
      throw InvalidInput("class " + std::to_string(c) + " has " + std::to_string(cnt) +
                         " samples, fewer than k_per_class = " + std::to_string(k_per_class));
  }

  const Eigen::Index total = static_cast<Eigen::Index>(nc) * k_per_class;
  Vector w(total);
  Matrix mu(total, d), s(total, d);
  Matrix labels = Matrix::Zero(total, nc);
  for (int c = 0; c < nc; ++c) {
    const auto& idx = members[static_cast<std::size_t>(c)];
    Matrix xc(static_cast<Eigen::Index>(idx.size()), d);
    for (std::size_t r = 0; r < idx.size(); ++r) xc.row(static_cast<Eigen::Index>(r)) = data.features.row(idx[r]);
    EmConfig sub = cfg;
    sub.n_components = k_per_class;
    sub.seed = split_seed(split_seed(cfg.seed, stream::fit_class), static_cast<std::uint64_t>(c));
    const GaussianMixture g = em_fit(xc, sub);
    const double freq = static_cast<double>(idx.size()) / static_cast<double>(n);
    const Eigen::Index off = static_cast<Eigen::Index>(c) * k_per_class;
    w.segment(off, k_per_class) = g.weights() * freq;
    mu.middleRows(off, k_per_class) = g.means();
    s.middleRows(off, k_per_class) = g.stds();
    labels.block(off, c, k_per_class, 1).setOnes();
  }
  w /= w.sum();
  return {w, mu, s, labels};
}

}  // namespace gmmot
