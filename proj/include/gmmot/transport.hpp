#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "gmmot/mixture.hpp"

namespace gmmot {

/// Marginal/objective tolerance for plans with at most 64 components per side.
inline constexpr double kPlanTolSmall = 1e-9;
/// Marginal/objective tolerance above 64 components per side.
inline constexpr double kPlanTolLarge = 1e-7;
/// Marginals whose sums differ from 1 by more than this are rejected.
inline constexpr double kMarginalSumTol = 1e-6;

inline double plan_tolerance(Eigen::Index kp, Eigen::Index kq) {
  return std::max(kp, kq) <= 64 ? kPlanTolSmall : kPlanTolLarge;
}

/// Coupling between two discrete marginals.
struct TransportPlan {
  Matrix omega;
  Vector p;
  Vector q;
  double objective = 0.0;
  int pivots = 0;

  Eigen::Index rows() const { return omega.rows(); }
  Eigen::Index cols() const { return omega.cols(); }
};

/// Final basis of a previous solve. Passing it back with identical marginals skips phase one:
/// the old tree is still primal feasible, only potentials are recomputed for the new costs.
struct TransportWarmStart {
  Eigen::Index m = 0, n = 0;
  Vector p, q;
  std::vector<double> flow;
  std::vector<std::int8_t> state;
  std::vector<std::int8_t> art_up;

  bool matches(const Vector& pp, const Vector& qq) const {
    return m == pp.size() && n == qq.size() && !flow.empty() && p == pp && q == qq;
  }
};

namespace detail {

/// Primal network simplex for the dense transportation problem.
///
/// Nodes 0..m-1 supply p, nodes m..m+n-1 demand q, node m+n is an artificial root joined to
/// every node by an artificial arc (big-M cost on demand side). The basis is kept as a strongly
/// feasible spanning tree: among blocking arcs the leaving one is the last met when walking the
/// pivot cycle from the apex along its orientation, which rules out cycling under degeneracy.
/// Entering arcs are priced by block search with a fixed starting offset, so the whole pivot
/// sequence is a deterministic function of the inputs.
class NetworkSimplex {
 public:
  static constexpr std::int8_t kTree = 0;
  static constexpr std::int8_t kLower = 1;

  NetworkSimplex(const Vector& p, const Vector& q, const Matrix& cost)
      : m_(p.size()), n_(q.size()), cost_(cost) {
    nodes_ = static_cast<int>(m_ + n_);
    root_ = nodes_;
    real_arcs_ = static_cast<int>(m_ * n_);
    supply_.resize(static_cast<std::size_t>(nodes_));
    for (Eigen::Index i = 0; i < m_; ++i) supply_[static_cast<std::size_t>(i)] = p[i];
    for (Eigen::Index j = 0; j < n_; ++j) supply_[static_cast<std::size_t>(m_ + j)] = -q[j];

    double max_cost = 0.0;
    for (Eigen::Index i = 0; i < cost.rows(); ++i)
      for (Eigen::Index j = 0; j < cost.cols(); ++j) max_cost = std::max(max_cost, std::abs(cost(i, j)));
    art_cost_ = (max_cost + 1.0) * static_cast<double>(nodes_);

    const auto all = static_cast<std::size_t>(real_arcs_ + nodes_);
    flow_.assign(all, 0.0);
    state_.assign(all, kLower);
    art_up_.assign(static_cast<std::size_t>(nodes_), 1);
    parent_.assign(static_cast<std::size_t>(nodes_ + 1), -1);
    pred_.assign(static_cast<std::size_t>(nodes_ + 1), -1);
    up_.assign(static_cast<std::size_t>(nodes_ + 1), 1);
    depth_.assign(static_cast<std::size_t>(nodes_ + 1), 0);
    pi_.assign(static_cast<std::size_t>(nodes_ + 1), 0.0);
    adj_.assign(static_cast<std::size_t>(nodes_ + 1), {});
    order_.reserve(static_cast<std::size_t>(nodes_ + 1));
    block_ = std::max(10, static_cast<int>(std::sqrt(static_cast<double>(real_arcs_))));
  }

  void cold_start() {
    for (int u = 0; u < nodes_; ++u) {
      const int e = real_arcs_ + u;
      const double b = supply_[static_cast<std::size_t>(u)];
      art_up_[static_cast<std::size_t>(u)] = b >= 0.0 ? 1 : 0;
      flow_[static_cast<std::size_t>(e)] = std::abs(b);
      state_[static_cast<std::size_t>(e)] = kTree;
    }
    build_adjacency();
  }

  void warm_start(const TransportWarmStart& ws) {
    flow_ = ws.flow;
    state_ = ws.state;
    art_up_ = ws.art_up;
    build_adjacency();
  }

  /// Runs pivots until no arc has negative reduced cost. Returns the pivot count.
  int run() {
    rebuild_tree();
    const long long max_pivots = 50LL * (real_arcs_ + nodes_) * (nodes_ + 1) + 1000;
    int pivots = 0;
    while (find_entering()) {
      if (++pivots > max_pivots)
        throw NumericalFailure("transport", "network simplex exceeded its pivot budget");
      pivot();
    }
    return pivots;
  }

  double flow(Eigen::Index i, Eigen::Index j) const {
    return flow_[static_cast<std::size_t>(i * n_ + j)];
  }

  double artificial_flow() const {
    double acc = 0.0;
    for (int u = 0; u < nodes_; ++u) acc += flow_[static_cast<std::size_t>(real_arcs_ + u)];
    return acc;
  }

  void export_basis(TransportWarmStart& ws, const Vector& p, const Vector& q) const {
    ws.m = m_;
    ws.n = n_;
    ws.p = p;
    ws.q = q;
    ws.flow = flow_;
    ws.state = state_;
    ws.art_up = art_up_;
  }

 private:
  int src(int e) const {
    if (e < real_arcs_) return e / static_cast<int>(n_);
    const int u = e - real_arcs_;
    return art_up_[static_cast<std::size_t>(u)] ? u : root_;
  }
  int tgt(int e) const {
    if (e < real_arcs_) return static_cast<int>(m_) + e % static_cast<int>(n_);
    const int u = e - real_arcs_;
    return art_up_[static_cast<std::size_t>(u)] ? root_ : u;
  }
  double arc_cost(int e) const {
    if (e < real_arcs_) return cost_(e / n_, e % n_);
    return art_up_[static_cast<std::size_t>(e - real_arcs_)] ? 0.0 : art_cost_;
  }

  void build_adjacency() {
    for (auto& a : adj_) a.clear();
    const int all = real_arcs_ + nodes_;
    for (int e = 0; e < all; ++e) {
      if (state_[static_cast<std::size_t>(e)] != kTree) continue;
      adj_[static_cast<std::size_t>(src(e))].push_back(e);
      adj_[static_cast<std::size_t>(tgt(e))].push_back(e);
    }
  }

  // Recomputes parent/pred/orientation/depth/potentials by BFS from the root.
  void rebuild_tree() {
    order_.clear();
    order_.push_back(root_);
    parent_[static_cast<std::size_t>(root_)] = -1;
    pred_[static_cast<std::size_t>(root_)] = -1;
    depth_[static_cast<std::size_t>(root_)] = 0;
    pi_[static_cast<std::size_t>(root_)] = 0.0;
    for (std::size_t head = 0; head < order_.size(); ++head) {
      const int u = order_[head];
      for (int e : adj_[static_cast<std::size_t>(u)]) {
        if (e == pred_[static_cast<std::size_t>(u)]) continue;
        const int s = src(e), t = tgt(e);
        const int v = s == u ? t : s;
        const auto vi = static_cast<std::size_t>(v);
        parent_[vi] = u;
        pred_[vi] = e;
        depth_[vi] = depth_[static_cast<std::size_t>(u)] + 1;
        if (s == u) {  // arc parent -> v
          up_[vi] = 0;
          pi_[vi] = pi_[static_cast<std::size_t>(u)] + arc_cost(e);
        } else {  // arc v -> parent
          up_[vi] = 1;
          pi_[vi] = pi_[static_cast<std::size_t>(u)] - arc_cost(e);
        }
        order_.push_back(v);
      }
    }
    if (static_cast<int>(order_.size()) != nodes_ + 1)
      throw NumericalFailure("transport", "basis is not a spanning tree");
  }

  double reduced(int e) const {
    const int s = e / static_cast<int>(n_);
    const int t = static_cast<int>(m_) + e % static_cast<int>(n_);
    return cost_(s, e % n_) + pi_[static_cast<std::size_t>(s)] - pi_[static_cast<std::size_t>(t)];
  }

  bool find_entering() {
    double best = 0.0;
    int cnt = block_;
    int e = next_arc_;
    for (int scanned = 0; scanned < real_arcs_; ++scanned) {
      if (state_[static_cast<std::size_t>(e)] == kLower) {
        const int s = e / static_cast<int>(n_);
        const int t = static_cast<int>(m_) + e % static_cast<int>(n_);
        const double ps = pi_[static_cast<std::size_t>(s)], pt = pi_[static_cast<std::size_t>(t)];
        const double c = cost_(s, e % n_);
        const double rc = c + ps - pt;
        const double tol = 1e-13 * (1.0 + std::abs(c) + std::abs(ps) + std::abs(pt));
        if (rc < -tol && rc < best) {
          best = rc;
          in_arc_ = e;
        }
      }
      if (++e == real_arcs_) e = 0;
      if (--cnt == 0) {
        if (best < 0.0) {
          next_arc_ = e;
          return true;
        }
        cnt = block_;
      }
    }
    if (best < 0.0) {
      next_arc_ = e;
      return true;
    }
    return false;
  }

  void pivot() {
    const int in = in_arc_;
    const int first = src(in);  // entering arc is at its lower bound: flow goes first -> second
    const int second = tgt(in);

    int a = first, b = second;
    while (a != b) {
      if (depth_[static_cast<std::size_t>(a)] >= depth_[static_cast<std::size_t>(b)])
        a = parent_[static_cast<std::size_t>(a)];
      else
        b = parent_[static_cast<std::size_t>(b)];
    }
    const int join = a;

    // Cycle orientation: join -> ... -> first -> second -> ... -> join.
    double delta = std::numeric_limits<double>::infinity();
    int u_out = -1;
    for (int u = first; u != join; u = parent_[static_cast<std::size_t>(u)]) {
      // flow runs parent -> u; arcs pointing up lose flow
      if (up_[static_cast<std::size_t>(u)]) {
        const double d = flow_[static_cast<std::size_t>(pred_[static_cast<std::size_t>(u)])];
        if (d < delta) {
          delta = d;
          u_out = u;
        }
      }
    }
    for (int u = second; u != join; u = parent_[static_cast<std::size_t>(u)]) {
      // flow runs u -> parent; arcs pointing down lose flow
      if (!up_[static_cast<std::size_t>(u)]) {
        const double d = flow_[static_cast<std::size_t>(pred_[static_cast<std::size_t>(u)])];
        if (d <= delta) {
          delta = d;
          u_out = u;
        }
      }
    }
    if (u_out < 0) throw NumericalFailure("transport", "unbounded pivot cycle");

    if (delta > 0.0) {
      flow_[static_cast<std::size_t>(in)] += delta;
      for (int u = first; u != join; u = parent_[static_cast<std::size_t>(u)]) {
        auto& f = flow_[static_cast<std::size_t>(pred_[static_cast<std::size_t>(u)])];
        f += up_[static_cast<std::size_t>(u)] ? -delta : delta;
      }
      for (int u = second; u != join; u = parent_[static_cast<std::size_t>(u)]) {
        auto& f = flow_[static_cast<std::size_t>(pred_[static_cast<std::size_t>(u)])];
        f += up_[static_cast<std::size_t>(u)] ? delta : -delta;
      }
    }
    const int out = pred_[static_cast<std::size_t>(u_out)];
    flow_[static_cast<std::size_t>(out)] = 0.0;
    state_[static_cast<std::size_t>(out)] = kLower;
    state_[static_cast<std::size_t>(in)] = kTree;

    auto drop = [this](int node, int e) {
      auto& v = adj_[static_cast<std::size_t>(node)];
      v.erase(std::find(v.begin(), v.end(), e));
    };
    drop(src(out), out);
    drop(tgt(out), out);
    adj_[static_cast<std::size_t>(src(in))].push_back(in);
    adj_[static_cast<std::size_t>(tgt(in))].push_back(in);
    rebuild_tree();
  }

  Eigen::Index m_, n_;
  const Matrix& cost_;
  int nodes_ = 0, root_ = 0, real_arcs_ = 0, block_ = 10;
  int next_arc_ = 0, in_arc_ = -1;
  double art_cost_ = 0.0;
  std::vector<double> supply_;
  std::vector<double> flow_;
  std::vector<std::int8_t> state_;
  std::vector<std::int8_t> art_up_;
  std::vector<int> parent_, pred_, depth_;
  std::vector<std::int8_t> up_;
  std::vector<double> pi_;
  std::vector<std::vector<int>> adj_;
  std::vector<int> order_;
};

inline void check_marginal(const Vector& w, const char* name) {
  if (w.size() < 1) throw InfeasibleMarginals(std::string(name) + " is empty");
  if (!w.allFinite()) throw InfeasibleMarginals(std::string(name) + " has non-finite entries");
  if (w.minCoeff() < -kSimplexTol) throw InfeasibleMarginals(std::string(name) + " has negative entries");
  if (std::abs(w.sum() - 1.0) > kMarginalSumTol)
    throw InfeasibleMarginals(std::string(name) + " sums to " + std::to_string(w.sum()) + ", not 1");
}

}  // namespace detail

/// Exact optimal basic solution of min <omega, C> over couplings of p and q.
///
/// When the sums of p and q disagree by less than kMarginalSumTol, q is rescaled to the mass of p
/// so the rows of the plan reproduce p exactly. `warm` (optional) both seeds and receives the
/// final basis.
inline TransportPlan solve_transport(const Vector& p, const Vector& q, const Matrix& cost,
                                     TransportWarmStart* warm = nullptr) {
  detail::check_marginal(p, "row marginal");
  detail::check_marginal(q, "column marginal");
  if (cost.rows() != p.size() || cost.cols() != q.size())
    throw InvalidInput("cost matrix is " + std::to_string(cost.rows()) + "x" +
                       std::to_string(cost.cols()) + ", marginals are " +
                       std::to_string(p.size()) + " and " + std::to_string(q.size()));
  if (!cost.allFinite()) throw NumericalFailure("transport", "cost matrix has non-finite entries");

  const Vector pp = p.cwiseMax(0.0);
  Vector qq = q.cwiseMax(0.0);
  qq *= pp.sum() / qq.sum();

  detail::NetworkSimplex ns(pp, qq, cost);
  if (warm && warm->matches(pp, qq))
    ns.warm_start(*warm);
  else
    ns.cold_start();
  TransportPlan plan;
  plan.pivots = ns.run();
  if (ns.artificial_flow() > kMarginalSumTol)
    throw InfeasibleMarginals("transport: residual mass left on artificial arcs");
  if (warm) ns.export_basis(*warm, pp, qq);

  plan.omega.resize(p.size(), q.size());
  double obj = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i)
    for (Eigen::Index j = 0; j < q.size(); ++j) {
      const double f = ns.flow(i, j);
      plan.omega(i, j) = f;
      obj += f * cost(i, j);
    }
  plan.p = p;
  plan.q = q;
  plan.objective = obj;
  return plan;
}

}  // namespace gmmot
