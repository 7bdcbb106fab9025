#pragma once

// Independent reference computations used by the unit and acceptance tests.
// None of these share code paths with the library solvers they check.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include "mts/multipliers.hpp"
#include "mts/tree.hpp"

namespace oracle {

// Random tree with every leaf at depth `depth`, branching in [1, max_branch]
// (at least 2 at the root), between 2 and `max_leaves` leaves. Weights in
// [0.5, 3]; with hst_tau > 0 each edge is stretched to tau times the
// diameter below it (times a random factor in [1, 2]).
inline mts::WeightedTree random_tree(std::mt19937_64& rng, int depth, int max_leaves,
                                     int max_branch = 3, double hst_tau = 0.0) {
  std::uniform_real_distribution<double> wdist(0.5, 3.0), stretch(1.0, 2.0);
  struct Shape {
    double height, diam;
  };
  for (;;) {
    std::vector<mts::Edge> edges;
    mts::NodeId next = 1;
    int leaves = 0;
    std::function<Shape(mts::NodeId, int)> grow = [&](mts::NodeId u, int level) -> Shape {
      if (level == depth) {
        ++leaves;
        return {0.0, 0.0};
      }
      int lo = level == 0 ? 2 : 1;
      int k = std::uniform_int_distribution<int>(lo, std::max(lo, max_branch))(rng);
      Shape out{0.0, 0.0};
      double top1 = 0.0, top2 = 0.0;
      for (int i = 0; i < k; ++i) {
        mts::NodeId c = next++;
        Shape sub = grow(c, level + 1);
        double w = wdist(rng);
        if (hst_tau > 0.0) w = std::max(w, hst_tau * sub.diam * stretch(rng));
        edges.push_back({u, c, w});
        double reach = w + sub.height;
        out.height = std::max(out.height, reach);
        out.diam = std::max(out.diam, sub.diam);
        if (reach > top1) {
          top2 = top1;
          top1 = reach;
        } else if (reach > top2) {
          top2 = reach;
        }
      }
      if (k >= 2) out.diam = std::max(out.diam, top1 + top2);
      return out;
    };
    grow(0, 0);
    if (leaves > max_leaves || leaves < 2) continue;
    return mts::WeightedTree::build(edges, 0);
  }
}

// Leaf distance by brute force: climb both leaves to the root.
inline double path_length(const mts::WeightedTree& t, int leaf_a, int leaf_b) {
  int a = t.leaf_node(leaf_a), b = t.leaf_node(leaf_b);
  double d = 0.0;
  while (a != b) {
    if (t.depth(a) >= t.depth(b)) {
      d += t.weight(a);
      a = t.parent(a);
    } else {
      d += t.weight(b);
      b = t.parent(b);
    }
  }
  return d;
}

// Minimum-cost perfect matching on a square cost matrix (Hungarian method).
inline double assignment_cost(const std::vector<std::vector<double>>& cost) {
  const int n = static_cast<int>(cost.size());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, false);
    do {
      used[j0] = true;
      int i0 = p[j0], j1 = 0;
      double delta = inf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  double total = 0.0;
  for (int j = 1; j <= n; ++j) total += cost[p[j] - 1][j - 1];
  return total;
}

// Transport cost between two distributions whose masses are integer
// multiples of 1/atoms, by matching unit atoms.
inline double transport_by_matching(const mts::WeightedTree& t, const std::vector<int>& p_atoms,
                                    const std::vector<int>& q_atoms, int atoms) {
  std::vector<int> src, dst;
  for (std::size_t l = 0; l < p_atoms.size(); ++l)
    for (int k = 0; k < p_atoms[l]; ++k) src.push_back(static_cast<int>(l));
  for (std::size_t l = 0; l < q_atoms.size(); ++l)
    for (int k = 0; k < q_atoms[l]; ++k) dst.push_back(static_cast<int>(l));
  std::vector<std::vector<double>> cost(atoms, std::vector<double>(atoms));
  for (int i = 0; i < atoms; ++i)
    for (int j = 0; j < atoms; ++j) cost[i][j] = path_length(t, src[i], dst[j]);
  return assignment_cost(cost) / atoms;
}

// Root of a nondecreasing function by bisection.
inline double bisect(const std::function<double(double)>& f, double lo, double hi,
                     double tol = 1e-14) {
  while (f(hi) < 0.0) hi *= 2.0;
  for (int it = 0; it < 400 && hi - lo > tol * std::max(1.0, std::abs(hi)); ++it) {
    double mid = 0.5 * (lo + hi);
    (f(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Star multiplier by bisection on F(mu).
inline double star_mu_bisect(const std::vector<double>& p, const std::vector<double>& s,
                             const std::vector<double>& c) {
  auto F = [&](double mu) {
    double f = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
      f += p[i] > 0.0 ? s[i] * (mu - c[i]) : s[i] * std::max(0.0, mu - c[i]);
    return f;
  };
  double hi = 1.0;
  for (double ci : c) hi = std::max(hi, ci);
  return bisect(F, 0.0, hi);
}

struct DenseKkt {
  std::vector<double> node_drift;  // per node index (root entry 0)
  std::vector<double> lambda_hat;  // per node index, zero on leaves
  std::vector<double> xi;          // per leaf
  double objective = 0.0;
  bool found = false;
};

// Projected dynamics at a state as a quadratic program over node drifts v:
//   min 1/2 v^T H v + <c, v_leaves>,  H = diag(w / (eta (x + delta)))
//   s.t. v_u = sum of children's v (internal u), v_root = 0,
//        v_l >= 0 for leaves with zero mass.
// Solved by enumerating the active leaf set and a dense KKT solve.
inline DenseKkt dense_kkt(const mts::WeightedTree& t, const std::vector<double>& p,
                          const std::vector<double>& c, const mts::EntropicRegularizer& reg) {
  const int N = static_cast<int>(t.node_count());
  const std::vector<double> x = t.subtree_masses(p);
  std::vector<int> internal;
  for (int u = 0; u < N; ++u)
    if (!t.is_leaf(u)) internal.push_back(u);
  std::vector<int> zero_leaves;
  for (std::size_t l = 0; l < t.leaf_count(); ++l)
    if (p[l] <= 0.0) zero_leaves.push_back(static_cast<int>(l));

  DenseKkt best;
  best.objective = std::numeric_limits<double>::infinity();
  const int nv = N - 1;  // variables: non-root nodes, index u-1
  for (unsigned mask = 0; mask < (1u << zero_leaves.size()); ++mask) {
    std::vector<int> active;
    for (std::size_t k = 0; k < zero_leaves.size(); ++k)
      if (mask >> k & 1u) active.push_back(zero_leaves[k]);
    const int m = static_cast<int>(internal.size() + active.size());
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(nv + m, nv + m);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nv + m);
    for (int u = 1; u < N; ++u) {
      K(u - 1, u - 1) = t.weight(u) / (reg.eta[u] * (x[u] + reg.delta[u]));
      if (t.is_leaf(u)) rhs(u - 1) = -c[t.leaf_number(u)];
    }
    int row = nv;
    for (int u : internal) {
      if (u != 0) {
        K(row, u - 1) = 1.0;
        K(u - 1, row) = 1.0;
      }
      for (int ch : t.children(u)) {
        K(row, ch - 1) = -1.0;
        K(ch - 1, row) = -1.0;
      }
      ++row;
    }
    for (int l : active) {
      int u = t.leaf_node(l);
      K(row, u - 1) = -1.0;
      K(u - 1, row) = -1.0;
      ++row;
    }
    Eigen::VectorXd sol = K.fullPivLu().solve(rhs);
    if (!((K * sol - rhs).norm() <= 1e-9 * std::max(1.0, rhs.norm()))) continue;
    bool feasible = true;
    for (int l : zero_leaves) {
      int u = t.leaf_node(l);
      if (sol(u - 1) < -1e-12) feasible = false;
    }
    if (!feasible) continue;
    double obj = 0.0;
    for (int u = 1; u < N; ++u) {
      obj += 0.5 * K(u - 1, u - 1) * sol(u - 1) * sol(u - 1);
      if (t.is_leaf(u)) obj += c[t.leaf_number(u)] * sol(u - 1);
    }
    if (obj < best.objective - 1e-15) {
      best.objective = obj;
      best.found = true;
      best.node_drift.assign(N, 0.0);
      best.lambda_hat.assign(N, 0.0);
      best.xi.assign(t.leaf_count(), 0.0);
      for (int u = 1; u < N; ++u) best.node_drift[u] = sol(u - 1);
      for (std::size_t k = 0; k < internal.size(); ++k) best.lambda_hat[internal[k]] = sol(nv + k);
      for (std::size_t k = 0; k < active.size(); ++k)
        best.xi[active[k]] = sol(nv + internal.size() + k);
    }
  }
  return best;
}

// Offline optimum by enumerating every leaf sequence (n^T paths).
// start < 0 lets the path begin anywhere.
inline double exhaustive_opt(const mts::WeightedTree& t, const std::vector<std::vector<double>>& C,
                             int start) {
  const int n = static_cast<int>(t.leaf_count());
  const int T = static_cast<int>(C.size());
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> seq(T, 0);
  std::function<void(int, int, double)> go = [&](int round, int prev, double acc) {
    if (acc >= best) return;
    if (round == T) {
      best = acc;
      return;
    }
    for (int x = 0; x < n; ++x) {
      double move = prev < 0 ? 0.0 : path_length(t, prev, x);
      go(round + 1, x, acc + move + C[round][x]);
    }
  };
  if (T == 0) return 0.0;
  go(0, start, 0.0);
  return best;
}

}  // namespace oracle
