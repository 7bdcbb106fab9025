#include "mts/multipliers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mts/error.hpp"
#include "mts/pwl.hpp"

namespace mts {

namespace {

double floor_delta(double d, bool& floored) {
  if (!(d > 0.0) || !std::isfinite(d)) throw InputError("shift parameters must be positive");
  if (d < EntropicRegularizer::kDeltaFloor) {
    floored = true;
    return EntropicRegularizer::kDeltaFloor;
  }
  return d;
}

void require_star(const WeightedTree& tree) {
  if (tree.max_depth() != 1 || !tree.uniform_leaf_depth())
    throw InputError("star dynamics need a depth-1 tree (root plus leaves)");
}

}  // namespace

EntropicRegularizer EntropicRegularizer::star(const WeightedTree& tree, double eta, double delta) {
  std::vector<double> etas(tree.leaf_count(), eta), deltas(tree.leaf_count(), delta);
  return star(tree, etas, deltas);
}

EntropicRegularizer EntropicRegularizer::star(const WeightedTree& tree,
                                              std::span<const double> eta,
                                              std::span<const double> delta) {
  require_star(tree);
  if (eta.size() != tree.leaf_count() || delta.size() != tree.leaf_count())
    throw InputError("one learning rate and one shift per leaf required");
  EntropicRegularizer reg;
  reg.eta.assign(tree.node_count(), 1.0);
  reg.delta.assign(tree.node_count(), 1.0);
  for (std::size_t i = 0; i < tree.leaf_count(); ++i) {
    if (!(eta[i] > 0.0) || !std::isfinite(eta[i])) throw InputError("learning rates must be positive");
    int u = tree.leaf_node(static_cast<int>(i));
    reg.eta[u] = eta[i];
    reg.delta[u] = floor_delta(delta[i], reg.delta_floored);
  }
  return reg;
}

EntropicRegularizer EntropicRegularizer::multiscale(const WeightedTree& tree, double eta,
                                                    double leaf_delta) {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw InputError("learning rate must be positive");
  EntropicRegularizer reg;
  reg.eta.assign(tree.node_count(), eta);
  reg.delta.assign(tree.node_count(), 0.0);
  double leaf = floor_delta(leaf_delta, reg.delta_floored);
  for (int u = static_cast<int>(tree.node_count()) - 1; u >= 0; --u) {
    if (tree.is_leaf(u)) {
      reg.delta[u] = leaf;
    } else {
      for (int c : tree.children(u)) reg.delta[u] += reg.delta[c];
    }
  }
  return reg;
}

double EntropicRegularizer::lipschitz(const WeightedTree& tree) const {
  double lip = 0.0;
  for (int u = 1; u < static_cast<int>(tree.node_count()); ++u)
    lip = std::max(lip, 2.0 * std::log(1.0 / delta[u]) / eta[u]);
  return lip;
}

double EntropicRegularizer::min_leaf_delta(const WeightedTree& tree) const {
  double m = 1.0;
  for (std::size_t i = 0; i < tree.leaf_count(); ++i)
    m = std::min(m, delta[tree.leaf_node(static_cast<int>(i))]);
  return m;
}

double sensitivity(double eta, double weight, double mass, double delta) {
  return eta / weight * (mass + delta);
}

MultiplierSolution star_multiplier_solve(std::span<const double> p, std::span<const double> s,
                                         std::span<const double> c) {
  MultiplierSolution sol;
  star_multiplier_solve(p, s, c, sol);
  return sol;
}

void star_multiplier_solve(std::span<const double> p, std::span<const double> s,
                           std::span<const double> c, MultiplierSolution& sol) {
  const std::size_t n = p.size();
  sol.mu = 0.0;
  sol.clamp_count = 0;
  sol.lambda_hat.clear();
  sol.node_drift.clear();
  sol.xi.assign(n, 0.0);
  sol.leaf_drift.assign(n, 0.0);
  sol.active_set.clear();
  sol.residuals = KktResiduals{};

  // F(mu) = sum_{p>0} s(mu - c) + sum_{p=0} s max(0, mu - c). Start from the
  // positive coordinates and absorb zero coordinates with c_i < mu in
  // increasing order of c; each absorption keeps mu above the absorbed c_i.
  double a = 0.0, b = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (p[i] > 0.0) {
      a += s[i];
      b += s[i] * c[i];
    } else {
      sol.active_set.push_back(static_cast<int>(i));
    }
  }
  if (!(a > 0.0)) throw InvariantError("star_multiplier_solve: no coordinate with positive mass");
  double mu = b / a;
  if (!sol.active_set.empty()) {
    std::sort(sol.active_set.begin(), sol.active_set.end(), [&](int i, int j) {
      return c[i] < c[j] || (c[i] == c[j] && i < j);
    });
    for (int i : sol.active_set) {
      if (!(c[i] < mu)) break;
      a += s[i];
      b += s[i] * c[i];
      mu = b / a;
    }
    std::sort(sol.active_set.begin(), sol.active_set.end());
  }
  sol.mu = mu;

  double total = 0.0;
  KktResiduals& r = sol.residuals;
  r.min_multiplier = mu;
  r.min_reduced_cost = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    double xi = p[i] > 0.0 ? 0.0 : std::max(0.0, c[i] - mu);
    double drift = s[i] * (mu - c[i] + xi);
    sol.xi[i] = xi;
    sol.leaf_drift[i] = drift;
    total += drift;
    if (xi > 0.0) {
      r.complementary_slackness =
          std::max({r.complementary_slackness, std::abs(xi * p[i]), std::abs(drift)});
      r.min_multiplier = std::min(r.min_multiplier, xi);
    }
    r.min_reduced_cost = std::min(r.min_reduced_cost, c[i] - xi);
  }
  r.mass_balance = std::abs(total);
}

MultiplierSolution tree_multiplier_solve(const WeightedTree& tree, std::span<const double> p,
                                         std::span<const double> c,
                                         const EntropicRegularizer& reg) {
  const int nodes = static_cast<int>(tree.node_count());
  const std::size_t leaves = tree.leaf_count();
  MultiplierSolution sol;
  sol.lambda_hat.assign(nodes, 0.0);
  sol.xi.assign(leaves, 0.0);
  sol.leaf_drift.assign(leaves, 0.0);
  sol.node_drift.assign(nodes, 0.0);
  if (nodes == 1) return sol;  // single point: nothing moves

  const std::vector<double> x = tree.subtree_masses(p);
  std::vector<double> s(nodes, 0.0);
  for (int u = 1; u < nodes; ++u) s[u] = sensitivity(reg.eta[u], tree.weight(u), x[u], reg.delta[u]);

  // Bottom-up: response g_u(theta) of every non-root node, and the aggregate
  // inner_u = sum of children's responses at every internal node.
  std::vector<PwlMonotone> response(nodes, PwlMonotone::affine(0.0, 0.0, 0.0));
  std::vector<PwlMonotone> inner(nodes, PwlMonotone::affine(0.0, 0.0, 0.0));
  std::vector<PwlMonotone> kids;
  for (int u = nodes - 1; u >= 0; --u) {
    if (tree.is_leaf(u)) {
      int l = tree.leaf_number(u);
      response[u] = p[l] > 0.0 ? PwlMonotone::affine(0.0, -s[u] * c[l], s[u])
                               : PwlMonotone::hinge(0.0, c[l], s[u]);
      continue;
    }
    kids.clear();
    for (int v : tree.children(u)) kids.push_back(response[v]);
    inner[u] = sum(kids);
    if (u != 0) response[u] = node_response(inner[u], s[u]);
  }

  // Top-down: root pressure balances total drift, then each internal node's
  // pressure solves s_u (theta - nu) = inner_u(nu).
  const PwlMonotone& top = inner[0];
  double theta_root = 0.0;
  if (top(0.0) < 0.0) theta_root = top.solve(0.0);
  sol.lambda_hat[0] = theta_root;
  sol.mu = theta_root;
  for (int u = 1; u < nodes; ++u) {
    double theta = sol.lambda_hat[tree.parent(u)];
    if (tree.is_leaf(u)) {
      int l = tree.leaf_number(u);
      if (p[l] > 0.0) {
        sol.leaf_drift[l] = s[u] * (theta - c[l]);
      } else {
        sol.xi[l] = std::max(0.0, c[l] - theta);
        sol.leaf_drift[l] = s[u] * (theta - c[l] + sol.xi[l]);
        sol.active_set.push_back(l);
      }
      continue;
    }
    double target = s[u] * theta;
    double at_zero = inner[u](0.0);
    if (at_zero > target) {
      if (at_zero - target > 1e-12 * std::max(1.0, std::abs(target))) ++sol.clamp_count;
      sol.lambda_hat[u] = 0.0;
    } else {
      sol.lambda_hat[u] = inner[u].solve_shifted(s[u], target);
    }
  }

  for (int u = nodes - 1; u >= 1; --u) {
    if (tree.is_leaf(u)) sol.node_drift[u] = sol.leaf_drift[tree.leaf_number(u)];
    sol.node_drift[tree.parent(u)] += sol.node_drift[u];
  }

  KktResiduals& r = sol.residuals;
  r.mass_balance = std::abs(sol.node_drift[0]);
  r.min_multiplier = std::min(0.0, sol.mu);
  r.min_reduced_cost = std::numeric_limits<double>::infinity();
  for (int u = 0; u < nodes; ++u) r.min_multiplier = std::min(r.min_multiplier, sol.lambda_hat[u]);
  for (int u = 1; u < nodes; ++u) {
    double cost = 0.0, xi = 0.0;
    if (tree.is_leaf(u)) {
      int l = tree.leaf_number(u);
      cost = c[l];
      xi = sol.xi[l];
      r.min_multiplier = std::min(r.min_multiplier, xi);
      r.min_reduced_cost = std::min(r.min_reduced_cost, cost - xi);
      if (xi > 0.0)
        r.complementary_slackness = std::max(
            {r.complementary_slackness, std::abs(xi * p[l]), std::abs(sol.leaf_drift[l])});
    }
    double force = reg.eta[u] * (x[u] + reg.delta[u]);
    double lhs = tree.weight(u) * sol.node_drift[u];
    double bracket = cost + sol.lambda_hat[u] - sol.lambda_hat[tree.parent(u)] - xi;
    double scale = std::max({1.0, std::abs(lhs),
                             force * (cost + sol.lambda_hat[u] + sol.lambda_hat[tree.parent(u)] + xi)});
    r.stationarity = std::max(r.stationarity, std::abs(lhs + force * bracket) / scale);
  }
  return sol;
}

}  // namespace mts
