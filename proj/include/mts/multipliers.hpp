#pragma once

#include <span>
#include <vector>

#include "mts/tree.hpp"

namespace mts {

// Shifted, weighted entropy (1/eta_u) * w_u * (x_u + delta_u) log(x_u + delta_u)
// summed over the non-root nodes of a tree. Parameters are stored per node
// index; the root entries are carried along but never enter the dynamics.
struct EntropicRegularizer {
  static constexpr double kDeltaFloor = 1e-9;

  std::vector<double> eta;
  std::vector<double> delta;
  bool delta_floored = false;

  // Uniform eta and delta on the leaves of a depth-1 tree.
  static EntropicRegularizer star(const WeightedTree& tree, double eta, double delta);
  // Per-leaf rates and shifts on a depth-1 tree (leaf-number order).
  static EntropicRegularizer star(const WeightedTree& tree, std::span<const double> eta,
                                  std::span<const double> delta);
  // Multiscale entropy: uniform eta, delta = leaf_delta on leaves and
  // delta_u = sum of children's deltas on internal nodes.
  static EntropicRegularizer multiscale(const WeightedTree& tree, double eta, double leaf_delta);

  // max over non-root u of 2 log(1/delta_u) / eta_u.
  double lipschitz(const WeightedTree& tree) const;
  // Smallest shift on a leaf.
  double min_leaf_delta(const WeightedTree& tree) const;
};

struct KktResiduals {
  double mass_balance = 0.0;            // |sum of leaf drifts|
  double complementary_slackness = 0.0; // max |xi_l * p_l| and |drift_l| where xi_l > 0
  double stationarity = 0.0;            // scaled; star drifts satisfy it by construction
  double min_multiplier = 0.0;          // min over mu (star), lambda_hat, xi
  double min_reduced_cost = 0.0;        // min over leaves of c_l - xi_l
};

struct MultiplierSolution {
  double mu = 0.0;
  // Per node index in tree mode (zero on leaves, lambda_hat[root] == mu).
  // Empty in star mode.
  std::vector<double> lambda_hat;
  std::vector<double> xi;          // per leaf
  std::vector<double> leaf_drift;  // per leaf
  // Per node index in tree mode (sum of leaf drifts below); empty in star mode.
  std::vector<double> node_drift;
  std::vector<int> active_set;     // leaves held at zero mass
  int clamp_count = 0;             // internal nodes where the pressure would go negative
  KktResiduals residuals;
};

// Sensitivity s_u = (eta_u / w_u) (x_u + delta_u).
double sensitivity(double eta, double weight, double mass, double delta);

// Projected entropic dynamics on the simplex: drift_i = s_i (mu - c_i + xi_i)
// with mu chosen so the drifts sum to zero and xi_i = max(0, c_i - mu) on
// coordinates at zero mass. Throws InvariantError if no coordinate has
// positive mass.
MultiplierSolution star_multiplier_solve(std::span<const double> p, std::span<const double> s,
                                         std::span<const double> c);
// In-place variant reusing the buffers of `out`.
void star_multiplier_solve(std::span<const double> p, std::span<const double> s,
                           std::span<const double> c, MultiplierSolution& out);

// Same dynamics on the tree polytope (multiscale entropy). Leaf masses p,
// leaf cost rates c. Bottom-up builds each node's piecewise-linear drift
// response to its parent's pressure; top-down fixes every pressure.
MultiplierSolution tree_multiplier_solve(const WeightedTree& tree, std::span<const double> p,
                                         std::span<const double> c,
                                         const EntropicRegularizer& reg);

}  // namespace mts
