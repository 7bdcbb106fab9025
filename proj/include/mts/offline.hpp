#pragma once

#include <optional>
#include <vector>

#include "mts/cost_path.hpp"
#include "mts/integrator.hpp"
#include "mts/tree.hpp"

namespace mts {

struct OfflineOptions {
  // Start leaf id; absent means the comparator may start anywhere (W_0 = 0).
  std::optional<NodeId> start;
  // Refuse instances with more than this many (round, node) cells.
  std::size_t max_cells = 400'000'000;
  // Keep W_t for every round (needed for Lipschitz checks).
  bool keep_table = false;
};

struct OfflineResult {
  double opt = 0.0;
  double service = 0.0;   // S* of the recovered path
  double movement = 0.0;  // M* of the recovered path, including the initial move
  // Leaf number occupied while serving round t (size T). Empty for T = 0.
  std::vector<int> path;
  int start_leaf = -1;    // leaf number before round 1 (path[0] when free)
  // W_t(x) for t = 0..T, leaf-number order; only with keep_table.
  std::vector<std::vector<double>> table;
};

// Exact offline optimum of a discrete instance on the tree's leaf metric:
// W_t(x) = min_y [W_{t-1}(y) + C_t(y) + d(y, x)], W_0(x) = d(start, x) or 0.
// Each round costs O(nodes) through a two-pass min-plus sweep over the tree.
// Ties prefer staying put, then smaller movement, then the lowest leaf id.
// Throws BudgetError when T * nodes exceeds options.max_cells.
OfflineResult work_function_dp(const WeightedTree& tree, const CostSequence& costs,
                               const OfflineOptions& options = {});

// Piecewise-constant continuous instance: the comparator moves only at
// segment boundaries, so this is the DP on per-segment costs rate * duration.
OfflineResult segment_opt(const WeightedTree& tree, const CostPath& path,
                          const OfflineOptions& options = {});

// Continuous path with rate 1{C(x) >= t} for t in [0, max C). Breakpoints at
// the sorted distinct positive entries of C.
CostPath water_fill(const std::vector<double>& C);

struct DiscreteAccount {
  std::vector<double> service;   // per round
  std::vector<double> movement;  // per round
  double total_service = 0.0;
  double total_movement = 0.0;
};

// Runs the engine on water_fill(C_t) for each round in order and charges each
// round the service and movement accrued during its waterfilled segments.
DiscreteAccount discretize_online(MirrorDescent& engine, const CostSequence& costs);

// Concatenation of water_fill over all rounds.
CostPath water_fill_sequence(const CostSequence& costs);

}  // namespace mts
