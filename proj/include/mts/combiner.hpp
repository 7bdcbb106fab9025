#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include "mts/integrator.hpp"
#include "mts/unfair.hpp"

namespace mts {

// Guarantee weights: v = e^{C0} on leaves, e * (sum over children) on
// branching nodes, copied through unary nodes. kappa = 8 tau/(tau-1) ln v.
struct GuaranteeWeights {
  std::vector<double> v;
  std::vector<double> kappa;
};
GuaranteeWeights guarantee_weights(const WeightedTree& tree, double tau, double C0);

// One branching node of the hierarchy: an unfair star over its children.
struct CombinerNode {
  int node = -1;
  std::vector<int> children;       // node indices, in star leaf order
  std::vector<double> star_weights; // (1 - 1/tau) w_child
  UnfairParams params;
  std::optional<MirrorDescent> engine;
  CostPath cu_path;                 // recorded unfair cost rates, one segment per step
  double service_rate = 0.0;        // d/dt S of the subtree algorithm (last step)
  double movement_rate = 0.0;       // d/dt M of the subtree algorithm (last step)
};

struct CombinerLedger {
  double elapsed = 0.0;
  double service = 0.0;   // on the composed leaf distribution
  double movement = 0.0;  // transport cost between consecutive composed states
  double service_budget = 0.0;
  double movement_budget = 0.0;
  long steps = 0;
  double max_mass_error = 0.0;
};

// Recursive gluing on a 4 tau-HST: every branching node runs the unfair-star
// dynamics on unfair rates c^u_i = (child i's cost rate) / beta_i, and the
// leaf distribution is the product of the conditionals along root-leaf paths.
// All nodes share one step grid.
class HstCombiner {
 public:
  // Throws InputError unless tau > 1, C0 >= 1 and the tree is a 4 tau-HST.
  // Nodes on the path to the start leaf start at that child; the others at
  // their first child.
  HstCombiner(const WeightedTree& tree, double tau, double C0, std::optional<NodeId> start,
              StepPolicy policy = {}, bool record_paths = true);

  void advance(const CostSegment& segment);
  void run(const CostPath& path);
  // CSV rows (t, composed masses..., S, M) after each step.
  void set_trace(std::ostream* out);

  std::span<const double> state() const { return p_; }
  const CombinerLedger& ledger() const { return ledger_; }
  const WeightedTree& tree() const { return tree_; }
  double tau() const { return tau_; }
  double gamma() const { return tau_ / (tau_ - 1.0); }
  const GuaranteeWeights& guarantees() const { return gw_; }
  double root_kappa() const { return gw_.kappa[0]; }
  // Branching nodes in preorder.
  const std::vector<CombinerNode>& nodes() const { return nodes_; }
  // Aggregated integrator diagnostics over all node engines.
  Diagnostics diagnostics() const;

 private:
  void step_rates(std::span<const double> rates);
  void compose(std::vector<double>& out);

  WeightedTree tree_;
  double tau_;
  GuaranteeWeights gw_;
  StepPolicy policy_;
  bool record_paths_;
  std::vector<CombinerNode> nodes_;
  std::vector<int> star_of_;     // node index -> position in nodes_, or -1
  std::vector<int> slot_;        // node index -> position among its parent's children
  std::vector<int> subtree_end_; // node index -> one past its last descendant
  std::vector<double> q_, dq_;   // conditional mass of each node within its parent, and drift
  std::vector<double> svc_, mov_;
  std::vector<double> x_, dx_;   // scratch for the product rule
  std::vector<double> p_, next_;
  std::vector<double> cu_;
  CombinerLedger ledger_;
  double prev_[2] = {0, 0};
  double prev_h_ = 0.0;
  bool have_prev_ = false;
  std::ostream* trace_ = nullptr;
};

}  // namespace mts
