#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "mts/cost_path.hpp"
#include "mts/multipliers.hpp"
#include "mts/tree.hpp"

namespace mts {

enum class Dynamics { star, tree };

struct StepPolicy {
  // Largest step is step_fraction * segment duration, unless h_max > 0.
  double step_fraction = 1e-3;
  double h_max = 0.0;
  // Also no step may change the cost rate (service + movement, plus a floor
  // of max rate / n) by more than this fraction (0 disables), so the step
  // follows the local time scale of the dynamics.
  double rel_step = 1e-3;
  // Zero crossings closer than this are snapped before stepping.
  double snap_time = 1e-15;
  // Error budget = budget_constant * sum over steps of h * |change of integrand|.
  double budget_constant = 1.0;

  double step_for(double duration) const { return h_max > 0.0 ? h_max : step_fraction * duration; }
};

// Integrals accumulated along a run. "reduced" integrals use c - xi.
struct Ledger {
  double elapsed = 0.0;
  double service = 0.0;            // int <c, p>
  double movement = 0.0;           // transport cost of the realized path
  double unfair_service = 0.0;     // int <beta . c, p> (zero without beta)
  double reduced_shift = 0.0;      // int <c - xi, delta on leaves>
  double reduced_total = 0.0;      // int <c - xi, 1>
  double reduced_eta_shift = 0.0;  // int <c - xi, eta . delta on leaves>
  double psi_start = 0.0;          // weighted depth at the start
};

// Discretization error estimates for the Ledger integrals, same units.
struct ErrorBudget {
  double service = 0.0;
  double movement = 0.0;
  double unfair_service = 0.0;
  double reduced_shift = 0.0;
  double reduced_total = 0.0;
  double reduced_eta_shift = 0.0;
};

struct Diagnostics {
  long steps = 0;
  long events = 0;       // coordinates snapped to zero
  long clamp_events = 0; // internal pressures clamped at zero (tree mode)
  double clamp_duration = 0.0;
  double max_mass_error = 0.0;  // |sum p - 1| before renormalization
  double min_mass = 0.0;        // most negative leaf mass before clamping
  double max_mass_balance = 0.0;
  double max_complementary_slackness = 0.0;
  double max_stationarity = 0.0;
  double min_multiplier = 0.0;
  double min_reduced_cost = 0.0;
  double min_mu = 0.0;
  bool delta_floored = false;
};

// Explicit Euler integration of the entropic mirror-descent dynamics with
// exact multiplier solves and event detection. Between solves the state is
// held constant, so S and M are the exact costs of the piecewise-constant
// path actually produced.
class MirrorDescent {
 public:
  MirrorDescent(const WeightedTree& tree, EntropicRegularizer reg, Dynamics mode,
                const LeafDistribution& start, StepPolicy policy = {});

  // Per-leaf unfairness ratios for the unfair service integral.
  void set_service_weights(std::vector<double> beta);
  // CSV rows (t, masses..., mu, max lambda_hat, max xi, S, M) after each step.
  void set_trace(std::ostream* out);

  // Integrates one constant-rate segment.
  void advance(const CostSegment& segment);
  void run(const CostPath& path);

  // Low-level stepping for coupled integrators: solve at the current state,
  // query the longest step before a zero crossing, then apply a step of
  // length h (h <= event_step()). `segment_start` marks the first step of a
  // new cost segment for the error budget.
  const MultiplierSolution& solve(std::span<const double> rates);
  double event_step() const;
  // Longest step allowed by the relative-change cap (from the last solve).
  double relative_step() const { return step_cap_; }
  void apply(double h, bool segment_start = false);
  // Drift of every node (tree mode) or leaf (star mode) from the last solve.
  std::span<const double> leaf_drift() const { return last_.leaf_drift; }

  std::span<const double> state() const { return p_; }
  const Ledger& ledger() const { return ledger_; }
  const ErrorBudget& budget() const { return budget_; }
  const Diagnostics& diagnostics() const { return diag_; }
  const EntropicRegularizer& regularizer() const { return reg_; }
  const WeightedTree& tree() const { return tree_; }
  Dynamics mode() const { return mode_; }
  const StepPolicy& policy() const { return policy_; }

  // Weighted depth sum_u depth(u) w_u x_u at the current state.
  double psi() const;
  // Movement rate sum_u w_u |x_u'| of the last solve.
  double movement_rate() const;

 private:
  void record(const MultiplierSolution& sol, double h);
  void update_step_cap();

  WeightedTree tree_;
  EntropicRegularizer reg_;
  Dynamics mode_;
  StepPolicy policy_;
  std::vector<double> p_;
  std::vector<double> beta_;
  std::vector<double> leaf_weight_, leaf_eta_, leaf_delta_;
  std::vector<double> s_, next_, rates_, masses_;
  double step_cap_ = 0.0;
  MultiplierSolution last_;
  Ledger ledger_;
  ErrorBudget budget_;
  Diagnostics diag_;
  std::ostream* trace_ = nullptr;
  // Integrand values at the previous step, for the error budget.
  double prev_[6] = {0, 0, 0, 0, 0, 0};
  double prev_h_ = 0.0;
  bool have_prev_ = false;
};

// Point mass at the given leaf id, or at the first leaf when absent.
LeafDistribution start_distribution(const WeightedTree& tree, std::optional<NodeId> start_leaf);

}  // namespace mts
