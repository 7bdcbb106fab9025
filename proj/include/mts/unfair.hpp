#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "mts/check.hpp"
#include "mts/integrator.hpp"

namespace mts {

// Unfairness ratios and per-coordinate learning rates for an unfair star.
// The dynamics only see eta and delta; beta and gamma enter the costs.
struct UnfairParams {
  std::vector<double> beta;
  std::vector<double> eta;
  std::vector<double> delta;
  std::vector<double> u;  // guarantee weights; empty for explicit parameters
  double gamma = 1.0;
  double zeta = 0.0;
  double C = 0.0;
  double U = 0.0;

  bool from_recipe() const { return !u.empty(); }
  // L = max_i 2 log(1/delta_i) / eta_i.
  double lipschitz() const;
  // <eta, delta>.
  double eta_dot_delta() const;
};

// beta_i = 8 gamma (ln u_i + C), eta_i = 4 ln(U/u_i), delta_i = (u_i/U)^2,
// zeta = 8 gamma (ln U + C), U = sum u. Requires at least two coordinates,
// u_i > 0, gamma >= 1, C >= 0 and ln u_i + C >= 0.
UnfairParams derive_params(std::span<const double> u, double gamma, double C);

// Hand-set parameters; beta_i + 2 gamma eta_i must equal zeta (relative 1e-12).
UnfairParams explicit_params(std::vector<double> beta, std::vector<double> eta,
                             std::vector<double> delta, double gamma, double zeta);

struct UnfairOutcome {
  Ledger ledger;
  ErrorBudget budget;
  Diagnostics diagnostics;
  std::vector<double> final_state;
  double unfair_service = 0.0;   // S^u
  double unfair_movement = 0.0;  // M^u = gamma * M
};

// Runs the multi-rate dynamics on a weighted star.
UnfairOutcome run_unfair_dynamics(const WeightedTree& star, const CostPath& path,
                                  const UnfairParams& params, const LeafDistribution& start,
                                  const StepPolicy& policy = {}, std::ostream* trace = nullptr);

// S^u + M^u <= (zeta + 2 gamma <eta,delta>)(S* + L M*)
//              + (1 + 2 zeta L + 6 gamma L <eta,delta>) Delta.
Check check_general_bound(const UnfairOutcome& run, const UnfairParams& params,
                          double opt_service, double opt_movement, double max_weight);

// S^u + M^u <= 8 gamma (ln U + C + 1)(S* + M* + 4 Delta). Recipe parameters only.
Check check_recipe_bound(const UnfairOutcome& run, const UnfairParams& params,
                         double opt_service, double opt_movement, double max_weight);

}  // namespace mts
