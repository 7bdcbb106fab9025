#pragma once

#include <string>

namespace mts {

// One verified inequality lhs <= rhs (+ tol).
struct Check {
  std::string name;
  std::string paper_ref;
  double lhs = 0.0;
  double rhs = 0.0;
  double tol = 0.0;

  double slack() const { return rhs - lhs; }
  bool pass() const { return lhs <= rhs + tol; }
};

// tol = 1e-6 * max(1, |rhs|) + lhs_budget + rhs_budget, where the budgets are
// the discretization error estimates carried by each side.
double check_tolerance(double rhs, double lhs_budget, double rhs_budget);

inline Check make_check(std::string name, std::string ref, double lhs, double rhs,
                        double lhs_budget = 0.0, double rhs_budget = 0.0) {
  return {std::move(name), std::move(ref), lhs, rhs, check_tolerance(rhs, lhs_budget, rhs_budget)};
}

}  // namespace mts
