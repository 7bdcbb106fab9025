#include "mts/check.hpp"

#include <algorithm>
#include <cmath>

namespace mts {

double check_tolerance(double rhs, double lhs_budget, double rhs_budget) {
  return 1e-6 * std::max(1.0, std::abs(rhs)) + std::abs(lhs_budget) + std::abs(rhs_budget);
}

}  // namespace mts
