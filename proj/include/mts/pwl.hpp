#pragma once

#include <span>
#include <string>
#include <vector>

namespace mts {

// Nondecreasing, continuous piecewise-linear function on [knots[0], inf).
// Linear interpolation between knots; beyond the last knot it continues
// with `tail_slope`. Root finding is exact on this representation.
class PwlMonotone {
 public:
  PwlMonotone(std::vector<double> knots, std::vector<double> values, double tail_slope);

  // f(x) = value + slope * (x - origin).
  static PwlMonotone affine(double origin, double value, double slope);
  // f(x) = slope * max(0, x - corner) on [origin, inf), corner >= origin.
  static PwlMonotone hinge(double origin, double corner, double slope);

  double operator()(double x) const;

  // Smallest x >= start() with f(x) >= target. Throws InvariantError if f
  // stays below target on the whole domain.
  double solve(double target) const;
  // Solves a * x + f(x) = target for x >= start(), a > 0. Returns start()
  // when the left end already exceeds target.
  double solve_shifted(double a, double target) const;

  double start() const { return knots_.front(); }
  double tail_slope() const { return tail_slope_; }
  std::span<const double> knots() const { return knots_; }
  std::span<const double> values() const { return values_; }

  std::string dump() const;

 private:
  std::size_t segment(double x) const;

  std::vector<double> knots_;
  std::vector<double> values_;
  double tail_slope_;
};

// Pointwise sum. All inputs must share the same domain start.
PwlMonotone sum(std::span<const PwlMonotone> fs);

// Response of a node with sensitivity s whose children aggregate to `inner`:
// g(theta) = inner(nu(theta)) where nu >= 0 solves s*(theta - nu) = inner(nu),
// clamped to nu = 0 when the unconstrained root is negative. Returned on
// [0, inf).
PwlMonotone node_response(const PwlMonotone& inner, double s);

}  // namespace mts
