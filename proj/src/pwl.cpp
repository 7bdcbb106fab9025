#include "mts/pwl.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <sstream>

#include "mts/error.hpp"

namespace mts {

PwlMonotone::PwlMonotone(std::vector<double> knots, std::vector<double> values, double tail_slope)
    : knots_(std::move(knots)), values_(std::move(values)), tail_slope_(tail_slope) {
  if (knots_.empty() || knots_.size() != values_.size())
    throw InvariantError("PwlMonotone: knots and values must be nonempty and aligned");
  assert(std::is_sorted(knots_.begin(), knots_.end()));
}

PwlMonotone PwlMonotone::affine(double origin, double value, double slope) {
  return PwlMonotone({origin}, {value}, slope);
}

PwlMonotone PwlMonotone::hinge(double origin, double corner, double slope) {
  if (corner <= origin) return PwlMonotone({origin}, {slope * (origin - corner)}, slope);
  return PwlMonotone({origin, corner}, {0.0, 0.0}, slope);
}

std::size_t PwlMonotone::segment(double x) const {
  // Index k with knots_[k] <= x < knots_[k+1] (or the last knot).
  auto it = std::upper_bound(knots_.begin(), knots_.end(), x);
  if (it == knots_.begin()) return 0;
  return static_cast<std::size_t>(it - knots_.begin()) - 1;
}

double PwlMonotone::operator()(double x) const {
  std::size_t k = segment(x);
  if (k + 1 == knots_.size()) return values_[k] + tail_slope_ * (x - knots_[k]);
  double span = knots_[k + 1] - knots_[k];
  double t = span > 0.0 ? (x - knots_[k]) / span : 0.0;
  return values_[k] + t * (values_[k + 1] - values_[k]);
}

double PwlMonotone::solve(double target) const {
  if (values_[0] >= target) return knots_[0];
  for (std::size_t k = 0; k + 1 < knots_.size(); ++k) {
    if (values_[k + 1] >= target) {
      double rise = values_[k + 1] - values_[k];
      double t = rise > 0.0 ? (target - values_[k]) / rise : 1.0;
      return knots_[k] + std::clamp(t, 0.0, 1.0) * (knots_[k + 1] - knots_[k]);
    }
  }
  if (!(tail_slope_ > 0.0))
    throw InvariantError("PwlMonotone::solve: target " + std::to_string(target) +
                         " not bracketed; " + dump());
  return knots_.back() + (target - values_.back()) / tail_slope_;
}

double PwlMonotone::solve_shifted(double a, double target) const {
  auto q = [&](std::size_t k) { return a * knots_[k] + values_[k]; };
  if (q(0) >= target) return knots_[0];
  for (std::size_t k = 0; k + 1 < knots_.size(); ++k) {
    if (q(k + 1) >= target) {
      double rise = q(k + 1) - q(k);
      double t = rise > 0.0 ? (target - q(k)) / rise : 1.0;
      return knots_[k] + std::clamp(t, 0.0, 1.0) * (knots_[k + 1] - knots_[k]);
    }
  }
  return knots_.back() + (target - q(knots_.size() - 1)) / (a + tail_slope_);
}

std::string PwlMonotone::dump() const {
  std::ostringstream os;
  os.precision(17);
  os << "pwl{";
  for (std::size_t k = 0; k < knots_.size(); ++k) os << "(" << knots_[k] << "," << values_[k] << ")";
  os << " tail=" << tail_slope_ << "}";
  return os.str();
}

PwlMonotone sum(std::span<const PwlMonotone> fs) {
  if (fs.empty()) return PwlMonotone::affine(0.0, 0.0, 0.0);
  std::vector<double> knots;
  for (const auto& f : fs) knots.insert(knots.end(), f.knots().begin(), f.knots().end());
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
  std::vector<double> values(knots.size(), 0.0);
  double tail = 0.0;
  for (const auto& f : fs) {
    for (std::size_t k = 0; k < knots.size(); ++k) values[k] += f(knots[k]);
    tail += f.tail_slope();
  }
  return PwlMonotone(std::move(knots), std::move(values), tail);
}

PwlMonotone node_response(const PwlMonotone& inner, double s) {
  // theta(nu) = nu + inner(nu) / s is strictly increasing in nu; the response
  // takes the value inner(nu) at theta(nu).
  const auto nu = inner.knots();
  const auto val = inner.values();
  std::vector<double> knots;
  std::vector<double> values;
  knots.reserve(nu.size() + 1);
  values.reserve(nu.size() + 1);

  const double theta0 = nu[0] + val[0] / s;
  if (theta0 >= 0.0) {
    // [0, theta0] is the clamped region (nu = 0): flat at inner(0).
    knots.push_back(0.0);
    values.push_back(val[0]);
    if (theta0 > 0.0) {
      knots.push_back(theta0);
      values.push_back(val[0]);
    }
  } else {
    double nu_at_zero = inner.solve_shifted(s, 0.0);
    knots.push_back(0.0);
    values.push_back(-s * nu_at_zero);
  }
  for (std::size_t k = (theta0 >= 0.0 ? 1 : 0); k < nu.size(); ++k) {
    double theta = nu[k] + val[k] / s;
    if (theta <= knots.back()) continue;
    knots.push_back(theta);
    values.push_back(std::max(val[k], values.back()));
  }
  double r = inner.tail_slope();
  double tail = r > 0.0 ? r * s / (r + s) : 0.0;
  return PwlMonotone(std::move(knots), std::move(values), tail);
}

}  // namespace mts
