#include "mts/cost_path.hpp"

#include <cmath>
#include <string>

#include "mts/error.hpp"

namespace mts {

void validate_cost_path(const CostPath& path, std::size_t leaves) {
  for (std::size_t k = 0; k < path.size(); ++k) {
    const CostSegment& seg = path[k];
    if (!std::isfinite(seg.duration) || seg.duration < 0.0)
      throw InputError("segment " + std::to_string(k) + ": invalid duration");
    if (seg.rates.size() != leaves)
      throw InputError("segment " + std::to_string(k) + ": expected " + std::to_string(leaves) +
                       " rates, got " + std::to_string(seg.rates.size()));
    for (double r : seg.rates)
      if (!std::isfinite(r) || r < 0.0)
        throw InputError("segment " + std::to_string(k) + ": rates must be finite and >= 0");
  }
}

void validate_cost_sequence(const CostSequence& costs, std::size_t leaves) {
  for (std::size_t t = 0; t < costs.size(); ++t) {
    if (costs[t].size() != leaves)
      throw InputError("round " + std::to_string(t) + ": expected " + std::to_string(leaves) +
                       " costs, got " + std::to_string(costs[t].size()));
    for (double c : costs[t])
      if (!std::isfinite(c) || c < 0.0)
        throw InputError("round " + std::to_string(t) + ": costs must be finite and >= 0");
  }
}

double total_duration(const CostPath& path) {
  double t = 0.0;
  for (const auto& seg : path) t += seg.duration;
  return t;
}

}  // namespace mts
