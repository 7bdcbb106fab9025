#pragma once

#include <cstddef>
#include <vector>

namespace mts {

// Constant cost rates over a time interval of the given duration.
struct CostSegment {
  double duration = 0.0;
  std::vector<double> rates;  // indexed by leaf number

  bool operator==(const CostSegment&) const = default;
};

// Piecewise-constant continuous-time cost path.
using CostPath = std::vector<CostSegment>;

// Discrete cost sequence: one nonnegative cost vector per round.
using CostSequence = std::vector<std::vector<double>>;

// Throws InputError unless every segment has `leaves` finite nonnegative
// rates and a finite nonnegative duration.
void validate_cost_path(const CostPath& path, std::size_t leaves);
void validate_cost_sequence(const CostSequence& costs, std::size_t leaves);

double total_duration(const CostPath& path);

}  // namespace mts
