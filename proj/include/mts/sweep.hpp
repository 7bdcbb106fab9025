#pragma once

#include <string>

#include "json.hpp"
#include "mts/report.hpp"

namespace mts {

struct SweepResult {
  std::string csv;
  int rows = 0;
  int failures = 0;
};

// Expands a suite file into (instance, algorithm) runs and executes them on
// up to `jobs` threads. Rows come out in suite order regardless of jobs.
//
// Suite format: {"runs": [{"generator": "coupon" | "random" | "cruel",
//   "n": [..] or "depth": [..], "seeds": [..], "algos": [..], ...}, ...]}
// coupon: rounds or rounds_per_point (rounds = rounds_per_point * n).
// random: n (weighted star) or depth + max_leaves (+ separation); segments,
//         magnitude.
// cruel:  n, rounds; the adversary plays against the star algorithm.
SweepResult run_sweep(const nlohmann::json& suite, const RunConfig& base, unsigned jobs);

inline constexpr const char* kSweepHeader =
    "generator,seed,n,D,algo,S,M,OPT,ratio,bound,slack,pass";

}  // namespace mts
