#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "mts/cost_path.hpp"
#include "mts/integrator.hpp"
#include "mts/tree.hpp"

namespace mts {

// SplitMix64: a counter-based generator, reproducible across platforms.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  // Independent stream derived from this one.
  SplitMix64 split() { return SplitMix64(next()); }

 private:
  std::uint64_t state_;
};

enum class InstanceMode { discrete, continuous };

struct Instance {
  explicit Instance(WeightedTree t) : tree(std::move(t)) {}

  WeightedTree tree;
  InstanceMode mode = InstanceMode::discrete;
  CostSequence costs;  // discrete mode
  CostPath segments;   // continuous mode
  std::optional<NodeId> start;
  std::optional<std::uint64_t> seed;

  std::size_t rounds() const { return mode == InstanceMode::discrete ? costs.size() : segments.size(); }
  // The continuous path the online algorithms run on (waterfilled rounds in
  // discrete mode).
  CostPath path() const;
};

nlohmann::ordered_json tree_to_json(const WeightedTree& tree);
WeightedTree tree_from_json(const nlohmann::json& j);

// Throws InputError naming the offending field.
Instance parse_instance(std::string_view text);
std::string serialize_instance(const Instance& instance);
// Hex SHA-256 of the canonical serialization.
std::string instance_digest(const Instance& instance);

// Star with the given leaf weights; root id 0, leaves 1..n.
WeightedTree make_star(std::span<const double> weights);
// Uniform metric on n points: star with weights 1/2.
WeightedTree uniform_star(std::size_t n);

// Random tree with all leaves at `depth`, branching in [1, max_branch] (at
// least 2 at the root) and 2..max_leaves leaves, weights in [0.5, 3]. With
// separation > 0 every edge is at least separation times the diameter below
// it (times a random factor in [1, 2]). Ids are assigned in preorder.
WeightedTree gen_tree(SplitMix64& rng, int depth, int max_leaves, int max_branch = 3,
                      double separation = 0.0);

// One unit of cost on a uniformly random point per round, uniform metric,
// start at the first point.
Instance gen_coupon_collector(std::size_t n, std::size_t rounds, std::uint64_t seed);

// Adaptive adversary: each round puts unit cost on the leaf of largest mass
// (ties to the lowest leaf id) and feeds the round to the player. The
// realized sequence is returned as a static instance.
Instance gen_cruel(const WeightedTree& tree, std::size_t rounds,
                   const std::function<std::vector<double>()>& state,
                   const std::function<void(const std::vector<double>&)>& feed,
                   std::optional<NodeId> start = std::nullopt);
// The same adversary against a mirror-descent engine (rounds waterfilled).
Instance gen_cruel(MirrorDescent& engine, std::size_t rounds, std::optional<NodeId> start);

// Piecewise-constant rates i.i.d. uniform in [0, magnitude], durations
// uniform in [0.1, 1].
CostPath gen_random(const WeightedTree& tree, std::size_t segments, std::uint64_t seed,
                    double magnitude);

}  // namespace mts
