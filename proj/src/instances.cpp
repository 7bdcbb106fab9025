#include "mts/instances.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "mts/error.hpp"
#include "mts/offline.hpp"

namespace mts {

using nlohmann::json;
using nlohmann::ordered_json;

std::uint64_t SplitMix64::below(std::uint64_t n) {
  if (n == 0) throw InputError("below(0)");
  // Rejection sampling keeps the draw exactly uniform.
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  for (;;) {
    std::uint64_t x = next();
    if (x < limit) return x % n;
  }
}

CostPath Instance::path() const {
  return mode == InstanceMode::discrete ? water_fill_sequence(costs) : segments;
}

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& what) {
  throw InputError("instance field '" + field + "': " + what);
}

double number(const json& j, const std::string& field) {
  if (!j.is_number()) fail(field, "expected a number");
  return j.get<double>();
}

std::vector<double> number_list(const json& j, const std::string& field) {
  if (!j.is_array()) fail(field, "expected an array of numbers");
  std::vector<double> out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i)
    out.push_back(number(j[i], field + "[" + std::to_string(i) + "]"));
  return out;
}

NodeId node_id(const json& j, const std::string& field) {
  if (!j.is_number_integer()) fail(field, "expected an integer node id");
  return j.get<NodeId>();
}

}  // namespace

ordered_json tree_to_json(const WeightedTree& tree) {
  ordered_json edges = ordered_json::array();
  for (const Edge& e : tree.edges()) edges.push_back({e.parent, e.child, e.weight});
  ordered_json j;
  j["edges"] = std::move(edges);
  j["root"] = tree.id(0);
  return j;
}

WeightedTree tree_from_json(const json& j) {
  if (!j.is_object()) fail("tree", "expected an object");
  if (!j.contains("edges")) fail("tree.edges", "missing");
  if (!j.contains("root")) fail("tree.root", "missing");
  const json& e = j["edges"];
  if (!e.is_array()) fail("tree.edges", "expected an array");
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < e.size(); ++i) {
    const std::string f = "tree.edges[" + std::to_string(i) + "]";
    if (!e[i].is_array() || e[i].size() != 3) fail(f, "expected [parent, child, weight]");
    edges.push_back({node_id(e[i][0], f + "[0]"), node_id(e[i][1], f + "[1]"), number(e[i][2], f + "[2]")});
  }
  return WeightedTree::build(edges, node_id(j["root"], "tree.root"));
}

Instance parse_instance(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("instance is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) fail("(top level)", "expected an object");
  if (!j.contains("tree")) fail("tree", "missing");
  Instance inst{tree_from_json(j["tree"])};
  if (!j.contains("mode") || !j["mode"].is_string()) fail("mode", "expected \"discrete\" or \"continuous\"");
  const std::string mode = j["mode"].get<std::string>();
  const std::size_t n = inst.tree.leaf_count();
  if (mode == "discrete") {
    inst.mode = InstanceMode::discrete;
    if (!j.contains("costs") || !j["costs"].is_array()) fail("costs", "expected an array of cost vectors");
    const json& c = j["costs"];
    for (std::size_t t = 0; t < c.size(); ++t) {
      const std::string f = "costs[" + std::to_string(t) + "]";
      inst.costs.push_back(number_list(c[t], f));
      if (inst.costs.back().size() != n) fail(f, "expected " + std::to_string(n) + " entries");
    }
    try {
      validate_cost_sequence(inst.costs, n);
    } catch (const InputError& e) {
      fail("costs", e.what());
    }
  } else if (mode == "continuous") {
    inst.mode = InstanceMode::continuous;
    if (!j.contains("segments") || !j["segments"].is_array()) fail("segments", "expected an array of segments");
    const json& s = j["segments"];
    for (std::size_t k = 0; k < s.size(); ++k) {
      const std::string f = "segments[" + std::to_string(k) + "]";
      if (!s[k].is_object() || !s[k].contains("duration") || !s[k].contains("rates"))
        fail(f, "expected {\"duration\": d, \"rates\": [...]}");
      CostSegment seg{number(s[k]["duration"], f + ".duration"), number_list(s[k]["rates"], f + ".rates")};
      if (seg.rates.size() != n) fail(f + ".rates", "expected " + std::to_string(n) + " entries");
      inst.segments.push_back(std::move(seg));
    }
    try {
      validate_cost_path(inst.segments, n);
    } catch (const InputError& e) {
      fail("segments", e.what());
    }
  } else {
    fail("mode", "expected \"discrete\" or \"continuous\", got \"" + mode + "\"");
  }
  if (j.contains("start")) {
    inst.start = node_id(j["start"], "start");
    try {
      inst.tree.leaf_of(*inst.start);
    } catch (const InputError&) {
      fail("start", "node " + std::to_string(*inst.start) + " is not a leaf");
    }
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) fail("seed", "expected a nonnegative integer");
    inst.seed = j["seed"].get<std::uint64_t>();
  }
  return inst;
}

std::string serialize_instance(const Instance& inst) {
  ordered_json j;
  j["tree"] = tree_to_json(inst.tree);
  if (inst.mode == InstanceMode::discrete) {
    j["mode"] = "discrete";
    j["costs"] = inst.costs;
  } else {
    j["mode"] = "continuous";
    ordered_json segs = ordered_json::array();
    for (const CostSegment& s : inst.segments) {
      ordered_json o;
      o["duration"] = s.duration;
      o["rates"] = s.rates;
      segs.push_back(std::move(o));
    }
    j["segments"] = std::move(segs);
  }
  if (inst.start) j["start"] = *inst.start;
  if (inst.seed) j["seed"] = *inst.seed;
  return j.dump() + "\n";
}

std::string instance_digest(const Instance& inst) {
  const std::string text = serialize_instance(inst);
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw InvariantError("SHA-256 failed");
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", md[i]);
    hex += buf;
  }
  return hex;
}

WeightedTree make_star(std::span<const double> weights) {
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < weights.size(); ++i)
    edges.push_back({0, static_cast<NodeId>(i + 1), weights[i]});
  return WeightedTree::build(edges, 0);
}

WeightedTree uniform_star(std::size_t n) {
  std::vector<double> w(n, 0.5);
  return make_star(w);
}

WeightedTree gen_tree(SplitMix64& rng, int depth, int max_leaves, int max_branch, double separation) {
  if (depth < 1 || max_leaves < 2 || max_branch < 2) throw InputError("gen_tree: bad shape parameters");
  struct Shape {
    double height, diam;
  };
  for (;;) {
    std::vector<Edge> edges;
    NodeId next = 1;
    int leaves = 0;
    auto grow = [&](auto&& self, NodeId u, int level) -> Shape {
      if (level == depth) {
        ++leaves;
        return {0.0, 0.0};
      }
      const int lo = level == 0 ? 2 : 1;
      const int k = lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_branch - lo + 1)));
      Shape out{0.0, 0.0};
      double top1 = 0.0, top2 = 0.0;
      for (int i = 0; i < k; ++i) {
        NodeId c = next++;
        Shape sub = self(self, c, level + 1);
        double w = rng.uniform(0.5, 3.0);
        if (separation > 0.0) w = std::max(w, separation * sub.diam * rng.uniform(1.0, 2.0));
        edges.push_back({u, c, w});
        double reach = w + sub.height;
        out.height = std::max(out.height, reach);
        out.diam = std::max(out.diam, sub.diam);
        if (reach > top1) {
          top2 = top1;
          top1 = reach;
        } else if (reach > top2) {
          top2 = reach;
        }
      }
      if (k >= 2) out.diam = std::max(out.diam, top1 + top2);
      return out;
    };
    grow(grow, 0, 0);
    if (leaves >= 2 && leaves <= max_leaves) return WeightedTree::build(edges, 0);
  }
}

Instance gen_coupon_collector(std::size_t n, std::size_t rounds, std::uint64_t seed) {
  if (n < 2) throw InputError("coupon collector needs n >= 2");
  Instance inst{uniform_star(n)};
  inst.mode = InstanceMode::discrete;
  inst.start = 1;
  inst.seed = seed;
  SplitMix64 rng(seed);
  inst.costs.assign(rounds, std::vector<double>(n, 0.0));
  for (auto& row : inst.costs) row[rng.below(n)] = 1.0;
  return inst;
}

Instance gen_cruel(const WeightedTree& tree, std::size_t rounds,
                   const std::function<std::vector<double>()>& state,
                   const std::function<void(const std::vector<double>&)>& feed,
                   std::optional<NodeId> start) {
  Instance inst{tree};
  inst.mode = InstanceMode::discrete;
  inst.start = start;
  const std::size_t n = tree.leaf_count();
  for (std::size_t t = 0; t < rounds; ++t) {
    std::vector<double> p = state();
    if (p.size() != n) throw InputError("player state has the wrong size");
    std::size_t best = 0;
    for (std::size_t l = 1; l < n; ++l) {
      const double tol = 1e-12 * std::max(p[l], p[best]);
      if (p[l] > p[best] + tol ||
          (std::abs(p[l] - p[best]) <= tol &&
           tree.id(tree.leaf_node(int(l))) < tree.id(tree.leaf_node(int(best)))))
        best = l;
    }
    std::vector<double> C(n, 0.0);
    C[best] = 1.0;
    feed(C);
    inst.costs.push_back(std::move(C));
  }
  return inst;
}

Instance gen_cruel(MirrorDescent& engine, std::size_t rounds, std::optional<NodeId> start) {
  return gen_cruel(
      engine.tree(), rounds,
      [&] { return std::vector<double>(engine.state().begin(), engine.state().end()); },
      [&](const std::vector<double>& C) {
        for (const CostSegment& seg : water_fill(C)) engine.advance(seg);
      },
      start);
}

CostPath gen_random(const WeightedTree& tree, std::size_t segments, std::uint64_t seed, double magnitude) {
  if (!(magnitude >= 0.0) || !std::isfinite(magnitude)) throw InputError("magnitude must be >= 0");
  SplitMix64 rng(seed);
  CostPath path;
  path.reserve(segments);
  for (std::size_t k = 0; k < segments; ++k) {
    CostSegment seg{rng.uniform(0.1, 1.0), std::vector<double>(tree.leaf_count())};
    for (double& r : seg.rates) r = magnitude * rng.uniform();
    path.push_back(std::move(seg));
  }
  return path;
}

}  // namespace mts
