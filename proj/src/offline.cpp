#include "mts/offline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include "mts/error.hpp"

namespace mts {

namespace {

struct Best {
  double value;
  int leaf;
};

bool close(double a, double b) {
  return std::abs(a - b) <= 1e-12 * std::max({1.0, std::abs(a), std::abs(b)});
}

// G(y) = min_x F(x) + d(x, y) over the leaves, with the minimizing x.
class MinPlusSweep {
 public:
  explicit MinPlusSweep(const WeightedTree& tree) : tree_(tree), up_(tree.node_count()) {
    ids_.resize(tree.leaf_count());
    for (std::size_t l = 0; l < ids_.size(); ++l) ids_[l] = tree.id(tree.leaf_node(int(l)));
  }

  void run(const std::vector<double>& F, std::vector<Best>& out) {
    const int N = static_cast<int>(tree_.node_count());
    for (int u = N - 1; u >= 0; --u) {
      if (tree_.is_leaf(u)) {
        int l = tree_.leaf_number(u);
        up_[u] = {F[l], l};
        continue;
      }
      Best b{std::numeric_limits<double>::infinity(), -1};
      for (int c : tree_.children(u)) {
        Best cand{up_[c].value + tree_.weight(c), up_[c].leaf};
        if (better(cand, b)) b = cand;
      }
      up_[u] = b;
    }
    // Down pass in preorder: parents before children.
    for (int u = 1; u < N; ++u) {
      Best from_above{up_[tree_.parent(u)].value + tree_.weight(u), up_[tree_.parent(u)].leaf};
      if (better(from_above, up_[u])) up_[u] = from_above;
    }
    out.resize(tree_.leaf_count());
    for (std::size_t l = 0; l < out.size(); ++l) out[l] = up_[tree_.leaf_node(int(l))];
  }

  NodeId id(int leaf) const { return ids_[leaf]; }

 private:
  bool better(const Best& a, const Best& b) const {
    if (b.leaf < 0) return true;
    if (close(a.value, b.value)) return ids_[a.leaf] < ids_[b.leaf];
    return a.value < b.value;
  }

  const WeightedTree& tree_;
  std::vector<Best> up_;
  std::vector<NodeId> ids_;
};

}  // namespace

OfflineResult work_function_dp(const WeightedTree& tree, const CostSequence& costs,
                               const OfflineOptions& options) {
  const std::size_t n = tree.leaf_count();
  const std::size_t T = costs.size();
  validate_cost_sequence(costs, n);
  if (T * tree.node_count() > options.max_cells)
    throw BudgetError("offline DP refused: " + std::to_string(T) + " rounds x " +
                      std::to_string(tree.node_count()) + " nodes exceeds " +
                      std::to_string(options.max_cells) + " cells");

  OfflineResult res;
  const int start = options.start ? tree.leaf_of(*options.start) : -1;
  MinPlusSweep sweep(tree);

  // V_t(y): cheapest way to serve rounds 1..t with round t served at y.
  // W_{t}(x) = min_y V_t(y) + d(y, x).
  std::vector<double> V(n), W(n);
  std::vector<double> moved(n, 0.0), next_moved(n);
  std::vector<Best> conv;
  std::vector<std::int32_t> pred(T * n, -1);

  for (std::size_t l = 0; l < n; ++l)
    W[l] = start >= 0 ? tree.leaf_distance(start, static_cast<int>(l)) : 0.0;
  if (options.keep_table) res.table.push_back(W);

  for (std::size_t t = 0; t < T; ++t) {
    if (t == 0) {
      for (std::size_t l = 0; l < n; ++l) {
        V[l] = W[l] + costs[0][l];
        next_moved[l] = W[l];
        pred[l] = start >= 0 ? start : static_cast<int>(l);
      }
    } else {
      sweep.run(V, conv);
      for (std::size_t y = 0; y < n; ++y) {
        int x = conv[y].leaf;
        // Prefer staying when it is as cheap as the best predecessor.
        if (close(V[y], conv[y].value)) x = static_cast<int>(y);
        double d = x == static_cast<int>(y) ? 0.0 : tree.leaf_distance(x, static_cast<int>(y));
        W[y] = conv[y].value;
        pred[t * n + y] = x;
        next_moved[y] = moved[x] + d;
      }
      for (std::size_t y = 0; y < n; ++y) V[y] = W[y] + costs[t][y];
    }
    moved.swap(next_moved);
    if (options.keep_table) {
      sweep.run(V, conv);
      std::vector<double> row(n);
      for (std::size_t l = 0; l < n; ++l) row[l] = conv[l].value;
      res.table.push_back(std::move(row));
    }
  }

  if (T == 0) {
    res.start_leaf = start >= 0 ? start : 0;
    return res;
  }

  int y = 0;
  for (std::size_t l = 1; l < n; ++l) {
    if (close(V[l], V[y])) {
      if (moved[l] < moved[y] - 1e-12 ||
          (close(moved[l], moved[y]) && sweep.id(int(l)) < sweep.id(y)))
        y = static_cast<int>(l);
    } else if (V[l] < V[y]) {
      y = static_cast<int>(l);
    }
  }
  res.opt = V[y];
  res.path.assign(T, 0);
  for (std::size_t t = T; t-- > 0;) {
    res.path[t] = y;
    y = pred[t * n + y];
  }
  res.start_leaf = y;
  int prev = res.start_leaf;
  for (std::size_t t = 0; t < T; ++t) {
    int cur = res.path[t];
    res.service += costs[t][cur];
    if (cur != prev) res.movement += tree.leaf_distance(prev, cur);
    prev = cur;
  }
  return res;
}

OfflineResult segment_opt(const WeightedTree& tree, const CostPath& path,
                          const OfflineOptions& options) {
  validate_cost_path(path, tree.leaf_count());
  CostSequence costs;
  costs.reserve(path.size());
  for (const CostSegment& seg : path) {
    std::vector<double> c(seg.rates.size());
    for (std::size_t l = 0; l < c.size(); ++l) c[l] = seg.rates[l] * seg.duration;
    costs.push_back(std::move(c));
  }
  return work_function_dp(tree, costs, options);
}

CostPath water_fill(const std::vector<double>& C) {
  std::vector<double> levels;
  for (double v : C) {
    if (!std::isfinite(v) || v < 0.0) throw InputError("water_fill needs finite nonnegative costs");
    if (v > 0.0) levels.push_back(v);
  }
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  CostPath path;
  double below = 0.0;
  for (double level : levels) {
    CostSegment seg{level - below, std::vector<double>(C.size(), 0.0)};
    for (std::size_t x = 0; x < C.size(); ++x) seg.rates[x] = C[x] >= level ? 1.0 : 0.0;
    path.push_back(std::move(seg));
    below = level;
  }
  return path;
}

CostPath water_fill_sequence(const CostSequence& costs) {
  CostPath out;
  for (const auto& C : costs) {
    CostPath part = water_fill(C);
    out.insert(out.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  return out;
}

DiscreteAccount discretize_online(MirrorDescent& engine, const CostSequence& costs) {
  validate_cost_sequence(costs, engine.tree().leaf_count());
  DiscreteAccount acc;
  acc.service.reserve(costs.size());
  acc.movement.reserve(costs.size());
  for (const auto& C : costs) {
    const double s0 = engine.ledger().service, m0 = engine.ledger().movement;
    for (const CostSegment& seg : water_fill(C)) engine.advance(seg);
    acc.service.push_back(engine.ledger().service - s0);
    acc.movement.push_back(engine.ledger().movement - m0);
    acc.total_service += acc.service.back();
    acc.total_movement += acc.movement.back();
  }
  return acc;
}

}  // namespace mts
