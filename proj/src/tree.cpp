#include "mts/tree.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "mts/error.hpp"

namespace mts {

namespace {

std::string describe(const Edge& e) {
  std::ostringstream os;
  os << "edge (" << e.parent << " -> " << e.child << ", w=" << e.weight << ")";
  return os.str();
}

}  // namespace

WeightedTree WeightedTree::build(std::span<const Edge> edges, NodeId root) {
  std::unordered_map<NodeId, NodeId> parent_of;
  std::unordered_map<NodeId, double> weight_of;
  std::map<NodeId, std::vector<NodeId>> kids;
  for (const Edge& e : edges) {
    if (!std::isfinite(e.weight) || e.weight <= 0.0)
      throw InputError("nonpositive or nonfinite weight on " + describe(e));
    if (e.child == root) throw InputError("root appears as a child in " + describe(e));
    if (e.parent == e.child) throw InputError("self loop " + describe(e));
    if (!parent_of.emplace(e.child, e.parent).second)
      throw InputError("node " + std::to_string(e.child) +
                       " has more than one parent; duplicate " + describe(e));
    weight_of[e.child] = e.weight;
    kids[e.parent].push_back(e.child);
  }
  for (auto& [p, list] : kids) std::sort(list.begin(), list.end());

  WeightedTree t;
  // Iterative preorder from the root.
  std::vector<std::pair<NodeId, int>> stack{{root, -1}};
  while (!stack.empty()) {
    auto [id, par] = stack.back();
    stack.pop_back();
    if (t.index_of_.count(id))
      throw InputError("cycle through node " + std::to_string(id));
    int idx = static_cast<int>(t.ids_.size());
    t.index_of_[id] = idx;
    t.ids_.push_back(id);
    t.parent_.push_back(par);
    t.weight_.push_back(par < 0 ? 0.0 : weight_of.at(id));
    auto it = kids.find(id);
    if (it != kids.end())
      for (auto c = it->second.rbegin(); c != it->second.rend(); ++c) stack.push_back({*c, idx});
  }
  for (const Edge& e : edges) {
    if (!t.index_of_.count(e.parent) || !t.index_of_.count(e.child))
      throw InputError("disconnected from root " + std::to_string(root) + ": " + describe(e));
  }

  const int n = static_cast<int>(t.ids_.size());
  std::vector<int> count(n, 0);
  for (int u = 1; u < n; ++u) ++count[t.parent_[u]];
  t.child_begin_.assign(n + 1, 0);
  for (int u = 0; u < n; ++u) t.child_begin_[u + 1] = t.child_begin_[u] + count[u];
  t.child_list_.assign(n > 0 ? n - 1 : 0, 0);
  std::vector<int> fill(t.child_begin_.begin(), t.child_begin_.end() - 1);
  // Preorder indices are increasing in sibling order, so children stay sorted.
  for (int u = 1; u < n; ++u) t.child_list_[fill[t.parent_[u]]++] = u;

  t.depth_.assign(n, 0);
  t.root_distance_.assign(n, 0.0);
  for (int u = 1; u < n; ++u) {
    t.depth_[u] = t.depth_[t.parent_[u]] + 1;
    t.root_distance_[u] = t.root_distance_[t.parent_[u]] + t.weight_[u];
  }
  t.leaf_number_.assign(n, -1);
  for (int u = 0; u < n; ++u) {
    if (t.is_leaf(u)) {
      t.leaf_number_[u] = static_cast<int>(t.leaf_nodes_.size());
      t.leaf_nodes_.push_back(u);
      t.max_depth_ = std::max(t.max_depth_, t.depth_[u]);
    }
  }
  t.leaf_begin_.assign(n, std::numeric_limits<int>::max());
  t.leaf_end_.assign(n, 0);
  t.subtree_height_.assign(n, 0.0);
  t.subtree_diameter_.assign(n, 0.0);
  for (int u = n - 1; u >= 0; --u) {
    if (t.is_leaf(u)) {
      t.leaf_begin_[u] = t.leaf_number_[u];
      t.leaf_end_[u] = t.leaf_number_[u] + 1;
      continue;
    }
    double best = 0.0, second = 0.0, diam = 0.0;
    for (int c : t.children(u)) {
      t.leaf_begin_[u] = std::min(t.leaf_begin_[u], t.leaf_begin_[c]);
      t.leaf_end_[u] = std::max(t.leaf_end_[u], t.leaf_end_[c]);
      diam = std::max(diam, t.subtree_diameter_[c]);
      double reach = t.weight_[c] + t.subtree_height_[c];
      if (reach > best) {
        second = best;
        best = reach;
      } else if (reach > second) {
        second = reach;
      }
    }
    t.subtree_height_[u] = best;
    t.subtree_diameter_[u] = t.children(u).size() >= 2 ? std::max(diam, best + second) : diam;
  }
  return t;
}

int WeightedTree::node_index(NodeId id) const {
  auto it = index_of_.find(id);
  if (it == index_of_.end()) throw InputError("unknown node id " + std::to_string(id));
  return it->second;
}

int WeightedTree::leaf_of(NodeId id) const {
  int u = node_index(id);
  if (!is_leaf(u)) throw InputError("node " + std::to_string(id) + " is not a leaf");
  return leaf_number_[u];
}

bool WeightedTree::uniform_leaf_depth() const {
  return std::all_of(leaf_nodes_.begin(), leaf_nodes_.end(),
                     [&](int u) { return depth_[u] == max_depth_; });
}

double WeightedTree::leaf_distance(int leaf_a, int leaf_b) const {
  int a = leaf_nodes_.at(leaf_a);
  int b = leaf_nodes_.at(leaf_b);
  double d = 0.0;
  while (a != b) {
    if (depth_[a] >= depth_[b]) {
      d += weight_[a];
      a = parent_[a];
    } else {
      d += weight_[b];
      b = parent_[b];
    }
  }
  return d;
}

std::vector<double> WeightedTree::subtree_masses(std::span<const double> leaf_mass) const {
  std::vector<double> x(node_count(), 0.0);
  for (int u = static_cast<int>(node_count()) - 1; u >= 0; --u) {
    if (is_leaf(u)) {
      x[u] = leaf_mass[leaf_number_[u]];
    } else {
      double s = 0.0;
      for (int c : children(u)) s += x[c];
      x[u] = s;
    }
  }
  return x;
}

std::vector<Edge> WeightedTree::edges() const {
  std::vector<Edge> out;
  out.reserve(node_count() > 0 ? node_count() - 1 : 0);
  for (int u = 1; u < static_cast<int>(node_count()); ++u)
    out.push_back({ids_[parent_[u]], ids_[u], weight_[u]});
  return out;
}

WeightedTree WeightedTree::subtree(int u) const {
  std::vector<Edge> out;
  // Preorder contiguity: the subtree of u occupies indices [u, last].
  for (int v = u + 1; v < static_cast<int>(node_count()); ++v) {
    int a = v;
    while (a > u) a = parent_[a];
    if (a != u) break;
    out.push_back({ids_[parent_[v]], ids_[v], weight_[v]});
  }
  return build(out, ids_[u]);
}

bool WeightedTree::operator==(const WeightedTree& other) const {
  return ids_ == other.ids_ && parent_ == other.parent_ && weight_ == other.weight_;
}

LeafDistribution::LeafDistribution(std::vector<double> mass) : mass_(std::move(mass)) {
  if (mass_.empty()) throw InputError("empty leaf distribution");
  double total = 0.0;
  for (double& m : mass_) {
    if (!std::isfinite(m)) throw InputError("nonfinite leaf mass");
    if (m < -kNegativeFloor) throw InputError("negative leaf mass " + std::to_string(m));
    if (m < 0.0) m = 0.0;
    total += m;
  }
  if (std::abs(total - 1.0) > kSumTolerance)
    throw InputError("leaf masses sum to " + std::to_string(total));
}

LeafDistribution LeafDistribution::point_mass(std::size_t leaves, int leaf) {
  std::vector<double> m(leaves, 0.0);
  m.at(leaf) = 1.0;
  return LeafDistribution(std::move(m));
}

LeafDistribution LeafDistribution::uniform(std::size_t leaves) {
  return LeafDistribution(std::vector<double>(leaves, 1.0 / static_cast<double>(leaves)));
}

double leaf_distance(const WeightedTree& tree, NodeId a, NodeId b) {
  return tree.leaf_distance(tree.leaf_of(a), tree.leaf_of(b));
}

double w1_distance(const WeightedTree& tree, std::span<const double> p,
                   std::span<const double> q) {
  if (p.size() != tree.leaf_count() || q.size() != tree.leaf_count())
    throw InputError("distribution size does not match the tree's leaf count");
  std::vector<double> diff(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) diff[i] = p[i] - q[i];
  std::vector<double> x = tree.subtree_masses(diff);
  double d = 0.0;
  for (std::size_t u = 1; u < tree.node_count(); ++u) d += tree.weight(static_cast<int>(u)) * std::abs(x[u]);
  return d;
}

HstReport validate_hst(const WeightedTree& tree, double tau) {
  if (!(tau > 1.0)) throw InputError("HST separation must exceed 1");
  HstReport report;
  report.tau = tau;
  for (int u = 1; u < static_cast<int>(tree.node_count()); ++u) {
    double diam = tree.subtree_diameter(u);
    if (diam > tree.weight(u) / tau)
      report.violations.push_back({tree.id(u), diam, tree.weight(u)});
  }
  report.is_tau_hst = report.violations.empty();
  return report;
}

namespace {

// Mutable tree used while restructuring.
struct Draft {
  NodeId root;
  std::map<NodeId, NodeId> parent;
  std::map<NodeId, double> weight;

  static Draft from(const WeightedTree& t) {
    Draft d{t.id(0), {}, {}};
    for (const Edge& e : t.edges()) {
      d.parent[e.child] = e.parent;
      d.weight[e.child] = e.weight;
    }
    return d;
  }
  WeightedTree build() const {
    std::vector<Edge> edges;
    edges.reserve(parent.size());
    for (auto& [c, p] : parent) edges.push_back({p, c, weight.at(c)});
    return WeightedTree::build(edges, root);
  }
  // Removes node c; its children hang from c's parent with added weight.
  void contract(NodeId c) {
    NodeId p = parent.at(c);
    double w = weight.at(c);
    for (auto& [k, par] : parent) {
      if (par == c) {
        par = p;
        weight[k] += w;
      }
    }
    parent.erase(c);
    weight.erase(c);
  }
};

}  // namespace

WeightedTree contract_unary(const WeightedTree& tree) {
  Draft d = Draft::from(tree);
  bool changed = true;
  while (changed) {
    changed = false;
    WeightedTree t = d.build();
    for (int u = 0; u < static_cast<int>(t.node_count()); ++u) {
      if (t.children(u).size() != 1) continue;
      if (u == 0) {
        int c = t.children(0)[0];
        d.parent.erase(t.id(c));
        d.weight.erase(t.id(c));
        d.root = t.id(c);
      } else {
        d.contract(t.id(u));
      }
      changed = true;
      break;
    }
  }
  return d.build();
}

std::pair<double, double> distortion_range(const WeightedTree& a, const WeightedTree& b) {
  const int n = static_cast<int>(a.leaf_count());
  if (b.leaf_count() != a.leaf_count()) throw InputError("trees have different leaf sets");
  std::vector<int> map(n);
  for (int i = 0; i < n; ++i) map[i] = b.leaf_of(a.id(a.leaf_node(i)));
  double hi = 1.0, lo = 1.0;
  bool first = true;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      double r = b.leaf_distance(map[i], map[j]) / a.leaf_distance(i, j);
      if (first) {
        hi = lo = r;
        first = false;
      } else {
        hi = std::max(hi, r);
        lo = std::min(lo, r);
      }
    }
  }
  return {hi, lo};
}

QuantizedTree quantize_to_8hst(const WeightedTree& input) {
  for (int u = 1; u < static_cast<int>(input.node_count()); ++u) {
    if (!(input.subtree_diameter(u) < input.weight(u)))
      throw InputError("not an HST for any separation > 1: subtree diameter " +
                       std::to_string(input.subtree_diameter(u)) + " at node " +
                       std::to_string(input.id(u)) + " reaches its edge weight " +
                       std::to_string(input.weight(u)));
  }
  constexpr double kSeparation = 8.0;
  Draft draft = Draft::from(contract_unary(input));

  // Process internal non-root nodes bottom-up; ids are stable across edits.
  std::vector<NodeId> order;
  {
    WeightedTree t = draft.build();
    for (int u = static_cast<int>(t.node_count()) - 1; u >= 1; --u)
      if (!t.is_leaf(u)) order.push_back(t.id(u));
  }
  for (NodeId c : order) {
    WeightedTree t = draft.build();
    int u = t.node_index(c);
    double need = kSeparation * t.subtree_diameter(u);
    if (t.weight(u) >= need) continue;

    Draft raised = draft;
    raised.weight[c] = need;
    Draft contracted = draft;
    contracted.contract(c);
    double raise_cost = distortion_range(input, raised.build()).first;
    double contract_cost = distortion_range(input, contracted.build()).first;
    draft = raise_cost <= contract_cost ? raised : contracted;
  }

  QuantizedTree out{draft.build(), 1.0, 1.0};
  auto [hi, lo] = distortion_range(input, out.tree);
  out.max_distortion = hi;
  out.min_distortion = lo;
  if (!validate_hst(out.tree, kSeparation).is_tau_hst)
    throw InvariantError("quantized tree failed the 8-HST check");
  if (hi > kSeparation * (1.0 + 1e-12) || lo < 1.0 - 1e-12)
    throw InputError("cannot quantize to an 8-HST within distortion 8 (reached " +
                     std::to_string(hi) + ")");
  return out;
}

WeightedTree pad_to_uniform_depth(const WeightedTree& tree) {
  const int depth = tree.max_depth();
  if (tree.uniform_leaf_depth()) return tree;
  NodeId next = 0;
  for (int u = 0; u < static_cast<int>(tree.node_count()); ++u) next = std::max(next, tree.id(u));
  ++next;
  std::vector<Edge> edges;
  for (int u = 1; u < static_cast<int>(tree.node_count()); ++u) {
    int missing = depth - tree.depth(u);
    if (!tree.is_leaf(u) || missing == 0) {
      edges.push_back({tree.id(tree.parent(u)), tree.id(u), tree.weight(u)});
      continue;
    }
    NodeId above = tree.id(tree.parent(u));
    double w = tree.weight(u);
    for (int k = 0; k < missing; ++k) {
      NodeId fresh = next++;
      edges.push_back({above, fresh, w});
      above = fresh;
      w /= 8.0;
    }
    edges.push_back({above, tree.id(u), w});
  }
  return WeightedTree::build(edges, tree.id(0));
}

}  // namespace mts
