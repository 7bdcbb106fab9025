#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace mts {

using NodeId = std::int64_t;

struct Edge {
  NodeId parent;
  NodeId child;
  double weight;
};

// Rooted tree with positive edge weights. The leaves are the points of the
// metric space; the distance between two leaves is the weighted path length.
//
// Nodes are stored in depth-first preorder with children sorted by external
// id, so the root has index 0, every parent precedes its children, and the
// leaves below any node form a contiguous range of leaf numbers. Iterating
// node indices in decreasing order visits children before parents.
//
// Immutable after construction.
class WeightedTree {
 public:
  // Validates the edge list (single root, no cycles, connected, unique
  // parent per node, positive finite weights). Throws InputError naming the
  // offending edge.
  static WeightedTree build(std::span<const Edge> edges, NodeId root);

  std::size_t node_count() const { return parent_.size(); }
  std::size_t leaf_count() const { return leaf_nodes_.size(); }

  int parent(int u) const { return parent_[u]; }
  double weight(int u) const { return weight_[u]; }
  std::span<const int> children(int u) const {
    return {child_list_.data() + child_begin_[u],
            child_list_.data() + child_begin_[u + 1]};
  }
  bool is_leaf(int u) const { return child_begin_[u] == child_begin_[u + 1]; }
  int depth(int u) const { return depth_[u]; }
  NodeId id(int u) const { return ids_[u]; }
  // Throws InputError for unknown ids.
  int node_index(NodeId id) const;

  int leaf_node(int leaf) const { return leaf_nodes_[leaf]; }
  int leaf_number(int node) const { return leaf_number_[node]; }
  // Leaf number of a leaf id; throws InputError if the id is not a leaf.
  int leaf_of(NodeId id) const;
  int leaf_begin(int u) const { return leaf_begin_[u]; }
  int leaf_end(int u) const { return leaf_end_[u]; }

  // Maximum combinatorial depth of a leaf.
  int max_depth() const { return max_depth_; }
  bool uniform_leaf_depth() const;

  // Weighted distance from the root to node u.
  double root_distance(int u) const { return root_distance_[u]; }
  double leaf_distance(int leaf_a, int leaf_b) const;
  double diameter() const { return subtree_diameter_[0]; }
  double subtree_diameter(int u) const { return subtree_diameter_[u]; }
  // Largest weighted distance from u down to a leaf in its subtree.
  double subtree_height(int u) const { return subtree_height_[u]; }

  // Subtree masses x_u = sum of leaf masses below u, for every node.
  std::vector<double> subtree_masses(std::span<const double> leaf_mass) const;

  // Canonical edge list (preorder, children sorted by id).
  std::vector<Edge> edges() const;
  // The subtree hanging below u, re-rooted at u (ids preserved).
  WeightedTree subtree(int u) const;

  bool operator==(const WeightedTree& other) const;

 private:
  WeightedTree() = default;

  std::vector<NodeId> ids_;
  std::unordered_map<NodeId, int> index_of_;
  std::vector<int> parent_;
  std::vector<double> weight_;
  std::vector<int> child_begin_;
  std::vector<int> child_list_;
  std::vector<int> depth_;
  std::vector<double> root_distance_;
  std::vector<int> leaf_nodes_;
  std::vector<int> leaf_number_;
  std::vector<int> leaf_begin_;
  std::vector<int> leaf_end_;
  std::vector<double> subtree_diameter_;
  std::vector<double> subtree_height_;
  int max_depth_ = 0;
};

// Probability vector over the leaves of a tree, indexed by leaf number.
// Internal masses are never stored; they are derived as subtree sums.
class LeafDistribution {
 public:
  static constexpr double kNegativeFloor = 1e-12;
  static constexpr double kSumTolerance = 1e-9;

  // Entries in [-kNegativeFloor, 0) are clamped to 0. Throws InputError on
  // negative entries below the floor or a total off by more than
  // kSumTolerance.
  explicit LeafDistribution(std::vector<double> mass);

  static LeafDistribution point_mass(std::size_t leaves, int leaf);
  static LeafDistribution uniform(std::size_t leaves);

  std::size_t size() const { return mass_.size(); }
  double operator[](std::size_t i) const { return mass_[i]; }
  std::span<const double> masses() const { return mass_; }

 private:
  std::vector<double> mass_;
};

// Leaf distance by external ids.
double leaf_distance(const WeightedTree& tree, NodeId a, NodeId b);

// Optimal transport distance between two leaf distributions:
// sum over non-root u of w_u * |x_u(p) - x_u(q)|.
double w1_distance(const WeightedTree& tree, std::span<const double> p,
                   std::span<const double> q);

struct HstViolation {
  NodeId node;
  double subtree_diameter;
  double edge_weight;
};

struct HstReport {
  bool is_tau_hst = true;
  double tau = 0.0;
  std::vector<HstViolation> violations;
};

// Checks diam(subtree(u)) <= w_u / tau for every non-root u.
HstReport validate_hst(const WeightedTree& tree, double tau);

struct QuantizedTree {
  WeightedTree tree;
  // Largest and smallest ratio d'/d over all leaf pairs.
  double max_distortion = 1.0;
  double min_distortion = 1.0;
};

// Converts an HST (any separation > 1) into an 8-HST on the same leaves with
// d <= d' <= 8 d. Unary internal nodes are contracted; each remaining
// internal edge is either raised to 8x its subtree diameter or contracted
// into its parent, whichever keeps the pairwise distortion smaller. Throws
// InputError if the input is not an HST or the distortion cannot be kept
// within 8.
QuantizedTree quantize_to_8hst(const WeightedTree& tree);

// Extends every shallow leaf by a chain of unary nodes (weights w/8, w/64,
// ...) so that all leaves sit at the maximum depth. The original leaf ids
// stay on the new bottom nodes; fresh ids are allocated above the current
// maximum id.
WeightedTree pad_to_uniform_depth(const WeightedTree& tree);

// Contracts every non-root unary node into its parent (child weight grows by
// the contracted edge). A unary root is dropped.
WeightedTree contract_unary(const WeightedTree& tree);

// Maximum and minimum pairwise ratio d_b / d_a over all leaf pairs, where
// leaves are matched by id. Both trees must have the same leaf ids.
std::pair<double, double> distortion_range(const WeightedTree& a, const WeightedTree& b);

}  // namespace mts
