#include "mts/combiner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "mts/error.hpp"

namespace mts {

GuaranteeWeights guarantee_weights(const WeightedTree& tree, double tau, double C0) {
  const std::size_t N = tree.node_count();
  const double factor = 8.0 * tau / (tau - 1.0);
  GuaranteeWeights g;
  g.v.assign(N, 0.0);
  g.kappa.assign(N, 0.0);
  for (int u = static_cast<int>(N) - 1; u >= 0; --u) {
    auto ch = tree.children(u);
    if (ch.empty()) {
      g.v[u] = std::exp(C0);
    } else if (ch.size() == 1) {
      g.v[u] = g.v[ch[0]];
    } else {
      double sum = 0.0;
      for (int c : ch) sum += g.v[c];
      g.v[u] = std::exp(1.0) * sum;
    }
    g.kappa[u] = factor * std::log(g.v[u]);
  }
  return g;
}

HstCombiner::HstCombiner(const WeightedTree& tree, double tau, double C0,
                         std::optional<NodeId> start, StepPolicy policy, bool record_paths)
    : tree_(tree), tau_(tau), policy_(policy), record_paths_(record_paths) {
  if (!(tau > 1.0) || !std::isfinite(tau)) throw InputError("tau must be > 1");
  if (!(C0 >= 1.0) || !std::isfinite(C0)) throw InputError("C0 must be >= 1");
  HstReport hst = validate_hst(tree_, 4.0 * tau);
  if (!hst.is_tau_hst) {
    const HstViolation& v = hst.violations.front();
    throw InputError("tree is not a " + std::to_string(4.0 * tau) + "-HST at node " +
                     std::to_string(v.node) + " (subtree diameter " +
                     std::to_string(v.subtree_diameter) + ", edge " + std::to_string(v.edge_weight) +
                     ")");
  }
  gw_ = guarantee_weights(tree_, tau, C0);

  const int N = static_cast<int>(tree_.node_count());
  subtree_end_.assign(N, 0);
  slot_.assign(N, 0);
  star_of_.assign(N, -1);
  for (int u = N - 1; u >= 0; --u) {
    auto ch = tree_.children(u);
    subtree_end_[u] = ch.empty() ? u + 1 : subtree_end_[ch.back()];
    for (std::size_t k = 0; k < ch.size(); ++k) slot_[ch[k]] = static_cast<int>(k);
  }

  const int start_node = tree_.leaf_node(start ? tree_.leaf_of(*start) : 0);
  std::vector<char> on_path(N, 0);
  for (int u = start_node; u >= 0; u = u == 0 ? -1 : tree_.parent(u)) on_path[u] = 1;

  q_.assign(N, 1.0);
  dq_.assign(N, 0.0);
  const double g = gamma();
  for (int u = 0; u < N; ++u) {
    auto ch = tree_.children(u);
    if (ch.size() < 2) continue;
    CombinerNode node;
    node.node = u;
    node.children.assign(ch.begin(), ch.end());
    std::vector<Edge> edges;
    std::vector<double> u_weights;
    int first = 0;
    for (std::size_t k = 0; k < ch.size(); ++k) {
      double w = (1.0 - 1.0 / tau) * tree_.weight(ch[k]);
      node.star_weights.push_back(w);
      edges.push_back({tree_.id(u), tree_.id(ch[k]), w});
      u_weights.push_back(gw_.v[ch[k]]);
      if (on_path[ch[k]]) first = static_cast<int>(k);
    }
    node.params = derive_params(u_weights, g, 0.0);
    WeightedTree star = WeightedTree::build(edges, tree_.id(u));
    node.engine.emplace(star, EntropicRegularizer::star(star, node.params.eta, node.params.delta),
                        Dynamics::star, LeafDistribution::point_mass(ch.size(), first), policy_);
    node.engine->set_service_weights(node.params.beta);
    for (std::size_t k = 0; k < ch.size(); ++k) q_[ch[k]] = k == std::size_t(first) ? 1.0 : 0.0;
    star_of_[u] = static_cast<int>(nodes_.size());
    nodes_.push_back(std::move(node));
  }

  svc_.assign(N, 0.0);
  mov_.assign(N, 0.0);
  x_.assign(N, 0.0);
  dx_.assign(N, 0.0);
  p_.resize(tree_.leaf_count());
  next_.resize(tree_.leaf_count());
  compose(p_);
}

void HstCombiner::set_trace(std::ostream* out) {
  trace_ = out;
  if (!trace_) return;
  *trace_ << "t";
  for (std::size_t l = 0; l < tree_.leaf_count(); ++l)
    *trace_ << ",p" << tree_.id(tree_.leaf_node(static_cast<int>(l)));
  *trace_ << ",S,M\n";
}

void HstCombiner::compose(std::vector<double>& out) {
  const int N = static_cast<int>(tree_.node_count());
  x_[0] = 1.0;
  for (int u = 1; u < N; ++u) x_[u] = x_[tree_.parent(u)] * q_[u];
  for (std::size_t l = 0; l < out.size(); ++l) out[l] = x_[tree_.leaf_node(static_cast<int>(l))];
}

// Leaves first: every node's unfair rates come from its children's service
// and movement rates, its own drift from the unfair-star solve, and its
// subtree movement rate from the product rule on conditional masses.
void HstCombiner::step_rates(std::span<const double> rates) {
  const int N = static_cast<int>(tree_.node_count());
  for (int u = N - 1; u >= 0; --u) {
    auto ch = tree_.children(u);
    if (ch.empty()) {
      svc_[u] = rates[tree_.leaf_number(u)];
      mov_[u] = 0.0;
      continue;
    }
    if (star_of_[u] >= 0) {
      CombinerNode& node = nodes_[star_of_[u]];
      cu_.resize(ch.size());
      for (std::size_t k = 0; k < ch.size(); ++k)
        cu_[k] = (svc_[ch[k]] + mov_[ch[k]]) / node.params.beta[k];
      node.engine->solve(cu_);
      auto state = node.engine->state();
      auto drift = node.engine->leaf_drift();
      for (std::size_t k = 0; k < ch.size(); ++k) {
        q_[ch[k]] = state[k];
        dq_[ch[k]] = drift[k];
      }
      if (record_paths_) node.cu_path.push_back({0.0, cu_});
    }
    double svc = 0.0;
    for (int c : ch) svc += q_[c] * svc_[c];
    double mov = 0.0;
    x_[u] = 1.0;
    dx_[u] = 0.0;
    for (int v = u + 1; v < subtree_end_[u]; ++v) {
      int p = tree_.parent(v);
      x_[v] = x_[p] * q_[v];
      dx_[v] = dx_[p] * q_[v] + x_[p] * dq_[v];
      mov += tree_.weight(v) * std::abs(dx_[v]);
    }
    svc_[u] = svc;
    mov_[u] = mov;
    if (star_of_[u] >= 0) {
      nodes_[star_of_[u]].service_rate = svc;
      nodes_[star_of_[u]].movement_rate = mov;
    }
  }
}

void HstCombiner::advance(const CostSegment& segment) {
  if (segment.rates.size() != tree_.leaf_count())
    throw InputError("segment has " + std::to_string(segment.rates.size()) + " rates for " +
                     std::to_string(tree_.leaf_count()) + " leaves");
  if (!(segment.duration >= 0.0) || !std::isfinite(segment.duration))
    throw InputError("segment duration must be finite and nonnegative");
  const double duration = segment.duration;
  const double h_max = policy_.step_for(duration);
  double remaining = duration;
  bool first = true;
  while (remaining > 0.0) {
    step_rates(segment.rates);
    bool at_rest = true;
    double h = std::min(h_max, remaining);
    for (const CombinerNode& node : nodes_) {
      for (double d : node.engine->leaf_drift())
        if (d != 0.0) at_rest = false;
      h = std::min({h, node.engine->relative_step(), node.engine->event_step()});
    }
    if (at_rest) h = remaining;
    if (remaining - h <= 1e-12 * duration) h = remaining;
    if (h < policy_.snap_time && h < remaining)
      throw InvariantError("step underflow (h = " + std::to_string(h) + ")");

    // Snaps inside the solves already moved some conditionals.
    compose(next_);
    ledger_.movement += w1_distance(tree_, p_, next_);
    p_.swap(next_);

    double f[2] = {0.0, mov_[0]};
    for (std::size_t l = 0; l < p_.size(); ++l) f[0] += segment.rates[l] * p_[l];

    for (CombinerNode& node : nodes_) {
      node.engine->apply(h, first);
      if (record_paths_) node.cu_path.back().duration = h;
      auto state = node.engine->state();
      for (std::size_t k = 0; k < node.children.size(); ++k) q_[node.children[k]] = state[k];
    }
    compose(next_);
    double total = 0.0;
    for (double m : next_) total += m;
    ledger_.max_mass_error = std::max(ledger_.max_mass_error, std::abs(total - 1.0));
    ledger_.movement += w1_distance(tree_, p_, next_);
    p_.swap(next_);

    ledger_.elapsed += h;
    ledger_.service += h * f[0];
    if (have_prev_ && !first) {
      const double k = policy_.budget_constant * prev_h_;
      ledger_.service_budget += k * std::abs(f[0] - prev_[0]);
      ledger_.movement_budget += k * std::abs(f[1] - prev_[1]);
    }
    prev_[0] = f[0];
    prev_[1] = f[1];
    prev_h_ = h;
    have_prev_ = true;
    ++ledger_.steps;

    if (trace_) {
      *trace_ << ledger_.elapsed;
      for (double m : p_) *trace_ << ',' << m;
      *trace_ << ',' << ledger_.service << ',' << ledger_.movement << '\n';
    }
    remaining = h == remaining ? 0.0 : remaining - h;
    first = false;
  }
}

void HstCombiner::run(const CostPath& path) {
  validate_cost_path(path, tree_.leaf_count());
  for (const CostSegment& seg : path) advance(seg);
}

Diagnostics HstCombiner::diagnostics() const {
  Diagnostics d;
  d.steps = ledger_.steps;
  d.max_mass_error = ledger_.max_mass_error;
  bool first = true;
  for (const CombinerNode& node : nodes_) {
    const Diagnostics& e = node.engine->diagnostics();
    d.events += e.events;
    d.clamp_events += e.clamp_events;
    d.clamp_duration += e.clamp_duration;
    d.max_mass_error = std::max(d.max_mass_error, e.max_mass_error);
    d.min_mass = std::min(d.min_mass, e.min_mass);
    d.max_mass_balance = std::max(d.max_mass_balance, e.max_mass_balance);
    d.max_complementary_slackness =
        std::max(d.max_complementary_slackness, e.max_complementary_slackness);
    d.max_stationarity = std::max(d.max_stationarity, e.max_stationarity);
    if (e.steps == 0) continue;
    d.min_multiplier = first ? e.min_multiplier : std::min(d.min_multiplier, e.min_multiplier);
    d.min_reduced_cost = first ? e.min_reduced_cost : std::min(d.min_reduced_cost, e.min_reduced_cost);
    d.min_mu = first ? e.min_mu : std::min(d.min_mu, e.min_mu);
    d.delta_floored = d.delta_floored || e.delta_floored;
    first = false;
  }
  return d;
}

}  // namespace mts
