#include "mts/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "mts/error.hpp"

namespace mts {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

LeafDistribution start_distribution(const WeightedTree& tree, std::optional<NodeId> start_leaf) {
  int leaf = start_leaf ? tree.leaf_of(*start_leaf) : 0;
  return LeafDistribution::point_mass(tree.leaf_count(), leaf);
}

MirrorDescent::MirrorDescent(const WeightedTree& tree, EntropicRegularizer reg, Dynamics mode,
                             const LeafDistribution& start, StepPolicy policy)
    : tree_(tree), reg_(std::move(reg)), mode_(mode), policy_(policy) {
  if (start.size() != tree_.leaf_count())
    throw InputError("start distribution has " + std::to_string(start.size()) +
                     " entries for " + std::to_string(tree_.leaf_count()) + " leaves");
  if (reg_.eta.size() != tree_.node_count() || reg_.delta.size() != tree_.node_count())
    throw InputError("regularizer does not match the tree");
  if (mode_ == Dynamics::star && tree_.max_depth() != 1)
    throw InputError("star dynamics need a depth-1 tree");
  if (mode_ == Dynamics::tree && !tree_.uniform_leaf_depth())
    throw InputError("tree dynamics need all leaves at the same depth; pad the tree first");
  if (!(policy_.step_fraction > 0.0) && !(policy_.h_max > 0.0))
    throw InputError("step policy needs a positive step");

  p_.assign(start.masses().begin(), start.masses().end());
  const std::size_t n = tree_.leaf_count();
  leaf_weight_.resize(n);
  leaf_eta_.resize(n);
  leaf_delta_.resize(n);
  for (std::size_t l = 0; l < n; ++l) {
    int u = tree_.leaf_node(static_cast<int>(l));
    leaf_weight_[l] = tree_.weight(u);
    leaf_eta_[l] = reg_.eta[u];
    leaf_delta_[l] = reg_.delta[u];
  }
  s_.resize(n);
  next_.resize(n);
  ledger_.psi_start = psi();
  diag_.delta_floored = reg_.delta_floored;
}

void MirrorDescent::set_service_weights(std::vector<double> beta) {
  if (beta.size() != tree_.leaf_count()) throw InputError("one unfairness ratio per leaf required");
  beta_ = std::move(beta);
}

void MirrorDescent::set_trace(std::ostream* out) {
  trace_ = out;
  if (!trace_) return;
  *trace_ << "t";
  for (std::size_t l = 0; l < tree_.leaf_count(); ++l)
    *trace_ << ",p" << tree_.id(tree_.leaf_node(static_cast<int>(l)));
  *trace_ << ",mu,max_lambda_hat,max_xi,S,M\n";
}

const MultiplierSolution& MirrorDescent::solve(std::span<const double> rates) {
  rates_.assign(rates.begin(), rates.end());
  for (;;) {
    if (mode_ == Dynamics::star) {
      for (std::size_t l = 0; l < p_.size(); ++l)
        s_[l] = sensitivity(leaf_eta_[l], leaf_weight_[l], p_[l], leaf_delta_[l]);
      star_multiplier_solve(p_, s_, rates_, last_);
    } else {
      last_ = tree_multiplier_solve(tree_, p_, rates_, reg_);
    }
    // Coordinates about to cross zero within snap_time are put at zero and
    // the multipliers re-solved with the enlarged active set.
    bool snapped = false;
    next_ = p_;
    for (std::size_t l = 0; l < p_.size(); ++l) {
      double d = last_.leaf_drift[l];
      if (p_[l] > 0.0 && d < 0.0 && p_[l] < -d * policy_.snap_time) {
        next_[l] = 0.0;
        snapped = true;
        ++diag_.events;
      }
    }
    if (!snapped) {
      update_step_cap();
      return last_;
    }
    double total = 0.0;
    for (double m : next_) total += m;
    for (double& m : next_) m /= total;
    ledger_.movement += w1_distance(tree_, p_, next_);
    p_.swap(next_);
  }
}

double MirrorDescent::event_step() const {
  double h = kInf;
  for (std::size_t l = 0; l < p_.size(); ++l) {
    double d = last_.leaf_drift[l];
    if (d < 0.0) h = std::min(h, p_[l] / -d);
  }
  return h;
}

// Each drift d_u grows at about the rate |d_u| / (x_u + delta_u), so the
// movement rate changes at about sum w_u d_u^2 / (x_u + delta_u).
void MirrorDescent::update_step_cap() {
  step_cap_ = kInf;
  if (!(policy_.rel_step > 0.0)) return;
  const std::size_t n = p_.size();
  double level = 0.0, change = 0.0, cmax = 0.0;
  for (std::size_t l = 0; l < n; ++l) {
    double c = rates_[l], d = last_.leaf_drift[l];
    level += c * p_[l];
    change += std::abs(c * d);
    cmax = std::max(cmax, c);
  }
  if (mode_ == Dynamics::star) {
    for (std::size_t l = 0; l < n; ++l) {
      double d = last_.leaf_drift[l];
      level += leaf_weight_[l] * std::abs(d);
      change += leaf_weight_[l] * d * d / (p_[l] + leaf_delta_[l]);
    }
  } else {
    masses_.assign(tree_.node_count(), 0.0);
    for (std::size_t l = 0; l < n; ++l) masses_[tree_.leaf_node(static_cast<int>(l))] = p_[l];
    for (int u = static_cast<int>(tree_.node_count()) - 1; u > 0; --u) {
      masses_[tree_.parent(u)] += masses_[u];
      double d = last_.node_drift[u];
      level += tree_.weight(u) * std::abs(d);
      change += tree_.weight(u) * d * d / (masses_[u] + reg_.delta[u]);
    }
  }
  level += cmax / static_cast<double>(n);
  if (change > 0.0) step_cap_ = policy_.rel_step * level / change;
}

double MirrorDescent::movement_rate() const {
  double r = 0.0;
  if (mode_ == Dynamics::star) {
    for (std::size_t l = 0; l < p_.size(); ++l) r += leaf_weight_[l] * std::abs(last_.leaf_drift[l]);
  } else {
    for (std::size_t u = 1; u < tree_.node_count(); ++u)
      r += tree_.weight(static_cast<int>(u)) * std::abs(last_.node_drift[u]);
  }
  return r;
}

double MirrorDescent::psi() const {
  std::vector<double> x = tree_.subtree_masses(p_);
  double v = 0.0;
  for (std::size_t u = 1; u < tree_.node_count(); ++u) {
    int k = static_cast<int>(u);
    v += tree_.depth(k) * tree_.weight(k) * x[u];
  }
  return v;
}

void MirrorDescent::record(const MultiplierSolution& sol, double h) {
  const KktResiduals& r = sol.residuals;
  const bool first = diag_.steps == 0;
  diag_.max_mass_balance = std::max(diag_.max_mass_balance, r.mass_balance);
  diag_.max_complementary_slackness =
      std::max(diag_.max_complementary_slackness, r.complementary_slackness);
  diag_.max_stationarity = std::max(diag_.max_stationarity, r.stationarity);
  diag_.min_multiplier = first ? r.min_multiplier : std::min(diag_.min_multiplier, r.min_multiplier);
  diag_.min_reduced_cost =
      first ? r.min_reduced_cost : std::min(diag_.min_reduced_cost, r.min_reduced_cost);
  diag_.min_mu = first ? sol.mu : std::min(diag_.min_mu, sol.mu);
  if (sol.clamp_count > 0) {
    diag_.clamp_events += sol.clamp_count;
    diag_.clamp_duration += h;
  }
}

void MirrorDescent::apply(double h, bool segment_start) {
  if (!(h >= 0.0) || !std::isfinite(h)) throw InvariantError("invalid step length");
  const std::size_t n = p_.size();
  const std::span<const double> drift = last_.leaf_drift;

  // Integrands at the left end of the step.
  double f[6] = {0, movement_rate(), 0, 0, 0, 0};
  for (std::size_t l = 0; l < n; ++l) {
    double c = rates_[l], reduced = c - last_.xi[l];
    f[0] += c * p_[l];
    if (!beta_.empty()) f[2] += beta_[l] * c * p_[l];
    f[3] += reduced * leaf_delta_[l];
    f[4] += reduced;
    f[5] += reduced * leaf_eta_[l] * leaf_delta_[l];
  }

  double total = 0.0;
  bool changed = false;
  for (std::size_t l = 0; l < n; ++l) {
    double d = drift[l];
    double m = p_[l] + h * d;
    if (d < 0.0 && p_[l] <= -d * h * (1.0 + 1e-12)) {
      if (p_[l] > 0.0) ++diag_.events;
      m = 0.0;
    }
    if (m < 0.0) {
      diag_.min_mass = std::min(diag_.min_mass, m);
      m = 0.0;
    }
    next_[l] = m;
    total += m;
    changed = changed || m != p_[l];
  }
  diag_.max_mass_error = std::max(diag_.max_mass_error, std::abs(total - 1.0));
  if (!(total > 0.0) || !std::isfinite(total)) throw InvariantError("state left the simplex");
  if (changed)
    for (double& m : next_) m /= total;

  double moved = 0.0;
  if (mode_ == Dynamics::star) {
    for (std::size_t l = 0; l < n; ++l) moved += leaf_weight_[l] * std::abs(next_[l] - p_[l]);
  } else {
    moved = w1_distance(tree_, p_, next_);
  }

  ledger_.elapsed += h;
  ledger_.service += h * f[0];
  ledger_.movement += moved;
  ledger_.unfair_service += h * f[2];
  ledger_.reduced_shift += h * f[3];
  ledger_.reduced_total += h * f[4];
  ledger_.reduced_eta_shift += h * f[5];

  // Left-endpoint error of the previous step: its length times the change
  // of the integrand across it.
  if (have_prev_ && !segment_start) {
    const double k = policy_.budget_constant * prev_h_;
    budget_.service += k * std::abs(f[0] - prev_[0]);
    budget_.movement += k * std::abs(f[1] - prev_[1]);
    budget_.unfair_service += k * std::abs(f[2] - prev_[2]);
    budget_.reduced_shift += k * std::abs(f[3] - prev_[3]);
    budget_.reduced_total += k * std::abs(f[4] - prev_[4]);
    budget_.reduced_eta_shift += k * std::abs(f[5] - prev_[5]);
  }
  std::copy(std::begin(f), std::end(f), std::begin(prev_));
  prev_h_ = h;
  have_prev_ = true;

  record(last_, h);
  ++diag_.steps;
  p_.swap(next_);

  if (trace_) {
    double max_lambda = 0.0, max_xi = 0.0;
    for (double v : last_.lambda_hat) max_lambda = std::max(max_lambda, v);
    for (double v : last_.xi) max_xi = std::max(max_xi, v);
    *trace_ << ledger_.elapsed;
    for (double m : p_) *trace_ << ',' << m;
    *trace_ << ',' << last_.mu << ',' << max_lambda << ',' << max_xi << ',' << ledger_.service
            << ',' << ledger_.movement << '\n';
  }
}

void MirrorDescent::advance(const CostSegment& segment) {
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
    solve(segment.rates);
    bool at_rest = true;
    for (double d : last_.leaf_drift)
      if (d != 0.0) at_rest = false;
    double h = at_rest ? remaining : std::min({h_max, remaining, relative_step(), event_step()});
    if (remaining - h <= 1e-12 * duration) h = remaining;
    if (h < policy_.snap_time && h < remaining)
      throw InvariantError("step underflow (h = " + std::to_string(h) + ")");
    apply(h, first);
    remaining = h == remaining ? 0.0 : remaining - h;
    first = false;
  }
}

void MirrorDescent::run(const CostPath& path) {
  validate_cost_path(path, tree_.leaf_count());
  for (const CostSegment& seg : path) advance(seg);
}

}  // namespace mts
