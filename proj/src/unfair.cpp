#include "mts/unfair.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mts/error.hpp"

namespace mts {

namespace {

bool close_rel(double a, double b, double rel) {
  return std::abs(a - b) <= rel * std::max({1.0, std::abs(a), std::abs(b)});
}

void validate(const UnfairParams& p) {
  const std::size_t m = p.eta.size();
  if (m == 0 || p.beta.size() != m || p.delta.size() != m)
    throw InputError("unfair parameters need equal-length beta, eta, delta");
  if (!(p.gamma >= 1.0) || !std::isfinite(p.gamma)) throw InputError("gamma must be >= 1");
  if (!(p.zeta >= 0.0) || !std::isfinite(p.zeta)) throw InputError("zeta must be >= 0");
  for (std::size_t i = 0; i < m; ++i) {
    if (!(p.beta[i] >= 0.0) || !std::isfinite(p.beta[i]))
      throw InputError("beta[" + std::to_string(i) + "] must be finite and >= 0");
    if (!(p.eta[i] > 0.0) || !std::isfinite(p.eta[i]))
      throw InputError("eta[" + std::to_string(i) + "] must be finite and > 0");
    // Recipe shifts (u_i/U)^2 may exceed 1/2 when one weight dominates.
    const double cap = p.from_recipe() ? 1.0 : 0.5;
    if (!(p.delta[i] > 0.0) || !(p.delta[i] <= cap) || (p.from_recipe() && p.delta[i] == 1.0))
      throw InputError("delta[" + std::to_string(i) + "] out of range");
    if (!close_rel(p.beta[i] + 2.0 * p.gamma * p.eta[i], p.zeta, 1e-12))
      throw InputError("beta + 2 gamma eta != zeta at coordinate " + std::to_string(i));
  }
}

}  // namespace

double UnfairParams::lipschitz() const {
  double L = 0.0;
  for (std::size_t i = 0; i < eta.size(); ++i) L = std::max(L, 2.0 * std::log(1.0 / delta[i]) / eta[i]);
  return L;
}

double UnfairParams::eta_dot_delta() const {
  return std::inner_product(eta.begin(), eta.end(), delta.begin(), 0.0);
}

UnfairParams derive_params(std::span<const double> u, double gamma, double C) {
  if (u.size() < 2) throw InputError("unfair star needs at least two coordinates");
  if (!(gamma >= 1.0) || !std::isfinite(gamma)) throw InputError("gamma must be >= 1");
  if (!(C >= 0.0) || !std::isfinite(C)) throw InputError("C must be >= 0");
  UnfairParams p;
  p.u.assign(u.begin(), u.end());
  p.gamma = gamma;
  p.C = C;
  for (double v : u) {
    if (!(v > 0.0) || !std::isfinite(v)) throw InputError("guarantee weights must be positive");
    p.U += v;
  }
  p.zeta = 8.0 * gamma * (std::log(p.U) + C);
  for (double v : u) {
    double beta = 8.0 * gamma * (std::log(v) + C);
    if (beta < 0.0) throw InputError("ln u_i + C < 0 gives a negative unfairness ratio");
    p.beta.push_back(beta);
    p.eta.push_back(4.0 * std::log(p.U / v));
    p.delta.push_back((v / p.U) * (v / p.U));
  }
  validate(p);
  if (!close_rel(p.lipschitz(), 1.0, 1e-12))
    throw InvariantError("recipe parameters do not give L = 1");
  return p;
}

UnfairParams explicit_params(std::vector<double> beta, std::vector<double> eta,
                             std::vector<double> delta, double gamma, double zeta) {
  UnfairParams p;
  p.beta = std::move(beta);
  p.eta = std::move(eta);
  p.delta = std::move(delta);
  p.gamma = gamma;
  p.zeta = zeta;
  validate(p);
  return p;
}

UnfairOutcome run_unfair_dynamics(const WeightedTree& star, const CostPath& path,
                                  const UnfairParams& params, const LeafDistribution& start,
                                  const StepPolicy& policy, std::ostream* trace) {
  validate(params);
  if (params.eta.size() != star.leaf_count())
    throw InputError("unfair parameters have " + std::to_string(params.eta.size()) +
                     " coordinates for " + std::to_string(star.leaf_count()) + " points");
  MirrorDescent engine(star, EntropicRegularizer::star(star, params.eta, params.delta),
                       Dynamics::star, start, policy);
  engine.set_service_weights(params.beta);
  engine.set_trace(trace);
  engine.run(path);
  UnfairOutcome out;
  out.ledger = engine.ledger();
  out.budget = engine.budget();
  out.diagnostics = engine.diagnostics();
  out.final_state.assign(engine.state().begin(), engine.state().end());
  out.unfair_service = out.ledger.unfair_service;
  out.unfair_movement = params.gamma * out.ledger.movement;
  return out;
}

Check check_general_bound(const UnfairOutcome& run, const UnfairParams& params,
                          double opt_service, double opt_movement, double max_weight) {
  const double L = params.lipschitz(), ed = params.eta_dot_delta(), g = params.gamma;
  const double lhs = run.unfair_service + run.unfair_movement;
  const double rhs = (params.zeta + 2.0 * g * ed) * (opt_service + L * opt_movement) +
                     (1.0 + 2.0 * params.zeta * L + 6.0 * g * L * ed) * max_weight;
  return make_check("unfair general bound", "unfair star, general learning rates", lhs, rhs,
                    run.budget.unfair_service + g * run.budget.movement);
}

Check check_recipe_bound(const UnfairOutcome& run, const UnfairParams& params,
                         double opt_service, double opt_movement, double max_weight) {
  if (!params.from_recipe()) throw InputError("recipe bound needs parameters from derive_params");
  const double lhs = run.unfair_service + run.unfair_movement;
  const double rhs = 8.0 * params.gamma * (std::log(params.U) + params.C + 1.0) *
                     (opt_service + opt_movement + 4.0 * max_weight);
  return make_check("unfair competitive bound", "unfair star, guarantee-weight recipe", lhs, rhs,
                    run.budget.unfair_service + params.gamma * run.budget.movement);
}

}  // namespace mts
