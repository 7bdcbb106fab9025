#include "mts/report.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "mts/error.hpp"

namespace mts {

using nlohmann::json;
using nlohmann::ordered_json;

Algo parse_algo(const std::string& name) {
  if (name == "star") return Algo::star;
  if (name == "tree") return Algo::tree;
  if (name == "unfair") return Algo::unfair;
  if (name == "hst") return Algo::hst;
  throw InputError("unknown algorithm '" + name + "' (expected star, tree, unfair or hst)");
}

const char* algo_name(Algo a) {
  switch (a) {
    case Algo::star: return "star";
    case Algo::tree: return "tree";
    case Algo::unfair: return "unfair";
    case Algo::hst: return "hst";
  }
  return "?";
}

bool CostReport::pass() const { return first_failure() == nullptr; }

const Check* CostReport::first_failure() const {
  for (const Check& c : checks)
    if (!c.pass()) return &c;
  return nullptr;
}

ordered_json CostReport::to_json(bool timing) const {
  ordered_json j;
  j["schema"] = kReportSchema;
  j["algo"] = algo;
  j["params"] = params;
  j["instance_digest"] = instance_digest;
  j["costs"] = {{"S", S}, {"M", M}, {"S_star", S_star}, {"M_star", M_star}, {"OPT", OPT}};
  j["bound"] = bound;
  ordered_json cs = ordered_json::array();
  for (const Check& c : checks)
    cs.push_back({{"name", c.name},
                  {"paper_ref", c.paper_ref},
                  {"lhs", c.lhs},
                  {"rhs", c.rhs},
                  {"tol", c.tol},
                  {"slack", c.slack()},
                  {"pass", c.pass()}});
  j["checks"] = std::move(cs);
  j["pass"] = pass();
  j["diagnostics"] = diagnostics;
  if (timing) j["wall_time_s"] = wall_time;
  return j;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

ordered_json policy_json(const StepPolicy& p) {
  return {{"step_fraction", p.step_fraction},
          {"h_max", p.h_max},
          {"rel_step", p.rel_step},
          {"snap_time", p.snap_time},
          {"budget_constant", p.budget_constant}};
}

ordered_json diagnostics_json(const Diagnostics& d) {
  return {{"steps", d.steps},
          {"events", d.events},
          {"clamp_events", d.clamp_events},
          {"clamp_duration", d.clamp_duration},
          {"max_mass_error", d.max_mass_error},
          {"min_mass", d.min_mass},
          {"max_mass_balance", d.max_mass_balance},
          {"max_complementary_slackness", d.max_complementary_slackness},
          {"max_stationarity", d.max_stationarity},
          {"min_multiplier", d.min_multiplier},
          {"min_reduced_cost", d.min_reduced_cost},
          {"min_mu", d.min_mu},
          {"delta_floored", d.delta_floored}};
}

ordered_json budget_json(const ErrorBudget& b) {
  return {{"service", b.service},
          {"movement", b.movement},
          {"unfair_service", b.unfair_service},
          {"reduced_shift", b.reduced_shift},
          {"reduced_total", b.reduced_total},
          {"reduced_eta_shift", b.reduced_eta_shift}};
}

double max_leaf_weight(const WeightedTree& tree) {
  double m = 0.0;
  for (std::size_t l = 0; l < tree.leaf_count(); ++l)
    m = std::max(m, tree.weight(tree.leaf_node(static_cast<int>(l))));
  return m;
}

OfflineOptions offline_options(const RunConfig& cfg, std::optional<NodeId> start) {
  OfflineOptions o;
  o.start = start;
  o.max_cells = cfg.max_cells;
  return o;
}

NodeId online_start(const Instance& inst) {
  return inst.start ? *inst.start : inst.tree.id(inst.tree.leaf_node(0));
}

// Leaf numbering of `to` may differ from `from` after padding; costs follow ids.
Instance remap_to(const Instance& inst, const WeightedTree& to) {
  Instance out{to};
  out.mode = inst.mode;
  out.start = inst.start;
  out.seed = inst.seed;
  const std::size_t n = to.leaf_count();
  std::vector<int> src(n);
  for (std::size_t l = 0; l < n; ++l) src[l] = inst.tree.leaf_of(to.id(to.leaf_node(static_cast<int>(l))));
  auto remap = [&](const std::vector<double>& v) {
    std::vector<double> r(n);
    for (std::size_t l = 0; l < n; ++l) r[l] = v[src[l]];
    return r;
  };
  for (const auto& c : inst.costs) out.costs.push_back(remap(c));
  for (const auto& s : inst.segments) out.segments.push_back({s.duration, remap(s.rates)});
  return out;
}

// Shared pipeline of the fair algorithms: run, comparators, discrete extras.
struct FairRun {
  Ledger ledger;
  ErrorBudget budget;
  Diagnostics diag;
  double psi_end = 0.0;
  std::vector<double> start_state;
  OfflineResult comparator;  // same start
  OfflineResult free;        // free start
  std::optional<OfflineResult> discrete;
  std::optional<DiscreteAccount> account;
};

FairRun fair_run(const Instance& inst, const EntropicRegularizer& reg, Dynamics mode,
                 const RunConfig& cfg) {
  FairRun r;
  LeafDistribution x0 = start_distribution(inst.tree, inst.start);
  r.start_state.assign(x0.masses().begin(), x0.masses().end());
  MirrorDescent engine(inst.tree, reg, mode, x0, cfg.policy);
  engine.set_trace(cfg.trace);
  const CostPath path = inst.path();
  if (inst.mode == InstanceMode::discrete)
    r.account = discretize_online(engine, inst.costs);
  else
    engine.run(path);
  r.ledger = engine.ledger();
  r.budget = engine.budget();
  r.diag = engine.diagnostics();
  r.psi_end = engine.psi();
  r.comparator = segment_opt(inst.tree, path, offline_options(cfg, online_start(inst)));
  r.free = segment_opt(inst.tree, path, offline_options(cfg, std::nullopt));
  if (inst.mode == InstanceMode::discrete)
    r.discrete = work_function_dp(inst.tree, inst.costs, offline_options(cfg, online_start(inst)));
  return r;
}

void fill_costs(CostReport& rep, const FairRun& r) {
  rep.S = r.ledger.service;
  rep.M = r.ledger.movement;
  rep.S_star = r.comparator.service;
  rep.M_star = r.comparator.movement;
  rep.OPT = r.comparator.opt;
}

// Regret against the best comparator with a free start:
// S <= S* + Lip M* + Lip ||y(0) - x(0)||.
Check regret_check(const WeightedTree& tree, const FairRun& r, double lip) {
  std::vector<double> y0(tree.leaf_count(), 0.0);
  if (!r.free.path.empty()) y0[r.free.start_leaf] = 1.0;
  else y0 = r.start_state;
  const double gap = w1_distance(tree, r.start_state, y0);
  return make_check("comparator regret", "mirror-descent regret against a comparator path",
                    r.ledger.service, r.free.service + lip * r.free.movement + lip * gap,
                    r.budget.service);
}

void discrete_checks(CostReport& rep, const FairRun& r) {
  if (!r.discrete) return;
  rep.diagnostics["discrete_opt"] = r.discrete->opt;
  rep.diagnostics["discrete_S_star"] = r.discrete->service;
  rep.diagnostics["discrete_M_star"] = r.discrete->movement;
  rep.checks.push_back(make_check("waterfilled comparator", "continuous offline cost at most discrete",
                                  r.comparator.opt, r.discrete->opt));
  const double cont = r.ledger.service + r.ledger.movement;
  const double disc = r.account->total_service + r.account->total_movement;
  rep.checks.push_back(make_check("discrete accounting", "discrete update cost at most continuous",
                                  disc, cont));
}

void finish(CostReport& rep, const Instance& inst, const FairRun& r, Clock::time_point t0) {
  rep.instance_digest = instance_digest(inst);
  rep.diagnostics["integration"] = diagnostics_json(r.diag);
  rep.diagnostics["error_budget"] = budget_json(r.budget);
  rep.diagnostics["reduced_total"] = r.ledger.reduced_total;
  rep.diagnostics["reduced_shift"] = r.ledger.reduced_shift;
  rep.diagnostics["free_start_opt"] = r.free.opt;
  rep.wall_time = seconds_since(t0);
}

double positive(std::optional<double> v, double fallback, const char* what) {
  double x = v.value_or(fallback);
  if (!(x > 0.0) || !std::isfinite(x)) throw InputError(std::string(what) + " must be positive");
  return x;
}

}  // namespace

CostReport run_star(const Instance& inst, const RunConfig& cfg) {
  const auto t0 = Clock::now();
  const WeightedTree& tree = inst.tree;
  if (tree.max_depth() != 1) throw InputError("the star algorithm needs a depth-1 tree");
  const double n = static_cast<double>(tree.leaf_count());
  const double eta = positive(cfg.eta, n > 1 ? 4.0 * std::log(n) : 1.0, "eta");
  const double delta = positive(cfg.delta, 1.0 / (n * n), "delta");
  if (delta > 1.0) throw InputError("delta must be at most 1");
  const EntropicRegularizer reg = EntropicRegularizer::star(tree, eta, delta);
  const FairRun r = fair_run(inst, reg, Dynamics::star, cfg);

  CostReport rep;
  rep.algo = "star";
  rep.params = {{"eta", eta}, {"delta", delta}, {"step_policy", policy_json(cfg.policy)}};
  fill_costs(rep, r);
  const double L = 2.0 * std::log(1.0 / delta) / eta;
  const double Delta = max_leaf_weight(tree);
  const double W = [&] {
    double s = 0.0;
    for (std::size_t l = 0; l < tree.leaf_count(); ++l) s += tree.weight(tree.leaf_node(int(l)));
    return s;
  }();
  const ErrorBudget& b = r.budget;
  const double S = r.ledger.service, M = r.ledger.movement;

  const double s_rhs = rep.S_star + L * rep.M_star;
  rep.checks.push_back(make_check("star service", "refined star guarantee, service bound", S, s_rhs,
                                  b.service));
  const double m_coef = 2.0 * eta * (1.0 + delta * n);
  const double m_rhs = m_coef * S + (1.0 + 8.0 * delta * n * std::log(1.0 / delta)) * Delta;
  rep.checks.push_back(make_check("star movement", "refined star guarantee, movement bound", M, m_rhs,
                                  b.movement, m_coef * b.service));
  rep.checks.push_back(regret_check(tree, r, L));
  // sup over the simplex of ||x - 1/n|| is attained at a vertex.
  double spread = 0.0;
  for (std::size_t l = 0; l < tree.leaf_count(); ++l) {
    double w = tree.weight(tree.leaf_node(int(l)));
    spread = std::max(spread, w * (1.0 - 1.0 / n) + (W - w) / n);
  }
  rep.checks.push_back(make_check("star reduced cost", "reduced-cost integral in a feasible direction",
                                  r.ledger.reduced_total / n, S + L * spread,
                                  b.reduced_total / n, b.service));
  const double d_rhs = 2.0 * eta * S + 2.0 * eta * delta * r.ledger.reduced_total + Delta;
  rep.checks.push_back(make_check("star movement decomposition", "star movement via negative part",
                                  M, d_rhs, b.movement,
                                  2.0 * eta * b.service + 2.0 * eta * delta * b.reduced_total));
  rep.checks.push_back(make_check("star normal force sign", "mass multiplier is nonnegative",
                                  -r.diag.min_mu, 0.0));
  discrete_checks(rep, r);
  rep.bound = s_rhs + m_rhs;
  rep.diagnostics["Delta"] = Delta;
  rep.diagnostics["lipschitz"] = L;
  finish(rep, inst, r, t0);
  return rep;
}

CostReport run_tree(const Instance& input, const RunConfig& cfg) {
  const auto t0 = Clock::now();
  const bool padded = !input.tree.uniform_leaf_depth();
  const Instance inst = padded ? remap_to(input, pad_to_uniform_depth(input.tree)) : input;
  const WeightedTree& tree = inst.tree;
  const double n = static_cast<double>(tree.leaf_count());
  const double eta = positive(cfg.eta, n > 1 ? 2.0 * std::log(n) : 1.0, "eta");
  const double delta = positive(cfg.delta, 1.0 / n, "delta");
  if (delta > 1.0 / n) throw InputError("leaf delta must be at most 1/n");
  const EntropicRegularizer reg = EntropicRegularizer::multiscale(tree, eta, delta);
  const FairRun r = fair_run(inst, reg, Dynamics::tree, cfg);

  CostReport rep;
  rep.algo = "tree";
  rep.params = {{"eta", eta}, {"leaf_delta", delta}, {"step_policy", policy_json(cfg.policy)}};
  fill_costs(rep, r);
  const double D = tree.max_depth();
  const double diam = tree.diameter();
  const double L = reg.lipschitz(tree);
  const double log_n = std::log(1.0 / reg.min_leaf_delta(tree));
  const ErrorBudget& b = r.budget;
  const double S = r.ledger.service, M = r.ledger.movement;

  const double s_rhs = rep.S_star + (2.0 * log_n / eta) * rep.M_star;
  rep.checks.push_back(make_check("tree service", "refined tree guarantee, service bound", S, s_rhs,
                                  b.service));
  const double m_rhs = 4.0 * eta * D * S + (1.0 + 2.0 * D + 8.0 * D * log_n) * diam;
  rep.checks.push_back(make_check("tree movement", "refined tree guarantee, movement bound", M, m_rhs,
                                  b.movement, 4.0 * eta * D * b.service));
  rep.checks.push_back(regret_check(tree, r, L));
  const double psi_gain = r.psi_end - r.ledger.psi_start;
  const double d_rhs = 2.0 * psi_gain + 2.0 * eta * D * S + 2.0 * eta * D * r.ledger.reduced_shift + diam;
  rep.checks.push_back(make_check("tree movement decomposition", "tree movement via weighted depth potential",
                                  M, d_rhs, b.movement,
                                  2.0 * eta * D * (b.service + b.reduced_shift)));
  rep.checks.push_back(make_check("tree reduced cost", "reduced-cost integral along the leaf shifts",
                                  r.ledger.reduced_shift, S + (4.0 * log_n / eta) * diam,
                                  b.reduced_shift, b.service));
  discrete_checks(rep, r);
  rep.bound = s_rhs + m_rhs;
  rep.diagnostics["padded"] = padded;
  rep.diagnostics["depth"] = D;
  rep.diagnostics["diameter"] = diam;
  rep.diagnostics["lipschitz"] = L;
  rep.diagnostics["psi_gain"] = psi_gain;
  finish(rep, inst, r, t0);
  return rep;
}

UnfairParams unfair_params_from_json(const json& j, std::size_t n) {
  auto list = [&](const char* key) {
    if (!j[key].is_array()) throw InputError(std::string("unfair parameter '") + key + "' must be an array");
    std::vector<double> v;
    for (const json& x : j[key]) {
      if (!x.is_number()) throw InputError(std::string("unfair parameter '") + key + "' must hold numbers");
      v.push_back(x.get<double>());
    }
    if (v.size() != n)
      throw InputError(std::string("unfair parameter '") + key + "' needs " + std::to_string(n) + " entries");
    return v;
  };
  auto scalar = [&](const char* key, double fallback) {
    if (!j.is_object() || !j.contains(key)) return fallback;
    if (!j[key].is_number()) throw InputError(std::string("unfair parameter '") + key + "' must be a number");
    return j[key].get<double>();
  };
  if (j.is_null() || (j.is_object() && !j.contains("u") && !j.contains("beta"))) {
    std::vector<double> u(n, 1.0);
    return derive_params(u, scalar("gamma", 1.0), scalar("C", 0.0));
  }
  if (j.contains("u")) return derive_params(list("u"), scalar("gamma", 1.0), scalar("C", 0.0));
  if (!j.contains("eta") || !j.contains("delta") || !j.contains("zeta"))
    throw InputError("explicit unfair parameters need beta, eta, delta and zeta");
  return explicit_params(list("beta"), list("eta"), list("delta"), scalar("gamma", 1.0), scalar("zeta", 0.0));
}

CostReport run_unfair(const Instance& inst, const RunConfig& cfg) {
  const auto t0 = Clock::now();
  const WeightedTree& tree = inst.tree;
  if (tree.max_depth() != 1) throw InputError("the unfair algorithm needs a depth-1 tree");
  const UnfairParams p = unfair_params_from_json(cfg.unfair, tree.leaf_count());
  const CostPath path = inst.path();
  const UnfairOutcome out = run_unfair_dynamics(tree, path, p, start_distribution(tree, inst.start),
                                                cfg.policy, cfg.trace);
  const OfflineResult free = segment_opt(tree, path, offline_options(cfg, std::nullopt));

  CostReport rep;
  rep.algo = "unfair";
  rep.params = {{"beta", p.beta}, {"eta", p.eta}, {"delta", p.delta}, {"gamma", p.gamma},
                {"zeta", p.zeta}};
  if (p.from_recipe()) {
    rep.params["u"] = p.u;
    rep.params["C"] = p.C;
    rep.params["U"] = p.U;
  }
  rep.params["step_policy"] = policy_json(cfg.policy);
  rep.S = out.ledger.service;
  rep.M = out.ledger.movement;
  rep.S_star = free.service;
  rep.M_star = free.movement;
  rep.OPT = free.opt;

  const double Delta = max_leaf_weight(tree);
  const double L = p.lipschitz(), ed = p.eta_dot_delta(), g = p.gamma;
  const ErrorBudget& b = out.budget;
  if (p.from_recipe()) {
    rep.checks.push_back(check_recipe_bound(out, p, free.service, free.movement, Delta));
    rep.bound = rep.checks.back().rhs;
  }
  rep.checks.push_back(check_general_bound(out, p, free.service, free.movement, Delta));
  if (!p.from_recipe()) rep.bound = rep.checks.back().rhs;
  rep.checks.push_back(make_check("unfair fair-service regret", "fair service against a free-start comparator",
                                  out.ledger.service, free.service + L * free.movement + 2.0 * L * Delta,
                                  b.service));
  rep.checks.push_back(make_check("unfair shift integral", "reduced-cost integral along eta * delta",
                                  2.0 * g * out.ledger.reduced_eta_shift,
                                  2.0 * g * ed * (out.ledger.service + L * Delta),
                                  2.0 * g * b.reduced_eta_shift, 2.0 * g * ed * b.service));
  // gamma * Delta: the endpoint term of the movement identity scales with gamma.
  rep.checks.push_back(make_check("unfair cost decomposition", "unfair cost via fair service",
                                  out.unfair_service + out.unfair_movement,
                                  p.zeta * out.ledger.service + 2.0 * g * out.ledger.reduced_eta_shift + g * Delta,
                                  b.unfair_service + g * b.movement,
                                  p.zeta * b.service + 2.0 * g * b.reduced_eta_shift));
  rep.checks.push_back(make_check("unfair normal force sign", "mass multiplier is nonnegative",
                                  -out.diagnostics.min_mu, 0.0));

  rep.instance_digest = instance_digest(inst);
  rep.diagnostics["unfair_service"] = out.unfair_service;
  rep.diagnostics["unfair_movement"] = out.unfair_movement;
  rep.diagnostics["lipschitz"] = L;
  rep.diagnostics["eta_dot_delta"] = ed;
  rep.diagnostics["Delta"] = Delta;
  rep.diagnostics["integration"] = diagnostics_json(out.diagnostics);
  rep.diagnostics["error_budget"] = budget_json(b);
  rep.wall_time = seconds_since(t0);
  return rep;
}

CostReport run_hst(const Instance& input, const RunConfig& cfg) {
  const auto t0 = Clock::now();
  Instance inst = input;
  std::optional<QuantizedTree> q;
  if (cfg.quantize) {
    q = quantize_to_8hst(input.tree);
    inst = remap_to(input, q->tree);
  }
  const WeightedTree& tree = inst.tree;
  const CostPath path = inst.path();
  HstCombiner comb(tree, cfg.tau, cfg.C0, inst.start, cfg.policy, true);
  comb.set_trace(cfg.trace);
  comb.run(path);
  const OfflineResult free = segment_opt(tree, path, offline_options(cfg, std::nullopt));
  const CombinerLedger& led = comb.ledger();

  CostReport rep;
  rep.algo = "hst";
  rep.params = {{"tau", cfg.tau}, {"C0", cfg.C0}, {"quantized", cfg.quantize},
                {"step_policy", policy_json(cfg.policy)}};
  rep.S = led.service;
  rep.M = led.movement;
  rep.S_star = free.service;
  rep.M_star = free.movement;
  rep.OPT = free.opt;
  const double diam = tree.diameter();
  const double kappa = comb.root_kappa();
  rep.checks.push_back(make_check("gluing root bound", "glued HST algorithm, competitive bound",
                                  led.service + led.movement, kappa * (free.opt + 4.0 * diam),
                                  led.service_budget + led.movement_budget));
  rep.bound = rep.checks.back().rhs;

  const double g = comb.gamma();
  ordered_json nodes = ordered_json::array();
  double root_unfair = led.service + led.movement;
  for (const CombinerNode& node : comb.nodes()) {
    const int u = node.node;
    const WeightedTree star = node.engine->tree();
    const OfflineResult unfair_opt = segment_opt(star, node.cu_path, offline_options(cfg, std::nullopt));
    // The subtree instance: the global rates restricted to the leaves below u.
    const WeightedTree sub = tree.subtree(u);
    CostPath sub_path;
    sub_path.reserve(path.size());
    for (const CostSegment& s : path)
      sub_path.push_back({s.duration, std::vector<double>(s.rates.begin() + tree.leaf_begin(u),
                                                          s.rates.begin() + tree.leaf_end(u))});
    const OfflineResult sub_opt = segment_opt(sub, sub_path, offline_options(cfg, std::nullopt));

    const Ledger& nl = node.engine->ledger();
    const ErrorBudget& nb = node.engine->budget();
    const double Su = nl.unfair_service, Mu = g * nl.movement;
    const double Delta = *std::max_element(node.star_weights.begin(), node.star_weights.end());
    const std::string tag = "node " + std::to_string(tree.id(u)) + ": ";
    Check bound = make_check(
        tag + "unfair competitive bound", "unfair star, guarantee-weight recipe", Su + Mu,
        8.0 * g * (std::log(node.params.U) + node.params.C + 1.0) *
            (unfair_opt.service + unfair_opt.movement + 4.0 * Delta),
        nb.unfair_service + g * nb.movement);
    Check lemma = make_check(tag + "unfair comparator", "unfair comparator at most subtree optimum",
                             unfair_opt.opt, sub_opt.opt);
    if (u == 0) root_unfair = Su + Mu;
    nodes.push_back({{"id", tree.id(u)},
                     {"U", node.params.U},
                     {"beta", node.params.beta},
                     {"zeta", node.params.zeta},
                     {"kappa", comb.guarantees().kappa[u]},
                     {"S_u", Su},
                     {"M_u", Mu},
                     {"unfair_opt", unfair_opt.opt},
                     {"subtree_opt", sub_opt.opt},
                     {"bound_slack", bound.slack()},
                     {"comparator_slack", lemma.slack()}});
    rep.checks.push_back(std::move(bound));
    rep.checks.push_back(std::move(lemma));
  }

  rep.instance_digest = instance_digest(inst);
  rep.diagnostics["integration"] = diagnostics_json(comb.diagnostics());
  rep.diagnostics["service_budget"] = led.service_budget;
  rep.diagnostics["movement_budget"] = led.movement_budget;
  rep.diagnostics["root_kappa"] = kappa;
  rep.diagnostics["diameter"] = diam;
  // Composed cost against the root star's unfair cost; the difference is
  // the within-subtree landing cost of mass moved between children.
  rep.diagnostics["root_unfair_cost"] = root_unfair;
  rep.diagnostics["landing_excess"] = led.service + led.movement - root_unfair;
  if (q) rep.diagnostics["quantize_max_distortion"] = q->max_distortion;
  rep.diagnostics["nodes"] = std::move(nodes);
  rep.wall_time = seconds_since(t0);
  return rep;
}

CostReport run_algo(Algo algo, const Instance& inst, const RunConfig& cfg) {
  switch (algo) {
    case Algo::star: return run_star(inst, cfg);
    case Algo::tree: return run_tree(inst, cfg);
    case Algo::unfair: return run_unfair(inst, cfg);
    case Algo::hst: return run_hst(inst, cfg);
  }
  throw InputError("unknown algorithm");
}

RunConfig config_from_json(const json& j, Algo algo) {
  RunConfig cfg;
  if (j.is_null()) return cfg;
  if (!j.is_object()) throw InputError("params file must hold a JSON object");
  auto num = [&](const std::string& key) {
    if (!j[key].is_number()) throw InputError("params field '" + key + "' must be a number");
    return j[key].get<double>();
  };
  json unfair = json::object();
  for (const auto& [key, value] : j.items()) {
    if (key == "step_fraction") cfg.policy.step_fraction = num(key);
    else if (key == "h_max") cfg.policy.h_max = num(key);
    else if (key == "snap_time") cfg.policy.snap_time = num(key);
    else if (key == "rel_step") cfg.policy.rel_step = num(key);
    else if (key == "budget_constant") cfg.policy.budget_constant = num(key);
    else if (algo == Algo::unfair &&
             (key == "u" || key == "gamma" || key == "C" || key == "beta" || key == "eta" ||
              key == "delta" || key == "zeta"))
      unfair[key] = value;
    else if ((algo == Algo::star || algo == Algo::tree) && key == "eta") cfg.eta = num(key);
    else if ((algo == Algo::star || algo == Algo::tree) && key == "delta") cfg.delta = num(key);
    else if (algo == Algo::hst && key == "tau") cfg.tau = num(key);
    else if (algo == Algo::hst && key == "C0") cfg.C0 = num(key);
    else if (algo == Algo::hst && key == "quantize") {
      if (!value.is_boolean()) throw InputError("params field 'quantize' must be a boolean");
      cfg.quantize = value.get<bool>();
    } else {
      throw InputError("params field '" + key + "' is not understood by the " +
                       std::string(algo_name(algo)) + " algorithm");
    }
  }
  if (algo == Algo::unfair) cfg.unfair = unfair;
  if (!(cfg.policy.step_fraction > 0.0) || cfg.policy.h_max < 0.0 || !(cfg.policy.budget_constant >= 0.0))
    throw InputError("invalid step policy in params");
  return cfg;
}

}  // namespace mts
