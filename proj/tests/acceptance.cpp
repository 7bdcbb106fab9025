// Acceptance suite: one PASS/FAIL line per criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "mts/instances.hpp"
#include "mts/multipliers.hpp"
#include "mts/offline.hpp"
#include "mts/report.hpp"
#include "oracles.hpp"

using mts::CostReport;
using mts::Instance;
using mts::SplitMix64;
using nlohmann::json;

namespace {

// Integration budget allowed in a checked inequality, as a fraction of its
// right-hand side.
constexpr double kBudgetFraction = 0.01;
constexpr double kStarSeconds = 60.0;
constexpr double kTreeSeconds = 120.0;
constexpr double kCouponSeconds = 600.0;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = true;
  std::string detail;
  int failures = 0;

  void fail(const std::string& what) {
    if (failures++ < 3) detail += (detail.empty() ? "" : "; ") + what;
    pass = false;
  }
};

// Worst residuals over every run of criteria 1 to 4.
struct Residuals {
  double mass = 0.0, slackness = 0.0, stationarity = 0.0;
  double min_multiplier = 0.0, min_mu = 0.0, clamp_duration = 0.0;
  long steps = 0;

  void add(const json& integ) {
    mass = std::max(mass, integ["max_mass_error"].get<double>());
    slackness = std::max(slackness, integ["max_complementary_slackness"].get<double>());
    stationarity = std::max(stationarity, integ["max_stationarity"].get<double>());
    min_multiplier = std::min(min_multiplier, integ["min_multiplier"].get<double>());
    min_mu = std::min(min_mu, integ["min_mu"].get<double>());
    clamp_duration += integ["clamp_duration"].get<double>();
    steps += integ["steps"].get<long>();
  }
};

Residuals g_residuals;

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

// The named check must pass, and its integration budget (tol minus the
// absolute floor) must stay within kBudgetFraction of the right-hand side.
void require(Outcome& out, const CostReport& rep, const std::string& name, const std::string& where,
             double* worst_budget = nullptr) {
  for (const mts::Check& c : rep.checks) {
    if (c.name != name) continue;
    if (!c.pass()) out.fail(where + ": " + name + fmt(" lhs %.6g > rhs %.6g", c.lhs, c.rhs));
    const double budget = c.tol - mts::check_tolerance(c.rhs, 0.0, 0.0);
    const double frac = budget / std::max(std::abs(c.rhs), 1e-300);
    if (budget > kBudgetFraction * std::abs(c.rhs))
      out.fail(where + ": " + name + fmt(" budget %.3g of rhs", frac));
    if (worst_budget) *worst_budget = std::max(*worst_budget, std::min(frac, 1.0));
    return;
  }
  out.fail(where + ": no check named '" + name + "'");
}

mts::WeightedTree random_star(SplitMix64& rng, std::size_t n) {
  std::vector<double> w(n);
  for (double& x : w) x = rng.uniform(0.5, 2.0);
  return mts::make_star(w);
}

mts::NodeId random_leaf_id(SplitMix64& rng, const mts::WeightedTree& t) {
  return t.id(t.leaf_node(static_cast<int>(rng.below(t.leaf_count()))));
}

Instance continuous_instance(mts::WeightedTree tree, SplitMix64& rng, std::size_t max_segments,
                             double magnitude, bool with_start) {
  Instance inst{std::move(tree)};
  inst.mode = mts::InstanceMode::continuous;
  inst.segments = mts::gen_random(inst.tree, 1 + rng.below(max_segments), rng.next(), magnitude);
  if (with_start) inst.start = random_leaf_id(rng, inst.tree);
  return inst;
}

Outcome criterion_star() {
  Outcome out;
  SplitMix64 rng(1001);
  const auto t0 = Clock::now();
  double worst = 0.0;
  const std::size_t sizes[] = {2, 4, 8, 16};
  for (int i = 0; i < 200; ++i) {
    Instance inst = continuous_instance(random_star(rng, sizes[i % 4]), rng, 200, 10.0, true);
    CostReport rep = mts::run_star(inst);
    const std::string where = "instance " + std::to_string(i);
    require(out, rep, "star service", where, &worst);
    require(out, rep, "star movement", where, &worst);
    g_residuals.add(rep.diagnostics["integration"]);
  }
  const double secs = seconds_since(t0);
  if (secs > kStarSeconds) out.fail(fmt("runtime %.1f s > %.0f s", secs, kStarSeconds));
  out.detail += (out.detail.empty() ? "" : "; ") +
                fmt("200 instances, worst budget %.2g of rhs, %.1f s", worst, secs);
  return out;
}

Outcome criterion_tree() {
  Outcome out;
  SplitMix64 rng(1002);
  const auto t0 = Clock::now();
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    auto tree = mts::gen_tree(rng, 1 + i % 3, 16);
    Instance inst = continuous_instance(std::move(tree), rng, 100, 10.0, true);
    CostReport rep = mts::run_tree(inst);
    const std::string where = "instance " + std::to_string(i);
    require(out, rep, "tree service", where, &worst);
    require(out, rep, "tree movement", where, &worst);
    g_residuals.add(rep.diagnostics["integration"]);
  }
  const double secs = seconds_since(t0);
  if (secs > kTreeSeconds) out.fail(fmt("runtime %.1f s > %.0f s", secs, kTreeSeconds));
  out.detail += (out.detail.empty() ? "" : "; ") +
                fmt("100 instances, worst budget %.2g of rhs, %.1f s", worst, secs);
  return out;
}

Outcome criterion_unfair() {
  Outcome out;
  SplitMix64 rng(1003);
  double worst = 0.0;
  const double gammas[] = {1.0, 2.0, 4.0};
  for (int i = 0; i < 100; ++i) {
    const std::size_t m = 2 + rng.below(7);
    Instance inst = continuous_instance(random_star(rng, m), rng, 100, 10.0, true);
    std::vector<double> u(m);
    for (double& x : u) x = rng.uniform(1.0, 100.0);
    mts::RunConfig cfg;
    cfg.unfair = {{"u", u}, {"gamma", gammas[i % 3]}, {"C", double((i / 3) % 2)}};
    CostReport rep = mts::run_unfair(inst, cfg);
    require(out, rep, "unfair competitive bound", "recipe " + std::to_string(i), &worst);
    g_residuals.add(rep.diagnostics["integration"]);
  }
  for (int i = 0; i < 100; ++i) {
    const std::size_t m = 2 + rng.below(7);
    Instance inst = continuous_instance(random_star(rng, m), rng, 100, 10.0, true);
    const double gamma = gammas[i % 3], zeta = rng.uniform(1.0, 20.0);
    std::vector<double> beta(m), eta(m), delta(m);
    for (std::size_t k = 0; k < m; ++k) {
      eta[k] = rng.uniform(0.05, 1.0) * zeta / (2.0 * gamma);
      beta[k] = zeta - 2.0 * gamma * eta[k];
      delta[k] = rng.uniform(0.01, 0.5);
    }
    mts::RunConfig cfg;
    cfg.unfair = {{"beta", beta}, {"eta", eta}, {"delta", delta}, {"gamma", gamma}, {"zeta", zeta}};
    CostReport rep = mts::run_unfair(inst, cfg);
    require(out, rep, "unfair general bound", "explicit " + std::to_string(i), &worst);
    g_residuals.add(rep.diagnostics["integration"]);
  }
  out.detail += (out.detail.empty() ? "" : "; ") +
                fmt("100 recipe + 100 explicit, worst budget %.2g of rhs", worst);
  return out;
}

Outcome criterion_hst() {
  Outcome out;
  SplitMix64 rng(1004);
  double worst = 0.0;
  int node_checks = 0;
  const auto t0 = Clock::now();
  for (int i = 0; i < 50; ++i) {
    auto tree = mts::gen_tree(rng, 2 + i % 2, 16, 3, 8.0);
    Instance inst = continuous_instance(std::move(tree), rng, 60, 10.0, true);
    CostReport rep = mts::run_hst(inst);
    const std::string where = "instance " + std::to_string(i);
    require(out, rep, "gluing root bound", where, &worst);
    for (const mts::Check& c : rep.checks) {
      if (c.name.find("unfair comparator") == std::string::npos) continue;
      ++node_checks;
      if (!c.pass()) out.fail(where + ": " + c.name + fmt(" %.6g > %.6g", c.lhs, c.rhs));
    }
    g_residuals.add(rep.diagnostics["integration"]);
  }
  out.detail += (out.detail.empty() ? "" : "; ") +
                fmt("50 instances, %.0f node comparisons, worst budget %.2g of rhs, %.1f s",
                    double(node_checks), worst, seconds_since(t0));
  return out;
}

Outcome criterion_oracle() {
  Outcome out;
  std::mt19937_64 rng(1005);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  int compared = 0;
  for (int trial = 0; trial < 240; ++trial) {
    auto t = trial % 2 ? oracle::random_tree(rng, 1 + trial % 3, 4) : [&] {
      std::vector<double> w(2 + trial % 3, 0.5 + (trial % 5) * 0.3);
      return mts::make_star(w);
    }();
    mts::CostSequence C(1 + trial % 8, std::vector<double>(t.leaf_count()));
    for (auto& row : C)
      for (double& c : row) c = u(rng) < 1.2 ? 0.0 : u(rng);
    for (bool free_start : {false, true}) {
      mts::OfflineOptions opt;
      opt.keep_table = true;
      const int start = static_cast<int>(trial % t.leaf_count());
      if (!free_start) opt.start = t.id(t.leaf_node(start));
      auto r = mts::work_function_dp(t, C, opt);
      const double ref = oracle::exhaustive_opt(t, C, free_start ? -1 : start);
      ++compared;
      if (std::abs(r.opt - ref) > 1e-12 * std::max(1.0, ref))
        out.fail(fmt("trial %.0f: dp %.17g vs enumeration %.17g", trial, r.opt, ref));
      for (const auto& W : r.table)
        for (std::size_t x = 0; x < W.size(); ++x)
          for (std::size_t y = 0; y < W.size(); ++y)
            if (std::abs(W[x] - W[y]) > oracle::path_length(t, int(x), int(y)) + 1e-9)
              out.fail(fmt("trial %.0f: work function not 1-Lipschitz", trial));
    }
  }
  if (compared < 200) out.fail("fewer than 200 comparisons");
  out.detail += (out.detail.empty() ? "" : "; ") + fmt("%.0f DP runs matched enumeration", compared);
  return out;
}

Outcome criterion_kkt() {
  Outcome out;
  const Residuals& r = g_residuals;
  if (r.mass > 1e-9) out.fail(fmt("mass error %.3g", r.mass));
  if (r.slackness > 1e-10) out.fail(fmt("complementary slackness %.3g", r.slackness));
  if (r.stationarity > 1e-9) out.fail(fmt("stationarity %.3g", r.stationarity));
  if (r.min_multiplier < 0.0) out.fail(fmt("negative multiplier %.3g", r.min_multiplier));
  if (r.min_mu < 0.0) out.fail(fmt("negative mass multiplier %.3g", r.min_mu));
  if (r.clamp_duration != 0.0) out.fail(fmt("clamped for %.3g time units", r.clamp_duration));

  // Tree solves along actual trajectories against the dense KKT oracle.
  SplitMix64 rng(1006);
  int compared = 0;
  double worst = 0.0;
  for (int i = 0; i < 30; ++i) {
    auto tree = mts::gen_tree(rng, 1 + i % 3, 8);
    const double n = static_cast<double>(tree.leaf_count());
    auto reg = mts::EntropicRegularizer::multiscale(tree, 2.0 * std::log(n), 1.0 / n);
    mts::MirrorDescent md(tree, reg, mts::Dynamics::tree,
                          mts::start_distribution(tree, random_leaf_id(rng, tree)));
    const auto path = mts::gen_random(tree, 6, rng.next(), 10.0);
    long step = 0;
    for (const auto& seg : path) {
      double remaining = seg.duration;
      while (remaining > 0.0) {
        const auto& sol = md.solve(seg.rates);
        if (step++ % 97 == 0) {
          std::vector<double> q(md.state().begin(), md.state().end());
          auto ref = oracle::dense_kkt(tree, q, seg.rates, reg);
          if (!ref.found) {
            out.fail("dense oracle found no KKT point");
          } else {
            for (std::size_t v = 0; v < tree.node_count(); ++v) {
              double e = std::abs(sol.node_drift[v] - ref.node_drift[v]) / std::max(1.0, std::abs(ref.node_drift[v]));
              worst = std::max(worst, e);
            }
            for (std::size_t l = 0; l < tree.leaf_count(); ++l) {
              double e = std::abs(sol.xi[l] - ref.xi[l]) / std::max(1.0, std::abs(ref.xi[l]));
              worst = std::max(worst, e);
            }
            ++compared;
          }
        }
        double h = std::min({md.policy().step_for(seg.duration), remaining, md.relative_step(), md.event_step()});
        if (remaining - h <= 1e-12 * seg.duration) h = remaining;
        md.apply(h, remaining == seg.duration);
        remaining = h == remaining ? 0.0 : remaining - h;
      }
    }
  }
  if (worst > 1e-9) out.fail(fmt("tree solve differs from dense KKT by %.3g", worst));
  out.detail += (out.detail.empty() ? "" : "; ") +
                fmt("%.0f steps checked, mass %.2g, slackness %.2g", double(r.steps), r.mass, r.slackness) +
                fmt(", stationarity %.2g, %.0f dense comparisons (max diff %.2g)", r.stationarity,
                    double(compared), worst);
  return out;
}

Outcome criterion_growth() {
  Outcome out;
  const auto t0 = Clock::now();
  std::vector<double> means;
  std::string table;
  for (std::size_t n : {4, 16, 64, 256}) {
    const double ln = std::log(double(n));
    double sum = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      Instance inst = mts::gen_coupon_collector(n, 50 * n, seed);
      CostReport rep = mts::run_star(inst);
      const double opt = rep.diagnostics["discrete_opt"].get<double>();
      const double Delta = 1.0;  // uniform star with edges 1/2
      const double ratio = (rep.S + rep.M) / opt;
      const double lo = 0.3 * ln, hi = 1.0 + 9.0 * (1.0 + 1.0 / n) * ln + 20.0 * ln * Delta / opt;
      if (ratio < lo || ratio > hi)
        out.fail(fmt("n=%.0f seed %.0f: ratio %.3f", double(n), double(seed), ratio) + fmt(" outside [%.3f, %.3f]", lo, hi));
      sum += ratio;
    }
    means.push_back(sum / 5.0);
    table += (table.empty() ? "" : ", ") + fmt("n=%.0f %.2f", double(n), means.back());
  }
  for (std::size_t k = 1; k < means.size(); ++k)
    if (means[k] < means[k - 1]) out.fail("mean ratio decreases in n");
  const double secs = seconds_since(t0);
  if (secs > kCouponSeconds) out.fail(fmt("runtime %.1f s > %.0f s", secs, kCouponSeconds));
  out.detail += std::string(out.detail.empty() ? "" : "; ") + "mean ratios " + table + fmt(", %.1f s", secs);
  return out;
}

Outcome criterion_accounting() {
  Outcome out;
  SplitMix64 rng(1008);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    auto tree = mts::gen_tree(rng, 1 + i % 3, 8);
    const std::size_t n = tree.leaf_count();
    mts::CostSequence C(1 + rng.below(20), std::vector<double>(n));
    for (auto& row : C)
      for (double& c : row) c = rng.uniform() < 0.4 ? 0.0 : rng.uniform(0.0, 5.0);
    const mts::NodeId start = random_leaf_id(rng, tree);
    const double nn = static_cast<double>(n);
    auto reg = mts::EntropicRegularizer::multiscale(tree, 2.0 * std::log(nn), 1.0 / nn);
    const auto x0 = mts::start_distribution(tree, start);
    mts::MirrorDescent a(tree, reg, mts::Dynamics::tree, x0), b(tree, reg, mts::Dynamics::tree, x0);
    const auto acc = mts::discretize_online(a, C);
    b.run(mts::water_fill_sequence(C));
    const double disc = acc.total_service + acc.total_movement;
    const double cont = b.ledger().service + b.ledger().movement;
    worst = std::max(worst, std::abs(disc - cont) / std::max(1.0, cont));
    if (disc > cont + 1e-9 * std::max(1.0, cont))
      out.fail(fmt("instance %.0f: discrete %.12g > continuous %.12g", i, disc, cont));
    mts::OfflineOptions opt;
    opt.start = start;
    const double wf = mts::segment_opt(tree, mts::water_fill_sequence(C), opt).opt;
    const double dp = mts::work_function_dp(tree, C, opt).opt;
    if (wf > dp + 1e-12 * std::max(1.0, dp))
      out.fail(fmt("instance %.0f: waterfilled optimum %.12g > discrete %.12g", i, wf, dp));
  }
  out.detail += (out.detail.empty() ? "" : "; ") + fmt("100 instances, max accounting gap %.2g", worst);
  return out;
}

// Fixed panel, run at the default step policy and at half of it.
Outcome criterion_convergence() {
  Outcome out;
  SplitMix64 rng(1009);
  struct Entry {
    mts::Algo algo;
    Instance inst;
    mts::RunConfig cfg;
  };
  std::vector<Entry> panel;
  for (int i = 0; i < 5; ++i)
    panel.push_back({mts::Algo::star, continuous_instance(random_star(rng, 2 + 3 * i), rng, 40, 10.0, true), {}});
  for (int i = 0; i < 5; ++i)
    panel.push_back({mts::Algo::tree, continuous_instance(mts::gen_tree(rng, 1 + i % 3, 12), rng, 40, 10.0, true), {}});
  for (int i = 0; i < 5; ++i) {
    Entry e{mts::Algo::unfair, continuous_instance(random_star(rng, 2 + i), rng, 40, 10.0, true), {}};
    std::vector<double> u(e.inst.tree.leaf_count());
    for (double& x : u) x = rng.uniform(1.0, 100.0);
    e.cfg.unfair = {{"u", u}, {"gamma", 2.0}, {"C", 1.0}};
    panel.push_back(std::move(e));
  }
  for (int i = 0; i < 5; ++i)
    panel.push_back({mts::Algo::hst, continuous_instance(mts::gen_tree(rng, 2, 9, 3, 8.0), rng, 20, 10.0, true), {}});

  double worst = 0.0;
  for (std::size_t k = 0; k < panel.size(); ++k) {
    Entry& e = panel[k];
    CostReport coarse = mts::run_algo(e.algo, e.inst, e.cfg);
    mts::RunConfig half = e.cfg;
    half.policy.step_fraction /= 2.0;
    half.policy.rel_step /= 2.0;
    half.policy.h_max /= 2.0;
    CostReport fine = mts::run_algo(e.algo, e.inst, half);
    double bS, bM;
    if (e.algo == mts::Algo::hst) {
      bS = coarse.diagnostics["service_budget"].get<double>();
      bM = coarse.diagnostics["movement_budget"].get<double>();
    } else {
      bS = coarse.diagnostics["error_budget"]["service"].get<double>();
      bM = coarse.diagnostics["error_budget"]["movement"].get<double>();
    }
    const double dS = std::abs(coarse.S - fine.S), dM = std::abs(coarse.M - fine.M);
    const std::string where = std::string(mts::algo_name(e.algo)) + " panel " + std::to_string(k);
    if (dS > 2.0 * bS) out.fail(where + fmt(": |dS| %.3g > 2 x budget %.3g", dS, bS));
    if (dM > 2.0 * bM) out.fail(where + fmt(": |dM| %.3g > 2 x budget %.3g", dM, bM));
    if (bS > 0.0) worst = std::max(worst, dS / bS);
    if (bM > 0.0) worst = std::max(worst, dM / bM);
  }
  out.detail += (out.detail.empty() ? "" : "; ") +
                fmt("20 instances, worst change %.2f x budget", worst);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  // Optional criterion numbers restrict the run (criterion 6 still needs 1 to 4).
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
  struct Item {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  // Criterion 6 reads the residuals collected by criteria 1 to 4.
  const std::vector<Item> items{
      {1, "star refined guarantees", criterion_star},
      {2, "tree refined guarantees", criterion_tree},
      {3, "unfair star bounds", criterion_unfair},
      {4, "glued HST bounds", criterion_hst},
      {5, "offline oracle exactness", criterion_oracle},
      {6, "KKT and structure invariants", criterion_kkt},
      {7, "coupon-collector growth", criterion_growth},
      {8, "discrete accounting", criterion_accounting},
      {9, "step-halving convergence", criterion_convergence},
  };
  int failed = 0;
  for (const Item& item : items) {
    if (!only.empty() && std::find(only.begin(), only.end(), item.id) == only.end()) continue;
    Outcome o;
    try {
      o = item.run();
    } catch (const std::exception& e) {
      o.fail(std::string("exception: ") + e.what());
    }
    std::printf("criterion %d %-30s %s  %s\n", item.id, item.name, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
