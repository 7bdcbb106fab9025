#include "doctest.h"

#include <cmath>
#include <random>
#include <sstream>

#include "mts/error.hpp"
#include "mts/instances.hpp"
#include "mts/integrator.hpp"
#include "oracles.hpp"

using mts::Dynamics;
using mts::EntropicRegularizer;
using mts::LeafDistribution;
using mts::MirrorDescent;

namespace {

// x1' = -s1 s2 / (s1 + s2) on the unit two-point star with c = (1, 0), by
// classical RK4 until x1 reaches zero. Returns (time of arrival, int x1 dt).
std::pair<double, double> two_point_reference(double eta, double delta, double x1, double T) {
  auto f = [&](double x) {
    double s1 = eta * (x + delta), s2 = eta * (1.0 - x + delta);
    return -s1 * s2 / (s1 + s2);
  };
  double t = 0.0, S = 0.0;
  const double h = 1e-5;
  while (t < T) {
    // State (x, S) with S' = x.
    double k1 = f(x1), k2 = f(x1 + 0.5 * h * k1), k3 = f(x1 + 0.5 * h * k2), k4 = f(x1 + h * k3);
    double next = x1 + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    if (next <= 0.0) {
      double frac = x1 / (x1 - next);
      return {t + frac * h, S + 0.5 * x1 * frac * h};
    }
    S += h / 6.0 * (x1 + 2 * (x1 + 0.5 * h * k1) + 2 * (x1 + 0.5 * h * k2) + (x1 + h * k3));
    x1 = next;
    t += h;
  }
  return {T, S};
}

}  // namespace

TEST_CASE("integrator: zero cost leaves the state unchanged") {
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 20; ++trial) {
    auto t = oracle::random_tree(rng, 1 + trial % 3, 8);
    std::vector<double> p(t.leaf_count());
    for (double& m : p) m = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    double total = 0.0;
    for (double m : p) total += m;
    for (double& m : p) m /= total;
    LeafDistribution x0(p);
    const double n = static_cast<double>(t.leaf_count());
    MirrorDescent md(t, EntropicRegularizer::multiscale(t, 2.0 * std::log(n), 1.0 / n), Dynamics::tree, x0);
    md.advance({3.0, std::vector<double>(t.leaf_count(), 0.0)});
    CHECK(md.ledger().service == 0.0);
    CHECK(md.ledger().movement == 0.0);
    CHECK(md.diagnostics().steps == 1);
    for (std::size_t l = 0; l < p.size(); ++l) CHECK(md.state()[l] == doctest::Approx(x0[l]).epsilon(1e-15));
  }
}

TEST_CASE("integrator: two-point star against an RK4 reference") {
  std::vector<double> w{1.0, 1.0};
  auto t = mts::make_star(w);
  const double eta = 4.0 * std::log(2.0), delta = 0.25;
  mts::StepPolicy pol;
  pol.h_max = 5e-4;
  MirrorDescent md(t, EntropicRegularizer::star(t, eta, delta), Dynamics::star, LeafDistribution::uniform(2),
                   pol);
  md.advance({5.0, {1.0, 0.0}});
  auto [arrival, S_ref] = two_point_reference(eta, delta, 0.5, 5.0);
  // The same engine at a hundredth of the step.
  pol.h_max = 5e-6;
  MirrorDescent fine(t, EntropicRegularizer::star(t, eta, delta), Dynamics::star, LeafDistribution::uniform(2),
                     pol);
  fine.advance({5.0, {1.0, 0.0}});
  CHECK(std::abs(md.ledger().service - fine.ledger().service) <= 1e-3 * fine.ledger().service);
  CHECK(std::abs(fine.ledger().service - S_ref) <= 1e-5 * S_ref);
  CHECK(arrival < 5.0);
  CHECK(md.state()[0] == 0.0);
  CHECK(md.state()[1] == 1.0);
  CHECK(std::abs(md.ledger().service - S_ref) <= 1e-3 * S_ref);
  CHECK(md.ledger().movement == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(md.ledger().movement <= 2.0 * 1.0);
  CHECK(md.diagnostics().events >= 1);
}

TEST_CASE("integrator: halving the step halves the error") {
  std::vector<double> w{1.0, 1.0};
  auto t = mts::make_star(w);
  const double eta = 4.0 * std::log(2.0), delta = 0.25;
  const double S_ref = two_point_reference(eta, delta, 0.5, 5.0).second;
  double err[2];
  for (int k = 0; k < 2; ++k) {
    mts::StepPolicy pol;
    pol.rel_step = 0.0;
    pol.step_fraction = k == 0 ? 2e-3 : 1e-3;
    MirrorDescent md(t, EntropicRegularizer::star(t, eta, delta), Dynamics::star, LeafDistribution::uniform(2),
                     pol);
    md.advance({5.0, {1.0, 0.0}});
    err[k] = std::abs(md.ledger().service - S_ref);
    // The declared budget covers the actual error.
    CHECK(err[k] <= md.budget().service);
  }
  CHECK(err[0] / err[1] == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("integrator: single point pays the full service") {
  std::vector<double> w{2.0};
  auto t = mts::make_star(w);
  MirrorDescent md(t, EntropicRegularizer::star(t, 1.0, 0.5), Dynamics::star, LeafDistribution::uniform(1));
  md.advance({2.5, {3.0}});
  CHECK(md.ledger().service == doctest::Approx(7.5).epsilon(1e-15));
  CHECK(md.ledger().movement == 0.0);
}

TEST_CASE("integrator: a costly empty coordinate stays empty") {
  std::vector<double> w{1.0, 1.0, 1.0};
  auto t = mts::make_star(w);
  MirrorDescent md(t, EntropicRegularizer::star(t, 4.0 * std::log(3.0), 1.0 / 9.0), Dynamics::star,
                   LeafDistribution::point_mass(3, 0));
  std::vector<double> c{0.0, 1.0, 1.0};
  const auto& sol = md.solve(c);
  CHECK(sol.xi[1] > 0.0);
  CHECK(sol.xi[2] > 0.0);
  md.advance({4.0, c});
  CHECK(md.state()[0] == 1.0);
  CHECK(md.state()[1] == 0.0);
  CHECK(md.state()[2] == 0.0);
  CHECK(md.ledger().movement == 0.0);
}

TEST_CASE("integrator: residuals and events on random runs") {
  std::mt19937_64 rng(103);
  for (int trial = 0; trial < 30; ++trial) {
    auto t = oracle::random_tree(rng, 1 + trial % 3, 8);
    const double n = static_cast<double>(t.leaf_count());
    MirrorDescent md(t, EntropicRegularizer::multiscale(t, 2.0 * std::log(n), 1.0 / n), Dynamics::tree,
                     LeafDistribution::point_mass(t.leaf_count(), 0));
    md.run(mts::gen_random(t, 8, 1000 + trial, 10.0));
    const auto& d = md.diagnostics();
    CHECK(d.max_mass_error <= 1e-9);
    CHECK(d.max_complementary_slackness <= 1e-10);
    CHECK(d.max_stationarity <= 1e-9);
    CHECK(d.min_multiplier >= -1e-12);
    CHECK(d.clamp_duration == 0.0);
    double total = 0.0;
    for (double m : md.state()) {
      CHECK(m >= 0.0);
      total += m;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("integrator: tree mode on a depth-1 tree follows star mode") {
  std::mt19937_64 rng(107);
  for (int trial = 0; trial < 10; ++trial) {
    auto t = oracle::random_tree(rng, 1, 6);
    const double n = static_cast<double>(t.leaf_count());
    const double eta = 2.0 * std::log(n), delta = 1.0 / n;
    auto x0 = LeafDistribution::point_mass(t.leaf_count(), 0);
    MirrorDescent a(t, EntropicRegularizer::star(t, eta, delta), Dynamics::star, x0);
    MirrorDescent b(t, EntropicRegularizer::multiscale(t, eta, delta), Dynamics::tree, x0);
    auto path = mts::gen_random(t, 5, 2000 + trial, 5.0);
    a.run(path);
    b.run(path);
    for (std::size_t l = 0; l < t.leaf_count(); ++l) CHECK(a.state()[l] == doctest::Approx(b.state()[l]).epsilon(1e-9));
    CHECK(a.ledger().service == doctest::Approx(b.ledger().service).epsilon(1e-9));
    CHECK(a.ledger().movement == doctest::Approx(b.ledger().movement).epsilon(1e-9));
  }
}

TEST_CASE("integrator: trace rows") {
  std::vector<double> w{1.0, 1.0};
  auto t = mts::make_star(w);
  std::ostringstream out;
  MirrorDescent md(t, EntropicRegularizer::star(t, 2.0, 0.25), Dynamics::star, LeafDistribution::uniform(2));
  md.set_trace(&out);
  md.advance({1.0, {1.0, 0.0}});
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "t,p1,p2,mu,max_lambda_hat,max_xi,S,M");
  long rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    CHECK(std::count(line.begin(), line.end(), ',') == 7);
  }
  CHECK(rows == md.diagnostics().steps);
}

TEST_CASE("integrator: rejects mismatched input") {
  std::vector<double> w{1.0, 1.0};
  auto t = mts::make_star(w);
  MirrorDescent md(t, EntropicRegularizer::star(t, 2.0, 0.25), Dynamics::star, LeafDistribution::uniform(2));
  CHECK_THROWS_AS(md.advance({1.0, {1.0}}), mts::InputError);
  CHECK_THROWS_AS(md.advance({-1.0, {1.0, 1.0}}), mts::InputError);
  std::mt19937_64 rng(109);
  auto deep = oracle::random_tree(rng, 2, 8);
  CHECK_THROWS_AS(MirrorDescent(deep, EntropicRegularizer::multiscale(deep, 1.0, 0.1), Dynamics::star,
                                LeafDistribution::uniform(deep.leaf_count())),
                  mts::InputError);
}
