#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "mts/error.hpp"
#include "mts/report.hpp"
#include "mts/sweep.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kInputError = 2;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw mts::InputError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json read_json(const std::string& path) {
  try {
    return nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw mts::InputError("'" + path + "' is not valid JSON: " + e.what());
  }
}

mts::RunConfig load_config(const std::string& params, mts::Algo algo) {
  mts::RunConfig cfg = params.empty() ? mts::RunConfig{} : mts::config_from_json(read_json(params), algo);
  if (const char* env = std::getenv("MTS_STEP_MAX")) {
    char* end = nullptr;
    double h = std::strtod(env, &end);
    if (end == env || *end != '\0' || !(h > 0.0)) throw mts::InputError("MTS_STEP_MAX must be a positive number");
    cfg.policy.h_max = h;
  }
  return cfg;
}

void print_failure(const mts::Check& c) {
  std::cerr << "FAILED " << c.name << " (" << c.paper_ref << "): lhs " << c.lhs << " > rhs " << c.rhs
            << " + tol " << c.tol << "\n";
}

void print_ledger(const mts::CostReport& rep) {
  std::cout << "algo " << rep.algo << "  instance " << rep.instance_digest.substr(0, 16) << "\n";
  std::cout << std::setprecision(10) << "S " << rep.S << "  M " << rep.M << "  S* " << rep.S_star << "  M* "
            << rep.M_star << "  OPT " << rep.OPT << "\n";
  std::size_t width = 4;
  for (const auto& c : rep.checks) width = std::max(width, c.name.size());
  for (const auto& c : rep.checks) {
    std::cout << (c.pass() ? "pass  " : "FAIL  ") << std::left << std::setw(int(width)) << c.name
              << std::right << "  lhs " << std::setw(16) << c.lhs << "  rhs " << std::setw(16) << c.rhs
              << "  slack " << std::setw(16) << c.slack() << "  tol " << c.tol << "  [" << c.paper_ref
              << "]\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mirror-descent metrical task systems: runs, verification and sweeps"};
  app.require_subcommand(1);

  std::string algo_name = "star", instance_path, params_path, trace_path, suite_path;
  bool no_timing = false;
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());

  auto* run = app.add_subcommand("run", "Run one algorithm and print the JSON report");
  run->add_option("--algo", algo_name, "star | tree | unfair | hst")->required();
  run->add_option("--instance", instance_path, "Instance file")->required();
  run->add_option("--params", params_path, "Params file");
  run->add_option("--trace", trace_path, "Write a CSV step trace");
  run->add_flag("--no-timing", no_timing, "Omit wall time from the report");

  auto* verify = app.add_subcommand("verify", "Print every verified inequality");
  verify->add_option("--algo", algo_name, "star | tree | unfair | hst")->required();
  verify->add_option("--instance", instance_path, "Instance file")->required();
  verify->add_option("--params", params_path, "Params file");

  auto* sweep = app.add_subcommand("sweep", "Run a suite and print a CSV table");
  sweep->add_option("--suite", suite_path, "Suite file")->required();
  sweep->add_option("--params", params_path, "Params file (step policy only)");
  sweep->add_option("--jobs", jobs, "Worker threads");

  std::string generator = "coupon";
  int n = 4, depth = 0, max_leaves = 8;
  std::size_t rounds = 20, segments = 20;
  double magnitude = 5.0, separation = 0.0;
  std::uint64_t seed = 1;
  auto* gen = app.add_subcommand("gen", "Write a generated instance to stdout");
  gen->add_option("--generator", generator, "coupon | random")->required();
  gen->add_option("--n", n, "Points (coupon, or a random weighted star)");
  gen->add_option("--depth", depth, "Random tree depth (random; 0 means a star)");
  gen->add_option("--max-leaves", max_leaves, "Leaf cap for random trees");
  gen->add_option("--separation", separation, "Edge-to-diameter ratio for random trees");
  gen->add_option("--rounds", rounds, "Rounds (coupon)");
  gen->add_option("--segments", segments, "Segments (random)");
  gen->add_option("--magnitude", magnitude, "Largest rate (random)");
  gen->add_option("--seed", seed, "Seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInputError;
  }

  try {
    if (*gen) {
      if (generator == "coupon") {
        std::cout << mts::serialize_instance(mts::gen_coupon_collector(n, rounds, seed));
        return kOk;
      }
      if (generator != "random") throw mts::InputError("unknown generator '" + generator + "'");
      mts::SplitMix64 rng(seed);
      std::optional<mts::WeightedTree> tree;
      if (depth == 0) {
        std::vector<double> w(n);
        for (double& x : w) x = rng.uniform(0.5, 2.0);
        tree = mts::make_star(w);
      } else {
        tree = mts::gen_tree(rng, depth, max_leaves, 3, separation);
      }
      mts::Instance inst(*tree);
      inst.mode = mts::InstanceMode::continuous;
      inst.seed = seed;
      inst.segments = mts::gen_random(inst.tree, segments, rng.next(), magnitude);
      std::cout << mts::serialize_instance(inst);
      return kOk;
    }
    if (*sweep) {
      mts::RunConfig cfg = load_config(params_path, mts::Algo::star);
      mts::SweepResult r = mts::run_sweep(read_json(suite_path), cfg, jobs);
      std::cout << r.csv;
      return r.failures ? kFailed : kOk;
    }
    const mts::Algo algo = mts::parse_algo(algo_name);
    mts::RunConfig cfg = load_config(params_path, algo);
    const mts::Instance inst = mts::parse_instance(read_file(instance_path));
    std::ofstream trace;
    if (*run && !trace_path.empty()) {
      trace.open(trace_path);
      if (!trace) throw mts::InputError("cannot write '" + trace_path + "'");
      trace << std::setprecision(17);
      cfg.trace = &trace;
    }
    const mts::CostReport rep = mts::run_algo(algo, inst, cfg);
    if (*run) {
      std::cout << rep.to_json(!no_timing).dump(2) << "\n";
      if (const mts::Check* c = rep.first_failure()) print_failure(*c);
    } else {
      print_ledger(rep);
    }
    return rep.pass() ? kOk : kFailed;
  } catch (const mts::InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kInputError;
  } catch (const mts::BudgetError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailed;
  }
}
