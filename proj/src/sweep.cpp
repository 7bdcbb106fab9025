#include "mts/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <thread>

#include "mts/error.hpp"

namespace mts {

using nlohmann::json;

namespace {

struct Job {
  std::string generator;
  std::uint64_t seed = 0;
  json spec;
  int size = 0;  // n or depth
  Algo algo = Algo::star;
};

std::vector<int> int_list(const json& run, const char* key) {
  if (!run.contains(key)) return {};
  const json& v = run[key];
  std::vector<int> out;
  if (v.is_number_integer()) out.push_back(v.get<int>());
  else if (v.is_array())
    for (const json& x : v) {
      if (!x.is_number_integer()) throw InputError(std::string("suite field '") + key + "' must hold integers");
      out.push_back(x.get<int>());
    }
  else
    throw InputError(std::string("suite field '") + key + "' must be an integer or a list");
  return out;
}

double num(const json& run, const char* key, double fallback) {
  if (!run.contains(key)) return fallback;
  if (!run[key].is_number()) throw InputError(std::string("suite field '") + key + "' must be a number");
  return run[key].get<double>();
}

Instance make_instance(const Job& job, const RunConfig& base) {
  const json& r = job.spec;
  if (job.generator == "coupon") {
    const int n = job.size;
    std::size_t rounds = r.contains("rounds") ? static_cast<std::size_t>(num(r, "rounds", 0))
                                              : static_cast<std::size_t>(num(r, "rounds_per_point", 50) * n);
    return gen_coupon_collector(n, rounds, job.seed);
  }
  if (job.generator == "random") {
    SplitMix64 rng(job.seed);
    std::optional<WeightedTree> tree;
    if (r.contains("n")) {
      std::vector<double> w(job.size);
      for (double& x : w) x = rng.uniform(0.5, 2.0);
      tree = make_star(w);
    } else {
      tree = gen_tree(rng, job.size, static_cast<int>(num(r, "max_leaves", 8)),
                      static_cast<int>(num(r, "max_branch", 3)), num(r, "separation", 0.0));
    }
    Instance inst(*tree);
    inst.mode = InstanceMode::continuous;
    inst.seed = job.seed;
    inst.segments = gen_random(inst.tree, static_cast<std::size_t>(num(r, "segments", 20)),
                               rng.next(), num(r, "magnitude", 5.0));
    return inst;
  }
  if (job.generator == "cruel") {
    WeightedTree tree = uniform_star(job.size);
    const double n = job.size;
    MirrorDescent engine(tree, EntropicRegularizer::star(tree, 4.0 * std::log(n), 1.0 / (n * n)),
                         Dynamics::star, start_distribution(tree, std::nullopt), base.policy);
    return gen_cruel(engine, static_cast<std::size_t>(num(r, "rounds", 50)), tree.id(tree.leaf_node(0)));
  }
  throw InputError("unknown generator '" + job.generator + "'");
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

SweepResult run_sweep(const json& suite, const RunConfig& base, unsigned jobs) {
  if (!suite.is_object() || !suite.contains("runs") || !suite["runs"].is_array())
    throw InputError("suite must be an object with a 'runs' array");
  std::vector<Job> list;
  for (const json& run : suite["runs"]) {
    if (!run.is_object() || !run.contains("generator") || !run["generator"].is_string())
      throw InputError("every suite run needs a 'generator'");
    const std::string gen = run["generator"].get<std::string>();
    std::vector<int> sizes = int_list(run, run.contains("depth") && gen == "random" ? "depth" : "n");
    std::vector<int> seeds = int_list(run, "seeds");
    if (seeds.empty()) seeds.push_back(1);
    if (!run.contains("algos") || !run["algos"].is_array()) throw InputError("every suite run needs 'algos'");
    for (int size : sizes)
      for (int seed : seeds)
        for (const json& a : run["algos"]) {
          if (!a.is_string()) throw InputError("suite 'algos' must hold names");
          list.push_back({gen, static_cast<std::uint64_t>(seed), run, size, parse_algo(a.get<std::string>())});
        }
  }

  std::vector<std::string> rows(list.size());
  std::vector<char> failed(list.size(), 0);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < list.size();) {
      const Job& job = list[i];
      std::ostringstream row;
      row << job.generator << ',' << job.seed << ',';
      try {
        const Instance inst = make_instance(job, base);
        const CostReport rep = run_algo(job.algo, inst, base);
        const double total = rep.S + rep.M;
        const double ratio = rep.OPT > 0.0 ? total / rep.OPT : (total > 0.0 ? INFINITY : 0.0);
        row << inst.tree.leaf_count() << ',' << inst.tree.max_depth() << ',' << algo_name(job.algo) << ','
            << fmt(rep.S) << ',' << fmt(rep.M) << ',' << fmt(rep.OPT) << ',' << fmt(ratio) << ','
            << fmt(rep.bound) << ',' << fmt(rep.bound - total) << ',' << (rep.pass() ? "1" : "0");
        failed[i] = !rep.pass();
      } catch (const std::exception& e) {
        std::string msg = e.what();
        std::replace(msg.begin(), msg.end(), ',', ';');
        row << ",," << algo_name(job.algo) << ",,,,,,,0 (" << msg << ")";
        failed[i] = 1;
      }
      rows[i] = row.str();
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(list.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  SweepResult out;
  out.csv = std::string(kSweepHeader) + "\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.csv += rows[i] + "\n";
    out.failures += failed[i];
  }
  out.rows = static_cast<int>(rows.size());
  if (!rows.empty()) out.csv += "# failures," + std::to_string(out.failures) + "\n";
  return out;
}

}  // namespace mts
