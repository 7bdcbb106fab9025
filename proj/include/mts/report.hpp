#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "mts/check.hpp"
#include "mts/combiner.hpp"
#include "mts/instances.hpp"
#include "mts/offline.hpp"
#include "mts/unfair.hpp"

namespace mts {

inline constexpr const char* kReportSchema = "mts-report/1";

enum class Algo { star, tree, unfair, hst };
Algo parse_algo(const std::string& name);
const char* algo_name(Algo a);

struct CostReport {
  std::string algo;
  nlohmann::ordered_json params;
  std::string instance_digest;
  double S = 0.0, M = 0.0;
  double S_star = 0.0, M_star = 0.0, OPT = 0.0;
  // Total-cost bound implied by the algorithm's guarantee (for ratio tables).
  double bound = 0.0;
  std::vector<Check> checks;
  nlohmann::ordered_json diagnostics;
  double wall_time = 0.0;

  bool pass() const;
  // First failing check, or nullptr.
  const Check* first_failure() const;
  nlohmann::ordered_json to_json(bool timing = true) const;
};

// Everything a run can be configured with. Unset optionals take the
// algorithm's defaults: star eta = 4 ln n, delta = 1/n^2; tree eta = 2 ln n,
// leaf delta = 1/n; unfair u = 1, gamma = 1, C = 0; hst tau = 2, C0 = 1.
struct RunConfig {
  StepPolicy policy;
  std::optional<double> eta;
  std::optional<double> delta;
  // Unfair parameters: {"u","gamma","C"} or {"beta","eta","delta","gamma","zeta"}.
  nlohmann::json unfair;
  double tau = 2.0;
  double C0 = 1.0;
  bool quantize = false;  // hst: quantize to an 8-HST first
  std::ostream* trace = nullptr;
  std::size_t max_cells = OfflineOptions{}.max_cells;
};

// Reads a params file for the given algorithm; unknown keys are rejected.
// Step policy keys (step_fraction, h_max, rel_step, snap_time,
// budget_constant) are accepted for every algorithm.
RunConfig config_from_json(const nlohmann::json& j, Algo algo);

CostReport run_star(const Instance& instance, const RunConfig& config = {});
CostReport run_tree(const Instance& instance, const RunConfig& config = {});
CostReport run_unfair(const Instance& instance, const RunConfig& config = {});
CostReport run_hst(const Instance& instance, const RunConfig& config = {});
CostReport run_algo(Algo algo, const Instance& instance, const RunConfig& config = {});

// Parameters for the unfair run on an instance with n points.
UnfairParams unfair_params_from_json(const nlohmann::json& j, std::size_t n);

}  // namespace mts
