#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nesua/baselines.hpp"
#include "nesua/gat.hpp"
#include "nesua/power.hpp"
#include "nesua/scenario.hpp"
#include "nesua/training.hpp"

namespace nesua {

struct EvalSettings {
  bool include_oracle = true;
  std::uint64_t oracle_budget = kDefaultOracleBudget;
  int heatmap_instances = 1;  // test instances exported as heatmaps
};

struct BaselineSettings {
  SubSinrAggregate subsinr_aggregate = SubSinrAggregate::max;
};

struct SweepSettings {
  std::vector<double> bandwidths_mhz{20.0, 40.0, 80.0};
  std::vector<int> ue_counts{20, 50};
  std::vector<double> lambda_ratios{0.0, 0.1, 1.0, 10.0, 100.0};
  double lambda1 = 1.0;  // held fixed while lambda2 = ratio * lambda1
};

/// Everything a command needs. `seed` seeds model initialization;
/// scenario.rng_seed is the base seed of generated datasets.
struct RunConfig {
  ScenarioConfig scenario;
  PowerParams power;
  GatConfig gat;
  TrainConfig train;
  LossConfig loss;
  EvalSettings eval;
  BaselineSettings baseline;
  SweepSettings sweep;
  std::uint64_t seed = 1;
  std::string out_dir = "out";

  /// Also forces gat.n_cells to scenario.n_cells.
  void validate();
};

/// Parses a JSON object; unknown sections or keys are a ConfigError.
RunConfig parse_run_config(const std::string& json_text);
/// Applies "section.key=value" (value in JSON syntax, bare words taken as strings).
void apply_override(RunConfig& cfg, const std::string& assignment);
/// Pretty JSON with every key, suitable for parse_run_config.
std::string run_config_json(const RunConfig& cfg);

/// Canonical JSON of one section; hashed into dataset digests.
std::string scenario_config_json(const ScenarioConfig& cfg);
std::string gat_config_json(const GatConfig& cfg);

/// 64-bit FNV-1a as 16 lowercase hex digits.
std::string fnv1a_hex(const std::string& bytes);
std::string config_digest(const ScenarioConfig& cfg);

std::string to_string(SubSinrAggregate a);
SubSinrAggregate subsinr_aggregate_from_string(const std::string& s);  // ConfigError

}  // namespace nesua
