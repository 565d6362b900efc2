#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nesua/association.hpp"
#include "nesua/baselines.hpp"
#include "nesua/gat.hpp"
#include "nesua/power.hpp"
#include "nesua/scenario.hpp"
#include "nesua/training.hpp"

namespace nesua {

/// Post-hoc guaranteed-bit-rate check settings.
struct GbrConfig {
  double demand_mbps = 2.0;     // per-UE demand used for served throughput
  /// UEs whose demand counts toward L_min; empty means every UE.
  std::vector<bool> gbr_ues;
};

struct PolicyReport {
  std::string policy;
  HardAssociation association;
  NetworkPower power;
  std::vector<int> switched_off_cells;
  double served_bps = 0.0;      // aggregate L_t
  double l_min_bps = 0.0;
  bool gbr_satisfied = true;
  double gbr_margin_bps = 0.0;  // served - L_min

  double total_w() const noexcept { return power.total_w; }
  int switched_off_count() const noexcept { return static_cast<int>(switched_off_cells.size()); }
  bool any_overload() const { return power.any_overload(); }
};

/// Power, switch-off set and served throughput of one hard association. A UE in an
/// overloaded cell is served demand * n_prb_total / load.
PolicyReport evaluate_policy(const std::string& policy, const HardAssociation& assoc, const Scenario& s,
                             const PowerParams& p, const GbrConfig& gbr = {});

/// 100 (p_base - p_gnn) / p_base. ArgumentError when p_base <= 0.
double gain_percent(double p_gnn_w, double p_base_w);

struct EvalOptions {
  GbrConfig gbr;
  bool include_oracle = true;   // only where n_cells^n_ues <= oracle_budget
  std::uint64_t oracle_budget = kDefaultOracleBudget;
  SubSinrAggregate subsinr = SubSinrAggregate::max;
  std::size_t threads = 0;      // 0: worker_threads()
};

inline const char* const kPolicyGnn = "gnn";
inline const char* const kPolicyRsrp = "rsrp";
inline const char* const kPolicyGaSubsinr = "ga_subsinr";
inline const char* const kPolicyOracle = "oracle";

/// All policies on one instance, in the order gnn, rsrp, ga_subsinr[, oracle].
/// `sample.graph` must already be normalized the way the model was trained.
std::vector<PolicyReport> compare_policies(const Sample& sample, const GatModel& model, const PowerParams& p,
                                           const EvalOptions& opt);

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;  // sample standard deviation / sqrt(n); 0 for n < 2
};
MeanSe mean_se(std::span<const double> xs);

/// Aggregates over one test set.
struct PointStats {
  std::size_t n_instances = 0;
  std::size_t n_cells = 0;
  MeanSe gnn_w, rsrp_w, ga_w;
  std::optional<MeanSe> oracle_w;   // present when every instance was within budget
  MeanSe gain_vs_rsrp, gain_vs_ga;  // per-instance gains
  MeanSe switched_off;              // GNN policy
  double switched_off_fraction = 0.0;
  double gnn_gbr_satisfied = 0.0;   // share of instances meeting L_min
  double gnn_overloaded = 0.0;      // share of instances with an overloaded cell

  /// Gain of the mean powers, recomputable from the power columns.
  double gain_of_means_vs_rsrp() const { return gain_percent(gnn_w.mean, rsrp_w.mean); }
  double gain_of_means_vs_ga() const { return gain_percent(gnn_w.mean, ga_w.mean); }
};

/// Per-instance comparisons in input order plus their aggregate.
struct Evaluation {
  std::vector<std::vector<PolicyReport>> instances;
  std::vector<std::uint64_t> scenario_seeds;
  PointStats stats;
};

Evaluation evaluate_test_set(std::span<const Sample> test, const GatModel& model, const PowerParams& p,
                             const EvalOptions& opt);

/// One evaluated grid point. `stats` is empty when its model was missing.
struct SweepPoint {
  std::vector<std::pair<std::string, double>> coords;
  std::optional<PointStats> stats;
};

struct SweepResult {
  std::string variable;  // "bandwidth" or "lambda"
  std::vector<SweepPoint> points;
};

/// What a grid point is evaluated on; a null model marks a gap.
struct GridInput {
  const GatModel* model = nullptr;
  std::span<const Sample> test;
};

/// Rows ordered W-major then K; |W| * |K| rows, gaps included.
SweepResult sweep_bandwidth(std::span<const double> bandwidths_mhz, std::span<const int> ue_counts,
                            const std::function<GridInput(double, int)>& lookup, const PowerParams& p,
                            const EvalOptions& opt);

/// One row per lambda2 / lambda1 ratio, in input order.
SweepResult sweep_lambda(std::span<const double> ratios, const std::function<GridInput(double)>& lookup,
                         const PowerParams& p, const EvalOptions& opt);

/// Mean of each window of `window` consecutive values (size - window + 1 outputs).
std::vector<double> moving_average(std::span<const double> xs, std::size_t window);

// ---- export ----------------------------------------------------------------------

std::string sweep_csv(const SweepResult& r);
/// Writes sweep_<variable>_<timestamp>.csv into dir and returns its path.
std::filesystem::path write_sweep_csv(const SweepResult& r, const std::filesystem::path& dir,
                                      const std::string& timestamp);

/// Per-instance power table (one row per instance) with gain columns.
std::string comparison_csv(const Evaluation& e);
/// Single-row aggregate table.
std::string summary_csv(const PointStats& st);

/// heatmap_sinr.csv, one heatmap_<policy>.csv per report (one-hot K x N) and
/// coordinates.csv. Returns the written paths; IoError when dir is not writable.
std::vector<std::filesystem::path> export_heatmaps(const Scenario& s, std::span<const PolicyReport> reports,
                                                   const std::filesystem::path& dir);

/// Shortest decimal text that parses back to exactly v.
std::string format_double(double v);

}  // namespace nesua
