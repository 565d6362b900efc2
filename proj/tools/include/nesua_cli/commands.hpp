#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "nesua/config.hpp"
#include "nesua/evaluate.hpp"
#include "nesua/io.hpp"

namespace nesua::cli {

enum ExitCode : int { kOk = 0, kOther = 1, kConfigError = 2, kIoError = 3, kNumericAbort = 4 };

/// Writes dataset.jsonl, manifest.json and config.json into out_dir.
void cmd_gen(const RunConfig& cfg, const std::filesystem::path& out_dir);

/// Trains on a dataset file (or a directory holding dataset.jsonl). With `resume`
/// set, continues from that checkpoint's saved training state.
/// Writes checkpoint_final.json, checkpoint_best.json, history.csv and config.json.
void cmd_train(const RunConfig& cfg, const std::filesystem::path& dataset, const std::filesystem::path& out_dir,
               const std::optional<std::filesystem::path>& resume = std::nullopt);

/// Evaluates the checkpoint on the test split of the dataset.
/// Writes eval_instances.csv, eval_summary.csv, heatmaps/ and config.json.
Evaluation cmd_eval(const RunConfig& cfg, const std::filesystem::path& checkpoint,
                    const std::filesystem::path& dataset, const std::filesystem::path& out_dir);

enum class SweepKind { bandwidth, lambda };
SweepKind sweep_kind_from_string(const std::string& s);  // ConfigError

/// One sub-run per grid point under out_dir/<kind>/<point>; a point whose DONE
/// marker exists is reloaded instead of retrained. Returns the sweep CSV path.
std::filesystem::path cmd_sweep(const RunConfig& cfg, SweepKind kind, const std::filesystem::path& out_dir);

/// Sub-run directory name of a grid point.
std::string bandwidth_point_name(double bandwidth_mhz, int n_ues);
std::string lambda_point_name(double ratio);

/// Resolves a dataset argument: a file, or a directory containing dataset.jsonl.
std::filesystem::path resolve_dataset(const std::filesystem::path& p);

/// Entry point used by main(); returns the process exit code.
int run(int argc, char** argv);

}  // namespace nesua::cli
