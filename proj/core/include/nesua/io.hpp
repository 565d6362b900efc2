#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nesua/gat.hpp"
#include "nesua/scenario.hpp"
#include "nesua/training.hpp"

namespace nesua {

// ---- dataset (one JSON record per line) -------------------------------------------

/// One line, no trailing newline. Doubles are written with round-trip precision.
std::string dataset_record(const Sample& s, const std::string& config_digest);
Sample parse_dataset_record(const std::string& line);

void write_dataset(const std::filesystem::path& path, std::span<const Sample> samples,
                   const std::string& config_digest);
std::vector<Sample> read_dataset(const std::filesystem::path& path);

struct DatasetManifest {
  std::string config_digest;
  std::uint64_t seed = 0;
  std::size_t records = 0;
  std::string dataset_file;
};

void write_manifest(const std::filesystem::path& path, const DatasetManifest& m);
DatasetManifest read_manifest(const std::filesystem::path& path);

// ---- checkpoints ------------------------------------------------------------------

struct Checkpoint {
  GatModel model;
  NormStats norm;
  /// Present for resumable checkpoints.
  std::optional<TrainState> state;
};

std::string checkpoint_json(const Checkpoint& c);
Checkpoint parse_checkpoint(const std::string& text);
void write_checkpoint(const std::filesystem::path& path, const Checkpoint& c);
Checkpoint read_checkpoint(const std::filesystem::path& path);

// ---- training history -------------------------------------------------------------

std::string history_csv(std::span<const EpochStats> history);
std::vector<EpochStats> parse_history_csv(const std::string& text);

// ---- helpers ----------------------------------------------------------------------

std::string read_text(const std::filesystem::path& path);  // IoError
/// Writes via a temporary file and rename so readers never see partial output.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace nesua
