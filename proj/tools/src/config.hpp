#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ridecast/gbt.hpp"
#include "ridecast/tuning.hpp"

namespace ridecast::tools {

/// Everything the subcommands read from the key=value config file.
/// Unknown keys are rejected so typos fail loudly instead of silently
/// running with defaults.
struct ToolConfig {
  std::uint64_t seed = 0;
  int threads = 0;  // 0 = all hardware threads
  std::string output_dir = "out";

  // ingest
  std::vector<std::string> trip_globs;  // ingest.trips, comma separated
  std::string weather_path;             // ingest.weather
  std::string holidays_path;            // ingest.holidays (optional)
  std::string period = "pre_pandemic";  // ingest.period
  std::map<std::string, std::string> column_overrides;  // ingest.column.<name>

  // shared inputs
  std::string matrix_path;  // matrix
  std::string model_path;   // model

  // train.*; transform and seed are filled in when the command runs
  TrainConfig train;
  bool log1p_target = false;   // train.log1p_target
  double train_fraction = 0.8; // train.train_fraction

  // grid.*; defaults are the standard search grid
  GridSpec grid{{5, 6, 7, 8},
                {1.0, 3.0, 5.0},
                {0.01, 0.05, 0.1},
                {0.8, 1.0},
                {0.7, 0.8, 1.0},
                10};
};

/// Parses a config file: one key=value per line, '#' comments, blank
/// lines ignored. Throws ValidationError on unknown keys or bad values,
/// MissingInputError when the file does not exist.
ToolConfig load_config(const std::string& path);

/// Applies a key=value override (the --set flag) on top of a loaded
/// config; same key set and validation as the file.
void apply_override(ToolConfig& cfg, const std::string& assignment);

}  // namespace ridecast::tools
