#pragma once

#include <iosfwd>

#include "config.hpp"

namespace ridecast::tools {

struct ExplainOptions {
  int dependence_top = 9;  // dependence tables for the top-N SHAP features
  int force_count = 3;     // per-sample breakdown records
  int max_rows = 0;        // 0 = explain every row; else a seeded subsample
};

/// Each command reads its inputs from the config, writes its artifacts
/// into cfg.output_dir plus a <command>_manifest.json (seed included, no
/// timestamps), and logs a few progress lines. Failures propagate as the
/// error hierarchy; main() maps them to exit codes.
void run_ingest(const ToolConfig& cfg, std::ostream& log);
void run_describe(const ToolConfig& cfg, std::ostream& log);
void run_train(const ToolConfig& cfg, std::ostream& log);
void run_tune(const ToolConfig& cfg, std::ostream& log);
void run_explain(const ToolConfig& cfg, const ExplainOptions& opts, std::ostream& log);

}  // namespace ridecast::tools
