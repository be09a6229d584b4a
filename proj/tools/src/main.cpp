#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "commands.hpp"
#include "config.hpp"
#include "ridecast/errors.hpp"
#include "ridecast/version.hpp"

namespace {

using ridecast::tools::ExplainOptions;
using ridecast::tools::ToolConfig;

/// Shared --config/--set/--seed/--threads/--output-dir plumbing. The
/// config file loads first, --set overrides apply in order, and the
/// dedicated flags win over both.
struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> output_dir;

  void attach(CLI::App* cmd) {
    cmd->add_option("-c,--config", config_path, "key=value config file");
    cmd->add_option("--set", overrides, "override a config key (repeatable)")
        ->type_name("KEY=VALUE");
    cmd->add_option("--seed", seed, "random seed (overrides config)");
    cmd->add_option("--threads", threads, "worker threads, 0 = all cores");
    cmd->add_option("-o,--output-dir", output_dir, "artifact directory");
  }

  ToolConfig resolve() const {
    ToolConfig cfg = ridecast::tools::load_config(config_path);
    for (const std::string& assignment : overrides)
      ridecast::tools::apply_override(cfg, assignment);
    if (seed) cfg.seed = *seed;
    if (threads) {
      if (*threads < 0) throw ridecast::ValidationError("threads must be >= 0");
      cfg.threads = *threads;
    }
    if (output_dir) cfg.output_dir = *output_dir;
    return cfg;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hourly bikeshare demand: ingest, train, tune, and explain"};
  app.set_version_flag("--version", std::string("ridecast ") + ridecast::kVersion);
  app.require_subcommand(1);

  CommonArgs ingest_args, describe_args, train_args, tune_args, explain_args;
  ExplainOptions explain_opts;

  CLI::App* ingest = app.add_subcommand(
      "ingest", "aggregate trip feeds into the hourly feature matrix");
  ingest_args.attach(ingest);

  CLI::App* describe =
      app.add_subcommand("describe", "per-variable summary statistics of a matrix");
  describe_args.attach(describe);

  CLI::App* train_cmd =
      app.add_subcommand("train", "fit a boosted-tree model on a matrix");
  train_args.attach(train_cmd);

  CLI::App* tune =
      app.add_subcommand("tune", "cross-validated grid search over model settings");
  tune_args.attach(tune);

  CLI::App* explain =
      app.add_subcommand("explain", "per-feature attribution for a trained model");
  explain_args.attach(explain);
  explain->add_option("--dependence-top", explain_opts.dependence_top,
                      "dependence tables for the top-N features");
  explain->add_option("--force-count", explain_opts.force_count,
                      "per-sample breakdown records to write");
  explain->add_option("--max-rows", explain_opts.max_rows,
                      "explain at most N rows (seeded subsample), 0 = all");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (ingest->parsed()) {
      ridecast::tools::run_ingest(ingest_args.resolve(), std::cout);
    } else if (describe->parsed()) {
      ridecast::tools::run_describe(describe_args.resolve(), std::cout);
    } else if (train_cmd->parsed()) {
      ridecast::tools::run_train(train_args.resolve(), std::cout);
    } else if (tune->parsed()) {
      ridecast::tools::run_tune(tune_args.resolve(), std::cout);
    } else if (explain->parsed()) {
      ridecast::tools::run_explain(explain_args.resolve(), explain_opts, std::cout);
    }
  } catch (const ridecast::MissingInputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ridecast::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ridecast::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const ridecast::Error& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
