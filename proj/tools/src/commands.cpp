#include "commands.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "ridecast/csv.hpp"
#include "ridecast/errors.hpp"
#include "ridecast/features.hpp"
#include "ridecast/metrics.hpp"
#include "ridecast/model_io.hpp"
#include "ridecast/parallel.hpp"
#include "ridecast/rng.hpp"
#include "ridecast/shap.hpp"
#include "ridecast/trips.hpp"
#include "ridecast/tuning.hpp"
#include "ridecast/version.hpp"

namespace ridecast::tools {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

constexpr std::uint64_t kTagExplainRows = 6;
constexpr std::uint64_t kTagForceRows = 7;

std::ifstream open_input(const std::string& path, const char* what) {
  std::ifstream in(path);
  if (!in.is_open())
    throw MissingInputError(std::string(what) + " not found: " + path);
  return in;
}

std::ofstream open_output(const fs::path& path) {
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create directory " + path.parent_path().string());
  std::ofstream out(path);
  if (!out.is_open()) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

void write_json_file(const fs::path& path, const json& doc) {
  std::ofstream out = open_output(path);
  out << doc.dump(1) << '\n';
  if (!out) throw IoError("write error on " + path.string());
}

/// '*' and '?' wildcard match over a filename (no directory crossing).
bool glob_match(std::string_view pattern, std::string_view name) {
  std::size_t p = 0, n = 0;
  std::size_t star = std::string_view::npos, star_n = 0;
  while (n < name.size()) {
    if (p < pattern.size() && (pattern[p] == name[n] || pattern[p] == '?')) {
      ++p;
      ++n;
    } else if (p < pattern.size() && pattern[p] == '*') {
      star = p++;
      star_n = n;
    } else if (star != std::string_view::npos) {
      p = star + 1;
      n = ++star_n;
    } else {
      return false;
    }
  }
  while (p < pattern.size() && pattern[p] == '*') ++p;
  return p == pattern.size();
}

/// Expands one path-or-pattern. Wildcards are only honored in the final
/// component; the directory part is taken literally.
std::vector<std::string> expand_glob(const std::string& pattern) {
  const fs::path as_path(pattern);
  const std::string filename = as_path.filename().string();
  if (filename.find('*') == std::string::npos && filename.find('?') == std::string::npos) {
    if (!fs::exists(as_path)) throw MissingInputError("trip file not found: " + pattern);
    return {pattern};
  }
  fs::path dir = as_path.parent_path();
  if (dir.empty()) dir = ".";
  const std::string dir_str = dir.string();
  if (dir_str.find('*') != std::string::npos || dir_str.find('?') != std::string::npos)
    throw ValidationError("wildcards are only supported in the filename: " + pattern);
  if (!fs::is_directory(dir))
    throw MissingInputError("trip directory not found: " + dir_str);
  std::vector<std::string> matches;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    if (glob_match(filename, entry.path().filename().string()))
      matches.push_back(entry.path().string());
  }
  std::sort(matches.begin(), matches.end());
  if (matches.empty()) throw MissingInputError("no trip files match pattern: " + pattern);
  return matches;
}

Dataset load_matrix(const ToolConfig& cfg) {
  if (cfg.matrix_path.empty())
    throw ValidationError("config key 'matrix' is required for this command");
  std::ifstream in = open_input(cfg.matrix_path, "matrix file");
  return load_matrix_csv(in);
}

TrainConfig effective_train_config(const ToolConfig& cfg) {
  TrainConfig tc = cfg.train;
  tc.seed = cfg.seed;
  tc.transform = cfg.log1p_target ? TargetTransform::Log1p : TargetTransform::None;
  return tc;
}

json train_config_json(const TrainConfig& tc) {
  json j;
  j["max_depth"] = tc.max_depth;
  j["min_child_weight"] = tc.min_child_weight;
  j["eta"] = tc.eta;
  j["subsample"] = tc.subsample;
  j["colsample_bytree"] = tc.colsample_bytree;
  j["lambda"] = tc.lambda;
  j["gamma"] = tc.gamma;
  j["num_rounds"] = tc.num_rounds;
  if (tc.base_score) j["base_score"] = *tc.base_score;
  j["target_transform"] = target_transform_name(tc.transform);
  j["early_stopping_patience"] = tc.early_stopping_patience;
  j["validation_fraction"] = tc.validation_fraction;
  return j;
}

/// R^2 is undefined on a constant target; report it as absent rather
/// than failing the whole run.
std::optional<double> safe_r_squared(std::span<const double> y, std::span<const double> yhat) {
  try {
    return r_squared(y, yhat);
  } catch (const ValidationError&) {
    return std::nullopt;
  }
}

json metric_block(std::span<const double> y, std::span<const double> yhat) {
  json j;
  std::size_t clamped = 0;
  auto r2 = safe_r_squared(y, yhat);
  if (r2)
    j["r2"] = *r2;
  else
    j["r2"] = nullptr;
  j["rmsle"] = rmsle(y, yhat, &clamped);
  j["clamped_predictions"] = clamped;
  j["n"] = y.size();
  return j;
}

/// 1-based descending ranks with stable ties (lower index wins).
std::vector<int> ranks_desc(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
  std::vector<int> rank(values.size(), 0);
  for (std::size_t r = 0; r < order.size(); ++r) rank[order[r]] = static_cast<int>(r) + 1;
  return rank;
}

}  // namespace

void run_ingest(const ToolConfig& cfg, std::ostream& log) {
  if (cfg.trip_globs.empty())
    throw ValidationError("config key 'ingest.trips' is required for ingest");
  if (cfg.weather_path.empty())
    throw ValidationError("config key 'ingest.weather' is required for ingest");

  std::vector<std::string> trip_files;
  for (const std::string& pattern : cfg.trip_globs)
    for (std::string& path : expand_glob(pattern)) trip_files.push_back(std::move(path));

  ColumnMap columns;
  for (const auto& [canonical, spelled] : cfg.column_overrides)
    columns.overrides[canonical] = spelled;

  ParseReport report;
  std::vector<TripRecord> trips;
  for (const std::string& path : trip_files) {
    std::ifstream in = open_input(path, "trip file");
    try {
      std::vector<TripRecord> part = parse_trips(in, columns, report);
      trips.insert(trips.end(), std::make_move_iterator(part.begin()),
                   std::make_move_iterator(part.end()));
    } catch (const ValidationError& e) {
      throw ValidationError(path + ": " + e.what());
    }
    log << path << ": accepted so far " << report.accepted << "\n";
  }

  const Period period = Period::of(cfg.period == "pandemic" ? PeriodTag::Pandemic
                                                            : PeriodTag::PrePandemic);
  AggregateResult agg = aggregate_hourly(trips, period);

  std::ifstream weather_in = open_input(cfg.weather_path, "weather file");
  std::vector<WeatherObservation> weather = read_weather_csv(weather_in);
  WeatherJoinResult joined = join_weather(std::move(agg.rows), weather);

  std::set<CivilDate> holidays;
  if (!cfg.holidays_path.empty()) {
    std::ifstream holidays_in = open_input(cfg.holidays_path, "holiday file");
    holidays = read_holidays(holidays_in);
  }
  flag_holidays(joined.rows, holidays);

  const fs::path out_dir(cfg.output_dir);
  {
    std::ofstream out = open_output(out_dir / "matrix.csv");
    write_matrix_csv(out, joined.rows);
  }
  {
    std::ofstream out = open_output(out_dir / "incomplete_hours.csv");
    write_incomplete_hours_csv(out, joined.incomplete);
  }
  {
    std::ofstream out = open_output(out_dir / "station_counts.csv");
    write_station_counts_csv(out, station_counts(trips));
  }

  json manifest;
  manifest["command"] = "ingest";
  manifest["tool_version"] = kVersion;
  manifest["seed"] = cfg.seed;
  manifest["period"] = cfg.period;
  manifest["inputs"]["trips"] = trip_files;
  manifest["inputs"]["weather"] = cfg.weather_path;
  manifest["inputs"]["holidays"] = cfg.holidays_path;
  if (!cfg.column_overrides.empty()) {
    json overrides;
    for (const auto& [canonical, spelled] : cfg.column_overrides) overrides[canonical] = spelled;
    manifest["column_overrides"] = overrides;
  }
  manifest["trips_accepted"] = report.accepted;
  manifest["trips_rejected"] = report.rejected_total();
  json rejects;
  for (const auto& [reason, count] : report.rejected) rejects[reason] = count;
  manifest["reject_reasons"] = rejects;
  manifest["trips_out_of_period"] = agg.out_of_period;
  manifest["trips_in_period"] = agg.accepted;
  manifest["hours"] = joined.rows.size();
  manifest["incomplete_hours"] = joined.incomplete.size();
  manifest["holiday_dates"] = holidays.size();
  manifest["outputs"] = {"matrix.csv", "incomplete_hours.csv", "station_counts.csv"};
  write_json_file(out_dir / "ingest_manifest.json", manifest);

  log << "trips accepted " << report.accepted << " rejected " << report.rejected_total()
      << " out_of_period " << agg.out_of_period << "\n";
  log << "hours " << joined.rows.size() << " incomplete " << joined.incomplete.size() << "\n";
  log << "wrote " << (out_dir / "matrix.csv").string() << "\n";
}

void run_describe(const ToolConfig& cfg, std::ostream& log) {
  Dataset data = load_matrix(cfg);
  std::vector<VariableStats> stats = descriptive_stats(data);

  const fs::path out_dir(cfg.output_dir);
  {
    std::ofstream out = open_output(out_dir / "stats.csv");
    write_stats_csv(out, stats);
  }

  json manifest;
  manifest["command"] = "describe";
  manifest["tool_version"] = kVersion;
  manifest["seed"] = cfg.seed;
  manifest["inputs"]["matrix"] = cfg.matrix_path;
  manifest["rows"] = data.n_rows;
  manifest["variables"] = stats.size();
  manifest["outputs"] = {"stats.csv"};
  write_json_file(out_dir / "describe_manifest.json", manifest);

  log << "rows " << data.n_rows << " variables " << stats.size() << "\n";
  for (const VariableStats& s : stats) {
    if (s.name == kTargetName)
      log << "demand mean " << format_double(s.mean) << " sd " << format_double(s.sd) << "\n";
  }
  log << "wrote " << (out_dir / "stats.csv").string() << "\n";
}

void run_train(const ToolConfig& cfg, std::ostream& log) {
  Dataset data = load_matrix(cfg);
  TrainConfig tc = effective_train_config(cfg);

  SplitIndices split = split_train_test(data.n_rows, cfg.train_fraction, cfg.seed);
  Dataset train_part = data.select(split.train);
  Dataset test_part = data.select(split.test);
  log << "rows " << data.n_rows << " train " << train_part.n_rows << " test "
      << test_part.n_rows << "\n";

  TrainSummary summary;
  Ensemble model = train(train_part, tc, &summary);
  if (summary.early_stopping_used) {
    log << "early stopping on " << summary.monitor << " over " << summary.holdout_rows
        << " held-out rows: kept " << summary.best_iteration << " of "
        << summary.rounds_trained << " rounds\n";
  } else {
    log << "trained " << summary.rounds_trained << " rounds\n";
  }

  std::vector<double> train_pred = model.predict(train_part);
  std::vector<double> test_pred = model.predict(test_part);

  const fs::path out_dir(cfg.output_dir);
  {
    std::ofstream out = open_output(out_dir / "model.json");
    save_model_json(out, model);
  }

  json metrics;
  metrics["command"] = "train";
  metrics["tool_version"] = kVersion;
  metrics["seed"] = cfg.seed;
  metrics["inputs"]["matrix"] = cfg.matrix_path;
  metrics["n_rows"] = data.n_rows;
  metrics["n_train"] = train_part.n_rows;
  metrics["n_test"] = test_part.n_rows;
  metrics["train_fraction"] = cfg.train_fraction;
  metrics["config"] = train_config_json(tc);
  json ts;
  ts["rounds_trained"] = summary.rounds_trained;
  ts["best_iteration"] = summary.best_iteration;
  ts["early_stopping_used"] = summary.early_stopping_used;
  ts["early_stopped"] = summary.early_stopped;
  ts["monitor"] = summary.monitor;
  ts["holdout_rows"] = summary.holdout_rows;
  metrics["train_summary"] = ts;
  metrics["metrics"]["train"] = metric_block(train_part.y, train_pred);
  metrics["metrics"]["test"] = metric_block(test_part.y, test_pred);
  metrics["outputs"] = {"model.json", "metrics.json"};
  write_json_file(out_dir / "metrics.json", metrics);

  auto test_r2 = safe_r_squared(test_part.y, test_pred);
  log << "R^2 " << (test_r2 ? format_double(*test_r2) : "n/a") << "\n";
  log << "RMSLE " << format_double(rmsle(test_part.y, test_pred)) << "\n";
  log << "wrote " << (out_dir / "model.json").string() << "\n";
}

void run_tune(const ToolConfig& cfg, std::ostream& log) {
  Dataset data = load_matrix(cfg);
  TrainConfig base = effective_train_config(cfg);

  log << "grid " << cfg.grid.size() << " points x " << cfg.grid.k << " folds over "
      << data.n_rows << " rows\n";

  TuneReport report = grid_search(data, base, cfg.grid, resolve_threads(cfg.threads));

  const fs::path out_dir(cfg.output_dir);
  {
    std::ofstream out = open_output(out_dir / "tune_report.csv");
    write_tune_summary_csv(out, report);
  }
  {
    std::ofstream out = open_output(out_dir / "tune_folds.csv");
    write_tune_folds_csv(out, report);
  }
  {
    std::ofstream out = open_output(out_dir / "tune_report.json");
    write_tune_report_json(out, report);
  }

  const TunePointResult& w = report.points.at(report.winner);
  log << "winner point " << w.index << ": max_depth=" << w.config.max_depth
      << " min_child_weight=" << format_double(w.config.min_child_weight)
      << " eta=" << format_double(w.config.eta)
      << " subsample=" << format_double(w.config.subsample)
      << " colsample_bytree=" << format_double(w.config.colsample_bytree)
      << " mean_rmsle=" << format_double(w.mean_rmsle) << "\n";
  log << "wrote " << (out_dir / "tune_report.json").string() << "\n";
}

void run_explain(const ToolConfig& cfg, const ExplainOptions& opts, std::ostream& log) {
  if (cfg.model_path.empty())
    throw ValidationError("config key 'model' is required for explain");
  if (opts.dependence_top < 0 || opts.force_count < 0 || opts.max_rows < 0)
    throw ValidationError("explain options must be non-negative");

  Dataset data = load_matrix(cfg);
  std::ifstream model_in = open_input(cfg.model_path, "model file");
  Ensemble model = load_model_json(model_in);

  // Optional seeded subsample to bound explanation cost on large matrices.
  std::vector<std::size_t> ids(data.n_rows);
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  if (opts.max_rows > 0 && static_cast<std::size_t>(opts.max_rows) < data.n_rows) {
    SplitMix64 rng = SplitMix64::stream(cfg.seed, 0, kTagExplainRows);
    ids = sample_without_replacement(data.n_rows, static_cast<std::size_t>(opts.max_rows), rng);
    data = data.select(ids);
  }

  ShapMatrix shap = explain_all(model, data, resolve_threads(cfg.threads));
  std::vector<ShapSummaryRow> summary = summarize_shap(data, shap);

  const fs::path out_dir(cfg.output_dir);
  std::vector<std::string> outputs;
  {
    std::ofstream out = open_output(out_dir / "shap_summary.csv");
    write_shap_summary_csv(out, summary);
    outputs.push_back("shap_summary.csv");
  }

  {
    ImportanceReport gain = feature_importance(model, ImportanceKind::TotalGain);
    ImportanceReport weight = feature_importance(model, ImportanceKind::Weight);
    std::vector<int> gain_rank = ranks_desc(gain.percent);
    std::vector<int> weight_rank = ranks_desc(weight.percent);
    std::ofstream out = open_output(out_dir / "shap_importance.csv");
    out << "feature,gain_pct,gain_rank,weight_pct,weight_rank\n";
    for (std::size_t j = 0; j < model.feature_names.size(); ++j) {
      out << model.feature_names[j] << ',' << format_double(gain.percent[j]) << ','
          << gain_rank[j] << ',' << format_double(weight.percent[j]) << ',' << weight_rank[j]
          << '\n';
    }
    if (!out) throw IoError("write error on importance output");
    outputs.push_back("shap_importance.csv");
    if (gain.degenerate) log << "note: model has no splits; importance is all zeros\n";
  }

  const int n_dep = std::min<int>(opts.dependence_top, static_cast<int>(data.n_cols));
  int written_dep = 0;
  for (int r = 0; r < n_dep; ++r) {
    const ShapSummaryRow& row = summary[static_cast<std::size_t>(r)];
    if (row.mean_abs == 0.0) break;  // ranks below this carry no signal
    DependenceData dep = select_dependence_partner(data, shap, row.feature);
    if (dep.low_sample)
      log << "note: fewer than 20 rows; dependence partner for " << row.name
          << " is arbitrary\n";
    std::string name = "dependence_" + row.name + ".csv";
    std::ofstream out = open_output(out_dir / name);
    write_dependence_csv(out, data, shap, dep);
    outputs.push_back(name);
    ++written_dep;
  }

  std::size_t n_force = std::min<std::size_t>(static_cast<std::size_t>(opts.force_count),
                                              data.n_rows);
  std::vector<std::size_t> force_rows;
  if (n_force > 0) {
    SplitMix64 rng = SplitMix64::stream(cfg.seed, 1, kTagForceRows);
    force_rows = sample_without_replacement(data.n_rows, n_force, rng);
  }
  for (std::size_t r : force_rows) {
    const std::size_t label = ids[r];
    std::string name = "force/sample_" + std::to_string(label) + ".json";
    std::ofstream out = open_output(out_dir / "force" / ("sample_" + std::to_string(label) + ".json"));
    write_force_json(out, model, data, shap, r, label);
    outputs.push_back(name);
  }

  json manifest;
  manifest["command"] = "explain";
  manifest["tool_version"] = kVersion;
  manifest["seed"] = cfg.seed;
  manifest["inputs"]["matrix"] = cfg.matrix_path;
  manifest["inputs"]["model"] = cfg.model_path;
  manifest["rows_explained"] = data.n_rows;
  manifest["base_value"] = shap.base_value;
  manifest["dependence_tables"] = written_dep;
  manifest["force_records"] = force_rows.size();
  manifest["options"]["dependence_top"] = opts.dependence_top;
  manifest["options"]["force_count"] = opts.force_count;
  manifest["options"]["max_rows"] = opts.max_rows;
  manifest["outputs"] = outputs;
  write_json_file(out_dir / "explain_manifest.json", manifest);

  log << "rows explained " << data.n_rows << "\n";
  log << "base_value " << format_double(shap.base_value) << "\n";
  const std::size_t top = std::min<std::size_t>(5, summary.size());
  for (std::size_t r = 0; r < top; ++r) {
    log << summary[r].rank << ". " << summary[r].name << " "
        << format_fixed(summary[r].share_pct, 2) << "%\n";
  }
  log << "wrote " << (out_dir / "shap_summary.csv").string() << "\n";
}

}  // namespace ridecast::tools
