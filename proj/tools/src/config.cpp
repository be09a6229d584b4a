#include "config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>

#include "ridecast/csv.hpp"
#include "ridecast/errors.hpp"
#include "ridecast/trips.hpp"

namespace ridecast::tools {
namespace {

std::uint64_t parse_seed(const std::string& key, std::string_view value) {
  std::uint64_t out = 0;
  auto t = trim(value);
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  if (ec != std::errc() || ptr != t.data() + t.size())
    throw ValidationError(key + ": expected an unsigned integer, got '" + std::string(value) + "'");
  return out;
}

int parse_int_value(const std::string& key, std::string_view value) {
  auto v = parse_int(value);
  if (!v) throw ValidationError(key + ": expected an integer, got '" + std::string(value) + "'");
  return static_cast<int>(*v);
}

double parse_double_value(const std::string& key, std::string_view value) {
  auto v = parse_double(value);
  if (!v) throw ValidationError(key + ": expected a number, got '" + std::string(value) + "'");
  return *v;
}

bool parse_bool_value(const std::string& key, std::string_view value) {
  auto t = trim(value);
  if (t == "true" || t == "1") return true;
  if (t == "false" || t == "0") return false;
  throw ValidationError(key + ": expected true/false, got '" + std::string(value) + "'");
}

std::vector<std::string> split_list(std::string_view value) {
  std::vector<std::string> out;
  for (std::string_view part : split_simple(value, ',')) {
    auto t = trim(part);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

std::vector<double> parse_double_list(const std::string& key, std::string_view value) {
  std::vector<double> out;
  for (const std::string& part : split_list(value)) out.push_back(parse_double_value(key, part));
  if (out.empty()) throw ValidationError(key + ": expected a comma-separated list of numbers");
  return out;
}

std::vector<int> parse_int_list(const std::string& key, std::string_view value) {
  std::vector<int> out;
  for (const std::string& part : split_list(value)) out.push_back(parse_int_value(key, part));
  if (out.empty()) throw ValidationError(key + ": expected a comma-separated list of integers");
  return out;
}

void apply_key(ToolConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "seed") {
    cfg.seed = parse_seed(key, value);
  } else if (key == "threads") {
    cfg.threads = parse_int_value(key, value);
    if (cfg.threads < 0) throw ValidationError("threads must be >= 0");
  } else if (key == "output_dir") {
    cfg.output_dir = std::string(trim(value));
    if (cfg.output_dir.empty()) throw ValidationError("output_dir must not be empty");
  } else if (key == "ingest.trips") {
    cfg.trip_globs = split_list(value);
    if (cfg.trip_globs.empty())
      throw ValidationError("ingest.trips: expected one or more comma-separated paths");
  } else if (key == "ingest.weather") {
    cfg.weather_path = std::string(trim(value));
  } else if (key == "ingest.holidays") {
    cfg.holidays_path = std::string(trim(value));
  } else if (key == "ingest.period") {
    std::string p(trim(value));
    if (p != "pre_pandemic" && p != "pandemic")
      throw ValidationError("ingest.period must be pre_pandemic or pandemic, got '" + p + "'");
    cfg.period = p;
  } else if (key.rfind("ingest.column.", 0) == 0) {
    const std::string canonical = key.substr(std::string("ingest.column.").size());
    const auto known = canonical_columns();
    if (std::find(known.begin(), known.end(), canonical) == known.end())
      throw ValidationError("ingest.column: unknown canonical column '" + canonical + "'");
    cfg.column_overrides[canonical] = std::string(trim(value));
  } else if (key == "matrix") {
    cfg.matrix_path = std::string(trim(value));
  } else if (key == "model") {
    cfg.model_path = std::string(trim(value));
  } else if (key == "train.max_depth") {
    cfg.train.max_depth = parse_int_value(key, value);
  } else if (key == "train.min_child_weight") {
    cfg.train.min_child_weight = parse_double_value(key, value);
  } else if (key == "train.eta") {
    cfg.train.eta = parse_double_value(key, value);
  } else if (key == "train.subsample") {
    cfg.train.subsample = parse_double_value(key, value);
  } else if (key == "train.colsample_bytree") {
    cfg.train.colsample_bytree = parse_double_value(key, value);
  } else if (key == "train.lambda") {
    cfg.train.lambda = parse_double_value(key, value);
  } else if (key == "train.gamma") {
    cfg.train.gamma = parse_double_value(key, value);
  } else if (key == "train.num_rounds") {
    cfg.train.num_rounds = parse_int_value(key, value);
  } else if (key == "train.base_score") {
    cfg.train.base_score = parse_double_value(key, value);
  } else if (key == "train.log1p_target") {
    cfg.log1p_target = parse_bool_value(key, value);
  } else if (key == "train.early_stopping_patience") {
    cfg.train.early_stopping_patience = parse_int_value(key, value);
  } else if (key == "train.validation_fraction") {
    cfg.train.validation_fraction = parse_double_value(key, value);
  } else if (key == "train.train_fraction") {
    cfg.train_fraction = parse_double_value(key, value);
  } else if (key == "grid.max_depth") {
    cfg.grid.max_depth = parse_int_list(key, value);
  } else if (key == "grid.min_child_weight") {
    cfg.grid.min_child_weight = parse_double_list(key, value);
  } else if (key == "grid.eta") {
    cfg.grid.eta = parse_double_list(key, value);
  } else if (key == "grid.subsample") {
    cfg.grid.subsample = parse_double_list(key, value);
  } else if (key == "grid.colsample_bytree") {
    cfg.grid.colsample_bytree = parse_double_list(key, value);
  } else if (key == "grid.k") {
    cfg.grid.k = parse_int_value(key, value);
  } else {
    throw ValidationError("unknown config key '" + key + "'");
  }
}

}  // namespace

ToolConfig load_config(const std::string& path) {
  ToolConfig cfg;
  if (path.empty()) return cfg;
  std::ifstream in(path);
  if (!in.is_open()) throw MissingInputError("config file not found: " + path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto text = trim(line);
    if (text.empty() || text.front() == '#') continue;
    auto eq = text.find('=');
    if (eq == std::string_view::npos)
      throw ValidationError(path + ":" + std::to_string(lineno) +
                            ": expected key=value, got '" + std::string(text) + "'");
    std::string key(trim(text.substr(0, eq)));
    std::string value(text.substr(eq + 1));
    try {
      apply_key(cfg, key, value);
    } catch (const ValidationError& e) {
      throw ValidationError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (in.bad()) throw IoError("read error on config file: " + path);
  return cfg;
}

void apply_override(ToolConfig& cfg, const std::string& assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string::npos)
    throw ValidationError("--set expects key=value, got '" + assignment + "'");
  std::string key(trim(std::string_view(assignment).substr(0, eq)));
  std::string value(assignment.substr(eq + 1));
  apply_key(cfg, key, value);
}

}  // namespace ridecast::tools
