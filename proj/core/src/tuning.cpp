#include "ridecast/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "json.hpp"
#include "ridecast/csv.hpp"
#include "ridecast/errors.hpp"
#include "ridecast/metrics.hpp"
#include "ridecast/parallel.hpp"
#include "ridecast/rng.hpp"

namespace ridecast {
namespace {

constexpr std::uint64_t kTagSplit = 4;
constexpr std::uint64_t kTagFold = 5;

std::size_t scaled_count(double frac, std::size_t n) {
  return static_cast<std::size_t>(std::floor(frac * static_cast<double>(n) + 1e-9));
}

}  // namespace

SplitIndices split_train_test(std::size_t n, double train_fraction, std::uint64_t seed) {
  if (n < 10)
    throw ValidationError("train/test split needs at least 10 rows, got " + std::to_string(n));
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw ValidationError("train_fraction must be in (0, 1), got " +
                          std::to_string(train_fraction));
  std::size_t n_train = scaled_count(train_fraction, n);
  if (n_train == 0 || n_train == n)
    throw ValidationError("train_fraction " + std::to_string(train_fraction) + " over " +
                          std::to_string(n) + " rows leaves an empty side");
  SplitMix64 rng = SplitMix64::stream(seed, 0, kTagSplit);
  SplitIndices split;
  split.train = sample_without_replacement(n, n_train, rng);
  split.test.reserve(n - n_train);
  std::size_t next_train = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (next_train < split.train.size() && split.train[next_train] == i)
      ++next_train;
    else
      split.test.push_back(i);
  }
  return split;
}

std::vector<std::vector<std::size_t>> kfold(std::size_t n, int k, std::uint64_t seed) {
  if (k < 2) throw ValidationError("k-fold needs k >= 2, got " + std::to_string(k));
  if (static_cast<std::size_t>(k) > n)
    throw ValidationError("k-fold with k = " + std::to_string(k) + " needs at least " +
                          std::to_string(k) + " rows, got " + std::to_string(n));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  SplitMix64 rng = SplitMix64::stream(seed, 0, kTagFold);
  shuffle(order, rng);

  std::vector<std::vector<std::size_t>> folds(static_cast<std::size_t>(k));
  const std::size_t base = n / static_cast<std::size_t>(k);
  const std::size_t extra = n % static_cast<std::size_t>(k);
  std::size_t pos = 0;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    std::size_t len = base + (f < extra ? 1 : 0);
    folds[f].assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                    order.begin() + static_cast<std::ptrdiff_t>(pos + len));
    std::sort(folds[f].begin(), folds[f].end());
    pos += len;
  }
  return folds;
}

std::size_t GridSpec::size() const {
  return max_depth.size() * min_child_weight.size() * eta.size() * subsample.size() *
         colsample_bytree.size();
}

std::vector<TrainConfig> GridSpec::expand(const TrainConfig& base) const {
  if (max_depth.empty() || min_child_weight.empty() || eta.empty() || subsample.empty() ||
      colsample_bytree.empty())
    throw ValidationError("every grid dimension needs at least one value");
  std::vector<TrainConfig> points;
  points.reserve(size());
  for (int md : max_depth)
    for (double mcw : min_child_weight)
      for (double e : eta)
        for (double ss : subsample)
          for (double cs : colsample_bytree) {
            TrainConfig cfg = base;
            cfg.max_depth = md;
            cfg.min_child_weight = mcw;
            cfg.eta = e;
            cfg.subsample = ss;
            cfg.colsample_bytree = cs;
            points.push_back(cfg);
          }
  return points;
}

TuneReport grid_search(const Dataset& data, const TrainConfig& base, const GridSpec& grid,
                       int threads) {
  std::vector<TrainConfig> configs = grid.expand(base);
  for (std::size_t p = 0; p < configs.size(); ++p) {
    try {
      configs[p].validate(data.n_cols);
    } catch (const Error& e) {
      throw ValidationError("grid point " + std::to_string(p) + ": " + e.what());
    }
  }
  for (double yv : data.y)
    if (yv < 0.0)
      throw ValidationError("cross-validated RMSLE needs a non-negative target");

  const auto folds = kfold(data.n_rows, grid.k, base.seed);

  // Per-fold train index lists, shared across grid points.
  std::vector<std::vector<std::size_t>> train_idx(folds.size());
  for (std::size_t f = 0; f < folds.size(); ++f) {
    std::vector<char> held(data.n_rows, 0);
    for (std::size_t i : folds[f]) held[i] = 1;
    for (std::size_t i = 0; i < data.n_rows; ++i)
      if (!held[i]) train_idx[f].push_back(i);
  }

  TuneReport report;
  report.k = grid.k;
  report.seed = base.seed;
  report.n_rows = data.n_rows;
  report.points.resize(configs.size());

  parallel_for(configs.size(), threads, [&](std::size_t p) {
    TunePointResult result;
    result.index = p;
    result.config = configs[p];
    result.fold_rmsle.resize(folds.size());
    try {
      for (std::size_t f = 0; f < folds.size(); ++f) {
        Dataset train_part = data.select(train_idx[f]);
        Dataset val_part = data.select(folds[f]);
        Ensemble model = train(train_part, configs[p]);
        std::vector<double> pred = model.predict(val_part);
        result.fold_rmsle[f] = rmsle(val_part.y, pred);
      }
    } catch (const std::exception& e) {
      throw InternalError("grid point " + std::to_string(p) + " (max_depth=" +
                          std::to_string(configs[p].max_depth) + ", eta=" +
                          std::to_string(configs[p].eta) + "): " + e.what());
    }
    double sum = 0.0;
    for (double v : result.fold_rmsle) sum += v;
    result.mean_rmsle = sum / static_cast<double>(result.fold_rmsle.size());
    report.points[p] = std::move(result);
  });

  report.winner = 0;
  for (std::size_t p = 1; p < report.points.size(); ++p) {
    const TunePointResult& cand = report.points[p];
    const TunePointResult& best = report.points[report.winner];
    if (cand.mean_rmsle < best.mean_rmsle ||
        (cand.mean_rmsle == best.mean_rmsle && cand.config.max_depth < best.config.max_depth))
      report.winner = p;
  }
  return report;
}

void write_tune_summary_csv(std::ostream& out, const TuneReport& report) {
  out << "point,max_depth,min_child_weight,eta,subsample,colsample_bytree,mean_rmsle,winner\n";
  for (const TunePointResult& p : report.points) {
    out << p.index << ',' << p.config.max_depth << ',' << format_double(p.config.min_child_weight)
        << ',' << format_double(p.config.eta) << ',' << format_double(p.config.subsample) << ','
        << format_double(p.config.colsample_bytree) << ',' << format_double(p.mean_rmsle) << ','
        << (p.index == report.winner ? 1 : 0) << '\n';
  }
  if (!out) throw IoError("write error on tuning summary output");
}

void write_tune_folds_csv(std::ostream& out, const TuneReport& report) {
  out << "point,fold,rmsle\n";
  for (const TunePointResult& p : report.points)
    for (std::size_t f = 0; f < p.fold_rmsle.size(); ++f)
      out << p.index << ',' << f << ',' << format_double(p.fold_rmsle[f]) << '\n';
  if (!out) throw IoError("write error on tuning folds output");
}

void write_tune_report_json(std::ostream& out, const TuneReport& report) {
  using json = nlohmann::ordered_json;
  auto point_json = [](const TunePointResult& p) {
    json j;
    j["index"] = p.index;
    j["max_depth"] = p.config.max_depth;
    j["min_child_weight"] = p.config.min_child_weight;
    j["eta"] = p.config.eta;
    j["subsample"] = p.config.subsample;
    j["colsample_bytree"] = p.config.colsample_bytree;
    j["mean_rmsle"] = p.mean_rmsle;
    j["fold_rmsle"] = p.fold_rmsle;
    return j;
  };
  json doc;
  doc["seed"] = report.seed;
  doc["k"] = report.k;
  doc["n_rows"] = report.n_rows;
  doc["n_points"] = report.points.size();
  doc["winner"] = point_json(report.points.at(report.winner));
  json points = json::array();
  for (const TunePointResult& p : report.points) points.push_back(point_json(p));
  doc["points"] = std::move(points);
  out << doc.dump(1) << '\n';
  if (!out) throw IoError("write error on tuning report output");
}

}  // namespace ridecast
