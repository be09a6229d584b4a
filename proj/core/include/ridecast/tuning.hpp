#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "ridecast/gbt.hpp"

namespace ridecast {

struct SplitIndices {
  std::vector<std::size_t> train;  // sorted ascending
  std::vector<std::size_t> test;
};

/// Random train/test split. The train side gets floor(n * train_fraction)
/// rows drawn without replacement; needs n >= 10 so both sides are
/// meaningful.
SplitIndices split_train_test(std::size_t n, double train_fraction, std::uint64_t seed);

/// Random k-fold partition: a shuffle of 0..n-1 dealt into k contiguous
/// chunks, the first n mod k folds one larger. Every index lands in
/// exactly one fold. Folds are plain random: consecutive hours can sit
/// in different folds, so scores measure interpolation, not forecasting.
std::vector<std::vector<std::size_t>> kfold(std::size_t n, int k, std::uint64_t seed);

/// Cartesian grid over the five searched settings. Expansion order:
/// max_depth outermost, then min_child_weight, eta, subsample, and
/// colsample_bytree innermost.
struct GridSpec {
  std::vector<int> max_depth;
  std::vector<double> min_child_weight;
  std::vector<double> eta;
  std::vector<double> subsample;
  std::vector<double> colsample_bytree;
  int k = 10;  // CV folds

  std::size_t size() const;
  std::vector<TrainConfig> expand(const TrainConfig& base) const;
};

struct TunePointResult {
  std::size_t index = 0;  // position in expansion order
  TrainConfig config;
  std::vector<double> fold_rmsle;
  double mean_rmsle = 0.0;
};

struct TuneReport {
  std::vector<TunePointResult> points;  // expansion order
  std::size_t winner = 0;               // index into points
  int k = 0;
  std::uint64_t seed = 0;
  std::size_t n_rows = 0;
};

/// Evaluates every grid point with the same k folds (drawn once from the
/// base seed) and scores each by mean out-of-fold RMSLE. The winner is
/// the lowest mean; exact ties go to the smaller max_depth, then the
/// earlier grid position. Grid points are evaluated in parallel; results
/// are identical for any thread count.
TuneReport grid_search(const Dataset& data, const TrainConfig& base, const GridSpec& grid,
                       int threads);

void write_tune_summary_csv(std::ostream& out, const TuneReport& report);
void write_tune_folds_csv(std::ostream& out, const TuneReport& report);
void write_tune_report_json(std::ostream& out, const TuneReport& report);

}  // namespace ridecast
