#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ridecast/gbt.hpp"

namespace ridecast {

/// Expected margin of the model under the training distribution: the
/// base score plus each tree's cover-weighted mean leaf value. SHAP
/// values decompose margin(x) - base_value across the features.
double shap_base_value(const Ensemble& model);

/// Exact per-feature SHAP values for one sample on the margin scale,
/// computed with the path-dependent polynomial-time recursion. Conditional
/// expectations weight children by training cover. Satisfies
/// base_value + sum(phi) == margin(x) up to rounding.
std::vector<double> tree_shap(const Ensemble& model, std::span<const double> x);

/// Reference implementation by direct Shapley enumeration over all 2^M
/// feature subsets; same conditional expectation as tree_shap. Costs
/// O(2^M) tree walks, so it refuses models with more than 15 features.
std::vector<double> brute_force_shap(const Ensemble& model, std::span<const double> x);

/// SHAP values for every row of a dataset; rows are independent, so they
/// are computed in parallel. Output is identical for any thread count.
struct ShapMatrix {
  std::size_t n_rows = 0, n_cols = 0;
  std::vector<double> values;  // row-major
  double base_value = 0.0;

  double at(std::size_t row, std::size_t col) const { return values[row * n_cols + col]; }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(values).subspan(r * n_cols, n_cols);
  }
};

ShapMatrix explain_all(const Ensemble& model, const Dataset& data, int threads);

/// Global summary per feature: mean absolute SHAP value, its share of
/// the total, the resulting rank, and the sign of the Pearson
/// correlation between the feature and its SHAP values (a cheap
/// direction-of-effect readout). Constant features or constant SHAP
/// columns get direction 0 and a zero_variance flag.
struct ShapSummaryRow {
  std::size_t feature = 0;  // column index in the dataset
  std::string name;
  double mean_abs = 0.0;
  double share_pct = 0.0;
  int rank = 0;        // 1 = largest mean_abs
  int direction = 0;   // -1, 0, +1
  double correlation = 0.0;
  bool zero_variance = false;
};

std::vector<ShapSummaryRow> summarize_shap(const Dataset& data, const ShapMatrix& shap);
void write_shap_summary_csv(std::ostream& out, std::span<const ShapSummaryRow> rows);

/// Partner choice for a dependence plot: the other feature whose within-
/// bin ordering best explains the spread of the target's SHAP values
/// across deciles of the target feature. With fewer than 20 rows the
/// heuristic is noise, so the first other feature is returned with
/// low_sample set.
struct DependenceData {
  std::size_t target = 0;
  std::size_t partner = 0;
  bool low_sample = false;
  std::vector<double> scores;  // per-feature heuristic score; target entry is 0
};

DependenceData select_dependence_partner(const Dataset& data, const ShapMatrix& shap,
                                         std::size_t target);

/// One dependence table row per sample: target feature value, its SHAP
/// value, and the partner feature value for coloring.
void write_dependence_csv(std::ostream& out, const Dataset& data, const ShapMatrix& shap,
                          const DependenceData& dep);

/// Per-sample additive breakdown (force-plot data): base value, every
/// feature's value and contribution, and the reconstructed prediction.
/// row indexes data/shap; row_label is the id written to the record
/// (callers explaining a subset pass the original row id).
void write_force_json(std::ostream& out, const Ensemble& model, const Dataset& data,
                      const ShapMatrix& shap, std::size_t row, std::size_t row_label);

}  // namespace ridecast
