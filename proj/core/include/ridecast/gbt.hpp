#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ridecast/features.hpp"

namespace ridecast {

enum class TargetTransform { None, Log1p };

const char* target_transform_name(TargetTransform t);
std::optional<TargetTransform> parse_target_transform(std::string_view name);

struct TrainConfig {
  int max_depth = 6;
  double min_child_weight = 1.0;
  double eta = 0.01;
  double subsample = 1.0;
  double colsample_bytree = 1.0;
  double lambda = 1.0;  // L2 penalty on leaf weights
  double gamma = 0.0;   // per-split gain threshold
  int num_rounds = 2000;
  std::optional<double> base_score;  // default: mean of the (transformed) target
  std::uint64_t seed = 0;
  TargetTransform transform = TargetTransform::None;
  int early_stopping_patience = 50;  // 0 disables early stopping
  double validation_fraction = 0.1;  // holdout carved from the training rows

  /// Throws ValidationError on out-of-range values. Needs the feature
  /// count to check that column subsampling keeps at least one column.
  void validate(std::size_t n_features) const;
};

/// One node of a regression tree. Nodes live in a flat vector; the root
/// is index 0. Internal nodes route x[feature] < threshold to the left
/// child. value is the leaf weight with the learning rate already
/// applied; cover counts the training rows routed through the node.
struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1, right = -1;
  double value = 0.0;
  double cover = 0.0;
  double gain = 0.0;  // split gain, internal nodes only

  bool is_leaf() const { return feature < 0; }
};

struct RegressionTree {
  std::vector<TreeNode> nodes;

  double predict_one(std::span<const double> x) const;
  int depth() const;
  std::size_t leaf_count() const;
};

/// Additive model over regression trees. margin is the raw score
/// base_score + sum of leaf values; predict applies the inverse target
/// transform on top of it.
struct Ensemble {
  std::vector<RegressionTree> trees;
  double base_score = 0.0;
  std::vector<std::string> feature_names;
  TargetTransform transform = TargetTransform::None;
  TrainConfig config;      // settings the model was trained with
  int best_iteration = 0;  // trees kept after early stopping

  double margin_one(std::span<const double> x) const;
  double predict_one(std::span<const double> x) const;
  std::vector<double> predict(const Dataset& data) const;
};

struct TrainSummary {
  int rounds_trained = 0;      // trees grown before truncation
  int best_iteration = 0;      // trees kept
  bool early_stopping_used = false;
  bool early_stopped = false;  // stopped before num_rounds
  std::string monitor;         // "rmsle" or "rmse", empty when unused
  std::size_t holdout_rows = 0;
  double best_monitor_value = 0.0;
};

/// Second-order gradient boosting for squared error on the (optionally
/// log1p-transformed) target: g_i = prediction - target, h_i = 1, exact
/// greedy splits at midpoints of adjacent distinct feature values,
/// gain = 1/2 [G_L^2/(H_L+lambda) + G_R^2/(H_R+lambda)
///             - (G_L+G_R)^2/(H_L+H_R+lambda)] - gamma.
/// Splits with gain <= 0 or a child below min_child_weight are
/// rejected; ties break toward the lowest feature index, then the
/// lowest threshold. Deterministic for a fixed seed and input order.
Ensemble train(const Dataset& data, const TrainConfig& config, TrainSummary* summary = nullptr);

enum class ImportanceKind { TotalGain, Weight };

struct ImportanceReport {
  ImportanceKind kind = ImportanceKind::TotalGain;
  std::vector<double> percent;  // per feature, sums to 100 unless degenerate
  bool degenerate = false;      // model has no splits; percent is all zeros
};

/// Split-based importance: TotalGain accumulates split gains per
/// feature, Weight counts splits. Normalized to percentages.
ImportanceReport feature_importance(const Ensemble& model, ImportanceKind kind);

}  // namespace ridecast
