#include <gtest/gtest.h>

#include <cmath>

#include "ridecast/errors.hpp"
#include "ridecast/gbt.hpp"
#include "ridecast/metrics.hpp"
#include "testutil.hpp"

namespace ridecast {
namespace {

Dataset tiny_step() {
  // One feature, a step in the target at x = 2.5.
  Dataset d;
  d.feature_names = {"x"};
  d.n_rows = 4;
  d.n_cols = 1;
  d.x = {1, 2, 3, 4};
  d.y = {1, 1, 9, 9};
  return d;
}

TrainConfig plain_config() {
  TrainConfig c;
  c.max_depth = 1;
  c.eta = 1.0;
  c.lambda = 0.0;
  c.num_rounds = 1;
  c.early_stopping_patience = 0;
  return c;
}

// Worked by hand: base = 1, so g = (0, 0, -8, -8), h = 1 each.
//   thr 1.5: 1/2 [0/1 + 256/3 - 256/4]          = 10.666...
//   thr 2.5: 1/2 [0/2 + 256/2 - 256/4]          = 32
//   thr 3.5: 1/2 [64/3 + 64/1 - 256/4]          = 10.666...
// Winner thr 2.5; leaves -G/H = 0 (left) and 8 (right).
TEST(Train, ReproducesHandTracedStump) {
  Dataset d = tiny_step();
  TrainConfig c = plain_config();
  c.base_score = 1.0;
  Ensemble model = train(d, c);

  ASSERT_EQ(model.trees.size(), 1u);
  const RegressionTree& tree = model.trees[0];
  ASSERT_EQ(tree.nodes.size(), 3u);
  const TreeNode& root = tree.nodes[0];
  EXPECT_EQ(root.feature, 0);
  EXPECT_DOUBLE_EQ(root.threshold, 2.5);
  EXPECT_DOUBLE_EQ(root.gain, 32.0);
  EXPECT_DOUBLE_EQ(root.cover, 4.0);
  EXPECT_DOUBLE_EQ(tree.nodes[root.left].value, 0.0);
  EXPECT_DOUBLE_EQ(tree.nodes[root.right].value, 8.0);

  auto preds = model.predict(d);
  EXPECT_DOUBLE_EQ(preds[0], 1.0);
  EXPECT_DOUBLE_EQ(preds[1], 1.0);
  EXPECT_DOUBLE_EQ(preds[2], 9.0);
  EXPECT_DOUBLE_EQ(preds[3], 9.0);

  // Routing is strict less-than: the threshold itself goes right.
  double at_threshold = 2.5, just_below = std::nextafter(2.5, 0.0);
  EXPECT_DOUBLE_EQ(model.predict_one(std::span(&at_threshold, 1)), 9.0);
  EXPECT_DOUBLE_EQ(model.predict_one(std::span(&just_below, 1)), 1.0);
}

TEST(Train, DefaultBaseScoreIsTargetMean) {
  Dataset d = tiny_step();
  TrainConfig c = plain_config();
  c.num_rounds = 0;
  Ensemble model = train(d, c);
  EXPECT_TRUE(model.trees.empty());
  EXPECT_DOUBLE_EQ(model.base_score, 5.0);
  double x = 1.0;
  EXPECT_DOUBLE_EQ(model.predict_one(std::span(&x, 1)), 5.0);
}

TEST(Train, MinChildWeightCollapsesToSingleLeaf) {
  Dataset d = tiny_step();
  TrainConfig c = plain_config();
  c.base_score = 1.0;
  c.min_child_weight = 3.0;  // every candidate split leaves a child with h-sum 2
  Ensemble model = train(d, c);
  ASSERT_EQ(model.trees.size(), 1u);
  ASSERT_EQ(model.trees[0].nodes.size(), 1u);
  // Single leaf fits the mean residual: -G/H = 16/4 = 4.
  EXPECT_DOUBLE_EQ(model.trees[0].nodes[0].value, 4.0);
}

TEST(Train, GammaPrunesLowGainSplits) {
  Dataset d = tiny_step();
  TrainConfig c = plain_config();
  c.base_score = 1.0;
  c.gamma = 33.0;  // above the best gain of 32
  Ensemble model = train(d, c);
  ASSERT_EQ(model.trees[0].nodes.size(), 1u);
}

TEST(Train, SplitTiesGoToLowestFeatureIndex) {
  // Two identical columns; both offer the same best split.
  Dataset d;
  d.feature_names = {"a", "b"};
  d.n_rows = 4;
  d.n_cols = 2;
  d.x = {1, 1, 2, 2, 3, 3, 4, 4};
  d.y = {1, 1, 9, 9};
  TrainConfig c = plain_config();
  c.base_score = 1.0;
  Ensemble model = train(d, c);
  EXPECT_EQ(model.trees[0].nodes[0].feature, 0);
}

TEST(Train, LambdaShrinksLeaves) {
  Dataset d = tiny_step();
  TrainConfig c = plain_config();
  c.base_score = 1.0;
  c.lambda = 2.0;
  Ensemble model = train(d, c);
  const RegressionTree& tree = model.trees[0];
  const TreeNode& root = tree.nodes[0];
  ASSERT_FALSE(root.is_leaf());
  // Right leaf: -G/(H + lambda) = 16/(2+2) = 4 instead of 8.
  EXPECT_DOUBLE_EQ(tree.nodes[root.right].value, 4.0);
}

TEST(Train, TrainingLossDecreasesWithoutStochasticity) {
  SplitMix64 rng(11);
  Dataset d = testutil::random_dataset(rng, 120, 5);
  TrainConfig c;
  c.max_depth = 3;
  c.eta = 0.1;
  c.num_rounds = 60;
  c.early_stopping_patience = 0;
  Ensemble model = train(d, c);
  ASSERT_EQ(model.trees.size(), 60u);

  // Replay the rounds: squared error of the truncated ensemble must be
  // non-increasing in the number of trees.
  auto loss_with = [&](std::size_t k) {
    double sum = 0;
    for (std::size_t i = 0; i < d.n_rows; ++i) {
      double m = model.base_score;
      for (std::size_t t = 0; t < k; ++t) m += model.trees[t].predict_one(d.row(i));
      double r = m - d.y[i];
      sum += r * r;
    }
    return sum;
  };
  double prev = loss_with(0);
  for (std::size_t k = 1; k <= 60; ++k) {
    double cur = loss_with(k);
    EXPECT_LE(cur, prev + 1e-9) << "round " << k;
    prev = cur;
  }
}

TEST(Train, DeterministicAcrossRunsIncludingSubsampling) {
  SplitMix64 rng(23);
  Dataset d = testutil::random_dataset(rng, 200, 6);
  TrainConfig c;
  c.max_depth = 4;
  c.eta = 0.1;
  c.num_rounds = 25;
  c.subsample = 0.7;
  c.colsample_bytree = 0.5;
  c.seed = 99;
  c.early_stopping_patience = 0;
  Ensemble a = train(d, c);
  Ensemble b = train(d, c);
  ASSERT_EQ(a.trees.size(), b.trees.size());
  for (std::size_t t = 0; t < a.trees.size(); ++t) {
    ASSERT_EQ(a.trees[t].nodes.size(), b.trees[t].nodes.size());
    for (std::size_t i = 0; i < a.trees[t].nodes.size(); ++i) {
      EXPECT_EQ(a.trees[t].nodes[i].feature, b.trees[t].nodes[i].feature);
      EXPECT_EQ(a.trees[t].nodes[i].threshold, b.trees[t].nodes[i].threshold);
      EXPECT_EQ(a.trees[t].nodes[i].value, b.trees[t].nodes[i].value);
    }
  }
  // A different seed should pick different row/column subsets somewhere.
  c.seed = 100;
  Ensemble other = train(d, c);
  auto pa = a.predict(d), po = other.predict(d);
  EXPECT_NE(pa, po);
}

TEST(Train, EarlyStoppingTruncatesToBestRound) {
  SplitMix64 rng(31);
  Dataset d = testutil::random_dataset(rng, 300, 5);
  TrainConfig c;
  c.max_depth = 6;
  c.eta = 0.3;  // aggressive on purpose so the holdout turns early
  c.num_rounds = 400;
  c.early_stopping_patience = 10;
  c.validation_fraction = 0.2;
  TrainSummary summary;
  Ensemble model = train(d, c, &summary);
  EXPECT_TRUE(summary.early_stopping_used);
  EXPECT_EQ(summary.monitor, "rmsle");
  EXPECT_EQ(summary.holdout_rows, 60u);
  EXPECT_EQ(model.trees.size(), static_cast<std::size_t>(summary.best_iteration));
  EXPECT_LE(summary.best_iteration, summary.rounds_trained);
  if (summary.early_stopped) {
    EXPECT_LT(summary.rounds_trained, c.num_rounds);
  }
}

TEST(Train, Log1pTransformPredictsOnOriginalScale) {
  SplitMix64 rng(41);
  Dataset d = testutil::random_dataset(rng, 150, 4);
  TrainConfig c;
  c.max_depth = 3;
  c.eta = 0.2;
  c.num_rounds = 50;
  c.transform = TargetTransform::Log1p;
  c.early_stopping_patience = 0;
  Ensemble model = train(d, c);
  EXPECT_EQ(model.transform, TargetTransform::Log1p);
  for (std::size_t i = 0; i < 10; ++i) {
    double margin = model.margin_one(d.row(i));
    EXPECT_DOUBLE_EQ(model.predict_one(d.row(i)), std::expm1(margin));
  }
  // Margin-scale base score is the mean of log1p(y), not of y.
  double mean_log = 0;
  for (double v : d.y) mean_log += std::log1p(v);
  mean_log /= static_cast<double>(d.n_rows);
  EXPECT_NEAR(model.base_score, mean_log, 1e-12);
}

TEST(Train, OverfitsSmallDataWithDeepTrees) {
  SplitMix64 rng(53);
  Dataset d = testutil::random_dataset(rng, 100, 5);
  TrainConfig c;
  c.max_depth = 8;
  c.eta = 0.3;
  c.lambda = 0.0;
  c.num_rounds = 300;
  c.early_stopping_patience = 0;
  Ensemble model = train(d, c);
  EXPECT_GT(r_squared(d.y, model.predict(d)), 0.99);
}

TEST(Train, RejectsBadConfigAndData) {
  Dataset d = tiny_step();
  TrainConfig c;
  c.max_depth = 0;
  EXPECT_THROW(train(d, c), ValidationError);
  c = TrainConfig{};
  c.eta = 0.0;
  EXPECT_THROW(train(d, c), ValidationError);
  c = TrainConfig{};
  c.subsample = 1.5;
  EXPECT_THROW(train(d, c), ValidationError);
  c = TrainConfig{};
  c.validation_fraction = 0.6;
  EXPECT_THROW(train(d, c), ValidationError);
  c = TrainConfig{};
  c.colsample_bytree = 0.1;  // 0.1 * 1 feature < 1 column
  EXPECT_THROW(train(d, c), ValidationError);

  Dataset nan_data = tiny_step();
  nan_data.x[2] = std::nan("");
  EXPECT_THROW(train(nan_data, TrainConfig{}), ValidationError);

  Dataset neg = tiny_step();
  neg.y[0] = -1.0;
  TrainConfig log_config;
  log_config.transform = TargetTransform::Log1p;
  EXPECT_THROW(train(neg, log_config), ValidationError);

  Dataset empty;
  empty.feature_names = {"x"};
  empty.n_cols = 1;
  EXPECT_THROW(train(empty, TrainConfig{}), ValidationError);
}

TEST(Importance, SingleUsefulFeatureTakesAllGain) {
  // Second column is constant, so it can never split.
  Dataset d = tiny_step();
  d.feature_names = {"x", "flat"};
  d.n_cols = 2;
  d.x = {1, 7, 2, 7, 3, 7, 4, 7};
  TrainConfig c = plain_config();
  c.base_score = 1.0;
  Ensemble model = train(d, c);
  for (ImportanceKind kind : {ImportanceKind::TotalGain, ImportanceKind::Weight}) {
    ImportanceReport report = feature_importance(model, kind);
    ASSERT_EQ(report.percent.size(), 2u);
    EXPECT_FALSE(report.degenerate);
    EXPECT_DOUBLE_EQ(report.percent[0], 100.0);
    EXPECT_DOUBLE_EQ(report.percent[1], 0.0);
  }
}

TEST(Importance, PercentagesSumToHundred) {
  SplitMix64 rng(61);
  Dataset d = testutil::random_dataset(rng, 200, 6);
  TrainConfig c;
  c.max_depth = 4;
  c.eta = 0.1;
  c.num_rounds = 40;
  c.early_stopping_patience = 0;
  Ensemble model = train(d, c);
  for (ImportanceKind kind : {ImportanceKind::TotalGain, ImportanceKind::Weight}) {
    ImportanceReport report = feature_importance(model, kind);
    double total = 0;
    for (double p : report.percent) total += p;
    EXPECT_NEAR(total, 100.0, 1e-9);
  }
}

TEST(Importance, NoSplitsIsDegenerate) {
  Dataset d = tiny_step();
  TrainConfig c = plain_config();
  c.num_rounds = 0;
  Ensemble model = train(d, c);
  ImportanceReport report = feature_importance(model, ImportanceKind::TotalGain);
  EXPECT_TRUE(report.degenerate);
  EXPECT_DOUBLE_EQ(report.percent[0], 0.0);
}

TEST(TargetTransformNames, RoundTrip) {
  EXPECT_STREQ(target_transform_name(TargetTransform::None), "none");
  EXPECT_STREQ(target_transform_name(TargetTransform::Log1p), "log1p");
  EXPECT_EQ(parse_target_transform("log1p"), TargetTransform::Log1p);
  EXPECT_EQ(parse_target_transform("none"), TargetTransform::None);
  EXPECT_FALSE(parse_target_transform("sqrt").has_value());
}

}  // namespace
}  // namespace ridecast
