#include "ridecast/gbt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

#include "ridecast/errors.hpp"
#include "ridecast/metrics.hpp"
#include "ridecast/rng.hpp"

namespace ridecast {
namespace {

constexpr std::uint64_t kTagHoldout = 1;
constexpr std::uint64_t kTagRowSample = 2;
constexpr std::uint64_t kTagColSample = 3;

/// floor(frac * n) with a tiny bias so exact fractions (0.8 * 10) do not
/// land one short through floating point.
std::size_t scaled_count(double frac, std::size_t n) {
  return static_cast<std::size_t>(std::floor(frac * static_cast<double>(n) + 1e-9));
}

double transform_value(TargetTransform t, double y) {
  return t == TargetTransform::Log1p ? std::log1p(y) : y;
}

double inverse_transform_value(TargetTransform t, double margin) {
  return t == TargetTransform::Log1p ? std::expm1(margin) : margin;
}

/// Grows one tree depth-first. Row order per feature is established once
/// at the root and partitioned stably down the tree, so no per-node sort
/// is needed and results do not depend on sort stability.
class TreeBuilder {
 public:
  TreeBuilder(const Dataset& data, const TrainConfig& cfg, std::span<const double> gradients,
              std::vector<int> columns)
      : data_(data), cfg_(cfg), g_(gradients), columns_(std::move(columns)) {}

  RegressionTree build(std::vector<std::vector<std::uint32_t>> root_order, double root_g_sum) {
    RegressionTree tree;
    build_node(std::move(root_order), 0, root_g_sum, tree);
    return tree;
  }

 private:
  double x(std::uint32_t row, int col) const { return data_.at(row, static_cast<std::size_t>(col)); }

  int build_node(std::vector<std::vector<std::uint32_t>> order, int depth, double g_sum,
                 RegressionTree& tree) {
    const std::size_t n = order[0].size();
    const double h_sum = static_cast<double>(n);  // h_i = 1 under squared error
    const int node_idx = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes[node_idx].cover = h_sum;

    int best_k = -1;
    double best_gain = 0.0, best_thr = 0.0, best_g_left = 0.0;
    std::size_t best_n_left = 0;
    if (depth < cfg_.max_depth && n >= 2) {
      const double parent_term = g_sum * g_sum / (h_sum + cfg_.lambda);
      for (std::size_t k = 0; k < columns_.size(); ++k) {
        const std::vector<std::uint32_t>& ord = order[k];
        const int f = columns_[k];
        double g_left = 0.0;
        for (std::size_t i = 0; i + 1 < n; ++i) {
          g_left += g_[ord[i]];
          const double v = x(ord[i], f), v_next = x(ord[i + 1], f);
          if (v == v_next) continue;
          const double h_left = static_cast<double>(i + 1);
          const double h_right = h_sum - h_left;
          if (h_left < cfg_.min_child_weight || h_right < cfg_.min_child_weight) continue;
          const double g_right = g_sum - g_left;
          const double gain = 0.5 * (g_left * g_left / (h_left + cfg_.lambda) +
                                     g_right * g_right / (h_right + cfg_.lambda) - parent_term) -
                              cfg_.gamma;
          // Strict > keeps the first candidate on ties; features and
          // thresholds are scanned ascending, so ties resolve to the
          // lowest feature index, then the lowest threshold.
          if (gain > best_gain && gain > 0.0) {
            double thr = 0.5 * (v + v_next);
            if (!(thr > v)) thr = v_next;  // adjacent representables: keep routing consistent
            best_k = static_cast<int>(k);
            best_gain = gain;
            best_thr = thr;
            best_g_left = g_left;
            best_n_left = i + 1;
          }
        }
      }
    }

    if (best_k < 0) {
      tree.nodes[node_idx].value = -cfg_.eta * g_sum / (h_sum + cfg_.lambda);
      return node_idx;
    }

    const int split_feature = columns_[static_cast<std::size_t>(best_k)];
    tree.nodes[node_idx].feature = split_feature;
    tree.nodes[node_idx].threshold = best_thr;
    tree.nodes[node_idx].gain = best_gain;

    std::vector<std::vector<std::uint32_t>> left(order.size()), right(order.size());
    for (std::size_t k = 0; k < order.size(); ++k) {
      left[k].reserve(best_n_left);
      right[k].reserve(n - best_n_left);
      for (std::uint32_t row : order[k]) {
        if (x(row, split_feature) < best_thr)
          left[k].push_back(row);
        else
          right[k].push_back(row);
      }
    }
    order.clear();

    const int left_idx = build_node(std::move(left), depth + 1, best_g_left, tree);
    const int right_idx = build_node(std::move(right), depth + 1, g_sum - best_g_left, tree);
    tree.nodes[node_idx].left = left_idx;
    tree.nodes[node_idx].right = right_idx;
    return node_idx;
  }

  const Dataset& data_;
  const TrainConfig& cfg_;
  std::span<const double> g_;
  std::vector<int> columns_;
};

}  // namespace

const char* target_transform_name(TargetTransform t) {
  return t == TargetTransform::Log1p ? "log1p" : "none";
}

std::optional<TargetTransform> parse_target_transform(std::string_view name) {
  if (name == "none") return TargetTransform::None;
  if (name == "log1p") return TargetTransform::Log1p;
  return std::nullopt;
}

void TrainConfig::validate(std::size_t n_features) const {
  if (n_features == 0) throw ValidationError("training data has no feature columns");
  if (max_depth < 1 || max_depth > 30)
    throw ValidationError("max_depth must be in [1, 30], got " + std::to_string(max_depth));
  if (!(min_child_weight >= 0.0))
    throw ValidationError("min_child_weight must be >= 0");
  if (!(eta > 0.0 && eta <= 1.0))
    throw ValidationError("eta must be in (0, 1], got " + std::to_string(eta));
  if (!(subsample > 0.0 && subsample <= 1.0))
    throw ValidationError("subsample must be in (0, 1], got " + std::to_string(subsample));
  if (!(colsample_bytree > 0.0 && colsample_bytree <= 1.0))
    throw ValidationError("colsample_bytree must be in (0, 1], got " +
                          std::to_string(colsample_bytree));
  if (scaled_count(colsample_bytree, n_features) < 1)
    throw ValidationError("colsample_bytree " + std::to_string(colsample_bytree) + " over " +
                          std::to_string(n_features) + " features selects no columns");
  if (!(lambda >= 0.0)) throw ValidationError("lambda must be >= 0");
  if (!(gamma >= 0.0)) throw ValidationError("gamma must be >= 0");
  if (num_rounds < 0 || num_rounds > 100000)
    throw ValidationError("num_rounds must be in [0, 100000], got " + std::to_string(num_rounds));
  if (base_score && !std::isfinite(*base_score))
    throw ValidationError("base_score must be finite");
  if (early_stopping_patience < 0)
    throw ValidationError("early_stopping_patience must be >= 0");
  if (!(validation_fraction > 0.0 && validation_fraction <= 0.5))
    throw ValidationError("validation_fraction must be in (0, 0.5], got " +
                          std::to_string(validation_fraction));
}

double RegressionTree::predict_one(std::span<const double> x) const {
  const TreeNode* node = &nodes[0];
  while (!node->is_leaf()) {
    node = &nodes[static_cast<std::size_t>(
        x[static_cast<std::size_t>(node->feature)] < node->threshold ? node->left : node->right)];
  }
  return node->value;
}

int RegressionTree::depth() const {
  // Depth of the deepest leaf; a lone root is depth 0.
  std::vector<std::pair<int, int>> stack{{0, 0}};
  int deepest = 0;
  while (!stack.empty()) {
    auto [idx, d] = stack.back();
    stack.pop_back();
    const TreeNode& node = nodes[static_cast<std::size_t>(idx)];
    if (node.is_leaf()) {
      deepest = std::max(deepest, d);
    } else {
      stack.push_back({node.left, d + 1});
      stack.push_back({node.right, d + 1});
    }
  }
  return deepest;
}

std::size_t RegressionTree::leaf_count() const {
  std::size_t n = 0;
  for (const TreeNode& node : nodes)
    if (node.is_leaf()) ++n;
  return n;
}

double Ensemble::margin_one(std::span<const double> x) const {
  double m = base_score;
  for (const RegressionTree& tree : trees) m += tree.predict_one(x);
  return m;
}

double Ensemble::predict_one(std::span<const double> x) const {
  return inverse_transform_value(transform, margin_one(x));
}

std::vector<double> Ensemble::predict(const Dataset& data) const {
  if (data.n_cols != feature_names.size())
    throw ValidationError("prediction input has " + std::to_string(data.n_cols) +
                          " columns, model expects " + std::to_string(feature_names.size()));
  std::vector<double> out(data.n_rows);
  for (std::size_t i = 0; i < data.n_rows; ++i) out[i] = predict_one(data.row(i));
  return out;
}

Ensemble train(const Dataset& data, const TrainConfig& config, TrainSummary* summary) {
  config.validate(data.n_cols);
  if (data.n_rows == 0) throw ValidationError("training data has no rows");
  for (double v : data.x)
    if (!std::isfinite(v)) throw ValidationError("training features contain a non-finite value");
  for (std::size_t i = 0; i < data.y.size(); ++i) {
    if (!std::isfinite(data.y[i]))
      throw ValidationError("training target contains a non-finite value");
    if (config.transform == TargetTransform::Log1p && data.y[i] < 0.0)
      throw ValidationError("log1p target transform needs non-negative targets; row " +
                            std::to_string(i) + " has " + std::to_string(data.y[i]));
  }

  TrainSummary local_summary;
  TrainSummary& sum = summary ? *summary : local_summary;
  sum = TrainSummary{};

  // Optional early-stopping holdout carved from the training rows.
  const std::size_t n_all = data.n_rows;
  bool use_es = config.early_stopping_patience > 0 && config.num_rounds > 0;
  std::vector<std::size_t> holdout_idx;
  if (use_es) {
    std::size_t k = scaled_count(config.validation_fraction, n_all);
    if (k == 0) {
      use_es = false;  // too few rows to monitor anything
    } else {
      SplitMix64 rng = SplitMix64::stream(config.seed, 0, kTagHoldout);
      holdout_idx = sample_without_replacement(n_all, k, rng);
    }
  }

  Dataset fit_owned, hold_owned;
  const Dataset* fit = &data;
  if (use_es) {
    std::vector<std::size_t> fit_idx;
    fit_idx.reserve(n_all - holdout_idx.size());
    std::size_t next_hold = 0;
    for (std::size_t i = 0; i < n_all; ++i) {
      if (next_hold < holdout_idx.size() && holdout_idx[next_hold] == i)
        ++next_hold;
      else
        fit_idx.push_back(i);
    }
    fit_owned = data.select(fit_idx);
    hold_owned = data.select(holdout_idx);
    fit = &fit_owned;
  }
  const std::size_t n = fit->n_rows;
  const std::size_t m = fit->n_cols;

  std::vector<double> z(n);
  for (std::size_t i = 0; i < n; ++i) z[i] = transform_value(config.transform, fit->y[i]);

  Ensemble model;
  model.feature_names = data.feature_names;
  model.transform = config.transform;
  model.config = config;
  if (config.base_score) {
    model.base_score = *config.base_score;
  } else {
    // Mean of the full (transformed) training target, holdout included,
    // so the intercept does not depend on the holdout draw.
    double mean = 0.0;
    for (double yv : data.y) mean += transform_value(config.transform, yv);
    model.base_score = mean / static_cast<double>(n_all);
  }

  // Row order per feature, established once; per-tree orders are filtered
  // from these, so only the initial sort costs n log n.
  std::vector<std::vector<std::uint32_t>> global_order(m);
  for (std::size_t j = 0; j < m; ++j) {
    global_order[j].resize(n);
    std::iota(global_order[j].begin(), global_order[j].end(), std::uint32_t{0});
    std::sort(global_order[j].begin(), global_order[j].end(),
              [&](std::uint32_t a, std::uint32_t b) { return fit->at(a, j) < fit->at(b, j); });
  }

  std::vector<double> margin(n, model.base_score);
  std::vector<double> g(n);

  std::vector<double> hold_margin, hold_pred;
  bool monitor_rmsle = true;
  if (use_es) {
    hold_margin.assign(hold_owned.n_rows, model.base_score);
    hold_pred.resize(hold_owned.n_rows);
    for (double yv : hold_owned.y)
      if (yv < 0.0) monitor_rmsle = false;  // RMSLE is undefined below zero
    sum.early_stopping_used = true;
    sum.monitor = monitor_rmsle ? "rmsle" : "rmse";
    sum.holdout_rows = hold_owned.n_rows;
  }

  const std::size_t n_sample = scaled_count(config.subsample, n);
  if (n_sample == 0)
    throw ValidationError("subsample " + std::to_string(config.subsample) + " over " +
                          std::to_string(n) + " rows selects nothing");
  const std::size_t n_cols_sample = scaled_count(config.colsample_bytree, m);

  double best_metric = std::numeric_limits<double>::infinity();
  int best_round = -1;
  int rounds_since_best = 0;

  for (int round = 0; round < config.num_rounds; ++round) {
    for (std::size_t i = 0; i < n; ++i) g[i] = margin[i] - z[i];

    std::vector<int> columns;
    if (n_cols_sample < m) {
      SplitMix64 rng = SplitMix64::stream(config.seed, static_cast<std::uint64_t>(round),
                                          kTagColSample);
      for (std::size_t c : sample_without_replacement(m, n_cols_sample, rng))
        columns.push_back(static_cast<int>(c));
    } else {
      columns.resize(m);
      std::iota(columns.begin(), columns.end(), 0);
    }

    std::vector<char> in_sample;
    double root_g_sum = 0.0;
    if (n_sample < n) {
      SplitMix64 rng = SplitMix64::stream(config.seed, static_cast<std::uint64_t>(round),
                                          kTagRowSample);
      in_sample.assign(n, 0);
      for (std::size_t r : sample_without_replacement(n, n_sample, rng)) {
        in_sample[r] = 1;
        root_g_sum += g[r];
      }
    } else {
      for (double gv : g) root_g_sum += gv;
    }

    std::vector<std::vector<std::uint32_t>> root_order(columns.size());
    for (std::size_t k = 0; k < columns.size(); ++k) {
      const auto& full = global_order[static_cast<std::size_t>(columns[k])];
      if (in_sample.empty()) {
        root_order[k] = full;
      } else {
        root_order[k].reserve(n_sample);
        for (std::uint32_t r : full)
          if (in_sample[r]) root_order[k].push_back(r);
      }
    }

    TreeBuilder builder(*fit, config, g, std::move(columns));
    RegressionTree tree = builder.build(std::move(root_order), root_g_sum);

    for (std::size_t i = 0; i < n; ++i) margin[i] += tree.predict_one(fit->row(i));
    model.trees.push_back(std::move(tree));

    if (use_es) {
      const RegressionTree& last = model.trees.back();
      for (std::size_t i = 0; i < hold_owned.n_rows; ++i) {
        hold_margin[i] += last.predict_one(hold_owned.row(i));
        hold_pred[i] = inverse_transform_value(config.transform, hold_margin[i]);
      }
      double metric = monitor_rmsle ? rmsle(hold_owned.y, hold_pred)
                                    : rmse(hold_owned.y, hold_pred);
      if (metric + 1e-12 < best_metric) {
        best_metric = metric;
        best_round = round;
        rounds_since_best = 0;
      } else {
        ++rounds_since_best;
        if (rounds_since_best >= config.early_stopping_patience) {
          sum.early_stopped = true;
          break;
        }
      }
    }
  }

  sum.rounds_trained = static_cast<int>(model.trees.size());
  if (use_es && best_round >= 0) {
    model.trees.resize(static_cast<std::size_t>(best_round) + 1);
    sum.best_monitor_value = best_metric;
  }
  model.best_iteration = static_cast<int>(model.trees.size());
  sum.best_iteration = model.best_iteration;
  return model;
}

ImportanceReport feature_importance(const Ensemble& model, ImportanceKind kind) {
  ImportanceReport report;
  report.kind = kind;
  report.percent.assign(model.feature_names.size(), 0.0);
  for (const RegressionTree& tree : model.trees) {
    for (const TreeNode& node : tree.nodes) {
      if (node.is_leaf()) continue;
      report.percent[static_cast<std::size_t>(node.feature)] +=
          kind == ImportanceKind::TotalGain ? node.gain : 1.0;
    }
  }
  double total = 0.0;
  for (double v : report.percent) total += v;
  if (total <= 0.0) {
    report.degenerate = true;
    std::fill(report.percent.begin(), report.percent.end(), 0.0);
    return report;
  }
  for (double& v : report.percent) v = 100.0 * v / total;
  return report;
}

}  // namespace ridecast
