#include "ridecast/model_io.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <vector>

#include "json.hpp"
#include "ridecast/errors.hpp"

namespace ridecast {
namespace {

using json = nlohmann::ordered_json;

json config_to_json(const TrainConfig& cfg) {
  json j;
  j["max_depth"] = cfg.max_depth;
  j["min_child_weight"] = cfg.min_child_weight;
  j["eta"] = cfg.eta;
  j["subsample"] = cfg.subsample;
  j["colsample_bytree"] = cfg.colsample_bytree;
  j["lambda"] = cfg.lambda;
  j["gamma"] = cfg.gamma;
  j["num_rounds"] = cfg.num_rounds;
  if (cfg.base_score) j["base_score"] = *cfg.base_score;
  j["seed"] = cfg.seed;
  j["early_stopping_patience"] = cfg.early_stopping_patience;
  j["validation_fraction"] = cfg.validation_fraction;
  return j;
}

TrainConfig config_from_json(const json& j) {
  TrainConfig cfg;
  cfg.max_depth = j.at("max_depth").get<int>();
  cfg.min_child_weight = j.at("min_child_weight").get<double>();
  cfg.eta = j.at("eta").get<double>();
  cfg.subsample = j.at("subsample").get<double>();
  cfg.colsample_bytree = j.at("colsample_bytree").get<double>();
  cfg.lambda = j.at("lambda").get<double>();
  cfg.gamma = j.at("gamma").get<double>();
  cfg.num_rounds = j.at("num_rounds").get<int>();
  if (j.contains("base_score")) cfg.base_score = j.at("base_score").get<double>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.early_stopping_patience = j.at("early_stopping_patience").get<int>();
  cfg.validation_fraction = j.at("validation_fraction").get<double>();
  return cfg;
}

std::string node_path(std::size_t tree_idx, std::size_t node_idx) {
  return "trees[" + std::to_string(tree_idx) + "].nodes[" + std::to_string(node_idx) + "]";
}

void validate_tree(const RegressionTree& tree, std::size_t n_features, std::size_t tree_idx) {
  const std::size_t n = tree.nodes.size();
  if (n == 0)
    throw ParseError("model JSON: trees[" + std::to_string(tree_idx) + "] has no nodes");
  std::vector<char> visited(n, 0);
  std::vector<std::size_t> stack{0};
  std::size_t reached = 0;
  while (!stack.empty()) {
    std::size_t idx = stack.back();
    stack.pop_back();
    if (visited[idx])
      throw ParseError("model JSON: " + node_path(tree_idx, idx) +
                       " is reached twice; tree is not a tree");
    visited[idx] = 1;
    ++reached;
    const TreeNode& node = tree.nodes[idx];
    if (!(node.cover > 0.0))
      throw ParseError("model JSON: " + node_path(tree_idx, idx) + " has cover " +
                       std::to_string(node.cover) + ", expected > 0");
    if (node.is_leaf()) {
      if (!std::isfinite(node.value))
        throw ParseError("model JSON: " + node_path(tree_idx, idx) + " has a non-finite leaf value");
      continue;
    }
    if (node.feature >= static_cast<int>(n_features))
      throw ParseError("model JSON: " + node_path(tree_idx, idx) + " splits on feature " +
                       std::to_string(node.feature) + ", model has " +
                       std::to_string(n_features) + " features");
    if (!std::isfinite(node.threshold))
      throw ParseError("model JSON: " + node_path(tree_idx, idx) + " has a non-finite threshold");
    if (node.left < 0 || node.right < 0 || node.left >= static_cast<int>(n) ||
        node.right >= static_cast<int>(n) || node.left == node.right)
      throw ParseError("model JSON: " + node_path(tree_idx, idx) + " has bad child indices " +
                       std::to_string(node.left) + ", " + std::to_string(node.right));
    const double child_sum = tree.nodes[static_cast<std::size_t>(node.left)].cover +
                             tree.nodes[static_cast<std::size_t>(node.right)].cover;
    if (std::abs(node.cover - child_sum) > 1e-6 * std::max(1.0, node.cover))
      throw ParseError("model JSON: " + node_path(tree_idx, idx) + " cover " +
                       std::to_string(node.cover) + " != child sum " + std::to_string(child_sum));
    stack.push_back(static_cast<std::size_t>(node.left));
    stack.push_back(static_cast<std::size_t>(node.right));
  }
  if (reached != n)
    throw ParseError("model JSON: trees[" + std::to_string(tree_idx) + "] has " +
                     std::to_string(n - reached) + " unreachable node(s)");
}

}  // namespace

void save_model_json(std::ostream& out, const Ensemble& model) {
  json doc;
  doc["format"] = kModelFormat;
  doc["format_version"] = kModelFormatVersion;
  doc["feature_names"] = model.feature_names;
  doc["base_score"] = model.base_score;
  doc["target_transform"] = target_transform_name(model.transform);
  doc["best_iteration"] = model.best_iteration;
  doc["config"] = config_to_json(model.config);
  json trees = json::array();
  for (const RegressionTree& tree : model.trees) {
    json nodes = json::array();
    for (const TreeNode& node : tree.nodes) {
      json n;
      if (node.is_leaf()) {
        n["leaf"] = node.value;
      } else {
        n["split"] = node.feature;
        n["threshold"] = node.threshold;
        n["left"] = node.left;
        n["right"] = node.right;
        n["gain"] = node.gain;
      }
      n["cover"] = node.cover;
      nodes.push_back(std::move(n));
    }
    trees.push_back(json{{"nodes", std::move(nodes)}});
  }
  doc["trees"] = std::move(trees);
  out << doc.dump(1) << '\n';
  if (!out) throw IoError("write error on model output");
}

Ensemble load_model_json(std::istream& in) {
  json doc;
  try {
    doc = json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model JSON: ") + e.what());
  }

  try {
    if (doc.at("format").get<std::string>() != kModelFormat)
      throw ParseError("model JSON: format is '" + doc.at("format").get<std::string>() +
                       "', expected '" + kModelFormat + "'");
    if (doc.at("format_version").get<int>() != kModelFormatVersion)
      throw ParseError("model JSON: unsupported format_version " +
                       std::to_string(doc.at("format_version").get<int>()));

    Ensemble model;
    model.feature_names = doc.at("feature_names").get<std::vector<std::string>>();
    if (model.feature_names.empty())
      throw ParseError("model JSON: feature_names is empty");
    model.base_score = doc.at("base_score").get<double>();
    auto transform = parse_target_transform(doc.at("target_transform").get<std::string>());
    if (!transform)
      throw ParseError("model JSON: unknown target_transform '" +
                       doc.at("target_transform").get<std::string>() + "'");
    model.transform = *transform;
    model.best_iteration = doc.at("best_iteration").get<int>();
    model.config = config_from_json(doc.at("config"));
    model.config.transform = model.transform;

    const json& trees = doc.at("trees");
    if (!trees.is_array()) throw ParseError("model JSON: trees must be an array");
    for (std::size_t t = 0; t < trees.size(); ++t) {
      const json& nodes = trees[t].at("nodes");
      if (!nodes.is_array())
        throw ParseError("model JSON: trees[" + std::to_string(t) + "].nodes must be an array");
      RegressionTree tree;
      tree.nodes.reserve(nodes.size());
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        const json& n = nodes[i];
        TreeNode node;
        node.cover = n.at("cover").get<double>();
        if (n.contains("leaf")) {
          node.value = n.at("leaf").get<double>();
        } else {
          node.feature = n.at("split").get<int>();
          if (node.feature < 0)
            throw ParseError("model JSON: " + node_path(t, i) + " has negative split feature");
          node.threshold = n.at("threshold").get<double>();
          node.left = n.at("left").get<int>();
          node.right = n.at("right").get<int>();
          node.gain = n.contains("gain") ? n.at("gain").get<double>() : 0.0;
        }
        tree.nodes.push_back(node);
      }
      validate_tree(tree, model.feature_names.size(), t);
      model.trees.push_back(std::move(tree));
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model JSON: ") + e.what());
  }
}

}  // namespace ridecast
