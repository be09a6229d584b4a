#include "ridecast/shap.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <ostream>

#include "json.hpp"
#include "ridecast/csv.hpp"
#include "ridecast/errors.hpp"
#include "ridecast/parallel.hpp"

namespace ridecast {
namespace {

double tree_expected_value(const RegressionTree& tree, std::size_t node_idx) {
  const TreeNode& node = tree.nodes[node_idx];
  if (node.is_leaf()) return node.value;
  const TreeNode& l = tree.nodes[static_cast<std::size_t>(node.left)];
  const TreeNode& r = tree.nodes[static_cast<std::size_t>(node.right)];
  return (l.cover * tree_expected_value(tree, static_cast<std::size_t>(node.left)) +
          r.cover * tree_expected_value(tree, static_cast<std::size_t>(node.right))) /
         node.cover;
}

/// One step of the feature path the recursion walks: which feature
/// entered (d), the fraction of paths that flow through when it is
/// "absent" (z, the cover ratio) or "present" (o, 0 or 1), and the
/// permutation weight polynomial coefficient (w).
struct PathElement {
  int d = -1;
  double z = 0.0;
  double o = 0.0;
  double w = 0.0;
};

void extend_path(PathElement* path, int depth, double pz, double po, int pi) {
  path[depth] = PathElement{pi, pz, po, depth == 0 ? 1.0 : 0.0};
  for (int i = depth - 1; i >= 0; --i) {
    path[i + 1].w += po * path[i].w * (i + 1) / static_cast<double>(depth + 1);
    path[i].w = pz * path[i].w * (depth - i) / static_cast<double>(depth + 1);
  }
}

/// Exact inverse of extend_path for the element at index; shifts the
/// tail down so the path shortens by one.
void unwind_path(PathElement* path, int depth, int index) {
  const double z = path[index].z;
  const double o = path[index].o;
  if (o != 0.0) {
    double next = path[depth].w;
    for (int i = depth - 1; i >= 0; --i) {
      const double tmp = path[i].w;
      path[i].w = next * (depth + 1) / ((i + 1) * o);
      next = tmp - path[i].w * z * (depth - i) / static_cast<double>(depth + 1);
    }
  } else {
    for (int i = 0; i < depth; ++i)
      path[i].w = path[i].w * (depth + 1) / (z * (depth - i));
  }
  for (int i = index; i < depth; ++i) {
    path[i].d = path[i + 1].d;
    path[i].z = path[i + 1].z;
    path[i].o = path[i + 1].o;
  }
}

/// Sum of the unwound weights without materializing the shorter path.
double unwound_path_sum(const PathElement* path, int depth, int index) {
  const double z = path[index].z;
  const double o = path[index].o;
  double total = 0.0;
  if (o != 0.0) {
    double next = path[depth].w;
    for (int i = depth - 1; i >= 0; --i) {
      const double tmp = next * (depth + 1) / ((i + 1) * o);
      total += tmp;
      next = path[i].w - tmp * z * (depth - i) / static_cast<double>(depth + 1);
    }
  } else {
    for (int i = 0; i < depth; ++i)
      total += path[i].w * (depth + 1) / (z * (depth - i));
  }
  return total;
}

void shap_recurse(const RegressionTree& tree, std::span<const double> x, double* phi,
                  std::size_t node_idx, int depth, PathElement* parent_path, double pz, double po,
                  int pi) {
  PathElement* path = parent_path + depth + 1;
  std::copy(parent_path, parent_path + depth, path);
  extend_path(path, depth, pz, po, pi);

  const TreeNode& node = tree.nodes[node_idx];
  if (node.is_leaf()) {
    for (int i = 1; i <= depth; ++i) {
      const double w = unwound_path_sum(path, depth, i);
      phi[path[i].d] += w * (path[i].o - path[i].z) * node.value;
    }
    return;
  }

  const std::size_t hot =
      static_cast<std::size_t>(x[static_cast<std::size_t>(node.feature)] < node.threshold
                                   ? node.left
                                   : node.right);
  const std::size_t cold =
      hot == static_cast<std::size_t>(node.left) ? static_cast<std::size_t>(node.right)
                                                 : static_cast<std::size_t>(node.left);
  const double hot_zero = tree.nodes[hot].cover / node.cover;
  const double cold_zero = tree.nodes[cold].cover / node.cover;

  // A feature already on the path is unwound first: its previous
  // fractions are folded into this split and the path shortens by one.
  double incoming_zero = 1.0, incoming_one = 1.0;
  int found = -1;
  for (int i = 1; i <= depth; ++i) {
    if (path[i].d == node.feature) {
      found = i;
      break;
    }
  }
  if (found >= 0) {
    incoming_zero = path[found].z;
    incoming_one = path[found].o;
    unwind_path(path, depth, found);
    --depth;
  }

  shap_recurse(tree, x, phi, hot, depth + 1, path, hot_zero * incoming_zero, incoming_one,
               node.feature);
  shap_recurse(tree, x, phi, cold, depth + 1, path, cold_zero * incoming_zero, 0.0, node.feature);
}

void check_sample_width(const Ensemble& model, std::span<const double> x) {
  if (x.size() != model.feature_names.size())
    throw ValidationError("sample has " + std::to_string(x.size()) + " features, model expects " +
                          std::to_string(model.feature_names.size()));
}

}  // namespace

double shap_base_value(const Ensemble& model) {
  double base = model.base_score;
  for (const RegressionTree& tree : model.trees) base += tree_expected_value(tree, 0);
  return base;
}

std::vector<double> tree_shap(const Ensemble& model, std::span<const double> x) {
  check_sample_width(model, x);
  std::vector<double> phi(x.size(), 0.0);
  std::vector<PathElement> buffer;
  for (const RegressionTree& tree : model.trees) {
    const int d = tree.depth() + 2;
    buffer.assign(static_cast<std::size_t>(d * (d + 1) / 2), PathElement{});
    shap_recurse(tree, x, phi.data(), 0, 0, buffer.data(), 1.0, 1.0, -1);
  }
  return phi;
}

std::vector<double> brute_force_shap(const Ensemble& model, std::span<const double> x) {
  check_sample_width(model, x);
  const std::size_t m = x.size();
  if (m > 15)
    throw ValidationError("brute-force SHAP enumerates 2^M subsets and is capped at 15 features; "
                          "model has " + std::to_string(m));

  // v(S): cover-weighted expectation with the features in S fixed at x.
  auto walk = [&](const RegressionTree& tree, std::uint32_t mask) {
    auto rec = [&](auto&& self, std::size_t idx) -> double {
      const TreeNode& node = tree.nodes[idx];
      if (node.is_leaf()) return node.value;
      if (mask & (1u << static_cast<unsigned>(node.feature))) {
        return self(self, static_cast<std::size_t>(
                              x[static_cast<std::size_t>(node.feature)] < node.threshold
                                  ? node.left
                                  : node.right));
      }
      const TreeNode& l = tree.nodes[static_cast<std::size_t>(node.left)];
      const TreeNode& r = tree.nodes[static_cast<std::size_t>(node.right)];
      return (l.cover * self(self, static_cast<std::size_t>(node.left)) +
              r.cover * self(self, static_cast<std::size_t>(node.right))) /
             node.cover;
    };
    return rec(rec, 0);
  };

  const std::uint32_t n_masks = 1u << m;
  std::vector<double> v(n_masks, 0.0);
  for (std::uint32_t mask = 0; mask < n_masks; ++mask)
    for (const RegressionTree& tree : model.trees) v[mask] += walk(tree, mask);

  std::vector<double> factorial(m + 1, 1.0);
  for (std::size_t i = 1; i <= m; ++i)
    factorial[i] = factorial[i - 1] * static_cast<double>(i);

  std::vector<double> phi(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const std::uint32_t bit = 1u << i;
    for (std::uint32_t mask = 0; mask < n_masks; ++mask) {
      if (mask & bit) continue;
      const std::size_t s = static_cast<std::size_t>(std::popcount(mask));
      const double weight = factorial[s] * factorial[m - s - 1] / factorial[m];
      phi[i] += weight * (v[mask | bit] - v[mask]);
    }
  }
  return phi;
}

ShapMatrix explain_all(const Ensemble& model, const Dataset& data, int threads) {
  if (data.n_cols != model.feature_names.size())
    throw ValidationError("dataset has " + std::to_string(data.n_cols) +
                          " columns, model expects " + std::to_string(model.feature_names.size()));
  ShapMatrix out;
  out.n_rows = data.n_rows;
  out.n_cols = data.n_cols;
  out.values.resize(data.n_rows * data.n_cols);
  out.base_value = shap_base_value(model);
  parallel_for(data.n_rows, threads, [&](std::size_t r) {
    std::vector<double> phi = tree_shap(model, data.row(r));
    std::copy(phi.begin(), phi.end(),
              out.values.begin() + static_cast<std::ptrdiff_t>(r * out.n_cols));
  });
  return out;
}

std::vector<ShapSummaryRow> summarize_shap(const Dataset& data, const ShapMatrix& shap) {
  if (shap.n_rows != data.n_rows || shap.n_cols != data.n_cols)
    throw ValidationError("SHAP matrix shape does not match the dataset");
  if (data.n_rows == 0) throw ValidationError("SHAP summary needs at least one row");

  const std::size_t m = data.n_cols;
  const double n = static_cast<double>(data.n_rows);
  std::vector<ShapSummaryRow> rows(m);
  double total_abs = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    ShapSummaryRow& row = rows[j];
    row.feature = j;
    row.name = j < data.feature_names.size() ? data.feature_names[j]
                                             : "f" + std::to_string(j);
    double abs_sum = 0.0, x_mean = 0.0, s_mean = 0.0;
    for (std::size_t i = 0; i < data.n_rows; ++i) {
      abs_sum += std::abs(shap.at(i, j));
      x_mean += data.at(i, j);
      s_mean += shap.at(i, j);
    }
    row.mean_abs = abs_sum / n;
    total_abs += row.mean_abs;
    x_mean /= n;
    s_mean /= n;
    double sxx = 0.0, sss = 0.0, sxs = 0.0;
    for (std::size_t i = 0; i < data.n_rows; ++i) {
      const double dx = data.at(i, j) - x_mean;
      const double ds = shap.at(i, j) - s_mean;
      sxx += dx * dx;
      sss += ds * ds;
      sxs += dx * ds;
    }
    if (sxx == 0.0 || sss == 0.0) {
      row.zero_variance = true;
    } else {
      row.correlation = sxs / std::sqrt(sxx * sss);
      row.direction = row.correlation > 0.0 ? 1 : (row.correlation < 0.0 ? -1 : 0);
    }
  }
  if (total_abs > 0.0)
    for (ShapSummaryRow& row : rows) row.share_pct = 100.0 * row.mean_abs / total_abs;

  // Rank by mean_abs descending; equal values keep column order.
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return rows[a].mean_abs > rows[b].mean_abs;
  });
  std::vector<ShapSummaryRow> sorted;
  sorted.reserve(m);
  for (std::size_t r = 0; r < m; ++r) {
    rows[order[r]].rank = static_cast<int>(r) + 1;
    sorted.push_back(rows[order[r]]);
  }
  return sorted;
}

void write_shap_summary_csv(std::ostream& out, std::span<const ShapSummaryRow> rows) {
  out << "rank,feature,mean_abs_shap,share_pct,direction,correlation,zero_variance\n";
  for (const ShapSummaryRow& row : rows) {
    out << row.rank << ',' << row.name << ',' << format_double(row.mean_abs) << ','
        << format_fixed(row.share_pct, 2) << ',' << row.direction << ','
        << format_double(row.correlation) << ',' << (row.zero_variance ? 1 : 0) << '\n';
  }
  if (!out) throw IoError("write error on SHAP summary output");
}

namespace {

/// Midranks of the values (1-based, ties averaged).
std::vector<double> midranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> rank(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double mid = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = mid;
    i = j + 1;
  }
  return rank;
}

double pearson_sq(std::span<const double> a, std::span<const double> b) {
  const double n = static_cast<double>(a.size());
  double am = 0.0, bm = 0.0;
  for (double v : a) am += v;
  for (double v : b) bm += v;
  am /= n;
  bm /= n;
  double saa = 0.0, sbb = 0.0, sab = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - am, db = b[i] - bm;
    saa += da * da;
    sbb += db * db;
    sab += da * db;
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return (sab * sab) / (saa * sbb);
}

}  // namespace

DependenceData select_dependence_partner(const Dataset& data, const ShapMatrix& shap,
                                         std::size_t target) {
  if (target >= data.n_cols) throw ValidationError("dependence target feature is out of range");
  if (data.n_cols < 2)
    throw ValidationError("dependence partner selection needs at least two features");

  DependenceData dep;
  dep.target = target;
  dep.scores.assign(data.n_cols, 0.0);

  if (data.n_rows < 20) {
    dep.low_sample = true;
    dep.partner = target == 0 ? 1 : 0;
    return dep;
  }

  // Decile bins over the target feature (contiguous chunks of the sorted
  // order; the first n mod 10 bins take the extra rows).
  std::vector<std::size_t> order(data.n_rows);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return data.at(a, target) < data.at(b, target);
  });
  const std::size_t n_bins = 10;
  const std::size_t base = data.n_rows / n_bins;
  const std::size_t extra = data.n_rows % n_bins;

  std::size_t pos = 0;
  std::vector<std::pair<std::size_t, std::size_t>> bins;  // [begin, end) into order
  for (std::size_t b = 0; b < n_bins; ++b) {
    const std::size_t len = base + (b < extra ? 1 : 0);
    bins.emplace_back(pos, pos + len);
    pos += len;
  }

  std::vector<double> phi_bin, x_bin;
  for (std::size_t j = 0; j < data.n_cols; ++j) {
    if (j == target) continue;
    double score = 0.0;
    for (const auto& [begin, end] : bins) {
      const std::size_t len = end - begin;
      if (len < 2) continue;
      phi_bin.resize(len);
      x_bin.resize(len);
      for (std::size_t k = 0; k < len; ++k) {
        phi_bin[k] = shap.at(order[begin + k], target);
        x_bin[k] = data.at(order[begin + k], j);
      }
      double mean = 0.0;
      for (double v : phi_bin) mean += v;
      mean /= static_cast<double>(len);
      double var = 0.0;
      for (double v : phi_bin) var += (v - mean) * (v - mean);
      var /= static_cast<double>(len);
      if (var == 0.0) continue;
      const std::vector<double> ranks = midranks(x_bin);
      score += var * pearson_sq(phi_bin, ranks);
    }
    dep.scores[j] = score;
  }

  dep.partner = target == 0 ? 1 : 0;
  for (std::size_t j = 0; j < data.n_cols; ++j) {
    if (j == target) continue;
    if (dep.scores[j] > dep.scores[dep.partner]) dep.partner = j;
  }
  return dep;
}

void write_dependence_csv(std::ostream& out, const Dataset& data, const ShapMatrix& shap,
                          const DependenceData& dep) {
  const std::string target_name = data.feature_names.at(dep.target);
  const std::string partner_name = data.feature_names.at(dep.partner);
  out << "row," << target_name << ",shap_" << target_name << ',' << partner_name << '\n';
  for (std::size_t i = 0; i < data.n_rows; ++i) {
    out << i << ',' << format_double(data.at(i, dep.target)) << ','
        << format_double(shap.at(i, dep.target)) << ','
        << format_double(data.at(i, dep.partner)) << '\n';
  }
  if (!out) throw IoError("write error on dependence output");
}

void write_force_json(std::ostream& out, const Ensemble& model, const Dataset& data,
                      const ShapMatrix& shap, std::size_t row, std::size_t row_label) {
  if (row >= data.n_rows) throw ValidationError("force record row is out of range");
  using json = nlohmann::ordered_json;
  json doc;
  doc["row"] = row_label;
  doc["base_value"] = shap.base_value;
  double contribution_sum = 0.0;
  json contributions = json::array();
  for (std::size_t j = 0; j < data.n_cols; ++j) {
    json c;
    c["feature"] = model.feature_names[j];
    c["value"] = data.at(row, j);
    c["shap"] = shap.at(row, j);
    contribution_sum += shap.at(row, j);
    contributions.push_back(std::move(c));
  }
  doc["contributions"] = std::move(contributions);
  doc["contribution_sum"] = contribution_sum;
  doc["margin"] = model.margin_one(data.row(row));
  doc["prediction"] = model.predict_one(data.row(row));
  doc["target_transform"] = target_transform_name(model.transform);
  out << doc.dump(1) << '\n';
  if (!out) throw IoError("write error on force record output");
}

}  // namespace ridecast
