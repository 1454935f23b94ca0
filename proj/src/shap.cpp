/**
 * Copyright 2026, emotrait authors
 * SPDX-License-Identifier: Apache-2.0
 */
#include "emotrait/shap.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <set>

namespace emotrait {

double AttributionVector::sum() const {
  double s = 0.0;
  for (double v : values) s += v;
  return s;
}

namespace {

// Decision path bookkeeping from the exact TreeSHAP recursion: each element
// tracks one feature on the path with the fraction of cover-weighted paths
// flowing through when the feature is unknown (zero_fraction) or matches x
// (one_fraction), plus the permutation weight accumulator.
struct PathElement {
  int feature = -1;
  double zero_fraction = 1.0;
  double one_fraction = 1.0;
  double pweight = 1.0;
};

using Path = std::vector<PathElement>;

void extend_path(Path& path, double zero_fraction, double one_fraction, int feature) {
  const auto depth = static_cast<int>(path.size());
  path.push_back({feature, zero_fraction, one_fraction, depth == 0 ? 1.0 : 0.0});
  for (int i = depth - 1; i >= 0; --i) {
    path[static_cast<std::size_t>(i + 1)].pweight +=
        one_fraction * path[static_cast<std::size_t>(i)].pweight * (i + 1) / static_cast<double>(depth + 1);
    path[static_cast<std::size_t>(i)].pweight =
        zero_fraction * path[static_cast<std::size_t>(i)].pweight * (depth - i) / static_cast<double>(depth + 1);
  }
}

void unwind_path(Path& path, int index) {
  const auto depth = static_cast<int>(path.size()) - 1;
  const double one = path[static_cast<std::size_t>(index)].one_fraction;
  const double zero = path[static_cast<std::size_t>(index)].zero_fraction;
  double next = path[static_cast<std::size_t>(depth)].pweight;
  if (one != 0.0) {
    for (int j = depth - 1; j >= 0; --j) {
      const double tmp = path[static_cast<std::size_t>(j)].pweight;
      path[static_cast<std::size_t>(j)].pweight = next * (depth + 1) / static_cast<double>((j + 1) * one);
      next = tmp - path[static_cast<std::size_t>(j)].pweight * zero * (depth - j) / static_cast<double>(depth + 1);
    }
  } else {
    for (int j = depth - 1; j >= 0; --j) {
      path[static_cast<std::size_t>(j)].pweight =
          path[static_cast<std::size_t>(j)].pweight * (depth + 1) / static_cast<double>(zero * (depth - j));
    }
  }
  for (int j = index; j < depth; ++j) {
    path[static_cast<std::size_t>(j)].feature = path[static_cast<std::size_t>(j + 1)].feature;
    path[static_cast<std::size_t>(j)].zero_fraction = path[static_cast<std::size_t>(j + 1)].zero_fraction;
    path[static_cast<std::size_t>(j)].one_fraction = path[static_cast<std::size_t>(j + 1)].one_fraction;
  }
  path.pop_back();
}

double unwound_path_sum(const Path& path, int index) {
  const auto depth = static_cast<int>(path.size()) - 1;
  const double one = path[static_cast<std::size_t>(index)].one_fraction;
  const double zero = path[static_cast<std::size_t>(index)].zero_fraction;
  double total = 0.0;
  if (one != 0.0) {
    double next = path[static_cast<std::size_t>(depth)].pweight;
    for (int j = depth - 1; j >= 0; --j) {
      const double tmp = next / static_cast<double>((j + 1) * one);
      total += tmp;
      next = path[static_cast<std::size_t>(j)].pweight - tmp * zero * (depth - j);
    }
  } else {
    for (int j = depth - 1; j >= 0; --j) {
      total += path[static_cast<std::size_t>(j)].pweight / static_cast<double>(zero * (depth - j));
    }
  }
  return total * (depth + 1);
}

void shap_recurse(const gbt::Tree& tree, std::span<const double> row, std::vector<double>& phi,
                  Path path, std::size_t node_index, double zero_fraction, double one_fraction,
                  int parent_feature) {
  const auto& node = tree.nodes[node_index];
  extend_path(path, zero_fraction, one_fraction, parent_feature);

  if (node.feature < 0) {
    for (std::size_t i = 1; i < path.size(); ++i) {
      phi[static_cast<std::size_t>(path[i].feature)] +=
          unwound_path_sum(path, static_cast<int>(i)) *
          (path[i].one_fraction - path[i].zero_fraction) * node.weight;
    }
    return;
  }

  const double v = row[static_cast<std::size_t>(node.feature)];
  const bool go_left = std::isnan(v) ? node.default_left : v < node.threshold;
  const auto hot = static_cast<std::size_t>(go_left ? node.left : node.right);
  const auto cold = static_cast<std::size_t>(go_left ? node.right : node.left);

  double incoming_zero = 1.0;
  double incoming_one = 1.0;
  for (std::size_t i = 1; i < path.size(); ++i) {
    if (path[i].feature == node.feature) {
      incoming_zero = path[i].zero_fraction;
      incoming_one = path[i].one_fraction;
      unwind_path(path, static_cast<int>(i));
      break;
    }
  }

  const double hot_fraction = tree.nodes[hot].cover / node.cover;
  const double cold_fraction = tree.nodes[cold].cover / node.cover;
  shap_recurse(tree, row, phi, path, hot, incoming_zero * hot_fraction, incoming_one, node.feature);
  shap_recurse(tree, row, phi, std::move(path), cold, incoming_zero * cold_fraction, 0.0,
               node.feature);
}

}  // namespace

AttributionVector tree_shap_single(const gbt::Tree& tree, std::span<const double> row,
                                   int n_features) {
  AttributionVector out;
  out.values.assign(static_cast<std::size_t>(n_features), 0.0);
  out.base = tree.expected_value();
  if (tree.leaf_only()) return out;
  shap_recurse(tree, row, out.values, Path{}, 0, 1.0, 1.0, -1);
  return out;
}

std::vector<AttributionVector> tree_shap(const gbt::Ensemble& ensemble,
                                         std::span<const double> row) {
  if (row.size() != static_cast<std::size_t>(ensemble.n_features)) {
    throw ValidationError("tree_shap: expected " + std::to_string(ensemble.n_features) +
                          " features, got " + std::to_string(row.size()));
  }
  const int K = ensemble.params.n_classes;
  std::vector<AttributionVector> out(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) {
    out[static_cast<std::size_t>(k)].base = ensemble.base_score[static_cast<std::size_t>(k)];
    out[static_cast<std::size_t>(k)].values.assign(static_cast<std::size_t>(ensemble.n_features), 0.0);
  }
  const double eta = ensemble.params.learning_rate;
  for (std::size_t t = 0; t < ensemble.trees.size(); ++t) {
    auto& slot = out[t % static_cast<std::size_t>(K)];
    const auto single = tree_shap_single(ensemble.trees[t], row, ensemble.n_features);
    slot.base += eta * single.base;
    for (std::size_t f = 0; f < single.values.size(); ++f) slot.values[f] += eta * single.values[f];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Brute-force oracle
// ---------------------------------------------------------------------------

namespace {

/// Conditional expectation with the features in `known` fixed to x: known
/// features follow x (missing values take the default branch, matching
/// prediction); unknown features descend both children weighted by cover.
double traverse_expectation(const gbt::Tree& tree, std::span<const double> row,
                            const std::vector<int>& feature_slot, std::uint32_t known,
                            std::size_t node_index) {
  const auto& node = tree.nodes[node_index];
  if (node.feature < 0) return node.weight;
  const int slot = feature_slot[static_cast<std::size_t>(node.feature)];
  if (slot >= 0 && (known & (1u << slot)) != 0) {
    const double v = row[static_cast<std::size_t>(node.feature)];
    const bool go_left = std::isnan(v) ? node.default_left : v < node.threshold;
    return traverse_expectation(tree, row, feature_slot, known,
                                static_cast<std::size_t>(go_left ? node.left : node.right));
  }
  const auto left = static_cast<std::size_t>(node.left);
  const auto right = static_cast<std::size_t>(node.right);
  return (traverse_expectation(tree, row, feature_slot, known, left) * tree.nodes[left].cover +
          traverse_expectation(tree, row, feature_slot, known, right) * tree.nodes[right].cover) /
         node.cover;
}

}  // namespace

AttributionVector brute_force_shap(const gbt::Tree& tree, std::span<const double> row,
                                   int n_features) {
  std::set<int> used;
  for (const auto& node : tree.nodes) {
    if (node.feature >= 0) used.insert(node.feature);
  }
  if (used.size() > 15) {
    throw ValidationError("brute_force_shap refuses trees with more than 15 distinct features");
  }

  AttributionVector out;
  out.values.assign(static_cast<std::size_t>(n_features), 0.0);

  std::vector<int> features(used.begin(), used.end());
  const auto m = static_cast<std::uint32_t>(features.size());
  std::vector<int> feature_slot(static_cast<std::size_t>(n_features), -1);
  for (std::uint32_t s = 0; s < m; ++s) feature_slot[static_cast<std::size_t>(features[s])] = static_cast<int>(s);

  // v(S) for every subset of the tree's features
  const std::uint32_t n_masks = 1u << m;
  std::vector<double> value(n_masks);
  for (std::uint32_t mask = 0; mask < n_masks; ++mask) {
    value[mask] = traverse_expectation(tree, row, feature_slot, mask, 0);
  }
  out.base = value[0];

  // factorial weights |S|! (m - |S| - 1)! / m!
  std::vector<double> factorial(m + 1, 1.0);
  for (std::uint32_t i = 1; i <= m; ++i) factorial[i] = factorial[i - 1] * i;
  for (std::uint32_t s = 0; s < m; ++s) {
    const std::uint32_t bit = 1u << s;
    double phi = 0.0;
    for (std::uint32_t mask = 0; mask < n_masks; ++mask) {
      if (mask & bit) continue;
      const auto size = static_cast<std::uint32_t>(std::popcount(mask));
      const double weight = factorial[size] * factorial[m - size - 1] / factorial[m];
      phi += weight * (value[mask | bit] - value[mask]);
    }
    out.values[static_cast<std::size_t>(features[s])] = phi;
  }
  return out;
}

ImportanceRanking rank_importance(const gbt::Ensemble& ensemble, std::span<const double> rows_data,
                                  std::size_t n_rows) {
  if (n_rows == 0) throw ValidationError("rank_importance requires a nonempty dataset");
  const auto width = static_cast<std::size_t>(ensemble.n_features);
  std::vector<double> mean_abs(width, 0.0);
  std::vector<double> mean_signed_high(width, 0.0);
  for (std::size_t r = 0; r < n_rows; ++r) {
    const auto attributions = tree_shap(ensemble, {rows_data.data() + r * width, width});
    for (std::size_t k = 0; k < attributions.size(); ++k) {
      for (std::size_t f = 0; f < width; ++f) {
        mean_abs[f] += std::abs(attributions[k].values[f]);
      }
    }
    const auto& high = attributions.back();
    for (std::size_t f = 0; f < width; ++f) mean_signed_high[f] += high.values[f];
  }
  ImportanceRanking ranking;
  for (std::size_t f = 0; f < width; ++f) {
    ranking.entries.push_back({static_cast<int>(f), mean_abs[f] / static_cast<double>(n_rows),
                               mean_signed_high[f] / static_cast<double>(n_rows)});
  }
  std::stable_sort(ranking.entries.begin(), ranking.entries.end(),
                   [](const ImportanceEntry& a, const ImportanceEntry& b) {
                     return a.mean_abs_shap > b.mean_abs_shap;
                   });
  return ranking;
}

}  // namespace emotrait
