/**
 * Copyright 2026, emotrait authors
 * SPDX-License-Identifier: Apache-2.0
 */
#include "emotrait/resample.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>

namespace emotrait {

std::string_view resample_strategy_name(ResampleStrategy s) {
  switch (s) {
    case ResampleStrategy::kNone: return "none";
    case ResampleStrategy::kSmote: return "smote";
    case ResampleStrategy::kAdasyn: return "adasyn";
    case ResampleStrategy::kAuto: return "auto";
  }
  return "none";
}

std::optional<ResampleStrategy> resample_strategy_from_name(std::string_view name) {
  if (name == "none") return ResampleStrategy::kNone;
  if (name == "smote") return ResampleStrategy::kSmote;
  if (name == "adasyn") return ResampleStrategy::kAdasyn;
  if (name == "auto") return ResampleStrategy::kAuto;
  return std::nullopt;
}

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

std::vector<double> interpolate(std::span<const double> base, std::span<const double> neighbor,
                                double delta) {
  std::vector<double> out(base.size());
  for (std::size_t i = 0; i < base.size(); ++i) out[i] = base[i] + delta * (neighbor[i] - base[i]);
  return out;
}

/// k nearest within `points` to an external query vector; indices into
/// points, excluding `exclude` when >= 0.
std::vector<std::size_t> knn_to(const Rows& points, std::span<const double> query, int k,
                                std::ptrdiff_t exclude) {
  std::vector<std::pair<double, std::size_t>> dist;
  dist.reserve(points.n);
  for (std::size_t i = 0; i < points.n; ++i) {
    if (exclude >= 0 && i == static_cast<std::size_t>(exclude)) continue;
    dist.emplace_back(squared_distance(points.row(i), query), i);
  }
  if (dist.size() < static_cast<std::size_t>(k)) {
    throw ValidationError("knn: need at least k+1 points (k=" + std::to_string(k) + ", have " +
                          std::to_string(points.n) + ")");
  }
  std::sort(dist.begin(), dist.end());  // pair ordering = (distance, lower index)
  std::vector<std::size_t> out(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) out[static_cast<std::size_t>(i)] = dist[static_cast<std::size_t>(i)].second;
  return out;
}

}  // namespace

std::vector<std::size_t> knn(const Rows& points, std::size_t query, int k) {
  if (k < 1) throw ValidationError("knn requires k >= 1");
  if (query >= points.n) throw InvariantError("knn: query index out of range");
  return knn_to(points, points.row(query), k, static_cast<std::ptrdiff_t>(query));
}

Rows smote(const Rows& minority, std::size_t n_synthetic, int k, Rng& rng) {
  if (minority.n < 2) throw ValidationError("smote requires at least 2 minority points");
  if (k < 1 || static_cast<std::size_t>(k) >= minority.n) {
    throw ValidationError("smote requires 1 <= k < |minority|");
  }
  std::vector<std::vector<std::size_t>> neighbors(minority.n);
  for (std::size_t i = 0; i < minority.n; ++i) neighbors[i] = knn(minority, i, k);

  Rows out;
  out.width = minority.width;
  out.values.reserve(n_synthetic * minority.width);
  for (std::size_t s = 0; s < n_synthetic; ++s) {
    const std::size_t i = rng.index(minority.n);
    const std::size_t nn = neighbors[i][rng.index(static_cast<std::size_t>(k))];
    const double delta = rng.uniform();
    const auto point = interpolate(minority.row(i), minority.row(nn), delta);
    out.push_row(point);
  }
  return out;
}

Rows adasyn(const Rows& all, std::span<const int> labels, int minority_class, std::size_t n_target,
            int k, Rng& rng) {
  if (labels.size() != all.n) throw InvariantError("adasyn: label count mismatch");
  std::vector<std::size_t> minority_idx;
  for (std::size_t i = 0; i < all.n; ++i) {
    if (labels[i] == minority_class) minority_idx.push_back(i);
  }
  const std::size_t m = minority_idx.size();
  if (m < 2) throw ValidationError("adasyn requires at least 2 minority points");
  if (k < 1 || static_cast<std::size_t>(k) >= all.n) {
    throw ValidationError("adasyn requires 1 <= k < dataset size");
  }

  Rows minority;
  minority.width = all.width;
  for (std::size_t i : minority_idx) minority.push_row(all.row(i));

  // r_i = share of non-minority points among the k nearest in the full set
  std::vector<double> r(m, 0.0);
  double r_sum = 0.0;
  for (std::size_t q = 0; q < m; ++q) {
    const auto nn = knn(all, minority_idx[q], k);
    std::size_t foreign = 0;
    for (std::size_t j : nn) {
      if (labels[j] != minority_class) ++foreign;
    }
    r[q] = static_cast<double>(foreign) / static_cast<double>(k);
    r_sum += r[q];
  }

  const int k_min = std::min<int>(k, static_cast<int>(m) - 1);
  if (r_sum <= 0.0) {
    // interior cluster: identical in distribution to plain SMOTE
    return smote(minority, n_target, k_min, rng);
  }

  std::vector<std::vector<std::size_t>> neighbors(m);
  for (std::size_t q = 0; q < m; ++q) neighbors[q] = knn(minority, q, k_min);

  Rows out;
  out.width = all.width;
  for (std::size_t q = 0; q < m; ++q) {
    const double share = r[q] / r_sum;
    const auto g = static_cast<std::size_t>(std::llround(share * static_cast<double>(n_target)));
    for (std::size_t s = 0; s < g; ++s) {
      const std::size_t nn = neighbors[q][rng.index(static_cast<std::size_t>(k_min))];
      out.push_row(interpolate(minority.row(q), minority.row(nn), rng.uniform()));
    }
  }
  return out;
}

BalanceResult balance(const Rows& features, std::span<const int> labels,
                      const ResamplePlan& plan) {
  if (labels.size() != features.n) throw InvariantError("balance: label count mismatch");
  if (plan.strategy == ResampleStrategy::kAuto) {
    throw InvariantError("balance: auto strategy must be resolved before resampling");
  }
  std::map<int, std::size_t> counts;
  for (int label : labels) ++counts[label];
  if (counts.size() < 2) throw ValidationError("balance requires at least 2 classes");

  BalanceResult result;
  result.features = features;
  result.labels.assign(labels.begin(), labels.end());
  result.synthetic.assign(features.n, false);
  result.strategy_used = plan.strategy;
  if (plan.strategy == ResampleStrategy::kNone) return result;

  std::size_t majority = 0;
  for (const auto& [label, count] : counts) majority = std::max(majority, count);

  for (const auto& [label, count] : counts) {
    const std::size_t need = majority - count;
    if (need == 0) continue;
    if (count < 2) {
      throw ValidationError("class " + std::to_string(label) +
                            " has fewer than 2 rows; cannot resample");
    }
    int k = plan.k_neighbors;
    if (static_cast<std::size_t>(k) >= count) {
      k = static_cast<int>(count) - 1;
      result.warnings.push_back("k degraded to " + std::to_string(k) + " for class " +
                                std::to_string(label));
    }
    Rng rng(derive_seed(plan.seed, {static_cast<std::uint64_t>(label)}));
    Rows synth;
    if (plan.strategy == ResampleStrategy::kSmote) {
      Rows minority;
      minority.width = features.width;
      for (std::size_t i = 0; i < features.n; ++i) {
        if (labels[i] == label) minority.push_row(features.row(i));
      }
      synth = smote(minority, need, k, rng);
    } else {
      synth = adasyn(features, labels, label, need, k, rng);
      // rounding slack: top up or trim synthetics (never originals) to hit
      // the exact majority count
      if (synth.n > need) {
        synth.values.resize(need * synth.width);
        synth.n = need;
      } else if (synth.n < need) {
        Rows minority;
        minority.width = features.width;
        for (std::size_t i = 0; i < features.n; ++i) {
          if (labels[i] == label) minority.push_row(features.row(i));
        }
        const int k_min = std::min<int>(k, static_cast<int>(minority.n) - 1);
        Rows extra = smote(minority, need - synth.n, k_min, rng);
        synth.values.insert(synth.values.end(), extra.values.begin(), extra.values.end());
        synth.n += extra.n;
      }
    }
    for (std::size_t s = 0; s < synth.n; ++s) {
      result.features.push_row(synth.row(s));
      result.labels.push_back(label);
      result.synthetic.push_back(true);
    }
  }
  return result;
}

}  // namespace emotrait
