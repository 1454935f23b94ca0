/**
 * Copyright 2026, emotrait authors
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "emotrait/common.hpp"

namespace emotrait {

enum class ResampleStrategy : int { kNone = 0, kSmote, kAdasyn, kAuto };

std::string_view resample_strategy_name(ResampleStrategy s);
std::optional<ResampleStrategy> resample_strategy_from_name(std::string_view name);

struct ResamplePlan {
  ResampleStrategy strategy = ResampleStrategy::kAuto;
  int k_neighbors = 5;
  std::uint64_t seed = 0;
};

/// Row-major dense rows of equal width.
struct Rows {
  std::size_t n = 0;
  std::size_t width = 0;
  std::vector<double> values;

  std::span<const double> row(std::size_t i) const { return {values.data() + i * width, width}; }
  void push_row(std::span<const double> r) {
    values.insert(values.end(), r.begin(), r.end());
    ++n;
  }
};

/// Indices of the k nearest points to points[query] (query excluded), sorted
/// by Euclidean distance, ties broken by lower index.
std::vector<std::size_t> knn(const Rows& points, std::size_t query, int k);

/// SMOTE interpolation: each synthetic point is x_i + delta * (x_nn - x_i)
/// with x_nn one of the k nearest minority neighbors and delta ~ U(0,1).
Rows smote(const Rows& minority, std::size_t n_synthetic, int k, Rng& rng);

/// ADASYN allocation: synthetics per minority point proportional to the
/// share of non-minority points among its k nearest neighbors in the full
/// dataset; generation itself uses the SMOTE rule against minority-only
/// neighbors. Falls back to plain SMOTE when no minority point has majority
/// neighbors.
Rows adasyn(const Rows& all, std::span<const int> labels, int minority_class, std::size_t n_target,
            int k, Rng& rng);

struct BalanceResult {
  Rows features;
  std::vector<int> labels;
  std::vector<bool> synthetic;  // provenance: originals first, all false
  std::vector<std::string> warnings;
  ResampleStrategy strategy_used = ResampleStrategy::kNone;
};

/// Brings every class up to the majority count. Original rows are preserved
/// verbatim and first in output order; synthetics are appended with a flag.
/// plan.strategy must be concrete (kAuto is resolved by the eval harness).
BalanceResult balance(const Rows& features, std::span<const int> labels, const ResamplePlan& plan);

}  // namespace emotrait
