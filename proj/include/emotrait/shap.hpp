/**
 * Copyright 2026, emotrait authors
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <span>
#include <string>
#include <vector>

#include "emotrait/gbt.hpp"

namespace emotrait {

// ---------------------------------------------------------------------------
// Shapley attributions for tree ensembles: exact path-dependent TreeSHAP
// (cover-weighted) plus a subset-enumeration oracle for small trees.
// ---------------------------------------------------------------------------

struct AttributionVector {
  double base = 0.0;            // expected margin with no features known
  std::vector<double> values;   // one contribution per feature

  double sum() const;
};

/// Raw attributions of a single tree (no learning-rate scaling); base is the
/// tree's cover-weighted expected value. Polynomial in tree size.
AttributionVector tree_shap_single(const gbt::Tree& tree, std::span<const double> row,
                                   int n_features);

/// Per-class attributions of a full ensemble; base + sum(values) equals the
/// pre-softmax margin for that class (local accuracy).
std::vector<AttributionVector> tree_shap(const gbt::Ensemble& ensemble,
                                         std::span<const double> row);

/// Exact Shapley values of a single tree by enumerating feature subsets with
/// the same conditional-expectation-by-traversal value function TreeSHAP
/// targets. Refuses trees using more than 15 distinct features.
AttributionVector brute_force_shap(const gbt::Tree& tree, std::span<const double> row,
                                   int n_features);

struct ImportanceEntry {
  int feature = 0;
  double mean_abs_shap = 0.0;
  double mean_signed_high = 0.0;  // direction summary: signed mean for the top class
};

struct ImportanceRanking {
  std::vector<ImportanceEntry> entries;  // nonincreasing mean |SHAP|, ties by feature index
};

/// Mean |SHAP| per feature over all rows, summed across classes.
ImportanceRanking rank_importance(const gbt::Ensemble& ensemble, std::span<const double> rows_data,
                                  std::size_t n_rows);

}  // namespace emotrait
