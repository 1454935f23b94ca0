/**
 * Copyright 2026, emotrait authors
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "emotrait/features.hpp"
#include "emotrait/gbt.hpp"
#include "emotrait/resample.hpp"

namespace emotrait {

// ---------------------------------------------------------------------------
// Tercile binning
// ---------------------------------------------------------------------------

enum class BinningMode : int { kQuantile = 0, kEqualWidth };

std::string_view binning_mode_name(BinningMode m);
std::optional<BinningMode> binning_mode_from_name(std::string_view name);

struct BinEdges {
  double e1 = 0.0;
  double e2 = 0.0;
  bool equal_width_fallback = false;  // quantile edges degenerated

  /// score <= e1 -> 0 (low); e1 < score <= e2 -> 1 (medium); else 2 (high).
  int label(double score) const { return score <= e1 ? 0 : (score <= e2 ? 1 : 2); }
};

std::string_view class_name(int label);  // "low" / "medium" / "high"

/// Edges at the empirical 1/3 and 2/3 quantiles (linear interpolation);
/// falls back to equal-width edges over [min, max] when a quantile class
/// comes out empty. kEqualWidth skips the quantile step entirely. Requires
/// >= 3 scores with >= 2 distinct values.
std::pair<std::vector<int>, BinEdges> bin_terciles(std::span<const double> scores,
                                                   BinningMode mode = BinningMode::kQuantile);

// ---------------------------------------------------------------------------
// Agreement metrics
// ---------------------------------------------------------------------------

struct ConfusionMatrix {
  std::size_t k = 3;
  std::vector<std::size_t> counts;  // k x k, rows = actual, cols = predicted

  explicit ConfusionMatrix(std::size_t classes = 3) : k(classes), counts(classes * classes, 0) {}
  void add(int actual, int predicted) {
    counts[static_cast<std::size_t>(actual) * k + static_cast<std::size_t>(predicted)] += 1;
  }
  std::size_t at(std::size_t actual, std::size_t predicted) const {
    return counts[actual * k + predicted];
  }
  std::size_t total() const;
  double accuracy() const;
};

/// kappa = (p_o - p_e) / (1 - p_e); returns 0 (flagged degenerate) when
/// p_e = 1. Throws on an empty matrix.
double cohen_kappa(const ConfusionMatrix& cm, bool* degenerate = nullptr);

// ---------------------------------------------------------------------------
// Stratified k-fold
// ---------------------------------------------------------------------------

struct FoldPlan {
  int k = 0;
  std::vector<std::vector<std::size_t>> folds;  // disjoint row indices
  std::vector<std::string> warnings;
};

/// Per class: shuffle by seed, deal round-robin. k degrades to the smallest
/// class count (with a warning) when classes are small; k < 2 throws.
FoldPlan stratified_kfold(std::span<const int> labels, int k, std::uint64_t seed);

/// Stratified holdout: per class takes max(1, round(fraction * count)).
/// Returns (holdout indices, remaining indices).
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_holdout(
    std::span<const int> labels, double fraction, std::uint64_t seed);

// ---------------------------------------------------------------------------
// The experiment pipeline: bin -> holdout -> in-fold resampling -> boosting
// -> accuracy / kappa, in leak-free or paper-replication order.
// ---------------------------------------------------------------------------

enum class EvalMode : int { kLeakFree = 0, kPaperReplication };

std::string_view eval_mode_name(EvalMode m);
std::optional<EvalMode> eval_mode_from_name(std::string_view name);

struct ExperimentConfig {
  std::uint64_t seed = 0;
  EvalMode mode = EvalMode::kLeakFree;
  BinningMode binning = BinningMode::kQuantile;
  int cv_folds = 10;
  double holdout_fraction = 0.10;
  ResamplePlan resample;        // kAuto resolved here by inner CV kappa
  gbt::BoostParams boost;
  bool grid_search = false;     // widen the boost params over default_grid()
  int importance_top_k = 5;
};

struct SplitMetrics {
  double accuracy = 0.0;
  double kappa = 0.0;
  bool kappa_degenerate = false;
  double majority_baseline = 0.0;  // constant majority-class predictor
  std::size_t n = 0;
  ConfusionMatrix confusion{3};
};

struct EvalReport {
  TraitKind trait = TraitKind::kAgreeableness;
  std::string cohort_id;
  EvalMode mode = EvalMode::kLeakFree;
  BinningMode binning = BinningMode::kQuantile;
  std::uint64_t seed = 0;
  std::size_t n_rows = 0;
  std::size_t n_holdout = 0;
  BinEdges edges;                    // refit bin edges
  bool any_binning_fallback = false;
  ResampleStrategy chosen_strategy = ResampleStrategy::kSmote;
  gbt::BoostParams chosen_params;
  std::vector<double> fold_accuracies;
  double cv_mean_accuracy = 0.0;
  SplitMetrics cv_pooled;            // pooled validation predictions
  SplitMetrics holdout;
  std::array<std::size_t, 3> class_counts{};  // refit training classes
  std::size_t synthetic_rows_refit = 0;
  std::size_t synthetic_in_validation = 0;    // nonzero only in paper-replication
  std::vector<std::string> importance_top;    // mean-|SHAP| top features of the refit model
  std::vector<std::string> warnings;

  std::string to_json() const;
  static EvalReport from_json(const std::string& text);
};

struct ExperimentResult {
  EvalReport report;
  gbt::Ensemble refit_model;
};

/// Core pipeline over a prebuilt feature matrix; trait_scores aligned to the
/// matrix rows (absent = not surveyed, row excluded).
ExperimentResult run_experiment(const FeatureMatrix& features,
                                std::span<const std::optional<double>> trait_scores,
                                TraitKind trait, const ExperimentConfig& config);

/// Cohort-level convenience wrapper.
ExperimentResult run_experiment(const Cohort& cohort, TraitKind trait,
                                const ExperimentConfig& config);

}  // namespace emotrait
