/**
 * Copyright 2026, emotrait authors
 * SPDX-License-Identifier: Apache-2.0
 */
#include "emotrait/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <json.hpp>

#include "emotrait/shap.hpp"

namespace emotrait {

using nlohmann::json;

std::string_view binning_mode_name(BinningMode m) {
  return m == BinningMode::kQuantile ? "quantile" : "equal_width";
}

std::optional<BinningMode> binning_mode_from_name(std::string_view name) {
  if (name == "quantile") return BinningMode::kQuantile;
  if (name == "equal_width" || name == "equal-width") return BinningMode::kEqualWidth;
  return std::nullopt;
}

std::string_view class_name(int label) {
  switch (label) {
    case 0: return "low";
    case 1: return "medium";
    case 2: return "high";
  }
  return "?";
}

std::string_view eval_mode_name(EvalMode m) {
  return m == EvalMode::kLeakFree ? "leak_free" : "paper_replication";
}

std::optional<EvalMode> eval_mode_from_name(std::string_view name) {
  if (name == "leak_free" || name == "leak-free") return EvalMode::kLeakFree;
  if (name == "paper_replication" || name == "paper-replication") return EvalMode::kPaperReplication;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Binning
// ---------------------------------------------------------------------------

namespace {

double quantile_linear(const std::vector<double>& sorted, double p) {
  const std::size_t n = sorted.size();
  const double h = static_cast<double>(n - 1) * p;
  const auto lo = static_cast<std::size_t>(h);
  const std::size_t hi = std::min(lo + 1, n - 1);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * (h - static_cast<double>(lo));
}

}  // namespace

std::pair<std::vector<int>, BinEdges> bin_terciles(std::span<const double> scores,
                                                   BinningMode mode) {
  if (scores.size() < 3) throw ValidationError("bin_terciles requires at least 3 scores");
  std::vector<double> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end());
  if (sorted.front() == sorted.back()) {
    throw ValidationError("bin_terciles requires at least 2 distinct values");
  }

  BinEdges edges;
  bool need_fallback = mode == BinningMode::kEqualWidth;
  if (mode == BinningMode::kQuantile) {
    edges.e1 = quantile_linear(sorted, 1.0 / 3.0);
    edges.e2 = quantile_linear(sorted, 2.0 / 3.0);
    std::array<std::size_t, 3> counts{};
    for (double s : scores) counts[static_cast<std::size_t>(edges.label(s))] += 1;
    if (counts[0] == 0 || counts[1] == 0 || counts[2] == 0) {
      need_fallback = true;
      edges.equal_width_fallback = true;
    }
  }
  if (need_fallback) {
    const double lo = sorted.front();
    const double range = sorted.back() - lo;
    edges.e1 = lo + range / 3.0;
    edges.e2 = lo + 2.0 * range / 3.0;
  }
  std::vector<int> labels(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) labels[i] = edges.label(scores[i]);
  return {std::move(labels), edges};
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

std::size_t ConfusionMatrix::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::size_t{0});
}

double ConfusionMatrix::accuracy() const {
  const std::size_t n = total();
  if (n == 0) return 0.0;
  std::size_t diag = 0;
  for (std::size_t i = 0; i < k; ++i) diag += at(i, i);
  return static_cast<double>(diag) / static_cast<double>(n);
}

double cohen_kappa(const ConfusionMatrix& cm, bool* degenerate) {
  const auto n = static_cast<double>(cm.total());
  if (n == 0.0) throw ValidationError("cohen_kappa: empty confusion matrix");
  double diag = 0.0, pe = 0.0;
  for (std::size_t i = 0; i < cm.k; ++i) {
    diag += static_cast<double>(cm.at(i, i));
    double row = 0.0, col = 0.0;
    for (std::size_t j = 0; j < cm.k; ++j) {
      row += static_cast<double>(cm.at(i, j));
      col += static_cast<double>(cm.at(j, i));
    }
    pe += row * col / (n * n);
  }
  const double po = diag / n;
  if (degenerate != nullptr) *degenerate = false;
  if (pe >= 1.0) {
    if (degenerate != nullptr) *degenerate = true;
    return 0.0;
  }
  return (po - pe) / (1.0 - pe);
}

// ---------------------------------------------------------------------------
// Folding
// ---------------------------------------------------------------------------

FoldPlan stratified_kfold(std::span<const int> labels, int k, std::uint64_t seed) {
  if (k < 2) throw ValidationError("stratified_kfold requires k >= 2");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);

  FoldPlan plan;
  std::size_t min_class = labels.size();
  for (const auto& [label, idx] : by_class) min_class = std::min(min_class, idx.size());
  if (min_class < static_cast<std::size_t>(k)) {
    const int degraded = static_cast<int>(min_class);
    if (degraded < 2) {
      throw ValidationError("stratified_kfold: smallest class has " + std::to_string(min_class) +
                            " rows; cannot form 2 folds");
    }
    plan.warnings.push_back("k degraded from " + std::to_string(k) + " to " +
                            std::to_string(degraded) + " (smallest class)");
    k = degraded;
  }
  plan.k = k;
  plan.folds.resize(static_cast<std::size_t>(k));
  for (auto& [label, idx] : by_class) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(label)}));
    rng.shuffle(idx);
    for (std::size_t j = 0; j < idx.size(); ++j) plan.folds[j % static_cast<std::size_t>(k)].push_back(idx[j]);
  }
  for (auto& fold : plan.folds) std::sort(fold.begin(), fold.end());
  return plan;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_holdout(
    std::span<const int> labels, double fraction, std::uint64_t seed) {
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  std::vector<std::size_t> holdout, rest;
  for (auto& [label, idx] : by_class) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(label)}));
    rng.shuffle(idx);
    const auto take = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(fraction * static_cast<double>(idx.size()))));
    for (std::size_t j = 0; j < idx.size(); ++j) {
      (j < take ? holdout : rest).push_back(idx[j]);
    }
  }
  std::sort(holdout.begin(), holdout.end());
  std::sort(rest.begin(), rest.end());
  return {std::move(holdout), std::move(rest)};
}

// ---------------------------------------------------------------------------
// Experiment pipeline
// ---------------------------------------------------------------------------

namespace {

void require_all_classes(std::span<const int> labels, const std::string& context) {
  std::array<bool, 3> seen{};
  for (int label : labels) seen[static_cast<std::size_t>(label)] = true;
  for (int c = 0; c < 3; ++c) {
    if (!seen[static_cast<std::size_t>(c)]) {
      throw ValidationError("class '" + std::string(class_name(c)) + "' absent from " + context);
    }
  }
}

int majority_class(std::span<const int> labels) {
  std::array<std::size_t, 3> counts{};
  for (int label : labels) counts[static_cast<std::size_t>(label)] += 1;
  return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

double baseline_accuracy(std::span<const int> truth, int majority) {
  if (truth.empty()) return 0.0;
  std::size_t hits = 0;
  for (int label : truth) {
    if (label == majority) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

struct CvOutcome {
  std::vector<double> fold_accuracies;
  double mean_accuracy = 0.0;
  ConfusionMatrix pooled{3};
  std::vector<int> pooled_truth;
  double pooled_kappa = 0.0;
  bool kappa_degenerate = false;
  bool any_fallback = false;
  std::size_t synthetic_in_validation = 0;
  std::vector<std::string> warnings;
};

struct CvContext {
  const FeatureMatrix& features;
  std::span<const std::size_t> rows;     // matrix row per position
  std::span<const double> scores;        // aligned to rows
  const ExperimentConfig& config;
  std::uint64_t trait_tag;
};

/// Leak-free CV: per fold, bin edges and resampling are fitted on the
/// training side only; validation rows are untouched originals.
CvOutcome run_cv_leak_free(const CvContext& ctx, std::span<const std::size_t> train_positions,
                           std::span<const int> alloc_labels, ResampleStrategy strategy,
                           const gbt::BoostParams& params) {
  std::vector<int> train_alloc;
  for (std::size_t pos : train_positions) train_alloc.push_back(alloc_labels[pos]);
  auto plan = stratified_kfold(train_alloc, ctx.config.cv_folds,
                               derive_seed(ctx.config.seed, {ctx.trait_tag, 2}));

  CvOutcome outcome;
  outcome.warnings = plan.warnings;
  for (std::size_t f = 0; f < plan.folds.size(); ++f) {
    std::vector<std::size_t> tr_pos, va_pos;  // positions into ctx.rows
    std::vector<char> in_fold(train_positions.size(), 0);
    for (std::size_t i : plan.folds[f]) in_fold[i] = 1;
    for (std::size_t i = 0; i < train_positions.size(); ++i) {
      (in_fold[i] ? va_pos : tr_pos).push_back(train_positions[i]);
    }

    std::vector<double> tr_scores;
    for (std::size_t pos : tr_pos) tr_scores.push_back(ctx.scores[pos]);
    auto [tr_labels, edges] = bin_terciles(tr_scores, ctx.config.binning);
    outcome.any_fallback |= edges.equal_width_fallback;
    require_all_classes(tr_labels, "training split (fold " + std::to_string(f) + ")");

    Rows tr_x;
    tr_x.width = kFeatureCount;
    for (std::size_t pos : tr_pos) tr_x.push_row(ctx.features.row(ctx.rows[pos]));
    ResamplePlan fold_plan;
    fold_plan.strategy = strategy;
    fold_plan.k_neighbors = ctx.config.resample.k_neighbors;
    fold_plan.seed = derive_seed(ctx.config.seed,
                                 {ctx.trait_tag, 3, f, static_cast<std::uint64_t>(strategy)});
    auto balanced = balance(tr_x, tr_labels, fold_plan);
    for (const auto& w : balanced.warnings) outcome.warnings.push_back(w);

    auto model = gbt::train(balanced.features.values, kFeatureCount, balanced.labels, params);

    ConfusionMatrix fold_cm{3};
    for (std::size_t pos : va_pos) {
      const int truth = edges.label(ctx.scores[pos]);
      const int pred = model.predict_class(ctx.features.row(ctx.rows[pos]));
      fold_cm.add(truth, pred);
      outcome.pooled.add(truth, pred);
      outcome.pooled_truth.push_back(truth);
    }
    outcome.fold_accuracies.push_back(fold_cm.accuracy());
  }
  outcome.mean_accuracy =
      std::accumulate(outcome.fold_accuracies.begin(), outcome.fold_accuracies.end(), 0.0) /
      static_cast<double>(outcome.fold_accuracies.size());
  outcome.pooled_kappa = cohen_kappa(outcome.pooled, &outcome.kappa_degenerate);
  return outcome;
}

/// Paper-replication CV over a pre-resampled dataset: synthetic rows can
/// land in validation folds, which is exactly the leak this mode documents.
CvOutcome run_cv_resampled(const BalanceResult& resampled, std::span<const std::size_t> train_idx,
                           const ExperimentConfig& config, std::uint64_t trait_tag,
                           const gbt::BoostParams& params) {
  std::vector<int> train_labels;
  for (std::size_t i : train_idx) train_labels.push_back(resampled.labels[i]);
  auto plan = stratified_kfold(train_labels, config.cv_folds,
                               derive_seed(config.seed, {trait_tag, 2}));

  CvOutcome outcome;
  outcome.warnings = plan.warnings;
  for (std::size_t f = 0; f < plan.folds.size(); ++f) {
    std::vector<char> in_fold(train_idx.size(), 0);
    for (std::size_t i : plan.folds[f]) in_fold[i] = 1;
    Rows tr_x;
    tr_x.width = resampled.features.width;
    std::vector<int> tr_y;
    std::vector<std::size_t> va_rows;
    for (std::size_t i = 0; i < train_idx.size(); ++i) {
      if (in_fold[i]) {
        va_rows.push_back(train_idx[i]);
      } else {
        tr_x.push_row(resampled.features.row(train_idx[i]));
        tr_y.push_back(resampled.labels[train_idx[i]]);
      }
    }
    require_all_classes(tr_y, "training split (fold " + std::to_string(f) + ")");
    auto model = gbt::train(tr_x.values, tr_x.width, tr_y, params);

    ConfusionMatrix fold_cm{3};
    for (std::size_t row : va_rows) {
      const int truth = resampled.labels[row];
      const int pred = model.predict_class(resampled.features.row(row));
      fold_cm.add(truth, pred);
      outcome.pooled.add(truth, pred);
      outcome.pooled_truth.push_back(truth);
      if (resampled.synthetic[row]) ++outcome.synthetic_in_validation;
    }
    outcome.fold_accuracies.push_back(fold_cm.accuracy());
  }
  outcome.mean_accuracy =
      std::accumulate(outcome.fold_accuracies.begin(), outcome.fold_accuracies.end(), 0.0) /
      static_cast<double>(outcome.fold_accuracies.size());
  outcome.pooled_kappa = cohen_kappa(outcome.pooled, &outcome.kappa_degenerate);
  return outcome;
}

std::vector<ResampleStrategy> strategies_to_try(ResampleStrategy configured) {
  if (configured == ResampleStrategy::kAuto) {
    return {ResampleStrategy::kSmote, ResampleStrategy::kAdasyn};
  }
  return {configured};
}

}  // namespace

ExperimentResult run_experiment(const FeatureMatrix& features,
                                std::span<const std::optional<double>> trait_scores,
                                TraitKind trait, const ExperimentConfig& config) {
  if (trait_scores.size() != features.rows()) {
    throw InvariantError("run_experiment: trait column misaligned");
  }
  std::vector<std::size_t> rows;
  std::vector<double> scores;
  for (std::size_t r = 0; r < features.rows(); ++r) {
    if (trait_scores[r].has_value()) {
      rows.push_back(r);
      scores.push_back(*trait_scores[r]);
    }
  }
  if (rows.size() < 10) {
    throw ValidationError("run_experiment: fewer than 10 rows with trait " +
                          std::string(trait_code(trait)));
  }

  const auto trait_tag = static_cast<std::uint64_t>(trait);
  EvalReport report;
  report.trait = trait;
  report.cohort_id = features.cohort_id;
  report.mode = config.mode;
  report.binning = config.binning;
  report.seed = config.seed;
  report.n_rows = rows.size();

  auto [alloc_labels, alloc_edges] = bin_terciles(scores, config.binning);
  report.any_binning_fallback = alloc_edges.equal_width_fallback;

  const auto param_sets = config.grid_search ? gbt::default_grid(config.boost)
                                             : std::vector<gbt::BoostParams>{config.boost};

  CvContext ctx{features, rows, scores, config, trait_tag};

  if (config.mode == EvalMode::kLeakFree) {
    auto [holdout_pos, train_pos] =
        stratified_holdout(alloc_labels, config.holdout_fraction,
                           derive_seed(config.seed, {trait_tag, 1}));
    report.n_holdout = holdout_pos.size();

    // choose (strategy, params) by pooled CV kappa; ties keep the earlier
    // combination, so SMOTE wins ties per the resampler contract
    std::optional<CvOutcome> best_cv;
    ResampleStrategy best_strategy = ResampleStrategy::kSmote;
    gbt::BoostParams best_params = config.boost;
    for (ResampleStrategy strategy : strategies_to_try(config.resample.strategy)) {
      for (const auto& params : param_sets) {
        auto outcome = run_cv_leak_free(ctx, train_pos, alloc_labels, strategy, params);
        if (!best_cv || outcome.pooled_kappa > best_cv->pooled_kappa) {
          best_cv = std::move(outcome);
          best_strategy = strategy;
          best_params = params;
        }
      }
    }
    report.chosen_strategy = best_strategy;
    report.chosen_params = best_params;
    report.fold_accuracies = best_cv->fold_accuracies;
    report.cv_mean_accuracy = best_cv->mean_accuracy;
    report.any_binning_fallback |= best_cv->any_fallback;
    report.warnings = best_cv->warnings;
    report.synthetic_in_validation = 0;  // structural in leak-free mode

    // refit on the full 90% with the chosen combination
    std::vector<double> train_scores;
    for (std::size_t pos : train_pos) train_scores.push_back(scores[pos]);
    auto [train_labels, refit_edges] = bin_terciles(train_scores, config.binning);
    report.edges = refit_edges;
    report.any_binning_fallback |= refit_edges.equal_width_fallback;
    require_all_classes(train_labels, "training split");
    for (int label : train_labels) report.class_counts[static_cast<std::size_t>(label)] += 1;

    Rows train_x;
    train_x.width = kFeatureCount;
    for (std::size_t pos : train_pos) train_x.push_row(features.row(rows[pos]));
    ResamplePlan refit_plan;
    refit_plan.strategy = best_strategy;
    refit_plan.k_neighbors = config.resample.k_neighbors;
    refit_plan.seed = derive_seed(config.seed, {trait_tag, 4});
    auto balanced = balance(train_x, train_labels, refit_plan);
    for (const auto& w : balanced.warnings) report.warnings.push_back(w);
    report.synthetic_rows_refit = balanced.labels.size() - train_labels.size();

    auto model = gbt::train(balanced.features.values, kFeatureCount, balanced.labels, best_params);

    const int majority = majority_class(train_labels);
    // CV pooled metrics
    report.cv_pooled.confusion = best_cv->pooled;
    report.cv_pooled.accuracy = best_cv->pooled.accuracy();
    report.cv_pooled.kappa = best_cv->pooled_kappa;
    report.cv_pooled.kappa_degenerate = best_cv->kappa_degenerate;
    report.cv_pooled.n = best_cv->pooled.total();
    report.cv_pooled.majority_baseline = baseline_accuracy(best_cv->pooled_truth, majority);

    // holdout metrics: labels from the training-side edges
    ConfusionMatrix holdout_cm{3};
    std::vector<int> holdout_truth;
    for (std::size_t pos : holdout_pos) {
      const int truth = refit_edges.label(scores[pos]);
      const int pred = model.predict_class(features.row(rows[pos]));
      holdout_cm.add(truth, pred);
      holdout_truth.push_back(truth);
    }
    report.holdout.confusion = holdout_cm;
    report.holdout.accuracy = holdout_cm.accuracy();
    report.holdout.kappa = cohen_kappa(holdout_cm, &report.holdout.kappa_degenerate);
    report.holdout.n = holdout_cm.total();
    report.holdout.majority_baseline = baseline_accuracy(holdout_truth, majority);

    // SHAP importance of the refit model over the trait's original rows
    Rows all_x;
    all_x.width = kFeatureCount;
    for (std::size_t r : rows) all_x.push_row(features.row(r));
    auto ranking = rank_importance(model, all_x.values, all_x.n);
    for (int i = 0; i < config.importance_top_k && i < static_cast<int>(ranking.entries.size()); ++i) {
      report.importance_top.push_back(feature_name(ranking.entries[static_cast<std::size_t>(i)].feature));
    }
    return {std::move(report), std::move(model)};
  }

  // --- paper-replication mode: bin on all rows, resample before splitting ---
  report.edges = alloc_edges;
  for (std::size_t i = 0; i < rows.size(); ++i) report.class_counts[static_cast<std::size_t>(alloc_labels[i])] += 1;

  Rows all_x;
  all_x.width = kFeatureCount;
  for (std::size_t r : rows) all_x.push_row(features.row(r));

  std::optional<CvOutcome> best_cv;
  std::optional<BalanceResult> best_resampled;
  std::vector<std::size_t> best_holdout, best_train;
  ResampleStrategy best_strategy = ResampleStrategy::kSmote;
  gbt::BoostParams best_params = config.boost;
  for (ResampleStrategy strategy : strategies_to_try(config.resample.strategy)) {
    ResamplePlan plan;
    plan.strategy = strategy;
    plan.k_neighbors = config.resample.k_neighbors;
    plan.seed = derive_seed(config.seed, {trait_tag, 30, static_cast<std::uint64_t>(strategy)});
    auto resampled = balance(all_x, alloc_labels, plan);
    auto [holdout_idx, train_idx] =
        stratified_holdout(resampled.labels, config.holdout_fraction,
                           derive_seed(config.seed, {trait_tag, 1}));
    for (const auto& params : param_sets) {
      auto outcome = run_cv_resampled(resampled, train_idx, config, trait_tag, params);
      if (!best_cv || outcome.pooled_kappa > best_cv->pooled_kappa) {
        best_cv = std::move(outcome);
        best_resampled = resampled;
        best_holdout = holdout_idx;
        best_train = train_idx;
        best_strategy = strategy;
        best_params = params;
      }
    }
  }
  report.chosen_strategy = best_strategy;
  report.chosen_params = best_params;
  report.fold_accuracies = best_cv->fold_accuracies;
  report.cv_mean_accuracy = best_cv->mean_accuracy;
  report.warnings = best_cv->warnings;
  report.synthetic_in_validation = best_cv->synthetic_in_validation;
  report.n_holdout = best_holdout.size();
  report.synthetic_rows_refit = best_resampled->labels.size() - rows.size();

  Rows refit_x;
  refit_x.width = kFeatureCount;
  std::vector<int> refit_y;
  for (std::size_t i : best_train) {
    refit_x.push_row(best_resampled->features.row(i));
    refit_y.push_back(best_resampled->labels[i]);
  }
  require_all_classes(refit_y, "training split");
  auto model = gbt::train(refit_x.values, refit_x.width, refit_y, best_params);

  std::vector<int> truth_labels(alloc_labels.begin(), alloc_labels.end());
  const int majority = majority_class(truth_labels);
  report.cv_pooled.confusion = best_cv->pooled;
  report.cv_pooled.accuracy = best_cv->pooled.accuracy();
  report.cv_pooled.kappa = best_cv->pooled_kappa;
  report.cv_pooled.kappa_degenerate = best_cv->kappa_degenerate;
  report.cv_pooled.n = best_cv->pooled.total();
  report.cv_pooled.majority_baseline = baseline_accuracy(best_cv->pooled_truth, majority);

  ConfusionMatrix holdout_cm{3};
  std::vector<int> holdout_truth;
  std::size_t synthetic_in_holdout = 0;
  for (std::size_t i : best_holdout) {
    const int truth = best_resampled->labels[i];
    const int pred = model.predict_class(best_resampled->features.row(i));
    holdout_cm.add(truth, pred);
    holdout_truth.push_back(truth);
    if (best_resampled->synthetic[i]) ++synthetic_in_holdout;
  }
  report.synthetic_in_validation += synthetic_in_holdout;
  report.holdout.confusion = holdout_cm;
  report.holdout.accuracy = holdout_cm.accuracy();
  report.holdout.kappa = cohen_kappa(holdout_cm, &report.holdout.kappa_degenerate);
  report.holdout.n = holdout_cm.total();
  report.holdout.majority_baseline = baseline_accuracy(holdout_truth, majority);

  auto ranking = rank_importance(model, all_x.values, all_x.n);
  for (int i = 0; i < config.importance_top_k && i < static_cast<int>(ranking.entries.size()); ++i) {
    report.importance_top.push_back(feature_name(ranking.entries[static_cast<std::size_t>(i)].feature));
  }
  return {std::move(report), std::move(model)};
}

ExperimentResult run_experiment(const Cohort& cohort, TraitKind trait,
                                const ExperimentConfig& config) {
  const auto features = build_feature_matrix(cohort);
  std::vector<std::optional<double>> column(features.rows());
  for (std::size_t r = 0; r < features.rows(); ++r) {
    auto it = cohort.traits.rows.find(features.participants[r]);
    if (it != cohort.traits.rows.end()) column[r] = it->second[static_cast<std::size_t>(static_cast<int>(trait))];
  }
  return run_experiment(features, column, trait, config);
}

// ---------------------------------------------------------------------------
// Report serialization
// ---------------------------------------------------------------------------

namespace {

json metrics_json(const SplitMetrics& m) {
  json j;
  j["accuracy"] = m.accuracy;
  j["kappa"] = m.kappa;
  j["kappa_degenerate"] = m.kappa_degenerate;
  j["majority_baseline"] = m.majority_baseline;
  j["n"] = m.n;
  json cm = json::array();
  for (std::size_t i = 0; i < m.confusion.k; ++i) {
    json row = json::array();
    for (std::size_t c = 0; c < m.confusion.k; ++c) row.push_back(m.confusion.at(i, c));
    cm.push_back(std::move(row));
  }
  j["confusion"] = std::move(cm);
  return j;
}

SplitMetrics metrics_from_json(const json& j) {
  SplitMetrics m;
  m.accuracy = j.at("accuracy").get<double>();
  m.kappa = j.at("kappa").get<double>();
  m.kappa_degenerate = j.at("kappa_degenerate").get<bool>();
  m.majority_baseline = j.at("majority_baseline").get<double>();
  m.n = j.at("n").get<std::size_t>();
  const auto& cm = j.at("confusion");
  m.confusion = ConfusionMatrix(cm.size());
  for (std::size_t i = 0; i < cm.size(); ++i) {
    for (std::size_t c = 0; c < cm.size(); ++c) {
      m.confusion.counts[i * cm.size() + c] = cm[i][c].get<std::size_t>();
    }
  }
  return m;
}

}  // namespace

std::string EvalReport::to_json() const {
  json j;
  j["schema_version"] = 1;
  j["kind"] = "eval_report";
  j["trait"] = std::string(trait_code(trait));
  j["cohort_id"] = cohort_id;
  j["mode"] = std::string(eval_mode_name(mode));
  j["binning"] = std::string(binning_mode_name(binning));
  j["seed"] = std::to_string(seed);
  j["n_rows"] = n_rows;
  j["n_holdout"] = n_holdout;
  j["edges"] = {{"e1", edges.e1}, {"e2", edges.e2}, {"fallback", edges.equal_width_fallback}};
  j["any_binning_fallback"] = any_binning_fallback;
  j["chosen_strategy"] = std::string(resample_strategy_name(chosen_strategy));
  j["chosen_params"] = {{"rounds", chosen_params.rounds},
                        {"learning_rate", chosen_params.learning_rate},
                        {"max_depth", chosen_params.max_depth},
                        {"lambda", chosen_params.lambda},
                        {"gamma", chosen_params.gamma},
                        {"min_child_weight", chosen_params.min_child_weight},
                        {"n_classes", chosen_params.n_classes}};
  j["fold_accuracies"] = fold_accuracies;
  j["cv_mean_accuracy"] = cv_mean_accuracy;
  j["cv_pooled"] = metrics_json(cv_pooled);
  j["holdout"] = metrics_json(holdout);
  j["class_counts"] = class_counts;
  j["synthetic_rows_refit"] = synthetic_rows_refit;
  j["synthetic_in_validation"] = synthetic_in_validation;
  j["importance_top"] = importance_top;
  j["warnings"] = warnings;
  return j.dump(2);
}

EvalReport EvalReport::from_json(const std::string& text) {
  const json j = json::parse(text);
  if (j.value("schema_version", 0) != 1) throw ParseError("unsupported eval report schema");
  EvalReport r;
  const auto trait = trait_from_code(j.at("trait").get<std::string>());
  if (!trait) throw ParseError("unknown trait code in eval report");
  r.trait = *trait;
  r.cohort_id = j.value("cohort_id", "");
  r.mode = *eval_mode_from_name(j.at("mode").get<std::string>());
  r.binning = *binning_mode_from_name(j.at("binning").get<std::string>());
  r.seed = std::stoull(j.at("seed").get<std::string>());
  r.n_rows = j.at("n_rows").get<std::size_t>();
  r.n_holdout = j.at("n_holdout").get<std::size_t>();
  r.edges.e1 = j.at("edges").at("e1").get<double>();
  r.edges.e2 = j.at("edges").at("e2").get<double>();
  r.edges.equal_width_fallback = j.at("edges").at("fallback").get<bool>();
  r.any_binning_fallback = j.at("any_binning_fallback").get<bool>();
  r.chosen_strategy = *resample_strategy_from_name(j.at("chosen_strategy").get<std::string>());
  const auto& pj = j.at("chosen_params");
  r.chosen_params.rounds = pj.at("rounds").get<int>();
  r.chosen_params.learning_rate = pj.at("learning_rate").get<double>();
  r.chosen_params.max_depth = pj.at("max_depth").get<int>();
  r.chosen_params.lambda = pj.at("lambda").get<double>();
  r.chosen_params.gamma = pj.at("gamma").get<double>();
  r.chosen_params.min_child_weight = pj.at("min_child_weight").get<double>();
  r.chosen_params.n_classes = pj.at("n_classes").get<int>();
  r.fold_accuracies = j.at("fold_accuracies").get<std::vector<double>>();
  r.cv_mean_accuracy = j.at("cv_mean_accuracy").get<double>();
  r.cv_pooled = metrics_from_json(j.at("cv_pooled"));
  r.holdout = metrics_from_json(j.at("holdout"));
  const auto& cc = j.at("class_counts");
  for (std::size_t i = 0; i < 3; ++i) r.class_counts[i] = cc[i].get<std::size_t>();
  r.synthetic_rows_refit = j.at("synthetic_rows_refit").get<std::size_t>();
  r.synthetic_in_validation = j.at("synthetic_in_validation").get<std::size_t>();
  r.importance_top = j.at("importance_top").get<std::vector<std::string>>();
  r.warnings = j.at("warnings").get<std::vector<std::string>>();
  return r;
}

}  // namespace emotrait
