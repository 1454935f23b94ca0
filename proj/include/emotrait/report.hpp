/**
 * Copyright 2026, emotrait authors
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "emotrait/eval.hpp"
#include "emotrait/stats.hpp"
#include "emotrait/synth.hpp"

namespace emotrait {

// ---------------------------------------------------------------------------
// Run configuration: flat key = value text file; round-trips losslessly and
// hashes deterministically so every artifact can be tied to the exact
// configuration that produced it.
// ---------------------------------------------------------------------------

struct RunConfig {
  // paths
  std::string frames_path;  // empty: <out_dir>/frames.jsonl (synth output)
  std::string traits_path;  // empty: <out_dir>/traits.csv
  std::string out_dir = "out";
  std::string frame_format = "jsonl";  // jsonl | csv

  std::uint64_t seed = 42;
  int threads = 0;  // 0 = hardware concurrency

  EvalMode mode = EvalMode::kLeakFree;
  BinningMode binning = BinningMode::kQuantile;
  std::string aggregation = "mean";  // mean | time_weighted | max
  bool standardize = false;

  ResampleStrategy resample_strategy = ResampleStrategy::kAuto;
  int resample_k = 5;

  int cv_folds = 10;
  double holdout_fraction = 0.10;

  double select_vif_max = 5.0;
  double select_epsilon = 0.005;

  gbt::BoostParams boost;
  bool boost_grid = false;

  int shap_top_k = 5;     // importance entries kept in eval reports
  int report_top_k = 10;  // per-trait features exported by the explain stage
  std::string alluvial_weight = "count";  // count | coef | shap

  std::string synth_preset = "planted";  // planted | null | paper_scale
  int synth_n = 500;
  double synth_rho = 0.97;
  double synth_beta = 0.035;

  std::string resolved_frames_path() const;
  std::string resolved_traits_path() const;
  Aggregation aggregation_kind() const;

  /// Canonical serialization (sorted keys); parse(to_string()) == *this.
  std::string to_string() const;
  static RunConfig from_string(const std::string& text);
  static RunConfig from_file(const std::string& path);

  /// Content hash of the canonical serialization.
  std::string hash() const;
};

// ---------------------------------------------------------------------------
// Alluvial link table: video -> emotion and emotion -> trait links backed by
// significant regression terms (or SHAP top-k features).
// ---------------------------------------------------------------------------

struct AlluvialLink {
  std::string source;
  std::string target;
  double weight = 0.0;
};

struct AlluvialLinkTable {
  std::string weight_mode;  // count | coef | shap
  std::string cohort_id;
  std::vector<AlluvialLink> video_emotion;
  std::vector<AlluvialLink> emotion_trait;

  std::string to_json() const;
  std::string to_csv() const;
};

/// Builds the table from regression models (weighting by term count or
/// summed |coefficient|) or from SHAP rankings (mean |SHAP| weights).
AlluvialLinkTable build_alluvial(const std::vector<RegressionModel>& models,
                                 const std::map<std::string, std::vector<std::pair<std::string, double>>>&
                                     shap_top_by_trait,
                                 const std::string& weight_mode, const std::string& cohort_id);

// ---------------------------------------------------------------------------
// Table emitters
// ---------------------------------------------------------------------------

/// "Variable,M,SD,Min,Max" over the canonical 22 traits (rows with < 2
/// present values are skipped).
std::string trait_descriptives_csv(const TraitTable& traits);

/// Same layout over all 105 feature columns.
std::string feature_descriptives_csv(const FeatureMatrix& matrix);

/// Published-table pivot for one instrument family: predictors as rows,
/// dependents as columns, cells "coef stars".
std::string regression_family_csv(TraitFamily family, const std::vector<RegressionModel>& models);

/// "Variable,Average Accuracy,Cohen's Kappa" in the published row order;
/// accuracy is the holdout number formatted like the paper (one decimal,
/// percent), kappa with two decimals.
std::string accuracy_table_csv(const std::vector<EvalReport>& reports);

// ---------------------------------------------------------------------------
// Pipeline: one method per CLI subcommand. Stages read their upstream
// artifacts from the output directory, so they can run independently; `all`
// chains them sharing in-memory state. Every stage writes a manifest naming
// the config hash, seed and output hashes.
// ---------------------------------------------------------------------------

class Pipeline {
 public:
  explicit Pipeline(RunConfig config);

  void synth();
  void ingest();
  void features();
  void correlate();
  void regress();
  void train();
  void evaluate();
  void explain();
  void report();
  void all();

  const RunConfig& config() const { return config_; }

 private:
  const Cohort& cohort();
  const FeatureMatrix& matrix();
  std::vector<std::optional<double>> trait_column(TraitKind trait);
  std::vector<RegressionModel> load_models();
  std::vector<EvalReport> load_reports();
  void write_artifact(const std::string& stage, const std::string& relpath,
                      const std::string& content);
  void finish_stage(const std::string& stage);

  RunConfig config_;
  std::optional<Cohort> cohort_;
  std::optional<FeatureMatrix> matrix_;
  std::map<std::string, std::map<std::string, std::string>> stage_outputs_;  // stage -> path -> hash
};

}  // namespace emotrait
