/**
 * Copyright 2026, emotrait authors
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "emotrait/cohort.hpp"
#include "emotrait/eval.hpp"
#include "emotrait/features.hpp"
#include "emotrait/stats.hpp"

namespace emotrait {

// ---------------------------------------------------------------------------
// Plant specification: trait marginals + planted trait -> (emotion, video)
// effects. Trait draws are truncated normals whose parent parameters are
// moment-matched so the truncated distribution hits the declared M/SD.
// ---------------------------------------------------------------------------

struct TraitMarginal {
  double mean = 0.0;
  double sd = 1.0;
  double min = 0.0;
  double max = 1.0;
};

/// The published descriptive statistics for all 22 traits.
const std::array<TraitMarginal, kTraitCount>& reference_marginals();

struct PlantedLink {
  TraitKind trait;
  FeatureKey feature;
  double beta = 0.0;   // feature shift per standardized trait unit
  double sigma = 0.0;  // trait-independent noise on the same feature
};

struct PlantSpec {
  int n_participants = 500;
  std::array<TraitMarginal, kTraitCount> marginals = reference_marginals();
  std::vector<PlantedLink> links;
  std::array<std::array<double, kEmotionCount>, kVideoCount> baselines;  // per-video mixtures
  double frame_rate_hz = 30.0;
  double video_duration_s = 562.0 / 15.0;  // full stimulus length split evenly
  std::array<double, kFamilyCount> family_missing_rate{};
  double video_missing_rate = 0.0;
  double jitter_concentration = 100.0;  // symmetric Dirichlet scale; 0 = no jitter
  double participant_noise_sd = 0.0;    // idiosyncratic baseline offsets (non-link cells)
  int discretize_levels = 0;            // >0 rounds trait scores onto an even grid
  std::uint64_t seed = 0;

  PlantSpec();

  /// Analytic check that every planted mean stays inside the simplex over
  /// the trait's full range; throws naming the offending link.
  void validate() const;
};

struct LinkTruth {
  PlantedLink link;
  double implied_rho = 0.0;  // first-order population correlation
};

struct GroundTruth {
  std::string cohort_id;
  std::vector<LinkTruth> links;
  std::array<std::array<double, kEmotionCount>, kVideoCount> baselines;
  std::vector<std::string> participants;
  /// Realized per-participant target mixtures mapped onto feature cells
  /// (NaN where the stream is missing). With jitter disabled the built
  /// feature matrix equals this exactly.
  std::vector<double> target_features;  // n x 105

  std::string to_json() const;
  static GroundTruth from_json(const std::string& text);
};

struct SynthCohort {
  Cohort cohort;
  GroundTruth truth;
};

/// Generates traits, per-video target mixtures and frame streams, applies
/// missingness, and assembles the result through the normal cohort path.
SynthCohort plant_cohort(const PlantSpec& spec);

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

/// One strong planted link per trait (implied rho ~ target_rho), short
/// videos for desk-scale runtimes.
PlantSpec planted_preset(int n_participants, std::uint64_t seed, double target_rho = 0.97,
                         double beta = 0.035);

/// All-noise cohort: no links, discretized survey-like scores, idiosyncratic
/// feature variation. Used by the leakage null test.
PlantSpec null_preset(int n_participants, std::uint64_t seed);

/// Study-scale realism preset: n = 85, full-length videos, mild missingness.
PlantSpec paper_scale_preset(std::uint64_t seed);

// ---------------------------------------------------------------------------
// Recovery scoring
// ---------------------------------------------------------------------------

struct RecoveryThresholds {
  double min_selection_recall = 0.9;
  double min_shap_recall = 0.9;
  double max_correlation_error = 0.15;
};

struct RecoveryScore {
  std::optional<double> selection_recall;   // planted feature in the trait's model
  std::optional<double> shap_top_recall;    // planted feature in the SHAP top-k
  double correlation_error = 0.0;           // mean |r - implied_rho| over links
  double mean_holdout_accuracy = 0.0;
  double mean_holdout_kappa = 0.0;
  bool pass = false;

  std::string to_json() const;
};

/// Scores pipeline outputs against the planted ground truth. All artifacts
/// must carry the ground truth's cohort id.
RecoveryScore verify_recovery(const std::vector<EvalReport>& reports,
                              const std::vector<RegressionModel>& models,
                              const CorrelationTable& correlations, const GroundTruth& truth,
                              const RecoveryThresholds& thresholds = {});

// ---------------------------------------------------------------------------
// Truncated normal utilities (exposed for tests)
// ---------------------------------------------------------------------------

double normal_cdf(double x);

/// Parent (mu, sigma) whose [lo, hi]-truncation has the requested mean/sd.
std::pair<double, double> truncated_normal_match(double mean, double sd, double lo, double hi);

double sample_truncated_normal(Rng& rng, double mu, double sigma, double lo, double hi);

}  // namespace emotrait
