/**
 * Copyright 2026, emotrait authors
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "emotrait/cohort.hpp"

namespace emotrait {

// ---------------------------------------------------------------------------
// Feature keys: one (emotion, video) pair per column, emotion-major order.
// Display names follow the published predictor vocabulary ("Angry 1" ...
// "Surprised 15").
// ---------------------------------------------------------------------------

inline constexpr int kFeatureCount = kEmotionCount * kVideoCount;  // 105

struct FeatureKey {
  EmotionKind emotion;
  int video;

  bool operator==(const FeatureKey&) const = default;
};

int feature_index(EmotionKind emotion, int video);
int feature_index(const FeatureKey& key);
FeatureKey feature_key(int index);
std::string feature_name(int index);  // "Happy 8"
std::optional<int> feature_index_from_name(std::string_view name);

/// All 105 display names in canonical column order.
const std::vector<std::string>& feature_names();

// ---------------------------------------------------------------------------
// Feature matrix: N participants x 105 mean emotion probabilities. Absent
// cells (participant never produced a valid stream for that video) are NaN.
// ---------------------------------------------------------------------------

struct FeatureMatrix {
  std::vector<std::string> participants;  // row order (sorted ids)
  std::vector<double> values;             // row-major N x 105; NaN = absent
  std::string cohort_id;

  std::size_t rows() const { return participants.size(); }
  double at(std::size_t row, std::size_t col) const { return values[row * kFeatureCount + col]; }
  bool present(std::size_t row, std::size_t col) const;
  std::span<const double> row(std::size_t r) const {
    return {values.data() + r * kFeatureCount, kFeatureCount};
  }

  std::string to_csv() const;
  std::string to_json() const;
  static FeatureMatrix from_csv(std::istream& in);
  static FeatureMatrix from_json(const std::string& text);
};

enum class Aggregation { kMean, kTimeWeightedMean, kMax };

/// Per-emotion aggregate over a stream's frames; nullopt for absent streams.
/// For kMean the seven values stay on the probability simplex.
std::optional<std::array<double, kEmotionCount>> aggregate_video(
    const EmotionStream& stream, Aggregation aggregation = Aggregation::kMean);

FeatureMatrix build_feature_matrix(const Cohort& cohort,
                                   Aggregation aggregation = Aggregation::kMean);

/// In-place per-column z-scoring (NaN cells ignored); off by default
/// everywhere, provided behind a config flag.
void standardize_columns(FeatureMatrix& matrix);

// ---------------------------------------------------------------------------
// Descriptive statistics (M / SD / Min / Max, sample SD with n-1).
// ---------------------------------------------------------------------------

struct DescriptiveStats {
  double mean = 0.0;
  double sd = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::size_t n = 0;
};

/// NaN entries are skipped; throws if fewer than two values remain.
DescriptiveStats describe(std::span<const double> values);

}  // namespace emotrait
