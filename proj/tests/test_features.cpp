/**
 * Copyright 2026, emotrait authors
 * SPDX-License-Identifier: Apache-2.0
 */
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "emotrait/features.hpp"
#include "emotrait/synth.hpp"

using namespace emotrait;

namespace {

EmotionStream stream_with_happy(std::vector<double> happy) {
  EmotionStream s;
  s.participant_id = "p";
  s.video_id = 1;
  for (std::size_t i = 0; i < happy.size(); ++i) {
    EmotionFrame f;
    f.timestamp_ms = static_cast<std::int64_t>(i) * 33;
    f.scores[static_cast<int>(EmotionKind::kHappy)] = happy[i];
    f.scores[static_cast<int>(EmotionKind::kNeutral)] = 1.0 - happy[i];
    s.frames.push_back(f);
  }
  return s;
}

}  // namespace

TEST_SUITE("features") {

TEST_CASE("feature keys follow the emotion-major, video-minor order") {
  CHECK(kFeatureCount == 105);
  CHECK(feature_name(0) == "Angry 1");
  CHECK(feature_name(kFeatureCount - 1) == "Surprised 15");
  const int happy8 = feature_index(EmotionKind::kHappy, 8);
  CHECK(happy8 == 3 * 15 + 7);
  CHECK(feature_name(happy8) == "Happy 8");
  CHECK(feature_index_from_name("Happy 8") == happy8);
  CHECK(!feature_index_from_name("Bored 3").has_value());
  CHECK(!feature_index_from_name("Happy 16").has_value());
  const auto key = feature_key(happy8);
  CHECK(key.emotion == EmotionKind::kHappy);
  CHECK(key.video == 8);
}

TEST_CASE("aggregate_video takes the unweighted frame mean") {
  const auto agg = aggregate_video(stream_with_happy({0.2, 0.4, 0.6}));
  REQUIRE(agg.has_value());
  CHECK((*agg)[static_cast<int>(EmotionKind::kHappy)] == doctest::Approx(0.4));
  double sum = 0.0;
  for (double v : *agg) sum += v;
  CHECK(std::abs(sum - 1.0) < 1e-9);
}

TEST_CASE("single-frame stream aggregates to that frame") {
  const auto agg = aggregate_video(stream_with_happy({0.7}));
  REQUIRE(agg.has_value());
  CHECK((*agg)[static_cast<int>(EmotionKind::kHappy)] == 0.7);
}

TEST_CASE("constant neutral stream aggregates to pure neutral") {
  EmotionStream s;
  s.participant_id = "p";
  s.video_id = 2;
  for (int i = 0; i < 1000; ++i) {
    EmotionFrame f;
    f.timestamp_ms = i;
    f.scores[static_cast<int>(EmotionKind::kNeutral)] = 1.0;
    s.frames.push_back(f);
  }
  const auto agg = aggregate_video(s);
  REQUIRE(agg.has_value());
  for (int e = 0; e < kEmotionCount; ++e) {
    CHECK((*agg)[e] == (e == static_cast<int>(EmotionKind::kNeutral) ? 1.0 : 0.0));
  }
}

TEST_CASE("empty stream aggregates to absent") {
  EmotionStream s;
  CHECK(!aggregate_video(s).has_value());
}

TEST_CASE("aggregation is invariant to reordering and uniform duplication") {
  auto s = stream_with_happy({0.1, 0.5, 0.3, 0.9, 0.2});
  const auto base = *aggregate_video(s);

  std::reverse(s.frames.begin(), s.frames.end());
  const auto reversed = *aggregate_video(s);
  for (int e = 0; e < kEmotionCount; ++e) {
    CHECK(reversed[e] == doctest::Approx(base[e]).epsilon(1e-12));
  }

  EmotionStream doubled = s;
  doubled.frames.insert(doubled.frames.end(), s.frames.begin(), s.frames.end());
  const auto dup = *aggregate_video(doubled);
  for (int e = 0; e < kEmotionCount; ++e) {
    CHECK(dup[e] == doctest::Approx(base[e]).epsilon(1e-12));
  }
}

TEST_CASE("time-weighted and max aggregations are available off the default path") {
  auto s = stream_with_happy({0.0, 1.0});
  s.frames[0].timestamp_ms = 0;
  s.frames[1].timestamp_ms = 300;
  const auto mean = *aggregate_video(s, Aggregation::kMean);
  CHECK(mean[static_cast<int>(EmotionKind::kHappy)] == doctest::Approx(0.5));
  const auto max = *aggregate_video(s, Aggregation::kMax);
  CHECK(max[static_cast<int>(EmotionKind::kHappy)] == 1.0);
  const auto weighted = *aggregate_video(s, Aggregation::kTimeWeightedMean);
  CHECK(weighted[static_cast<int>(EmotionKind::kHappy)] == doctest::Approx(0.5));
}

TEST_CASE("feature matrix has one row per participant and 105 columns") {
  const auto synth = plant_cohort(planted_preset(12, 3));
  const auto matrix = build_feature_matrix(synth.cohort);
  CHECK(matrix.rows() == 12);
  CHECK(matrix.values.size() == 12 * 105);
  CHECK(matrix.cohort_id == synth.cohort.cohort_id);
  for (std::size_t r = 0; r < matrix.rows(); ++r) {
    // per video the seven features stay on the simplex
    for (int v = 1; v <= kVideoCount; ++v) {
      double sum = 0.0;
      for (int e = 0; e < kEmotionCount; ++e) {
        sum += matrix.at(r, static_cast<std::size_t>(feature_index(static_cast<EmotionKind>(e), v)));
      }
      CHECK(std::abs(sum - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("missing video produces seven absent cells in that row") {
  auto synth = plant_cohort(planted_preset(5, 9));
  // remove one participant's video 9
  const std::string pid = synth.cohort.participants().front();
  synth.cohort.streams.erase({pid, 9});
  const auto matrix = build_feature_matrix(synth.cohort);
  const std::size_t row =
      static_cast<std::size_t>(std::find(matrix.participants.begin(), matrix.participants.end(), pid) -
                               matrix.participants.begin());
  for (int e = 0; e < kEmotionCount; ++e) {
    CHECK_FALSE(matrix.present(row, static_cast<std::size_t>(feature_index(static_cast<EmotionKind>(e), 9))));
    CHECK(matrix.present(row, static_cast<std::size_t>(feature_index(static_cast<EmotionKind>(e), 8))));
  }
}

TEST_CASE("matrix serialization is deterministic and round-trips") {
  const auto synth = plant_cohort(planted_preset(6, 17));
  const auto a = build_feature_matrix(synth.cohort);
  const auto b = build_feature_matrix(synth.cohort);
  CHECK(a.to_csv() == b.to_csv());  // byte-identical
  CHECK(a.to_json() == b.to_json());

  std::istringstream csv_in(a.to_csv());
  const auto from_csv = FeatureMatrix::from_csv(csv_in);
  CHECK(from_csv.participants == a.participants);
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    if (std::isnan(a.values[i])) {
      CHECK(std::isnan(from_csv.values[i]));
    } else {
      CHECK(from_csv.values[i] == a.values[i]);
    }
  }
  const auto from_json = FeatureMatrix::from_json(a.to_json());
  CHECK(from_json.cohort_id == a.cohort_id);
  CHECK(from_json.participants == a.participants);
}

TEST_CASE("describe computes M, sample SD, min and max") {
  const std::vector<double> values{1.0, 2.0, 3.0};
  const auto stats = describe(values);
  CHECK(stats.mean == doctest::Approx(2.0));
  CHECK(stats.sd == doctest::Approx(1.0));  // ((1)^2 + 0 + 1^2) / 2 = 1
  CHECK(stats.min == 1.0);
  CHECK(stats.max == 3.0);

  const std::vector<double> constant{5.0, 5.0, 5.0, 5.0};
  CHECK(describe(constant).sd == 0.0);

  const std::vector<double> single{1.0};
  CHECK_THROWS_AS(describe(single), ValidationError);
}

TEST_CASE("describe skips absent cells") {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const std::vector<double> values{1.0, nan, 3.0, nan};
  const auto stats = describe(values);
  CHECK(stats.n == 2);
  CHECK(stats.mean == doctest::Approx(2.0));
}

TEST_CASE("generated trait columns match their target descriptives") {
  // generator contract: M and SD within 10% of SD at n = 500
  const auto synth = plant_cohort(planted_preset(500, 101));
  std::vector<double> agreeableness;
  for (const auto& [pid, row] : synth.cohort.traits.rows) {
    const auto& cell = row[static_cast<int>(TraitKind::kAgreeableness)];
    if (cell) agreeableness.push_back(*cell);
  }
  const auto stats = describe(agreeableness);
  CHECK(std::abs(stats.mean - 0.64) <= 0.1 * 0.08);
  CHECK(std::abs(stats.sd - 0.08) <= 0.1 * 0.08);
}

TEST_CASE("standardize_columns zero-centers present cells") {
  auto synth = plant_cohort(planted_preset(30, 23));
  auto matrix = build_feature_matrix(synth.cohort);
  standardize_columns(matrix);
  for (int c = 0; c < 5; ++c) {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t r = 0; r < matrix.rows(); ++r) {
      if (!matrix.present(r, static_cast<std::size_t>(c))) continue;
      sum += matrix.at(r, static_cast<std::size_t>(c));
      ++n;
    }
    CHECK(std::abs(sum / static_cast<double>(n)) < 1e-9);
  }
}

}  // TEST_SUITE
