/**
 * Copyright 2026, emotrait authors
 * SPDX-License-Identifier: Apache-2.0
 */
#include "emotrait/features.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace emotrait {

using nlohmann::json;

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

int feature_index(EmotionKind emotion, int video) {
  if (!is_valid_video_id(video)) throw InvariantError("video id outside 1..15");
  return static_cast<int>(emotion) * kVideoCount + (video - 1);
}

int feature_index(const FeatureKey& key) { return feature_index(key.emotion, key.video); }

FeatureKey feature_key(int index) {
  if (index < 0 || index >= kFeatureCount) throw InvariantError("feature index outside 0..104");
  return {static_cast<EmotionKind>(index / kVideoCount), index % kVideoCount + 1};
}

std::string feature_name(int index) {
  const FeatureKey key = feature_key(index);
  return std::string(emotion_display(key.emotion)) + " " + std::to_string(key.video);
}

std::optional<int> feature_index_from_name(std::string_view name) {
  const auto space = name.rfind(' ');
  if (space == std::string_view::npos) return std::nullopt;
  const std::string_view emotion_part = name.substr(0, space);
  const std::string_view video_part = name.substr(space + 1);
  for (int e = 0; e < kEmotionCount; ++e) {
    if (emotion_display(static_cast<EmotionKind>(e)) != emotion_part) continue;
    int video = 0;
    for (char c : video_part) {
      if (c < '0' || c > '9') return std::nullopt;
      video = video * 10 + (c - '0');
    }
    if (!is_valid_video_id(video)) return std::nullopt;
    return feature_index(static_cast<EmotionKind>(e), video);
  }
  return std::nullopt;
}

const std::vector<std::string>& feature_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    out.reserve(kFeatureCount);
    for (int i = 0; i < kFeatureCount; ++i) out.push_back(feature_name(i));
    return out;
  }();
  return names;
}

bool FeatureMatrix::present(std::size_t r, std::size_t c) const {
  return !std::isnan(at(r, c));
}

std::optional<std::array<double, kEmotionCount>> aggregate_video(const EmotionStream& stream,
                                                                 Aggregation aggregation) {
  if (stream.frames.empty()) return std::nullopt;
  std::array<double, kEmotionCount> out{};
  switch (aggregation) {
    case Aggregation::kMean: {
      for (const auto& frame : stream.frames) {
        for (int e = 0; e < kEmotionCount; ++e) out[static_cast<std::size_t>(e)] += frame.scores[static_cast<std::size_t>(e)];
      }
      const double n = static_cast<double>(stream.frames.size());
      for (double& v : out) v /= n;
      break;
    }
    case Aggregation::kTimeWeightedMean: {
      // frame weight = gap to the next frame; the last frame gets the mean gap
      const std::size_t n = stream.frames.size();
      if (n == 1) {
        out = stream.frames.front().scores;
        break;
      }
      std::vector<double> weights(n, 0.0);
      double total = 0.0;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        weights[i] = static_cast<double>(stream.frames[i + 1].timestamp_ms -
                                         stream.frames[i].timestamp_ms);
        total += weights[i];
      }
      weights[n - 1] = total / static_cast<double>(n - 1);
      total += weights[n - 1];
      for (std::size_t i = 0; i < n; ++i) {
        for (int e = 0; e < kEmotionCount; ++e) {
          out[static_cast<std::size_t>(e)] += stream.frames[i].scores[static_cast<std::size_t>(e)] * weights[i];
        }
      }
      for (double& v : out) v /= total;
      break;
    }
    case Aggregation::kMax: {
      for (const auto& frame : stream.frames) {
        for (int e = 0; e < kEmotionCount; ++e) {
          out[static_cast<std::size_t>(e)] = std::max(out[static_cast<std::size_t>(e)], frame.scores[static_cast<std::size_t>(e)]);
        }
      }
      break;
    }
  }
  return out;
}

FeatureMatrix build_feature_matrix(const Cohort& cohort, Aggregation aggregation) {
  FeatureMatrix matrix;
  matrix.cohort_id = cohort.cohort_id;
  matrix.participants = cohort.participants();
  matrix.values.assign(matrix.participants.size() * kFeatureCount, kNaN);
  for (std::size_t r = 0; r < matrix.participants.size(); ++r) {
    for (int v = 1; v <= kVideoCount; ++v) {
      const EmotionStream* stream = cohort.stream(matrix.participants[r], v);
      if (stream == nullptr) continue;
      const auto agg = aggregate_video(*stream, aggregation);
      if (!agg) continue;
      for (int e = 0; e < kEmotionCount; ++e) {
        matrix.values[r * kFeatureCount +
                      static_cast<std::size_t>(feature_index(static_cast<EmotionKind>(e), v))] =
            (*agg)[static_cast<std::size_t>(e)];
      }
    }
  }
  return matrix;
}

void standardize_columns(FeatureMatrix& matrix) {
  const std::size_t n = matrix.rows();
  for (int c = 0; c < kFeatureCount; ++c) {
    double sum = 0.0, sum2 = 0.0;
    std::size_t count = 0;
    for (std::size_t r = 0; r < n; ++r) {
      const double v = matrix.at(r, static_cast<std::size_t>(c));
      if (std::isnan(v)) continue;
      sum += v;
      sum2 += v * v;
      ++count;
    }
    if (count < 2) continue;
    const double mean = sum / static_cast<double>(count);
    const double var = (sum2 - sum * mean) / static_cast<double>(count - 1);
    const double sd = var > 0.0 ? std::sqrt(var) : 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      double& v = matrix.values[r * kFeatureCount + static_cast<std::size_t>(c)];
      if (std::isnan(v)) continue;
      v = sd > 0.0 ? (v - mean) / sd : 0.0;
    }
  }
}

std::string FeatureMatrix::to_csv() const {
  std::ostringstream out;
  out << "participant_id";
  for (const auto& name : feature_names()) out << ',' << name;
  out << '\n';
  for (std::size_t r = 0; r < rows(); ++r) {
    out << participants[r];
    for (int c = 0; c < kFeatureCount; ++c) {
      out << ',';
      const double v = at(r, static_cast<std::size_t>(c));
      if (!std::isnan(v)) out << format_double(v);
    }
    out << '\n';
  }
  return out.str();
}

FeatureMatrix FeatureMatrix::from_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty feature matrix");
  const auto header = split(trim(line), ',');
  if (header.size() != kFeatureCount + 1 || trim(header[0]) != "participant_id") {
    throw ParseError("feature matrix header must be participant_id plus 105 feature columns");
  }
  for (int c = 0; c < kFeatureCount; ++c) {
    if (trim(header[static_cast<std::size_t>(c + 1)]) != feature_names()[static_cast<std::size_t>(c)]) {
      throw ParseError("unexpected feature column '" + std::string(header[static_cast<std::size_t>(c + 1)]) +
                       "', expected '" + feature_names()[static_cast<std::size_t>(c)] + "'");
    }
  }
  FeatureMatrix matrix;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view text = trim(line);
    if (text.empty()) continue;
    const auto parts = split(text, ',');
    if (parts.size() != kFeatureCount + 1) {
      throw ParseError("expected 106 columns", line_no);
    }
    matrix.participants.emplace_back(trim(parts[0]));
    for (int c = 0; c < kFeatureCount; ++c) {
      const auto cell = trim(parts[static_cast<std::size_t>(c + 1)]);
      matrix.values.push_back(cell.empty() ? kNaN : parse_double(cell, line_no));
    }
  }
  return matrix;
}

std::string FeatureMatrix::to_json() const {
  json j;
  j["schema_version"] = 1;
  j["kind"] = "feature_matrix";
  j["cohort_id"] = cohort_id;
  j["columns"] = feature_names();
  j["participants"] = participants;
  json rows_json = json::array();
  for (std::size_t r = 0; r < rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < kFeatureCount; ++c) {
      const double v = at(r, static_cast<std::size_t>(c));
      if (std::isnan(v)) {
        row.push_back(nullptr);
      } else {
        row.push_back(v);
      }
    }
    rows_json.push_back(std::move(row));
  }
  j["values"] = std::move(rows_json);
  return j.dump(2);
}

FeatureMatrix FeatureMatrix::from_json(const std::string& text) {
  const json j = json::parse(text);
  if (j.value("schema_version", 0) != 1) throw ParseError("unsupported feature matrix schema");
  FeatureMatrix matrix;
  matrix.cohort_id = j.value("cohort_id", "");
  matrix.participants = j.at("participants").get<std::vector<std::string>>();
  const auto& rows_json = j.at("values");
  for (const auto& row : rows_json) {
    if (row.size() != kFeatureCount) throw ParseError("feature row width mismatch");
    for (const auto& cell : row) {
      matrix.values.push_back(cell.is_null() ? kNaN : cell.get<double>());
    }
  }
  if (matrix.values.size() != matrix.participants.size() * kFeatureCount) {
    throw ParseError("feature matrix shape mismatch");
  }
  return matrix;
}

DescriptiveStats describe(std::span<const double> values) {
  DescriptiveStats stats;
  stats.min = std::numeric_limits<double>::infinity();
  stats.max = -std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (double v : values) {
    if (std::isnan(v)) continue;
    sum += v;
    stats.min = std::min(stats.min, v);
    stats.max = std::max(stats.max, v);
    ++stats.n;
  }
  if (stats.n < 2) throw ValidationError("describe() needs at least two present values");
  stats.mean = sum / static_cast<double>(stats.n);
  double ss = 0.0;
  for (double v : values) {
    if (std::isnan(v)) continue;
    const double d = v - stats.mean;
    ss += d * d;
  }
  stats.sd = std::sqrt(ss / static_cast<double>(stats.n - 1));
  return stats;
}

}  // namespace emotrait
