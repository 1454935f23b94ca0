/**
 * Copyright 2026, emotrait authors
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "emotrait/common.hpp"

namespace emotrait {

// ---------------------------------------------------------------------------
// Emotions: the six Ekman categories plus "neutral", alphabetical order.
// ---------------------------------------------------------------------------

enum class EmotionKind : int {
  kAngry = 0,
  kDisgusted,
  kFearful,
  kHappy,
  kNeutral,
  kSad,
  kSurprised,
};

inline constexpr int kEmotionCount = 7;

std::string_view emotion_key(EmotionKind e);      // "angry", ... (wire format)
std::string_view emotion_display(EmotionKind e);  // "Angry", ...
std::optional<EmotionKind> emotion_from_key(std::string_view key);

// ---------------------------------------------------------------------------
// Videos: the fixed 15-clip stimulus sequence.
// ---------------------------------------------------------------------------

inline constexpr int kVideoCount = 15;

struct VideoInfo {
  int id;
  std::string_view slug;
};

/// The 15-entry catalog, ids 1..15.
const std::array<VideoInfo, kVideoCount>& video_catalog();

bool is_valid_video_id(int id);

// ---------------------------------------------------------------------------
// Frames and streams.
// ---------------------------------------------------------------------------

struct EmotionFrame {
  std::int64_t timestamp_ms = 0;
  std::array<double, kEmotionCount> scores{};  // canonical emotion order
};

struct EmotionStream {
  std::string participant_id;
  int video_id = 0;
  std::vector<EmotionFrame> frames;  // strictly increasing timestamps after validation

  bool absent() const { return frames.empty(); }
};

struct FrameRecord {
  std::string participant_id;
  int video_id = 0;
  EmotionFrame frame;
};

enum class FrameLogFormat { kJsonl, kCsv };

/// Streaming frame-log parser; yields every well-formed record in input
/// order and returns the record count. Malformed lines throw ParseError
/// carrying the line number.
std::size_t parse_frame_log(std::istream& source, FrameLogFormat format,
                            const std::function<void(FrameRecord&&)>& sink);

/// Convenience wrapper collecting all records.
std::vector<FrameRecord> parse_frame_log(std::istream& source, FrameLogFormat format);

std::vector<FrameRecord> parse_frame_log_file(const std::string& path);

/// One line per frame, canonical key set.
void write_frame_log(std::ostream& out, const EmotionStream& stream);
void write_frame_log_file(const std::string& path,
                          const std::map<std::pair<std::string, int>, EmotionStream>& streams);

// ---------------------------------------------------------------------------
// Validation: renormalize plausible frames, drop no-face frames, dedupe
// timestamps. Policy constants live in ValidationPolicy so they stay
// configurable.
// ---------------------------------------------------------------------------

struct ValidationPolicy {
  double no_face_threshold = 0.5;   // score sum below this means no face
  double max_score_sum = 1.5;       // sums in [no_face, max] are renormalized
};

struct StreamValidation {
  std::string participant_id;
  int video_id = 0;
  std::size_t parsed = 0;
  std::size_t kept = 0;
  std::size_t no_face = 0;         // sum below threshold
  std::size_t out_of_range = 0;    // some score outside [0,1]
  std::size_t invalid_sum = 0;     // sum above the renormalization window
  std::size_t duplicates = 0;      // same timestamp, later frame kept
  bool absent = false;             // all frames dropped
};

/// Frames must share one (participant, video) key.
std::pair<EmotionStream, StreamValidation> validate_and_normalize(
    std::vector<FrameRecord> frames, const ValidationPolicy& policy = {});

struct ValidationReport {
  std::vector<StreamValidation> streams;
  std::size_t records_parsed = 0;
  std::size_t frames_kept = 0;
  std::size_t frames_dropped = 0;

  std::string to_json() const;
};

/// Groups raw records by (participant, video) and validates each group.
std::pair<std::map<std::pair<std::string, int>, EmotionStream>, ValidationReport>
ingest_frames(std::vector<FrameRecord> records, const ValidationPolicy& policy = {});

// ---------------------------------------------------------------------------
// Traits: 22 scores across four instrument families.
// ---------------------------------------------------------------------------

enum class TraitKind : int {
  kAgreeableness = 0,
  kConscientiousness,
  kNeuroticism,
  kExtraversion,
  kOpenness,
  kEthicalLikelihood,
  kEthicalPerceived,
  kFinancialLikelihood,
  kFinancialPerceived,
  kHealthLikelihood,
  kHealthPerceived,
  kSocialLikelihood,
  kSocialPerceived,
  kRecreationalLikelihood,
  kRecreationalPerceived,
  kConservation,
  kTranscendence,
  kHarmCare,
  kFairnessReciprocity,
  kIngroupLoyalty,
  kAuthorityRespect,
  kPuritySanctity,
};

inline constexpr int kTraitCount = 22;

enum class TraitFamily : int { kBigFive = 0, kDospert, kSchwartz, kHaidt };
inline constexpr int kFamilyCount = 4;

std::string_view trait_code(TraitKind t);     // CSV column id, e.g. "ETH_L"
std::string_view trait_display(TraitKind t);  // e.g. "Ethical likelihood"
std::optional<TraitKind> trait_from_code(std::string_view code);
TraitFamily trait_family(TraitKind t);
std::string_view family_name(TraitFamily f);
std::vector<TraitKind> traits_of_family(TraitFamily f);

/// All 22 traits in canonical order.
const std::array<TraitKind, kTraitCount>& all_traits();

/// The published accuracy-table row order.
const std::array<TraitKind, kTraitCount>& accuracy_table_order();

/// Plausibility window per family; brackets the published descriptive
/// ranges with margin.
struct TraitRanges {
  std::array<std::pair<double, double>, kFamilyCount> bounds = {{
      {0.0, 1.0},    // Big Five
      {1.0, 10.0},   // DOSPERT
      {-6.0, 6.0},   // Schwartz
      {0.0, 30.0},   // Haidt
  }};
  std::pair<double, double> for_trait(TraitKind t) const {
    return bounds[static_cast<int>(trait_family(t))];
  }
};

struct TraitTable {
  // participant -> per-trait optional score; std::map keeps iteration
  // deterministic.
  std::map<std::string, std::array<std::optional<double>, kTraitCount>> rows;

  bool family_present(const std::string& participant, TraitFamily f) const;
  std::size_t family_count(TraitFamily f) const;
};

/// Header must name participant_id plus any subset of the 22 canonical trait
/// columns. Enforces per-row family completeness and plausibility ranges.
TraitTable load_trait_table(std::istream& source, const TraitRanges& ranges = {});
TraitTable load_trait_table_file(const std::string& path, const TraitRanges& ranges = {});

void write_trait_table(std::ostream& out, const TraitTable& table);
void write_trait_table_file(const std::string& path, const TraitTable& table);

// ---------------------------------------------------------------------------
// Cohort: the joined, immutable analysis input.
// ---------------------------------------------------------------------------

struct AssemblyReport {
  std::vector<std::string> orphan_stream_participants;  // streams without traits
  std::vector<std::string> trait_only_participants;     // traits without streams
  std::size_t participants = 0;

  std::string to_json() const;
};

struct Cohort {
  std::map<std::pair<std::string, int>, EmotionStream> streams;
  TraitTable traits;
  std::string cohort_id;  // content hash; ties artifacts to their source data
  AssemblyReport assembly;

  /// Sorted participant ids (each has >= 1 stream and >= 1 trait family).
  std::vector<std::string> participants() const;
  const EmotionStream* stream(const std::string& participant, int video) const;
};

/// Joins streams and traits on participant id. Orphan streams and trait-only
/// participants are reported and excluded. Throws on an empty join.
Cohort assemble_cohort(std::map<std::pair<std::string, int>, EmotionStream> streams,
                       TraitTable traits);

/// Writes frames.jsonl + traits.csv under dir; re-ingesting yields a
/// structurally identical cohort.
void save_cohort(const Cohort& cohort, const std::string& dir);
Cohort load_cohort(const std::string& dir, const ValidationPolicy& policy = {});

}  // namespace emotrait
