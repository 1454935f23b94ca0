/**
 * Copyright 2026, emotrait authors
 * SPDX-License-Identifier: Apache-2.0
 */
#include "emotrait/cohort.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace emotrait {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, kEmotionCount> kEmotionKeys = {
    "angry", "disgusted", "fearful", "happy", "neutral", "sad", "surprised"};
constexpr std::array<std::string_view, kEmotionCount> kEmotionDisplay = {
    "Angry", "Disgusted", "Fearful", "Happy", "Neutral", "Sad", "Surprised"};

const std::array<VideoInfo, kVideoCount> kCatalog = {{
    {1, "puppies"},
    {2, "avocado"},
    {3, "condom_ad"},
    {4, "runner"},
    {5, "maggot"},
    {6, "soldier"},
    {7, "trump"},
    {8, "mountain_bike"},
    {9, "roof_bike"},
    {10, "roof_run"},
    {11, "raccoon"},
    {12, "abandoned"},
    {13, "waste"},
    {14, "dog"},
    {15, "monster"},
}};

struct TraitMeta {
  TraitKind kind;
  TraitFamily family;
  std::string_view code;
  std::string_view display;
};

constexpr std::array<TraitMeta, kTraitCount> kTraitMeta = {{
    {TraitKind::kAgreeableness, TraitFamily::kBigFive, "agreeableness", "Agreeableness"},
    {TraitKind::kConscientiousness, TraitFamily::kBigFive, "conscientiousness", "Conscientiousness"},
    {TraitKind::kNeuroticism, TraitFamily::kBigFive, "neuroticism", "Neuroticism"},
    {TraitKind::kExtraversion, TraitFamily::kBigFive, "extraversion", "Extraversion"},
    {TraitKind::kOpenness, TraitFamily::kBigFive, "openness", "Openness to experience"},
    {TraitKind::kEthicalLikelihood, TraitFamily::kDospert, "ETH_L", "Ethical likelihood"},
    {TraitKind::kEthicalPerceived, TraitFamily::kDospert, "ETH_P", "Ethical perceived"},
    {TraitKind::kFinancialLikelihood, TraitFamily::kDospert, "FIN_L", "Financial likelihood"},
    {TraitKind::kFinancialPerceived, TraitFamily::kDospert, "FIN_P", "Financial perceived"},
    {TraitKind::kHealthLikelihood, TraitFamily::kDospert, "HEA_L", "Health likelihood"},
    {TraitKind::kHealthPerceived, TraitFamily::kDospert, "HEA_P", "Health perceived"},
    {TraitKind::kSocialLikelihood, TraitFamily::kDospert, "SOC_L", "Social likelihood"},
    {TraitKind::kSocialPerceived, TraitFamily::kDospert, "SOC_P", "Social perceived"},
    {TraitKind::kRecreationalLikelihood, TraitFamily::kDospert, "REC_L", "Recreational likelihood"},
    {TraitKind::kRecreationalPerceived, TraitFamily::kDospert, "REC_P", "Recreational perceived"},
    {TraitKind::kConservation, TraitFamily::kSchwartz, "conservation", "Conservation"},
    {TraitKind::kTranscendence, TraitFamily::kSchwartz, "transcendence", "Transcendence"},
    {TraitKind::kHarmCare, TraitFamily::kHaidt, "harm_care", "Harm/care"},
    {TraitKind::kFairnessReciprocity, TraitFamily::kHaidt, "fairness_reciprocity",
     "Fairness/reciprocity"},
    {TraitKind::kIngroupLoyalty, TraitFamily::kHaidt, "ingroup_loyalty", "In-group loyalty"},
    {TraitKind::kAuthorityRespect, TraitFamily::kHaidt, "authority_respect", "Authority/respect"},
    {TraitKind::kPuritySanctity, TraitFamily::kHaidt, "purity_sanctity", "Purity/sanctity"},
}};

constexpr std::array<std::string_view, kFamilyCount> kFamilyNames = {
    "big_five", "dospert", "schwartz", "haidt"};

}  // namespace

std::string_view emotion_key(EmotionKind e) { return kEmotionKeys[static_cast<int>(e)]; }
std::string_view emotion_display(EmotionKind e) { return kEmotionDisplay[static_cast<int>(e)]; }

std::optional<EmotionKind> emotion_from_key(std::string_view key) {
  for (int i = 0; i < kEmotionCount; ++i) {
    if (kEmotionKeys[static_cast<std::size_t>(i)] == key) return static_cast<EmotionKind>(i);
  }
  return std::nullopt;
}

const std::array<VideoInfo, kVideoCount>& video_catalog() { return kCatalog; }

bool is_valid_video_id(int id) { return id >= 1 && id <= kVideoCount; }

std::string_view trait_code(TraitKind t) { return kTraitMeta[static_cast<int>(t)].code; }
std::string_view trait_display(TraitKind t) { return kTraitMeta[static_cast<int>(t)].display; }
TraitFamily trait_family(TraitKind t) { return kTraitMeta[static_cast<int>(t)].family; }
std::string_view family_name(TraitFamily f) { return kFamilyNames[static_cast<int>(f)]; }

std::optional<TraitKind> trait_from_code(std::string_view code) {
  for (const auto& meta : kTraitMeta) {
    if (meta.code == code) return meta.kind;
  }
  return std::nullopt;
}

std::vector<TraitKind> traits_of_family(TraitFamily f) {
  std::vector<TraitKind> out;
  for (const auto& meta : kTraitMeta) {
    if (meta.family == f) out.push_back(meta.kind);
  }
  return out;
}

const std::array<TraitKind, kTraitCount>& all_traits() {
  static const std::array<TraitKind, kTraitCount> order = [] {
    std::array<TraitKind, kTraitCount> a{};
    for (int i = 0; i < kTraitCount; ++i) a[static_cast<std::size_t>(i)] = kTraitMeta[static_cast<std::size_t>(i)].kind;
    return a;
  }();
  return order;
}

const std::array<TraitKind, kTraitCount>& accuracy_table_order() {
  static const std::array<TraitKind, kTraitCount> order = {
      TraitKind::kConservation,          TraitKind::kTranscendence,
      TraitKind::kAuthorityRespect,      TraitKind::kFairnessReciprocity,
      TraitKind::kHarmCare,              TraitKind::kIngroupLoyalty,
      TraitKind::kPuritySanctity,        TraitKind::kAgreeableness,
      TraitKind::kConscientiousness,     TraitKind::kExtraversion,
      TraitKind::kNeuroticism,           TraitKind::kOpenness,
      TraitKind::kEthicalLikelihood,     TraitKind::kEthicalPerceived,
      TraitKind::kFinancialLikelihood,   TraitKind::kFinancialPerceived,
      TraitKind::kHealthLikelihood,      TraitKind::kHealthPerceived,
      TraitKind::kRecreationalLikelihood, TraitKind::kRecreationalPerceived,
      TraitKind::kSocialLikelihood,      TraitKind::kSocialPerceived,
  };
  return order;
}

// ---------------------------------------------------------------------------
// Frame logs
// ---------------------------------------------------------------------------

namespace {

FrameRecord record_from_json(const json& j, std::size_t line) {
  if (!j.is_object()) throw ParseError("record is not an object", line);
  FrameRecord rec;
  bool saw_pid = false, saw_video = false, saw_ts = false;
  std::array<bool, kEmotionCount> saw_emotion{};
  for (const auto& [key, value] : j.items()) {
    if (key == "participant_id") {
      if (!value.is_string()) throw ParseError("participant_id must be a string", line);
      rec.participant_id = value.get<std::string>();
      saw_pid = true;
    } else if (key == "video_id") {
      if (!value.is_number_integer()) throw ParseError("video_id must be an integer", line);
      rec.video_id = value.get<int>();
      saw_video = true;
    } else if (key == "timestamp_ms") {
      if (!value.is_number_integer() || value.get<std::int64_t>() < 0) {
        throw ParseError("timestamp_ms must be a non-negative integer", line);
      }
      rec.frame.timestamp_ms = value.get<std::int64_t>();
      saw_ts = true;
    } else if (auto emo = emotion_from_key(key)) {
      if (!value.is_number()) throw ParseError("emotion score for '" + key + "' must be a number", line);
      rec.frame.scores[static_cast<std::size_t>(static_cast<int>(*emo))] = value.get<double>();
      saw_emotion[static_cast<std::size_t>(static_cast<int>(*emo))] = true;
    } else {
      throw ParseError("unknown emotion key '" + key + "'", line);
    }
  }
  if (!saw_pid) throw ParseError("missing field 'participant_id'", line);
  if (!saw_video) throw ParseError("missing field 'video_id'", line);
  if (!saw_ts) throw ParseError("missing field 'timestamp_ms'", line);
  for (int e = 0; e < kEmotionCount; ++e) {
    if (!saw_emotion[static_cast<std::size_t>(e)]) {
      throw ParseError("missing field '" + std::string(kEmotionKeys[static_cast<std::size_t>(e)]) + "'", line);
    }
  }
  if (!is_valid_video_id(rec.video_id)) {
    throw ParseError("video_id " + std::to_string(rec.video_id) + " outside 1..15", line);
  }
  return rec;
}

FrameRecord record_from_csv(std::string_view text, std::size_t line) {
  const auto parts = split(text, ',');
  if (parts.size() != 3 + kEmotionCount) {
    throw ParseError("expected " + std::to_string(3 + kEmotionCount) + " columns, got " +
                         std::to_string(parts.size()),
                     line);
  }
  FrameRecord rec;
  rec.participant_id = std::string(trim(parts[0]));
  if (rec.participant_id.empty()) throw ParseError("empty participant_id", line);
  rec.video_id = static_cast<int>(parse_int(parts[1], line));
  if (!is_valid_video_id(rec.video_id)) {
    throw ParseError("video_id " + std::to_string(rec.video_id) + " outside 1..15", line);
  }
  const long long ts = parse_int(parts[2], line);
  if (ts < 0) throw ParseError("timestamp_ms must be non-negative", line);
  rec.frame.timestamp_ms = ts;
  for (int e = 0; e < kEmotionCount; ++e) {
    rec.frame.scores[static_cast<std::size_t>(e)] = parse_double(parts[static_cast<std::size_t>(3 + e)], line);
  }
  return rec;
}

bool is_csv_header(std::string_view line) {
  return trim(line).substr(0, 14) == "participant_id";
}

}  // namespace

std::size_t parse_frame_log(std::istream& source, FrameLogFormat format,
                            const std::function<void(FrameRecord&&)>& sink) {
  std::string line;
  std::size_t line_no = 0;
  std::size_t count = 0;
  bool first = true;
  while (std::getline(source, line)) {
    ++line_no;
    const std::string_view text = trim(line);
    if (text.empty()) continue;
    if (format == FrameLogFormat::kCsv && first && is_csv_header(text)) {
      first = false;
      continue;
    }
    first = false;
    if (format == FrameLogFormat::kJsonl) {
      json j = json::parse(text, nullptr, false);
      if (j.is_discarded()) throw ParseError("invalid JSON", line_no);
      sink(record_from_json(j, line_no));
    } else {
      sink(record_from_csv(text, line_no));
    }
    ++count;
  }
  return count;
}

std::vector<FrameRecord> parse_frame_log(std::istream& source, FrameLogFormat format) {
  std::vector<FrameRecord> records;
  parse_frame_log(source, format, [&](FrameRecord&& r) { records.push_back(std::move(r)); });
  return records;
}

std::vector<FrameRecord> parse_frame_log_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingInputError("cannot open frame log: " + path);
  const FrameLogFormat format =
      path.size() >= 4 && path.substr(path.size() - 4) == ".csv" ? FrameLogFormat::kCsv
                                                                 : FrameLogFormat::kJsonl;
  return parse_frame_log(in, format);
}

void write_frame_log(std::ostream& out, const EmotionStream& stream) {
  for (const auto& frame : stream.frames) {
    json j;
    j["participant_id"] = stream.participant_id;
    j["video_id"] = stream.video_id;
    j["timestamp_ms"] = frame.timestamp_ms;
    for (int e = 0; e < kEmotionCount; ++e) {
      j[std::string(kEmotionKeys[static_cast<std::size_t>(e)])] = frame.scores[static_cast<std::size_t>(e)];
    }
    out << j.dump() << '\n';
  }
}

void write_frame_log_file(const std::string& path,
                          const std::map<std::pair<std::string, int>, EmotionStream>& streams) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write frame log: " + path);
  for (const auto& [key, stream] : streams) write_frame_log(out, stream);
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

std::pair<EmotionStream, StreamValidation> validate_and_normalize(std::vector<FrameRecord> frames,
                                                                  const ValidationPolicy& policy) {
  StreamValidation report;
  EmotionStream stream;
  if (!frames.empty()) {
    stream.participant_id = frames.front().participant_id;
    stream.video_id = frames.front().video_id;
    report.participant_id = stream.participant_id;
    report.video_id = stream.video_id;
    for (const auto& rec : frames) {
      if (rec.participant_id != stream.participant_id || rec.video_id != stream.video_id) {
        throw InvariantError("validate_and_normalize: frames span multiple (participant, video) keys");
      }
    }
  }
  report.parsed = frames.size();

  std::vector<EmotionFrame> valid;
  valid.reserve(frames.size());
  for (auto& rec : frames) {
    auto& f = rec.frame;
    bool in_range = true;
    double sum = 0.0;
    for (double s : f.scores) {
      if (!(s >= 0.0 && s <= 1.0) || !std::isfinite(s)) in_range = false;
      sum += s;
    }
    if (!in_range) {
      ++report.out_of_range;
      continue;
    }
    if (sum < policy.no_face_threshold) {
      ++report.no_face;
      continue;
    }
    if (sum > policy.max_score_sum) {
      ++report.invalid_sum;
      continue;
    }
    // Already-normalized frames are kept bit-identical so cohort round trips
    // are exact.
    if (std::abs(sum - 1.0) > 1e-12) {
      for (double& s : f.scores) s /= sum;
    }
    valid.push_back(f);
  }

  std::stable_sort(valid.begin(), valid.end(),
                   [](const EmotionFrame& a, const EmotionFrame& b) {
                     return a.timestamp_ms < b.timestamp_ms;
                   });
  for (std::size_t i = 0; i < valid.size(); ++i) {
    // keep the later frame of each equal-timestamp run
    if (i + 1 < valid.size() && valid[i + 1].timestamp_ms == valid[i].timestamp_ms) {
      ++report.duplicates;
      continue;
    }
    stream.frames.push_back(valid[i]);
  }
  report.kept = stream.frames.size();
  report.absent = stream.frames.empty();
  return {std::move(stream), report};
}

std::pair<std::map<std::pair<std::string, int>, EmotionStream>, ValidationReport> ingest_frames(
    std::vector<FrameRecord> records, const ValidationPolicy& policy) {
  std::map<std::pair<std::string, int>, std::vector<FrameRecord>> grouped;
  for (auto& rec : records) {
    auto key = std::make_pair(rec.participant_id, rec.video_id);
    grouped[std::move(key)].push_back(std::move(rec));
  }
  ValidationReport report;
  std::map<std::pair<std::string, int>, EmotionStream> streams;
  for (auto& [key, group] : grouped) {
    auto [stream, sv] = validate_and_normalize(std::move(group), policy);
    report.records_parsed += sv.parsed;
    report.frames_kept += sv.kept;
    report.frames_dropped += sv.parsed - sv.kept;
    report.streams.push_back(sv);
    if (!stream.absent()) streams.emplace(key, std::move(stream));
  }
  return {std::move(streams), std::move(report)};
}

std::string ValidationReport::to_json() const {
  json j;
  j["schema_version"] = 1;
  j["records_parsed"] = records_parsed;
  j["frames_kept"] = frames_kept;
  j["frames_dropped"] = frames_dropped;
  json arr = json::array();
  for (const auto& s : streams) {
    json e;
    e["participant_id"] = s.participant_id;
    e["video_id"] = s.video_id;
    e["parsed"] = s.parsed;
    e["kept"] = s.kept;
    e["no_face"] = s.no_face;
    e["out_of_range"] = s.out_of_range;
    e["invalid_sum"] = s.invalid_sum;
    e["duplicates"] = s.duplicates;
    e["absent"] = s.absent;
    arr.push_back(e);
  }
  j["streams"] = arr;
  return j.dump(2);
}

// ---------------------------------------------------------------------------
// Trait table
// ---------------------------------------------------------------------------

bool TraitTable::family_present(const std::string& participant, TraitFamily f) const {
  auto it = rows.find(participant);
  if (it == rows.end()) return false;
  for (const auto& meta : kTraitMeta) {
    if (meta.family == f && it->second[static_cast<int>(meta.kind)].has_value()) return true;
  }
  return false;
}

std::size_t TraitTable::family_count(TraitFamily f) const {
  std::size_t n = 0;
  for (const auto& [pid, row] : rows) {
    if (family_present(pid, f)) ++n;
  }
  return n;
}

TraitTable load_trait_table(std::istream& source, const TraitRanges& ranges) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(source, line)) throw ParseError("empty trait table");
  ++line_no;
  const auto header = split(trim(line), ',');
  if (header.empty() || trim(header[0]) != "participant_id") {
    throw ParseError("trait table header must start with participant_id", line_no);
  }
  std::vector<TraitKind> columns;
  std::set<TraitKind> seen;
  for (std::size_t c = 1; c < header.size(); ++c) {
    const auto code = trim(header[c]);
    auto kind = trait_from_code(code);
    if (!kind) throw ParseError("unknown trait column '" + std::string(code) + "'", line_no);
    if (!seen.insert(*kind).second) {
      throw ParseError("duplicate trait column '" + std::string(code) + "'", line_no);
    }
    columns.push_back(*kind);
  }

  TraitTable table;
  while (std::getline(source, line)) {
    ++line_no;
    const std::string_view text = trim(line);
    if (text.empty()) continue;
    const auto parts = split(text, ',');
    if (parts.size() != columns.size() + 1) {
      throw ParseError("expected " + std::to_string(columns.size() + 1) + " columns, got " +
                           std::to_string(parts.size()),
                       line_no);
    }
    const std::string pid(trim(parts[0]));
    if (pid.empty()) throw ParseError("empty participant_id", line_no);
    if (table.rows.count(pid)) {
      throw ValidationError("duplicate participant_id '" + pid + "' (line " +
                            std::to_string(line_no) + ")");
    }
    std::array<std::optional<double>, kTraitCount> row{};
    for (std::size_t c = 0; c < columns.size(); ++c) {
      const auto cell = trim(parts[c + 1]);
      if (cell.empty()) continue;
      const double value = parse_double(cell, line_no);
      const auto [lo, hi] = ranges.for_trait(columns[c]);
      if (!(value >= lo && value <= hi)) {
        throw ValidationError("score " + format_double(value) + " for " +
                              std::string(trait_code(columns[c])) + " out of range [" +
                              format_double(lo) + ", " + format_double(hi) + "] (line " +
                              std::to_string(line_no) + ", column " +
                              std::string(trait_code(columns[c])) + ")");
      }
      row[static_cast<int>(columns[c])] = value;
    }
    // a survey was either taken or not: families must be all-or-none per row
    for (int f = 0; f < kFamilyCount; ++f) {
      const auto family = static_cast<TraitFamily>(f);
      std::size_t present = 0, total = 0;
      for (const auto& meta : kTraitMeta) {
        if (meta.family != family) continue;
        ++total;
        if (row[static_cast<int>(meta.kind)].has_value()) ++present;
      }
      if (present != 0 && present != total) {
        throw ValidationError("participant '" + pid + "' has a partial " +
                              std::string(family_name(family)) + " family (" +
                              std::to_string(present) + " of " + std::to_string(total) +
                              " scores)");
      }
    }
    table.rows.emplace(pid, row);
  }
  return table;
}

TraitTable load_trait_table_file(const std::string& path, const TraitRanges& ranges) {
  std::ifstream in(path);
  if (!in) throw MissingInputError("cannot open trait table: " + path);
  return load_trait_table(in, ranges);
}

void write_trait_table(std::ostream& out, const TraitTable& table) {
  out << "participant_id";
  for (const auto& meta : kTraitMeta) out << ',' << meta.code;
  out << '\n';
  for (const auto& [pid, row] : table.rows) {
    out << pid;
    for (const auto& meta : kTraitMeta) {
      out << ',';
      const auto& cell = row[static_cast<int>(meta.kind)];
      if (cell) out << format_double(*cell);
    }
    out << '\n';
  }
}

void write_trait_table_file(const std::string& path, const TraitTable& table) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write trait table: " + path);
  write_trait_table(out, table);
}

// ---------------------------------------------------------------------------
// Cohort assembly
// ---------------------------------------------------------------------------

std::vector<std::string> Cohort::participants() const {
  std::set<std::string> ids;
  for (const auto& [key, stream] : streams) ids.insert(key.first);
  return {ids.begin(), ids.end()};
}

const EmotionStream* Cohort::stream(const std::string& participant, int video) const {
  auto it = streams.find({participant, video});
  return it == streams.end() ? nullptr : &it->second;
}

std::string AssemblyReport::to_json() const {
  json j;
  j["schema_version"] = 1;
  j["participants"] = participants;
  j["orphan_stream_participants"] = orphan_stream_participants;
  j["trait_only_participants"] = trait_only_participants;
  return j.dump(2);
}

Cohort assemble_cohort(std::map<std::pair<std::string, int>, EmotionStream> streams,
                       TraitTable traits) {
  std::set<std::string> stream_pids;
  for (const auto& [key, stream] : streams) stream_pids.insert(key.first);

  std::set<std::string> trait_pids;
  for (const auto& [pid, row] : traits.rows) {
    bool any = false;
    for (const auto& cell : row) {
      if (cell.has_value()) {
        any = true;
        break;
      }
    }
    if (any) trait_pids.insert(pid);
  }

  Cohort cohort;
  std::set<std::string> joined;
  for (const auto& pid : stream_pids) {
    if (trait_pids.count(pid)) {
      joined.insert(pid);
    } else {
      cohort.assembly.orphan_stream_participants.push_back(pid);
    }
  }
  for (const auto& pid : trait_pids) {
    if (!stream_pids.count(pid)) cohort.assembly.trait_only_participants.push_back(pid);
  }
  if (joined.empty()) throw ValidationError("empty join: no participant has both streams and traits");
  cohort.assembly.participants = joined.size();

  for (auto& [key, stream] : streams) {
    if (joined.count(key.first)) cohort.streams.emplace(key, std::move(stream));
  }
  for (const auto& pid : joined) {
    cohort.traits.rows.emplace(pid, traits.rows.at(pid));
  }

  // Content hash over the joined structure; value-independent so it survives
  // serialization round trips.
  std::string digest;
  for (const auto& pid : joined) {
    digest += pid;
    digest += '|';
    for (int v = 1; v <= kVideoCount; ++v) {
      auto it = cohort.streams.find({pid, v});
      if (it != cohort.streams.end()) {
        digest += std::to_string(v) + ':' + std::to_string(it->second.frames.size()) + ';';
      }
    }
    digest += '|';
    const auto& row = cohort.traits.rows.at(pid);
    for (int t = 0; t < kTraitCount; ++t) digest += row[static_cast<std::size_t>(t)].has_value() ? '1' : '0';
    digest += '\n';
  }
  cohort.cohort_id = to_hex(fnv1a64(digest));
  return cohort;
}

void save_cohort(const Cohort& cohort, const std::string& dir) {
  write_frame_log_file(dir + "/frames.jsonl", cohort.streams);
  write_trait_table_file(dir + "/traits.csv", cohort.traits);
}

Cohort load_cohort(const std::string& dir, const ValidationPolicy& policy) {
  auto records = parse_frame_log_file(dir + "/frames.jsonl");
  auto [streams, report] = ingest_frames(std::move(records), policy);
  auto traits = load_trait_table_file(dir + "/traits.csv");
  return assemble_cohort(std::move(streams), std::move(traits));
}

}  // namespace emotrait
