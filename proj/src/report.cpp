/**
 * Copyright 2026, emotrait authors
 * SPDX-License-Identifier: Apache-2.0
 */
#include "emotrait/report.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "emotrait/shap.hpp"

namespace emotrait {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// RunConfig
// ---------------------------------------------------------------------------

std::string RunConfig::resolved_frames_path() const {
  return frames_path.empty() ? out_dir + "/frames.jsonl" : frames_path;
}

std::string RunConfig::resolved_traits_path() const {
  return traits_path.empty() ? out_dir + "/traits.csv" : traits_path;
}

Aggregation RunConfig::aggregation_kind() const {
  if (aggregation == "mean") return Aggregation::kMean;
  if (aggregation == "time_weighted") return Aggregation::kTimeWeightedMean;
  if (aggregation == "max") return Aggregation::kMax;
  throw ValidationError("unknown aggregation '" + aggregation + "'");
}

std::string RunConfig::to_string() const {
  std::ostringstream out;
  out << "aggregation = " << aggregation << '\n';
  out << "alluvial_weight = " << alluvial_weight << '\n';
  out << "binning = " << binning_mode_name(binning) << '\n';
  out << "boost_gamma = " << format_double(boost.gamma) << '\n';
  out << "boost_grid = " << (boost_grid ? "true" : "false") << '\n';
  out << "boost_lambda = " << format_double(boost.lambda) << '\n';
  out << "boost_learning_rate = " << format_double(boost.learning_rate) << '\n';
  out << "boost_max_depth = " << boost.max_depth << '\n';
  out << "boost_min_child_weight = " << format_double(boost.min_child_weight) << '\n';
  out << "boost_rounds = " << boost.rounds << '\n';
  out << "cv_folds = " << cv_folds << '\n';
  out << "frame_format = " << frame_format << '\n';
  out << "frames = " << frames_path << '\n';
  out << "holdout_fraction = " << format_double(holdout_fraction) << '\n';
  out << "mode = " << eval_mode_name(mode) << '\n';
  out << "out_dir = " << out_dir << '\n';
  out << "report_top_k = " << report_top_k << '\n';
  out << "resample_k = " << resample_k << '\n';
  out << "resample_strategy = " << resample_strategy_name(resample_strategy) << '\n';
  out << "seed = " << seed << '\n';
  out << "select_epsilon = " << format_double(select_epsilon) << '\n';
  out << "select_vif_max = " << format_double(select_vif_max) << '\n';
  out << "shap_top_k = " << shap_top_k << '\n';
  out << "standardize = " << (standardize ? "true" : "false") << '\n';
  out << "synth_beta = " << format_double(synth_beta) << '\n';
  out << "synth_n = " << synth_n << '\n';
  out << "synth_preset = " << synth_preset << '\n';
  out << "synth_rho = " << format_double(synth_rho) << '\n';
  out << "threads = " << threads << '\n';
  out << "traits = " << traits_path << '\n';
  return out.str();
}

RunConfig RunConfig::from_string(const std::string& text) {
  RunConfig config;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected 'key = value'", line_no);
    const std::string key(trim(t.substr(0, eq)));
    const std::string value(trim(t.substr(eq + 1)));
    auto as_bool = [&](const std::string& v) {
      if (v == "true") return true;
      if (v == "false") return false;
      throw ParseError("expected true/false for " + key, line_no);
    };
    if (key == "aggregation") {
      config.aggregation = value;
    } else if (key == "alluvial_weight") {
      config.alluvial_weight = value;
    } else if (key == "binning") {
      const auto mode = binning_mode_from_name(value);
      if (!mode) throw ParseError("unknown binning mode '" + value + "'", line_no);
      config.binning = *mode;
    } else if (key == "boost_gamma") {
      config.boost.gamma = parse_double(value, line_no);
    } else if (key == "boost_grid") {
      config.boost_grid = as_bool(value);
    } else if (key == "boost_lambda") {
      config.boost.lambda = parse_double(value, line_no);
    } else if (key == "boost_learning_rate") {
      config.boost.learning_rate = parse_double(value, line_no);
    } else if (key == "boost_max_depth") {
      config.boost.max_depth = static_cast<int>(parse_int(value, line_no));
    } else if (key == "boost_min_child_weight") {
      config.boost.min_child_weight = parse_double(value, line_no);
    } else if (key == "boost_rounds") {
      config.boost.rounds = static_cast<int>(parse_int(value, line_no));
    } else if (key == "cv_folds") {
      config.cv_folds = static_cast<int>(parse_int(value, line_no));
    } else if (key == "frame_format") {
      if (value != "jsonl" && value != "csv") throw ParseError("frame_format must be jsonl or csv", line_no);
      config.frame_format = value;
    } else if (key == "frames") {
      config.frames_path = value;
    } else if (key == "holdout_fraction") {
      config.holdout_fraction = parse_double(value, line_no);
    } else if (key == "mode") {
      const auto mode = eval_mode_from_name(value);
      if (!mode) throw ParseError("unknown mode '" + value + "'", line_no);
      config.mode = *mode;
    } else if (key == "out_dir") {
      config.out_dir = value;
    } else if (key == "report_top_k") {
      config.report_top_k = static_cast<int>(parse_int(value, line_no));
    } else if (key == "resample_k") {
      config.resample_k = static_cast<int>(parse_int(value, line_no));
    } else if (key == "resample_strategy") {
      const auto strategy = resample_strategy_from_name(value);
      if (!strategy) throw ParseError("unknown resample strategy '" + value + "'", line_no);
      config.resample_strategy = *strategy;
    } else if (key == "seed") {
      config.seed = std::stoull(value);
    } else if (key == "select_epsilon") {
      config.select_epsilon = parse_double(value, line_no);
    } else if (key == "select_vif_max") {
      config.select_vif_max = parse_double(value, line_no);
    } else if (key == "shap_top_k") {
      config.shap_top_k = static_cast<int>(parse_int(value, line_no));
    } else if (key == "standardize") {
      config.standardize = as_bool(value);
    } else if (key == "synth_beta") {
      config.synth_beta = parse_double(value, line_no);
    } else if (key == "synth_n") {
      config.synth_n = static_cast<int>(parse_int(value, line_no));
    } else if (key == "synth_preset") {
      config.synth_preset = value;
    } else if (key == "synth_rho") {
      config.synth_rho = parse_double(value, line_no);
    } else if (key == "threads") {
      config.threads = static_cast<int>(parse_int(value, line_no));
    } else if (key == "traits") {
      config.traits_path = value;
    } else {
      throw ParseError("unknown config key '" + key + "'", line_no);
    }
  }
  return config;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingInputError("cannot open config: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return from_string(buffer.str());
}

std::string RunConfig::hash() const {
  // out_dir and threads are execution parameters: they cannot influence any
  // result byte, so two runs differing only there share a config hash
  std::string canonical;
  std::istringstream in(to_string());
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("out_dir = ", 0) == 0 || line.rfind("threads = ", 0) == 0) continue;
    canonical += line;
    canonical += '\n';
  }
  return to_hex(fnv1a64(canonical));
}

// ---------------------------------------------------------------------------
// Alluvial links
// ---------------------------------------------------------------------------

AlluvialLinkTable build_alluvial(
    const std::vector<RegressionModel>& models,
    const std::map<std::string, std::vector<std::pair<std::string, double>>>& shap_top_by_trait,
    const std::string& weight_mode, const std::string& cohort_id) {
  std::map<std::pair<std::string, std::string>, double> video_emotion;
  std::map<std::pair<std::string, std::string>, double> emotion_trait;

  auto add = [&](const std::string& feature, const std::string& trait, double weight) {
    const auto idx = feature_index_from_name(feature);
    if (!idx) return;
    const FeatureKey key = feature_key(*idx);
    const std::string video = "video_" + std::to_string(key.video);
    const std::string emotion(emotion_key(key.emotion));
    video_emotion[{video, emotion}] += weight;
    emotion_trait[{emotion, trait}] += weight;
  };

  if (weight_mode == "shap") {
    for (const auto& [trait, entries] : shap_top_by_trait) {
      for (const auto& [feature, mean_abs] : entries) add(feature, trait, mean_abs);
    }
  } else if (weight_mode == "count" || weight_mode == "coef") {
    for (const auto& model : models) {
      for (const auto& term : model.terms) {
        if (term.stars == StarLevel::kNone) continue;  // only significant terms back links
        add(term.name, model.dependent, weight_mode == "count" ? 1.0 : std::abs(term.coef));
      }
    }
  } else {
    throw ValidationError("unknown alluvial weight mode '" + weight_mode + "'");
  }

  AlluvialLinkTable table;
  table.weight_mode = weight_mode;
  table.cohort_id = cohort_id;
  for (const auto& [key, weight] : video_emotion) table.video_emotion.push_back({key.first, key.second, weight});
  for (const auto& [key, weight] : emotion_trait) table.emotion_trait.push_back({key.first, key.second, weight});
  return table;
}

std::string AlluvialLinkTable::to_json() const {
  json j;
  j["schema_version"] = 1;
  j["kind"] = "alluvial_links";
  j["cohort_id"] = cohort_id;
  j["weight_mode"] = weight_mode;
  auto links_json = [](const std::vector<AlluvialLink>& links) {
    json arr = json::array();
    for (const auto& link : links) {
      arr.push_back({{"source", link.source}, {"target", link.target}, {"weight", link.weight}});
    }
    return arr;
  };
  j["video_emotion"] = links_json(video_emotion);
  j["emotion_trait"] = links_json(emotion_trait);
  return j.dump(2);
}

std::string AlluvialLinkTable::to_csv() const {
  std::ostringstream out;
  out << "kind,source,target,weight\n";
  for (const auto& link : video_emotion) {
    out << "video_emotion," << link.source << ',' << link.target << ',' << format_double(link.weight) << '\n';
  }
  for (const auto& link : emotion_trait) {
    out << "emotion_trait," << link.source << ',' << link.target << ',' << format_double(link.weight) << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Table emitters
// ---------------------------------------------------------------------------

std::string trait_descriptives_csv(const TraitTable& traits) {
  std::ostringstream out;
  out << "Variable,M,SD,Min,Max\n";
  for (TraitKind t : all_traits()) {
    std::vector<double> column;
    for (const auto& [pid, row] : traits.rows) {
      const auto& cell = row[static_cast<std::size_t>(static_cast<int>(t))];
      if (cell) column.push_back(*cell);
    }
    if (column.size() < 2) continue;
    const auto stats = describe(column);
    out << trait_display(t) << ',' << format_double(stats.mean) << ',' << format_double(stats.sd)
        << ',' << format_double(stats.min) << ',' << format_double(stats.max) << '\n';
  }
  return out.str();
}

std::string feature_descriptives_csv(const FeatureMatrix& matrix) {
  std::ostringstream out;
  out << "Variable,M,SD,Min,Max\n";
  for (int c = 0; c < kFeatureCount; ++c) {
    std::vector<double> column;
    for (std::size_t r = 0; r < matrix.rows(); ++r) {
      const double v = matrix.at(r, static_cast<std::size_t>(c));
      if (!std::isnan(v)) column.push_back(v);
    }
    if (column.size() < 2) continue;
    const auto stats = describe(column);
    out << feature_name(c) << ',' << format_double(stats.mean) << ',' << format_double(stats.sd)
        << ',' << format_double(stats.min) << ',' << format_double(stats.max) << '\n';
  }
  return out.str();
}

namespace {

std::string coef_cell(double coef, StarLevel stars) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", coef);
  std::string cell(buf);
  if (stars != StarLevel::kNone) {
    cell += ' ';
    cell += star_string(stars);
  }
  return cell;
}

std::string round_to(double v, int digits) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

}  // namespace

std::string regression_family_csv(TraitFamily family, const std::vector<RegressionModel>& models) {
  const auto family_traits = traits_of_family(family);
  std::vector<const RegressionModel*> columns;
  for (TraitKind t : family_traits) {
    const RegressionModel* found = nullptr;
    for (const auto& model : models) {
      if (model.dependent == trait_code(t)) {
        found = &model;
        break;
      }
    }
    columns.push_back(found);
  }

  // predictors appearing in any model of the family, canonical order
  std::set<int> used;
  for (const auto* model : columns) {
    if (model == nullptr) continue;
    for (const auto& term : model->terms) {
      const auto idx = feature_index_from_name(term.name);
      if (idx) used.insert(*idx);
    }
  }

  std::ostringstream out;
  out << "Predictor/Dependent";
  for (std::size_t c = 0; c < family_traits.size(); ++c) out << ',' << trait_display(family_traits[c]);
  out << '\n';
  for (int idx : used) {
    out << feature_name(idx);
    for (const auto* model : columns) {
      out << ',';
      if (model == nullptr) continue;
      for (const auto& term : model->terms) {
        if (term.name == feature_name(idx)) {
          out << coef_cell(term.coef, term.stars);
          break;
        }
      }
    }
    out << '\n';
  }
  out << "Constant";
  for (const auto* model : columns) {
    out << ',';
    if (model != nullptr) out << coef_cell(model->intercept.coef, model->intercept.stars);
  }
  out << '\n';
  out << "Adjusted R2";
  for (const auto* model : columns) {
    out << ',';
    if (model != nullptr) out << round_to(model->adj_r2, 3);
  }
  out << '\n';
  out << "N";
  for (const auto* model : columns) {
    out << ',';
    if (model != nullptr) out << model->n;
  }
  out << '\n';
  return out.str();
}

std::string accuracy_table_csv(const std::vector<EvalReport>& reports) {
  std::ostringstream out;
  out << "Variable,Average Accuracy,Cohen's Kappa\n";
  for (TraitKind t : accuracy_table_order()) {
    const EvalReport* found = nullptr;
    for (const auto& report : reports) {
      if (report.trait == t) {
        found = &report;
        break;
      }
    }
    if (found == nullptr) continue;
    out << trait_display(t) << ',' << round_to(found->holdout.accuracy * 100.0, 1) << "%,"
        << round_to(found->holdout.kappa, 2) << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

Pipeline::Pipeline(RunConfig config) : config_(std::move(config)) {}

void Pipeline::write_artifact(const std::string& stage, const std::string& relpath,
                              const std::string& content) {
  const fs::path path = fs::path(config_.out_dir) / relpath;
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write artifact: " + path.string());
  out << content;
  stage_outputs_[stage][relpath] = to_hex(fnv1a64(content));
}

void Pipeline::finish_stage(const std::string& stage) {
  json j;
  j["schema_version"] = 1;
  j["kind"] = "manifest";
  j["stage"] = stage;
  j["config_hash"] = config_.hash();
  j["seed"] = std::to_string(config_.seed);
  json outputs = json::object();
  for (const auto& [path, hash] : stage_outputs_[stage]) outputs[path] = hash;
  j["outputs"] = std::move(outputs);
  const fs::path path = fs::path(config_.out_dir) / ("manifest_" + stage + ".json");
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << j.dump(2);
}

const Cohort& Pipeline::cohort() {
  if (!cohort_) {
    const std::string frames = config_.resolved_frames_path();
    const std::string traits = config_.resolved_traits_path();
    if (!fs::exists(frames)) throw MissingInputError("frame log not found: " + frames);
    if (!fs::exists(traits)) throw MissingInputError("trait table not found: " + traits);
    std::ifstream in(frames);
    const auto format =
        config_.frame_format == "csv" ? FrameLogFormat::kCsv : FrameLogFormat::kJsonl;
    auto records = parse_frame_log(in, format);
    auto [streams, report] = ingest_frames(std::move(records));
    cohort_ = assemble_cohort(std::move(streams), load_trait_table_file(traits));
  }
  return *cohort_;
}

const FeatureMatrix& Pipeline::matrix() {
  if (!matrix_) {
    const fs::path artifact = fs::path(config_.out_dir) / "feature_matrix.json";
    if (fs::exists(artifact) && !cohort_) {
      std::ifstream in(artifact);
      std::stringstream buffer;
      buffer << in.rdbuf();
      matrix_ = FeatureMatrix::from_json(buffer.str());
    } else {
      matrix_ = build_feature_matrix(cohort(), config_.aggregation_kind());
      if (config_.standardize) standardize_columns(*matrix_);
    }
  }
  return *matrix_;
}

std::vector<std::optional<double>> Pipeline::trait_column(TraitKind trait) {
  const auto& m = matrix();
  const auto& traits = cohort().traits;
  std::vector<std::optional<double>> column(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto it = traits.rows.find(m.participants[r]);
    if (it != traits.rows.end()) column[r] = it->second[static_cast<std::size_t>(static_cast<int>(trait))];
  }
  return column;
}

void Pipeline::synth() {
  PlantSpec spec;
  if (config_.synth_preset == "planted") {
    spec = planted_preset(config_.synth_n, config_.seed, config_.synth_rho, config_.synth_beta);
  } else if (config_.synth_preset == "null") {
    spec = null_preset(config_.synth_n, config_.seed);
  } else if (config_.synth_preset == "paper_scale") {
    spec = paper_scale_preset(config_.seed);
  } else {
    throw ValidationError("unknown synth preset '" + config_.synth_preset + "'");
  }
  auto synth = plant_cohort(spec);

  std::ostringstream frames;
  for (const auto& [key, stream] : synth.cohort.streams) write_frame_log(frames, stream);
  write_artifact("synth", "frames.jsonl", frames.str());
  std::ostringstream traits;
  write_trait_table(traits, synth.cohort.traits);
  write_artifact("synth", "traits.csv", traits.str());
  write_artifact("synth", "ground_truth.json", synth.truth.to_json());
  finish_stage("synth");
  cohort_ = std::move(synth.cohort);
}

void Pipeline::ingest() {
  const std::string frames = config_.resolved_frames_path();
  const std::string traits_path = config_.resolved_traits_path();
  if (!fs::exists(frames)) throw MissingInputError("frame log not found: " + frames);
  if (!fs::exists(traits_path)) throw MissingInputError("trait table not found: " + traits_path);

  std::ifstream in(frames);
  const auto format = config_.frame_format == "csv" ? FrameLogFormat::kCsv : FrameLogFormat::kJsonl;
  auto records = parse_frame_log(in, format);
  auto [streams, validation] = ingest_frames(std::move(records));
  auto trait_table = load_trait_table_file(traits_path);
  auto assembled = assemble_cohort(std::move(streams), std::move(trait_table));

  write_artifact("ingest", "validation_report.json", validation.to_json());
  write_artifact("ingest", "assembly.json", assembled.assembly.to_json());
  std::ostringstream frames_out;
  for (const auto& [key, stream] : assembled.streams) write_frame_log(frames_out, stream);
  write_artifact("ingest", "cohort/frames.jsonl", frames_out.str());
  std::ostringstream traits_out;
  write_trait_table(traits_out, assembled.traits);
  write_artifact("ingest", "cohort/traits.csv", traits_out.str());
  finish_stage("ingest");
  cohort_ = std::move(assembled);
}

void Pipeline::features() {
  const auto& m = matrix();
  write_artifact("features", "feature_matrix.csv", m.to_csv());
  write_artifact("features", "feature_matrix.json", m.to_json());
  write_artifact("features", "trait_descriptives.csv", trait_descriptives_csv(cohort().traits));
  write_artifact("features", "feature_descriptives.csv", feature_descriptives_csv(m));
  finish_stage("features");
}

void Pipeline::correlate() {
  const auto table = correlation_table(matrix(), cohort().traits);
  write_artifact("correlate", "correlations.csv", table.to_csv());
  write_artifact("correlate", "correlations.json", table.to_json());
  finish_stage("correlate");
}

void Pipeline::regress() {
  SelectConfig select{config_.select_vif_max, config_.select_epsilon};
  std::vector<RegressionModel> models(kTraitCount);
  std::vector<char> fitted(kTraitCount, 0);
  const auto& m = matrix();
  parallel_for(kTraitCount, config_.threads, [&](std::size_t t) {
    const auto trait = static_cast<TraitKind>(t);
    auto column = trait_column(trait);
    std::size_t present = 0;
    for (const auto& c : column) present += c.has_value() ? 1 : 0;
    if (present < 10) return;
    models[t] = forward_select_trait(m, column, trait, select);
    fitted[t] = 1;
  });

  std::vector<RegressionModel> kept;
  for (int t = 0; t < kTraitCount; ++t) {
    if (fitted[static_cast<std::size_t>(t)]) kept.push_back(models[static_cast<std::size_t>(t)]);
  }
  json j;
  j["schema_version"] = 1;
  j["kind"] = "regressions";
  j["cohort_id"] = m.cohort_id;
  json arr = json::array();
  for (const auto& model : kept) arr.push_back(json::parse(model.to_json()));
  j["models"] = std::move(arr);
  write_artifact("regress", "regressions.json", j.dump(2));
  write_artifact("regress", "regression_big_five.csv",
                 regression_family_csv(TraitFamily::kBigFive, kept));
  write_artifact("regress", "regression_dospert.csv",
                 regression_family_csv(TraitFamily::kDospert, kept));
  write_artifact("regress", "regression_schwartz.csv",
                 regression_family_csv(TraitFamily::kSchwartz, kept));
  write_artifact("regress", "regression_haidt.csv", regression_family_csv(TraitFamily::kHaidt, kept));
  finish_stage("regress");
}

namespace {

ExperimentConfig experiment_config(const RunConfig& config) {
  ExperimentConfig ec;
  ec.seed = config.seed;
  ec.mode = config.mode;
  ec.binning = config.binning;
  ec.cv_folds = config.cv_folds;
  ec.holdout_fraction = config.holdout_fraction;
  ec.resample.strategy = config.resample_strategy;
  ec.resample.k_neighbors = config.resample_k;
  ec.boost = config.boost;
  ec.grid_search = config.boost_grid;
  ec.importance_top_k = config.shap_top_k;
  return ec;
}

}  // namespace

void Pipeline::train() {
  // final per-trait ensembles on all rows with the trait (binned, balanced)
  const auto& m = matrix();
  std::vector<std::string> artifacts(kTraitCount);
  parallel_for(kTraitCount, config_.threads, [&](std::size_t t) {
    const auto trait = static_cast<TraitKind>(t);
    auto column = trait_column(trait);
    std::vector<std::size_t> rows;
    std::vector<double> scores;
    for (std::size_t r = 0; r < m.rows(); ++r) {
      if (column[r].has_value()) {
        rows.push_back(r);
        scores.push_back(*column[r]);
      }
    }
    if (rows.size() < 10) return;
    auto [labels, edges] = bin_terciles(scores, config_.binning);
    Rows x;
    x.width = kFeatureCount;
    for (std::size_t r : rows) x.push_row(m.row(r));
    ResamplePlan plan;
    plan.strategy = config_.resample_strategy == ResampleStrategy::kAuto ? ResampleStrategy::kSmote
                                                                         : config_.resample_strategy;
    plan.k_neighbors = config_.resample_k;
    plan.seed = derive_seed(config_.seed, {static_cast<std::uint64_t>(t), 77});
    auto balanced = balance(x, labels, plan);
    auto model = gbt::train(balanced.features.values, kFeatureCount, balanced.labels, config_.boost);
    artifacts[t] = model.to_json();
  });
  for (int t = 0; t < kTraitCount; ++t) {
    if (artifacts[static_cast<std::size_t>(t)].empty()) continue;
    write_artifact("train", "models/" + std::string(trait_code(static_cast<TraitKind>(t))) + ".json",
                   artifacts[static_cast<std::size_t>(t)]);
  }
  finish_stage("train");
}

void Pipeline::evaluate() {
  const auto& m = matrix();
  const auto ec = experiment_config(config_);
  std::vector<std::optional<EvalReport>> reports(kTraitCount);
  parallel_for(kTraitCount, config_.threads, [&](std::size_t t) {
    const auto trait = static_cast<TraitKind>(t);
    auto column = trait_column(trait);
    std::size_t present = 0;
    for (const auto& c : column) present += c.has_value() ? 1 : 0;
    if (present < 30) return;
    reports[t] = run_experiment(m, column, trait, ec).report;
  });

  std::vector<EvalReport> kept;
  for (auto& r : reports) {
    if (r) kept.push_back(std::move(*r));
  }
  json j;
  j["schema_version"] = 1;
  j["kind"] = "evaluation";
  j["cohort_id"] = m.cohort_id;
  json arr = json::array();
  for (const auto& report : kept) arr.push_back(json::parse(report.to_json()));
  j["reports"] = std::move(arr);
  write_artifact("evaluate", "evaluation.json", j.dump(2));
  write_artifact("evaluate", "table7.csv", accuracy_table_csv(kept));
  finish_stage("evaluate");
}

std::vector<RegressionModel> Pipeline::load_models() {
  const fs::path path = fs::path(config_.out_dir) / "regressions.json";
  if (!fs::exists(path)) throw MissingInputError("regressions.json not found; run `regress` first");
  std::ifstream in(path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  const json j = json::parse(buffer.str());
  std::vector<RegressionModel> models;
  for (const auto& e : j.at("models")) models.push_back(RegressionModel::from_json(e.dump()));
  return models;
}

std::vector<EvalReport> Pipeline::load_reports() {
  const fs::path path = fs::path(config_.out_dir) / "evaluation.json";
  if (!fs::exists(path)) throw MissingInputError("evaluation.json not found; run `evaluate` first");
  std::ifstream in(path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  const json j = json::parse(buffer.str());
  std::vector<EvalReport> reports;
  for (const auto& e : j.at("reports")) reports.push_back(EvalReport::from_json(e.dump()));
  return reports;
}

void Pipeline::explain() {
  const auto& m = matrix();
  const fs::path models_dir = fs::path(config_.out_dir) / "models";
  if (!fs::exists(models_dir)) throw MissingInputError("models/ not found; run `train` first");

  struct TraitExplain {
    std::string importance_csv;
    std::string values_csv;
    json top_json;
  };
  std::vector<std::optional<TraitExplain>> results(kTraitCount);
  parallel_for(kTraitCount, config_.threads, [&](std::size_t t) {
    const auto trait = static_cast<TraitKind>(t);
    const fs::path model_path = models_dir / (std::string(trait_code(trait)) + ".json");
    if (!fs::exists(model_path)) return;
    std::ifstream in(model_path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    const auto ensemble = gbt::Ensemble::from_json(buffer.str());

    auto column = trait_column(trait);
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < m.rows(); ++r) {
      if (column[r].has_value()) rows.push_back(r);
    }
    Rows x;
    x.width = kFeatureCount;
    for (std::size_t r : rows) x.push_row(m.row(r));
    const auto ranking = rank_importance(ensemble, x.values, x.n);

    TraitExplain te;
    std::ostringstream importance;
    for (std::size_t i = 0; i < ranking.entries.size(); ++i) {
      const auto& e = ranking.entries[i];
      importance << trait_code(trait) << ',' << feature_name(e.feature) << ',' << (i + 1) << ','
                 << format_double(e.mean_abs_shap) << ',' << format_double(e.mean_signed_high)
                 << '\n';
    }
    te.importance_csv = importance.str();

    const int top_k = std::min<int>(config_.report_top_k, static_cast<int>(ranking.entries.size()));
    json top = json::array();
    std::vector<int> top_features;
    for (int i = 0; i < top_k; ++i) {
      const auto& e = ranking.entries[static_cast<std::size_t>(i)];
      top.push_back({{"feature", feature_name(e.feature)},
                     {"mean_abs_shap", e.mean_abs_shap},
                     {"mean_signed_high", e.mean_signed_high}});
      top_features.push_back(e.feature);
    }
    te.top_json = std::move(top);

    // per-row attributions for the top features only (full export is a
    // library call; the artifact stays desk-sized)
    std::ostringstream values;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto attributions = tree_shap(ensemble, m.row(rows[i]));
      for (int feature : top_features) {
        for (std::size_t k = 0; k < attributions.size(); ++k) {
          values << m.participants[rows[i]] << ',' << trait_code(trait) << ','
                 << feature_name(feature) << ',' << class_name(static_cast<int>(k)) << ','
                 << format_double(attributions[k].values[static_cast<std::size_t>(feature)]) << '\n';
        }
      }
    }
    te.values_csv = values.str();
    results[t] = std::move(te);
  });

  std::ostringstream importance_csv;
  importance_csv << "trait,feature,rank,mean_abs_shap,mean_signed_high\n";
  std::ostringstream values_csv;
  values_csv << "participant_id,trait,feature,class,value\n";
  json top_by_trait = json::object();
  for (int t = 0; t < kTraitCount; ++t) {
    const auto& r = results[static_cast<std::size_t>(t)];
    if (!r) continue;
    importance_csv << r->importance_csv;
    values_csv << r->values_csv;
    top_by_trait[std::string(trait_code(static_cast<TraitKind>(t)))] = r->top_json;
  }
  json top;
  top["schema_version"] = 1;
  top["kind"] = "shap_top_k";
  top["cohort_id"] = m.cohort_id;
  top["top_k"] = config_.report_top_k;
  top["traits"] = std::move(top_by_trait);
  write_artifact("explain", "importance.csv", importance_csv.str());
  write_artifact("explain", "shap_values.csv", values_csv.str());
  write_artifact("explain", "shap_top_k.json", top.dump(2));
  finish_stage("explain");
}

void Pipeline::report() {
  auto models = load_models();
  std::map<std::string, std::vector<std::pair<std::string, double>>> shap_top;
  const fs::path shap_path = fs::path(config_.out_dir) / "shap_top_k.json";
  std::string cohort_id;
  if (fs::exists(shap_path)) {
    std::ifstream in(shap_path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    const json j = json::parse(buffer.str());
    cohort_id = j.value("cohort_id", "");
    for (const auto& [trait, entries] : j.at("traits").items()) {
      for (const auto& e : entries) {
        shap_top[trait].push_back({e.at("feature").get<std::string>(), e.at("mean_abs_shap").get<double>()});
      }
    }
  } else if (config_.alluvial_weight == "shap") {
    throw MissingInputError("shap_top_k.json not found; run `explain` first");
  }

  const auto table = build_alluvial(models, shap_top, config_.alluvial_weight, cohort_id);
  write_artifact("report", "alluvial.json", table.to_json());
  write_artifact("report", "alluvial_links.csv", table.to_csv());
  finish_stage("report");
}

void Pipeline::all() {
  ingest();
  features();
  correlate();
  regress();
  train();
  evaluate();
  explain();
  report();
}

}  // namespace emotrait
