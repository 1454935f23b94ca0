/**
 * Copyright 2026, emotrait authors
 * SPDX-License-Identifier: Apache-2.0
 */
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "emotrait/report.hpp"

namespace {

using emotrait::Pipeline;
using emotrait::RunConfig;

constexpr int kExitOk = 0;
constexpr int kExitMissingInput = 2;
constexpr int kExitValidation = 3;
constexpr int kExitInternal = 4;

void write_error_report(const RunConfig& config, const std::string& stage,
                        const std::string& type, const std::string& message) {
  try {
    std::filesystem::create_directories(config.out_dir);
    nlohmann::json j;
    j["schema_version"] = 1;
    j["kind"] = "error_report";
    j["stage"] = stage;
    j["error_type"] = type;
    j["message"] = message;
    j["config_hash"] = config.hash();
    const auto path = std::filesystem::path(config.out_dir) / "error_report.json";
    std::ofstream out(path);
    out << j.dump(2);
    std::cerr << "error report: " << path.string() << "\n";
  } catch (...) {
    // reporting is best effort
  }
}

int run_stage(const RunConfig& config, const std::string& stage) {
  try {
    Pipeline pipeline(config);
    if (stage == "synth") {
      pipeline.synth();
    } else if (stage == "ingest") {
      pipeline.ingest();
    } else if (stage == "features") {
      pipeline.features();
    } else if (stage == "correlate") {
      pipeline.correlate();
    } else if (stage == "regress") {
      pipeline.regress();
    } else if (stage == "train") {
      pipeline.train();
    } else if (stage == "evaluate") {
      pipeline.evaluate();
    } else if (stage == "explain") {
      pipeline.explain();
    } else if (stage == "report") {
      pipeline.report();
    } else if (stage == "all") {
      pipeline.all();
    }
    std::cout << stage << ": done (artifacts in " << config.out_dir << ")\n";
    return kExitOk;
  } catch (const emotrait::MissingInputError& e) {
    std::cerr << "missing input: " << e.what() << "\n";
    write_error_report(config, stage, "missing_input", e.what());
    return kExitMissingInput;
  } catch (const emotrait::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    write_error_report(config, stage, "parse_error", e.what());
    return kExitValidation;
  } catch (const emotrait::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    write_error_report(config, stage, "validation_error", e.what());
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    write_error_report(config, stage, "internal_error", e.what());
    return kExitInternal;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"emotrait: facial-emotion trait-inference analytics"};
  app.require_subcommand(1);

  std::string config_path;
  std::string mode;
  std::string out_dir;
  std::string frames;
  std::string traits;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = -1;

  app.add_option("--config", config_path, "configuration file (key = value lines)");
  app.add_option_function<std::uint64_t>(
         "--seed", [&](std::uint64_t v) { seed = v; seed_set = true; }, "master RNG seed")
      ->type_name("UINT");
  app.add_option("--mode", mode, "evaluation mode: leak-free | paper-replication");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--frames", frames, "frame log path (JSONL or CSV)");
  app.add_option("--traits", traits, "trait table CSV path");
  app.add_option("--threads", threads, "worker threads (0 = hardware)");

  const std::vector<std::string> stages = {"ingest",   "features", "correlate", "regress", "train",
                                           "evaluate", "explain",  "synth",     "report",  "all"};
  for (const auto& stage : stages) {
    app.add_subcommand(stage, "run the " + stage + " stage");
  }

  CLI11_PARSE(app, argc, argv);

  RunConfig config;
  try {
    if (!config_path.empty()) config = RunConfig::from_file(config_path);
  } catch (const emotrait::MissingInputError& e) {
    std::cerr << "missing input: " << e.what() << "\n";
    return kExitMissingInput;
  } catch (const std::exception& e) {
    std::cerr << "bad config: " << e.what() << "\n";
    return kExitValidation;
  }
  if (seed_set) config.seed = seed;
  if (!out_dir.empty()) config.out_dir = out_dir;
  if (!frames.empty()) config.frames_path = frames;
  if (!traits.empty()) config.traits_path = traits;
  if (threads >= 0) config.threads = threads;
  if (!mode.empty()) {
    const auto parsed = emotrait::eval_mode_from_name(mode);
    if (!parsed) {
      std::cerr << "unknown mode '" << mode << "'\n";
      return kExitValidation;
    }
    config.mode = *parsed;
  }

  for (const auto& stage : stages) {
    if (app.got_subcommand(stage)) return run_stage(config, stage);
  }
  return kExitValidation;
}
