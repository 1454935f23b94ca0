/**
 * Copyright 2026, emotrait authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * End-to-end checks of the command line surface. Each case shells out to the
 * built binary and inspects the artifact tree it leaves behind.
 */
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "emotrait/common.hpp"

namespace fs = std::filesystem;

namespace {

int failures = 0;

void check(bool ok, const std::string& what) {
  if (ok) {
    std::cout << "  ok: " << what << "\n";
  } else {
    ++failures;
    std::cout << "  FAILED: " << what << "\n";
  }
}

int run(const std::string& args) {
  const std::string cmd = std::string(EMOTRAIT_BIN) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

/// Map of relative path -> content hash over a directory tree.
std::map<std::string, std::string> tree_hashes(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    out[fs::relative(entry.path(), root).string()] =
        emotrait::to_hex(emotrait::fnv1a64(slurp(entry.path())));
  }
  return out;
}

void write_config(const fs::path& path, const fs::path& out_dir, int threads) {
  std::ofstream config(path);
  config << "seed = 20260810\n";
  config << "out_dir = " << out_dir.string() << "\n";
  config << "threads = " << threads << "\n";
  config << "synth_preset = planted\n";
  config << "synth_n = 45\n";
  config << "boost_rounds = 20\n";
  config << "cv_folds = 5\n";
  config << "resample_strategy = smote\n";
  config << "shap_top_k = 5\n";
  config << "report_top_k = 5\n";
}

}  // namespace

int main() {
  const fs::path base = fs::temp_directory_path() / "emotrait_cli_test";
  fs::remove_all(base);
  fs::create_directories(base);

  std::cout << "cli: synth + all produce the full artifact tree\n";
  const fs::path out1 = base / "run1";
  write_config(base / "run1.cfg", out1, 1);
  check(run("--config " + (base / "run1.cfg").string() + " synth") == 0, "synth exits 0");
  check(fs::exists(out1 / "frames.jsonl"), "frames.jsonl written");
  check(fs::exists(out1 / "traits.csv"), "traits.csv written");
  check(fs::exists(out1 / "ground_truth.json"), "ground_truth.json written");
  check(run("--config " + (base / "run1.cfg").string() + " all") == 0, "all exits 0");
  for (const std::string artifact :
       {"validation_report.json", "assembly.json", "feature_matrix.csv", "feature_matrix.json",
        "trait_descriptives.csv", "correlations.csv", "correlations.json", "regressions.json",
        "regression_big_five.csv", "evaluation.json", "table7.csv", "importance.csv",
        "shap_values.csv", "shap_top_k.json", "alluvial.json", "alluvial_links.csv",
        "manifest_ingest.json", "manifest_evaluate.json", "manifest_report.json"}) {
    check(fs::exists(out1 / artifact), artifact + " written");
  }

  {
    std::istringstream header(slurp(out1 / "table7.csv"));
    std::string line;
    std::getline(header, line);
    check(line == "Variable,Average Accuracy,Cohen's Kappa", "table7.csv header matches");
    std::istringstream matrix_header(slurp(out1 / "feature_matrix.csv"));
    std::getline(matrix_header, line);
    check(line.rfind("participant_id,Angry 1,", 0) == 0, "feature matrix header starts Angry 1");
    check(line.find(",Surprised 15") == line.size() - 13, "feature matrix header ends Surprised 15");
    const auto manifest = nlohmann::json::parse(slurp(out1 / "manifest_evaluate.json"));
    check(manifest.at("config_hash").get<std::string>().size() == 16, "manifest names config hash");
    check(manifest.at("seed").get<std::string>() == "20260810", "manifest names the seed");
  }

  std::cout << "cli: fixed seed reruns are byte-identical across thread counts\n";
  const fs::path out2 = base / "run2";
  write_config(base / "run2.cfg", out2, 2);
  check(run("--config " + (base / "run2.cfg").string() + " synth") == 0, "second synth exits 0");
  check(run("--config " + (base / "run2.cfg").string() + " all") == 0, "second all exits 0");
  auto h1 = tree_hashes(out1);
  auto h2 = tree_hashes(out2);
  check(h1.size() == h2.size(), "same artifact count");
  bool identical = h1.size() == h2.size();
  for (const auto& [path, hash] : h1) {
    auto it = h2.find(path);
    if (it == h2.end() || it->second != hash) {
      identical = false;
      std::cout << "  mismatch: " << path << "\n";
    }
  }
  check(identical, "artifact trees byte-identical (1 vs 2 worker threads)");

  std::cout << "cli: single stages rerun bit-exactly from their inputs\n";
  const auto correlations_before = slurp(out1 / "correlations.csv");
  check(run("--config " + (base / "run1.cfg").string() + " correlate") == 0, "correlate reruns");
  check(slurp(out1 / "correlations.csv") == correlations_before, "correlate output reproduced");

  std::cout << "cli: error paths use the documented exit codes\n";
  const fs::path out3 = base / "run3";
  check(run("--out " + out3.string() + " --frames /nonexistent.jsonl --traits /nonexistent.csv ingest") == 2,
        "missing input exits 2");
  check(fs::exists(out3 / "error_report.json"), "machine-readable error report written");
  {
    const fs::path bad_dir = base / "bad";
    fs::create_directories(bad_dir);
    std::ofstream frames(bad_dir / "frames.jsonl");
    frames << "{not json}\n";
    std::ofstream traits(bad_dir / "traits.csv");
    traits << "participant_id,agreeableness\n";  // partial family on the row below
    traits << "p1,0.5\n";
    check(run("--out " + (base / "run4").string() + " --frames " + (bad_dir / "frames.jsonl").string() +
              " --traits " + (bad_dir / "traits.csv").string() + " ingest") == 3,
          "malformed frame log exits 3");
  }
  check(run("--config /nonexistent.cfg synth") == 2, "missing config exits 2");

  std::cout << "cli: alluvial links are backed by the regression artifact\n";
  {
    const auto alluvial = nlohmann::json::parse(slurp(out1 / "alluvial.json"));
    const auto regressions = nlohmann::json::parse(slurp(out1 / "regressions.json"));
    std::size_t significant = 0;
    for (const auto& model : regressions.at("models")) {
      for (const auto& term : model.at("terms")) {
        if (!term.at("stars").get<std::string>().empty()) ++significant;
      }
    }
    double total_weight = 0.0;
    for (const auto& link : alluvial.at("emotion_trait")) {
      total_weight += link.at("weight").get<double>();
    }
    check(total_weight == static_cast<double>(significant),
          "count-mode link weight equals the significant term count");
  }

  fs::remove_all(base);
  if (failures == 0) {
    std::cout << "cli integration: all checks passed\n";
    return 0;
  }
  std::cout << "cli integration: " << failures << " checks FAILED\n";
  return 1;
}
