/**
 * Copyright 2026, emotrait authors
 * SPDX-License-Identifier: Apache-2.0
 */
#include "emotrait/gbt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include <json.hpp>

namespace emotrait::gbt {

using nlohmann::json;

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

void BoostParams::validate() const {
  if (rounds < 1) throw ValidationError("boost rounds must be >= 1");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) {
    throw ValidationError("learning_rate must be in (0, 1]");
  }
  if (max_depth < 1) throw ValidationError("max_depth must be >= 1");
  if (lambda < 0.0) throw ValidationError("lambda must be >= 0");
  if (gamma < 0.0) throw ValidationError("gamma must be >= 0");
  if (min_child_weight < 0.0) throw ValidationError("min_child_weight must be >= 0");
  if (n_classes < 2) throw ValidationError("n_classes must be >= 2");
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.size());
  double max_logit = -std::numeric_limits<double>::infinity();
  for (double v : logits) max_logit = std::max(max_logit, v);
  double sum = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    p[k] = std::exp(logits[k] - max_logit);
    sum += p[k];
  }
  for (double& v : p) v /= sum;
  return p;
}

void softmax_grad_hess(std::span<const double> logits, int label, std::span<double> g,
                       std::span<double> h) {
  const auto p = softmax(logits);
  for (std::size_t k = 0; k < p.size(); ++k) {
    g[k] = p[k] - (static_cast<int>(k) == label ? 1.0 : 0.0);
    h[k] = std::max(p[k] * (1.0 - p[k]), 1e-16);
  }
}

namespace {

double structure_score(double g, double h, double lambda) { return g * g / (h + lambda); }

double split_gain(double gl, double hl, double gr, double hr, double lambda, double gamma) {
  return 0.5 * (structure_score(gl, hl, lambda) + structure_score(gr, hr, lambda) -
                structure_score(gl + gr, hl + hr, lambda)) -
         gamma;
}

/// Split scanner shared by best_split() and the trainer: presorted feature
/// columns are built once and reused across every tree of a boosting run,
/// which keeps exact greedy search affordable.
class TreeBuilder {
 public:
  TreeBuilder(std::span<const double> rows_data, std::size_t width, std::size_t n)
      : width_(width), n_(n) {
    columns_.assign(width_, std::vector<double>(n_));
    sorted_.assign(width_, {});
    for (std::size_t f = 0; f < width_; ++f) {
      auto& order = sorted_[f];
      for (std::size_t i = 0; i < n_; ++i) {
        const double v = rows_data[i * width_ + f];
        columns_[f][i] = v;
        if (!std::isnan(v)) order.push_back({v, i});
      }
      std::sort(order.begin(), order.end());  // (value, canonical row) pairs
    }
  }

  std::size_t size() const { return n_; }

  /// Builds one tree; leaf_values receives the raw leaf value per row.
  Tree build(std::span<const double> g, std::span<const double> h, const BoostParams& params,
             std::vector<double>* leaf_values) const {
    Tree tree;
    std::vector<std::size_t> node_of_row(n_, 0);
    std::vector<int> node_depth{0};
    tree.nodes.push_back({});

    std::vector<int> frontier{0};
    while (!frontier.empty()) {
      // per open node totals
      std::vector<double> tot_g(tree.nodes.size(), 0.0), tot_h(tree.nodes.size(), 0.0);
      std::vector<std::size_t> tot_cnt(tree.nodes.size(), 0);
      std::vector<char> open(tree.nodes.size(), 0);
      for (int nid : frontier) open[static_cast<std::size_t>(nid)] = 1;
      for (std::size_t i = 0; i < n_; ++i) {
        const std::size_t nid = node_of_row[i];
        if (!open[nid]) continue;
        tot_g[nid] += g[i];
        tot_h[nid] += h[i];
        ++tot_cnt[nid];
      }
      for (int nid : frontier) tree.nodes[static_cast<std::size_t>(nid)].cover = static_cast<double>(tot_cnt[static_cast<std::size_t>(nid)]);

      std::vector<SplitCandidate> best(tree.nodes.size());
      bool any_splittable = false;
      for (int nid : frontier) {
        if (node_depth[static_cast<std::size_t>(nid)] < params.max_depth && tot_cnt[static_cast<std::size_t>(nid)] >= 2) {
          any_splittable = true;
        }
      }
      if (any_splittable) {
        scan_splits(node_of_row, open, node_depth, tot_g, tot_h, g, h, params, best);
      }

      std::vector<int> next_frontier;
      for (int nid : frontier) {
        auto& node = tree.nodes[static_cast<std::size_t>(nid)];
        const auto& candidate = best[static_cast<std::size_t>(nid)];
        if (candidate.feature < 0) {
          node.feature = -1;
          node.weight = -tot_g[static_cast<std::size_t>(nid)] / (tot_h[static_cast<std::size_t>(nid)] + params.lambda);
          continue;
        }
        node.feature = candidate.feature;
        node.threshold = candidate.threshold;
        node.default_left = candidate.default_left;
        node.left = static_cast<int>(tree.nodes.size());
        node.right = node.left + 1;
        tree.nodes.push_back({});
        tree.nodes.push_back({});
        node_depth.push_back(node_depth[static_cast<std::size_t>(nid)] + 1);
        node_depth.push_back(node_depth[static_cast<std::size_t>(nid)] + 1);
        next_frontier.push_back(node.left);
        next_frontier.push_back(node.right);
      }

      if (!next_frontier.empty()) {
        for (std::size_t i = 0; i < n_; ++i) {
          const std::size_t nid = node_of_row[i];
          if (!open[nid]) continue;
          const auto& node = tree.nodes[nid];
          if (node.feature < 0) continue;
          const double v = columns_[static_cast<std::size_t>(node.feature)][i];
          const bool go_left = std::isnan(v) ? node.default_left : v < node.threshold;
          node_of_row[i] = static_cast<std::size_t>(go_left ? node.left : node.right);
        }
      }
      frontier = std::move(next_frontier);
    }

    if (leaf_values != nullptr) {
      leaf_values->resize(n_);
      for (std::size_t i = 0; i < n_; ++i) {
        (*leaf_values)[i] = tree.nodes[node_of_row[i]].weight;
      }
    }
    return tree;
  }

 private:
  void scan_splits(const std::vector<std::size_t>& node_of_row, const std::vector<char>& open,
                   const std::vector<int>& node_depth, const std::vector<double>& tot_g,
                   const std::vector<double>& tot_h, std::span<const double> g,
                   std::span<const double> h, const BoostParams& params,
                   std::vector<SplitCandidate>& best) const {
    const std::size_t n_nodes = best.size();
    std::vector<double> pres_g(n_nodes), pres_h(n_nodes);
    std::vector<std::size_t> pres_cnt(n_nodes);
    struct Running {
      double g_acc, h_acc, last_value;
      std::size_t cnt;
      bool has_last;
    };
    std::vector<Running> state(n_nodes);

    for (std::size_t f = 0; f < width_; ++f) {
      const auto& order = sorted_[f];
      if (order.empty()) continue;
      // pass 1: per-node present totals for this feature
      std::fill(pres_g.begin(), pres_g.end(), 0.0);
      std::fill(pres_h.begin(), pres_h.end(), 0.0);
      std::fill(pres_cnt.begin(), pres_cnt.end(), 0);
      for (const auto& [value, row] : order) {
        const std::size_t nid = node_of_row[row];
        if (!open[nid]) continue;
        pres_g[nid] += g[row];
        pres_h[nid] += h[row];
        ++pres_cnt[nid];
      }
      // pass 2: prefix scan over candidate thresholds
      for (auto& s : state) s = {0.0, 0.0, 0.0, 0, false};
      for (const auto& [value, row] : order) {
        const std::size_t nid = node_of_row[row];
        if (!open[nid]) continue;
        if (node_depth[nid] >= params.max_depth) continue;
        auto& st = state[nid];
        if (st.has_last && value > st.last_value && st.cnt < pres_cnt[nid]) {
          double threshold = st.last_value + (value - st.last_value) / 2.0;
          if (!(threshold > st.last_value)) threshold = value;
          const double g_miss = tot_g[nid] - pres_g[nid];
          const double h_miss = tot_h[nid] - pres_h[nid];
          auto& b = best[nid];
          // missing rows left, then right; strict improvement keeps the
          // (lower feature, lower threshold, missing-left) tie order
          {
            const double hl = st.h_acc + h_miss;
            const double hr = pres_h[nid] - st.h_acc;
            if (hl >= params.min_child_weight && hr >= params.min_child_weight) {
              const double gain = split_gain(st.g_acc + g_miss, hl, pres_g[nid] - st.g_acc, hr,
                                             params.lambda, params.gamma);
              if (gain > 0.0 && (b.feature < 0 || gain > b.gain)) {
                b = {static_cast<int>(f), threshold, gain, true};
              }
            }
          }
          {
            const double hl = st.h_acc;
            const double hr = (pres_h[nid] - st.h_acc) + h_miss;
            if (hl >= params.min_child_weight && hr >= params.min_child_weight) {
              const double gain = split_gain(st.g_acc, hl, (pres_g[nid] - st.g_acc) + g_miss, hr,
                                             params.lambda, params.gamma);
              if (gain > 0.0 && (b.feature < 0 || gain > b.gain)) {
                b = {static_cast<int>(f), threshold, gain, false};
              }
            }
          }
        }
        st.g_acc += g[row];
        st.h_acc += h[row];
        ++st.cnt;
        st.last_value = value;
        st.has_last = true;
      }
    }
  }

  std::size_t width_;
  std::size_t n_;
  std::vector<std::vector<double>> columns_;                        // column-major, NaN kept
  std::vector<std::vector<std::pair<double, std::size_t>>> sorted_;  // present rows by value
};

/// Canonical row order: lexicographic by feature content (missing last) then
/// label. Identical rows are interchangeable, so any permutation of the
/// input maps to the same canonical sequence and the fit is order-invariant.
std::vector<std::size_t> canonical_order(std::span<const double> features, std::size_t width,
                                         std::span<const int> labels) {
  std::vector<std::size_t> order(labels.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    for (std::size_t f = 0; f < width; ++f) {
      const double va = features[a * width + f];
      const double vb = features[b * width + f];
      const bool ma = std::isnan(va), mb = std::isnan(vb);
      if (ma != mb) return mb;  // missing sorts last
      if (!ma && va != vb) return va < vb;
    }
    return labels[a] < labels[b];
  });
  return order;
}

}  // namespace

SplitCandidate best_split(std::span<const double> rows_data, std::size_t width,
                          std::span<const std::size_t> rows, std::span<const double> g,
                          std::span<const double> h, const BoostParams& params) {
  // single-node view over the selected rows, run through the same scanner
  std::vector<double> data(rows.size() * width);
  std::vector<double> gs(rows.size()), hs(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t f = 0; f < width; ++f) data[i * width + f] = rows_data[rows[i] * width + f];
    gs[i] = g[rows[i]];
    hs[i] = h[rows[i]];
  }
  BoostParams single = params;
  single.max_depth = 1;
  TreeBuilder builder(data, width, rows.size());
  Tree tree = builder.build(gs, hs, single, nullptr);
  SplitCandidate out;
  if (!tree.leaf_only()) {
    const auto& root = tree.nodes[0];
    out.feature = root.feature;
    out.threshold = root.threshold;
    out.default_left = root.default_left;
    // recompute the gain for reporting
    double gl = 0.0, hl = 0.0, gr = 0.0, hr = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const double v = data[i * width + static_cast<std::size_t>(root.feature)];
      const bool left = std::isnan(v) ? root.default_left : v < root.threshold;
      (left ? gl : gr) += gs[i];
      (left ? hl : hr) += hs[i];
    }
    out.gain = split_gain(gl, hl, gr, hr, params.lambda, params.gamma);
  }
  return out;
}

Tree build_tree(std::span<const double> rows_data, std::size_t width,
                std::span<const std::size_t> rows, std::span<const double> g,
                std::span<const double> h, const BoostParams& params) {
  if (rows.empty()) throw ValidationError("build_tree requires at least one row");
  std::vector<double> data(rows.size() * width);
  std::vector<double> gs(rows.size()), hs(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t f = 0; f < width; ++f) data[i * width + f] = rows_data[rows[i] * width + f];
    gs[i] = g[rows[i]];
    hs[i] = h[rows[i]];
  }
  TreeBuilder builder(data, width, rows.size());
  return builder.build(gs, hs, params, nullptr);
}

double Tree::value(std::span<const double> row) const {
  std::size_t nid = 0;
  while (nodes[nid].feature >= 0) {
    const auto& node = nodes[nid];
    const double v = row[static_cast<std::size_t>(node.feature)];
    const bool go_left = std::isnan(v) ? node.default_left : v < node.threshold;
    nid = static_cast<std::size_t>(go_left ? node.left : node.right);
  }
  return nodes[nid].weight;
}

double Tree::expected_value() const {
  // cover-weighted mean over leaves, bottom-up
  std::vector<double> expect(nodes.size(), 0.0);
  for (std::size_t i = nodes.size(); i-- > 0;) {
    const auto& node = nodes[i];
    if (node.feature < 0) {
      expect[i] = node.weight;
    } else {
      expect[i] = (expect[static_cast<std::size_t>(node.left)] * nodes[static_cast<std::size_t>(node.left)].cover +
                   expect[static_cast<std::size_t>(node.right)] * nodes[static_cast<std::size_t>(node.right)].cover) /
                  node.cover;
    }
  }
  return expect[0];
}

Ensemble train(std::span<const double> features, std::size_t width, std::span<const int> labels,
               const BoostParams& params) {
  params.validate();
  const std::size_t n = labels.size();
  if (n == 0 || features.size() != n * width) throw InvariantError("train: shape mismatch");
  std::set<int> distinct;
  for (int label : labels) {
    if (label < 0 || label >= params.n_classes) {
      throw ValidationError("label " + std::to_string(label) + " outside 0.." +
                            std::to_string(params.n_classes - 1));
    }
    distinct.insert(label);
  }
  if (distinct.size() < 2) throw ValidationError("train requires at least 2 classes present");

  const auto order = canonical_order(features, width, labels);
  std::vector<double> data(n * width);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t f = 0; f < width; ++f) data[i * width + f] = features[order[i] * width + f];
    y[i] = labels[order[i]];
  }

  const int K = params.n_classes;
  TreeBuilder builder(data, width, n);

  Ensemble ensemble;
  ensemble.params = params;
  ensemble.n_features = static_cast<int>(width);
  ensemble.base_score.assign(static_cast<std::size_t>(K), 0.0);

  std::vector<double> logits(n * static_cast<std::size_t>(K), 0.0);
  std::vector<double> g(n * static_cast<std::size_t>(K)), h(n * static_cast<std::size_t>(K));
  std::vector<double> leaf_values;

  for (int round = 0; round < params.rounds; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      softmax_grad_hess({logits.data() + i * static_cast<std::size_t>(K), static_cast<std::size_t>(K)}, y[i],
                        {g.data() + i * static_cast<std::size_t>(K), static_cast<std::size_t>(K)},
                        {h.data() + i * static_cast<std::size_t>(K), static_cast<std::size_t>(K)});
    }
    for (int k = 0; k < K; ++k) {
      std::vector<double> gk(n), hk(n);
      for (std::size_t i = 0; i < n; ++i) {
        gk[i] = g[i * static_cast<std::size_t>(K) + static_cast<std::size_t>(k)];
        hk[i] = h[i * static_cast<std::size_t>(K) + static_cast<std::size_t>(k)];
      }
      Tree tree = builder.build(gk, hk, params, &leaf_values);
      for (std::size_t i = 0; i < n; ++i) {
        logits[i * static_cast<std::size_t>(K) + static_cast<std::size_t>(k)] += params.learning_rate * leaf_values[i];
      }
      ensemble.trees.push_back(std::move(tree));
    }
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto p = softmax({logits.data() + i * static_cast<std::size_t>(K), static_cast<std::size_t>(K)});
      loss -= std::log(std::max(p[static_cast<std::size_t>(y[i])], 1e-300));
    }
    ensemble.train_loss.push_back(loss / static_cast<double>(n));
  }
  return ensemble;
}

std::vector<double> Ensemble::margins(std::span<const double> row) const {
  if (row.size() != static_cast<std::size_t>(n_features)) {
    throw ValidationError("predict: expected " + std::to_string(n_features) + " features, got " +
                          std::to_string(row.size()));
  }
  std::vector<double> out(base_score.begin(), base_score.end());
  const int K = params.n_classes;
  for (std::size_t t = 0; t < trees.size(); ++t) {
    out[t % static_cast<std::size_t>(K)] += params.learning_rate * trees[t].value(row);
  }
  return out;
}

std::vector<double> Ensemble::predict_proba(std::span<const double> row) const {
  return softmax(margins(row));
}

int Ensemble::predict_class(std::span<const double> row) const {
  const auto p = predict_proba(row);
  return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
}

double log_loss(const Ensemble& ensemble, std::span<const double> features, std::size_t width,
                std::span<const int> labels) {
  double loss = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto p = ensemble.predict_proba({features.data() + i * width, width});
    loss -= std::log(std::max(p[static_cast<std::size_t>(labels[i])], 1e-300));
  }
  return loss / static_cast<double>(labels.size());
}

std::vector<BoostParams> default_grid(const BoostParams& base) {
  std::vector<BoostParams> grid;
  for (double lr : {0.05, 0.1, 0.3}) {
    for (int depth : {2, 3, 4}) {
      BoostParams p = base;
      p.learning_rate = lr;
      p.max_depth = depth;
      grid.push_back(p);
    }
  }
  return grid;
}

// ---------------------------------------------------------------------------
// Serialization. Thresholds and weights travel as decimal strings
// (shortest round-trip form), so parsing restores them bit-exactly.
// ---------------------------------------------------------------------------

std::string Ensemble::to_json() const {
  json j;
  j["schema_version"] = 1;
  j["kind"] = "ensemble";
  json pj;
  pj["rounds"] = params.rounds;
  pj["learning_rate"] = format_double(params.learning_rate);
  pj["max_depth"] = params.max_depth;
  pj["lambda"] = format_double(params.lambda);
  pj["gamma"] = format_double(params.gamma);
  pj["min_child_weight"] = format_double(params.min_child_weight);
  pj["n_classes"] = params.n_classes;
  pj["seed"] = std::to_string(params.seed);
  j["params"] = std::move(pj);
  j["n_features"] = n_features;
  json base = json::array();
  for (double b : base_score) base.push_back(format_double(b));
  j["base_score"] = std::move(base);
  json losses = json::array();
  for (double l : train_loss) losses.push_back(format_double(l));
  j["train_loss"] = std::move(losses);
  json trees_json = json::array();
  for (const auto& tree : trees) {
    json nodes = json::array();
    for (const auto& node : tree.nodes) {
      json e;
      if (node.feature < 0) {
        e["w"] = format_double(node.weight);
      } else {
        e["f"] = node.feature;
        e["t"] = format_double(node.threshold);
        e["l"] = node.left;
        e["r"] = node.right;
        e["d"] = node.default_left ? "L" : "R";
      }
      e["c"] = format_double(node.cover);
      nodes.push_back(std::move(e));
    }
    json t;
    t["nodes"] = std::move(nodes);
    trees_json.push_back(std::move(t));
  }
  j["trees"] = std::move(trees_json);
  return j.dump();
}

Ensemble Ensemble::from_json(const std::string& text) {
  const json j = json::parse(text);
  if (j.value("schema_version", 0) != 1) throw ParseError("unsupported ensemble schema version");
  Ensemble ensemble;
  const auto& pj = j.at("params");
  ensemble.params.rounds = pj.at("rounds").get<int>();
  ensemble.params.learning_rate = parse_double(pj.at("learning_rate").get<std::string>());
  ensemble.params.max_depth = pj.at("max_depth").get<int>();
  ensemble.params.lambda = parse_double(pj.at("lambda").get<std::string>());
  ensemble.params.gamma = parse_double(pj.at("gamma").get<std::string>());
  ensemble.params.min_child_weight = parse_double(pj.at("min_child_weight").get<std::string>());
  ensemble.params.n_classes = pj.at("n_classes").get<int>();
  ensemble.params.seed = std::stoull(pj.at("seed").get<std::string>());
  ensemble.n_features = j.at("n_features").get<int>();
  for (const auto& b : j.at("base_score")) ensemble.base_score.push_back(parse_double(b.get<std::string>()));
  for (const auto& l : j.at("train_loss")) ensemble.train_loss.push_back(parse_double(l.get<std::string>()));
  for (const auto& tj : j.at("trees")) {
    Tree tree;
    for (const auto& e : tj.at("nodes")) {
      TreeNode node;
      if (e.contains("f")) {
        node.feature = e.at("f").get<int>();
        node.threshold = parse_double(e.at("t").get<std::string>());
        node.left = e.at("l").get<int>();
        node.right = e.at("r").get<int>();
        node.default_left = e.at("d").get<std::string>() == "L";
      } else {
        node.weight = parse_double(e.at("w").get<std::string>());
      }
      node.cover = parse_double(e.at("c").get<std::string>());
      tree.nodes.push_back(node);
    }
    ensemble.trees.push_back(std::move(tree));
  }
  return ensemble;
}

}  // namespace emotrait::gbt
