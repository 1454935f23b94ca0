/**
 * Copyright 2026, emotrait authors
 * SPDX-License-Identifier: Apache-2.0
 */
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "emotrait/shap.hpp"

using namespace emotrait;
using namespace emotrait::gbt;

namespace {

Tree stump(int feature, double threshold, double left_weight, double right_weight,
           double left_cover, double right_cover) {
  Tree tree;
  TreeNode root;
  root.feature = feature;
  root.threshold = threshold;
  root.left = 1;
  root.right = 2;
  root.cover = left_cover + right_cover;
  TreeNode left, right;
  left.weight = left_weight;
  left.cover = left_cover;
  right.weight = right_weight;
  right.cover = right_cover;
  tree.nodes = {root, left, right};
  return tree;
}

/// Random tree by training a single regression tree on random gradients.
Tree random_tree(std::uint64_t seed, std::size_t n_features, int max_depth) {
  Rng rng(seed);
  const std::size_t n = 60;
  std::vector<double> x(n * n_features);
  std::vector<double> g(n), h(n);
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t f = 0; f < n_features; ++f) x[i * n_features + f] = rng.uniform();
    g[i] = rng.normal();
    h[i] = 0.5 + rng.uniform();
  }
  BoostParams params;
  params.max_depth = max_depth;
  params.min_child_weight = 0.0;
  params.lambda = 1.0;
  return build_tree(x, n_features, rows, g, h, params);
}

}  // namespace

TEST_SUITE("shap") {

TEST_CASE("a stump puts all attribution on its split feature") {
  const auto tree = stump(2, 0.5, -1.0, 3.0, 30.0, 10.0);
  const std::vector<double> row{0.0, 0.0, 0.9, 0.0};
  const auto attribution = tree_shap_single(tree, row, 4);
  const double expected_value = (-1.0 * 30.0 + 3.0 * 10.0) / 40.0;
  CHECK(attribution.base == doctest::Approx(expected_value).epsilon(1e-12));
  // leaf reached minus the expectation
  CHECK(attribution.values[2] == doctest::Approx(3.0 - expected_value).epsilon(1e-9));
  CHECK(attribution.values[0] == 0.0);
  CHECK(attribution.values[1] == 0.0);
  CHECK(attribution.values[3] == 0.0);

  const std::vector<double> low{0.0, 0.0, 0.1, 0.0};
  const auto other_side = tree_shap_single(tree, low, 4);
  CHECK(other_side.values[2] == doctest::Approx(-1.0 - expected_value).epsilon(1e-9));
}

TEST_CASE("zero-weight ensembles attribute nothing") {
  Ensemble ensemble;
  ensemble.params.n_classes = 3;
  ensemble.params.learning_rate = 0.1;
  ensemble.n_features = 5;
  ensemble.base_score = {0.1, 0.2, 0.3};
  for (int k = 0; k < 3; ++k) {
    Tree zero;
    TreeNode leaf;
    leaf.weight = 0.0;
    leaf.cover = 10.0;
    zero.nodes = {leaf};
    ensemble.trees.push_back(zero);
  }
  const std::vector<double> row{0.1, 0.2, 0.3, 0.4, 0.5};
  const auto attributions = tree_shap(ensemble, row);
  REQUIRE(attributions.size() == 3);
  for (int k = 0; k < 3; ++k) {
    CHECK(attributions[static_cast<std::size_t>(k)].base == ensemble.base_score[static_cast<std::size_t>(k)]);
    for (double v : attributions[static_cast<std::size_t>(k)].values) CHECK(v == 0.0);
  }
}

TEST_CASE("tree_shap matches the brute-force oracle on random trees") {
  Rng probe(404);
  for (int t = 0; t < 12; ++t) {
    const auto tree = random_tree(static_cast<std::uint64_t>(t) + 100, 6, 3);
    for (int i = 0; i < 40; ++i) {
      std::vector<double> row(6);
      for (double& v : row) v = probe.uniform();
      const auto fast = tree_shap_single(tree, row, 6);
      const auto exact = brute_force_shap(tree, row, 6);
      CHECK(std::abs(fast.base - exact.base) < 1e-9);
      for (std::size_t f = 0; f < 6; ++f) {
        CHECK(std::abs(fast.values[f] - exact.values[f]) < 1e-9);
      }
    }
  }
}

TEST_CASE("oracle equality holds with missing feature values") {
  Rng probe(405);
  const auto tree = random_tree(7, 5, 3);
  for (int i = 0; i < 30; ++i) {
    std::vector<double> row(5);
    for (double& v : row) v = probe.uniform();
    row[probe.index(5)] = std::numeric_limits<double>::quiet_NaN();
    const auto fast = tree_shap_single(tree, row, 5);
    const auto exact = brute_force_shap(tree, row, 5);
    for (std::size_t f = 0; f < 5; ++f) {
      CHECK(std::abs(fast.values[f] - exact.values[f]) < 1e-9);
    }
  }
}

TEST_CASE("local accuracy: base plus contributions equals the margin") {
  // trained multiclass ensemble over 8 features
  Rng rng(21);
  const std::size_t n = 90, width = 8;
  std::vector<double> x(n * width);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t f = 0; f < width; ++f) x[i * width + f] = rng.uniform();
    y[i] = static_cast<int>((x[i * width] * 3.0 < 1.0)   ? 0
                            : (x[i * width] * 3.0 < 2.0) ? 1
                                                         : 2);
  }
  BoostParams params;
  params.rounds = 15;
  const auto ensemble = train(x, width, y, params);
  for (int i = 0; i < 25; ++i) {
    std::vector<double> row(width);
    for (double& v : row) v = rng.uniform();
    const auto margins = ensemble.margins(row);
    const auto attributions = tree_shap(ensemble, row);
    for (std::size_t k = 0; k < margins.size(); ++k) {
      CHECK(std::abs(attributions[k].base + attributions[k].sum() - margins[k]) < 1e-9);
    }
  }
}

TEST_CASE("dummy features receive exactly zero attribution") {
  // only feature 0 varies, so trees can only ever split on it
  Rng rng(33);
  const std::size_t n = 80, width = 4;
  std::vector<double> x(n * width, 0.25);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i * width] = rng.uniform();
    y[i] = x[i * width] < 0.5 ? 0 : 1;
  }
  BoostParams params;
  params.rounds = 10;
  params.n_classes = 2;
  const auto ensemble = train(x, width, y, params);
  Rng probe(34);
  for (int i = 0; i < 20; ++i) {
    std::vector<double> row{probe.uniform(), probe.uniform(), probe.uniform(), probe.uniform()};
    const auto attributions = tree_shap(ensemble, row);
    for (const auto& a : attributions) {
      CHECK(a.values[1] == 0.0);
      CHECK(a.values[2] == 0.0);
      CHECK(a.values[3] == 0.0);
    }
  }
}

TEST_CASE("exchangeable features receive equal attributions") {
  // symmetric two-level tree: value = 1[f0 high] + 1[f1 high], equal covers
  Tree tree;
  TreeNode root;
  root.feature = 0;
  root.threshold = 0.5;
  root.left = 1;
  root.right = 2;
  root.cover = 40.0;
  TreeNode left;
  left.feature = 1;
  left.threshold = 0.5;
  left.left = 3;
  left.right = 4;
  left.cover = 20.0;
  TreeNode right;
  right.feature = 1;
  right.threshold = 0.5;
  right.left = 5;
  right.right = 6;
  right.cover = 20.0;
  TreeNode ll, lr, rl, rr;
  ll.weight = 0.0;
  lr.weight = 1.0;
  rl.weight = 1.0;
  rr.weight = 2.0;
  ll.cover = lr.cover = rl.cover = rr.cover = 10.0;
  tree.nodes = {root, left, right, ll, lr, rl, rr};

  const std::vector<double> row{0.9, 0.9};
  const auto fast = tree_shap_single(tree, row, 2);
  CHECK(fast.values[0] == doctest::Approx(fast.values[1]).epsilon(1e-12));
  const auto exact = brute_force_shap(tree, row, 2);
  CHECK(exact.values[0] == doctest::Approx(exact.values[1]).epsilon(1e-12));
  // efficiency: contributions sum to prediction - base
  CHECK(fast.base + fast.sum() == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("brute force refuses trees with too many features") {
  // chain tree over 16 features
  Tree tree;
  for (int f = 0; f < 16; ++f) {
    TreeNode node;
    node.feature = f;
    node.threshold = 0.5;
    node.left = 2 * f + 1;
    node.right = 2 * f + 2;
    node.cover = 32.0;
    tree.nodes.push_back(node);
    TreeNode leaf;
    leaf.weight = static_cast<double>(f);
    leaf.cover = 16.0;
    tree.nodes.push_back(leaf);
  }
  TreeNode last;
  last.weight = 1.0;
  last.cover = 16.0;
  tree.nodes.push_back(last);
  // fix child indices: the chain above appended (node, leaf) pairs
  // node i at position 2i, leaf at 2i+1; re-point children accordingly
  for (int f = 0; f < 16; ++f) {
    tree.nodes[static_cast<std::size_t>(2 * f)].left = 2 * f + 1;
    tree.nodes[static_cast<std::size_t>(2 * f)].right = 2 * f + 2;
  }
  const std::vector<double> row(16, 0.4);
  CHECK_THROWS_AS(brute_force_shap(tree, row, 16), ValidationError);
}

TEST_CASE("importance ranking puts a single used feature first with zeros elsewhere") {
  Rng rng(55);
  const std::size_t n = 60, width = 6;
  std::vector<double> x(n * width, 0.5);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i * width + 2] = rng.uniform();
    y[i] = x[i * width + 2] < 0.5 ? 0 : 1;
  }
  BoostParams params;
  params.rounds = 8;
  params.n_classes = 2;
  const auto ensemble = train(x, width, y, params);
  const auto ranking = rank_importance(ensemble, x, n);
  REQUIRE(ranking.entries.size() == width);
  CHECK(ranking.entries[0].feature == 2);
  CHECK(ranking.entries[0].mean_abs_shap > 0.0);
  for (std::size_t i = 1; i < ranking.entries.size(); ++i) {
    CHECK(ranking.entries[i].mean_abs_shap == 0.0);
  }
}

TEST_CASE("importance ranking is invariant to dataset row order") {
  Rng rng(66);
  const std::size_t n = 50, width = 5;
  std::vector<double> x(n * width);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t f = 0; f < width; ++f) x[i * width + f] = rng.uniform();
    y[i] = x[i * width] + x[i * width + 1] > 1.0 ? 1 : 0;
  }
  BoostParams params;
  params.rounds = 10;
  params.n_classes = 2;
  const auto ensemble = train(x, width, y, params);
  const auto base = rank_importance(ensemble, x, n);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng shuffle_rng(8);
  shuffle_rng.shuffle(order);
  std::vector<double> shuffled(n * width);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t f = 0; f < width; ++f) shuffled[i * width + f] = x[order[i] * width + f];
  }
  const auto permuted = rank_importance(ensemble, shuffled, n);
  REQUIRE(base.entries.size() == permuted.entries.size());
  for (std::size_t i = 0; i < base.entries.size(); ++i) {
    CHECK(base.entries[i].feature == permuted.entries[i].feature);
    CHECK(base.entries[i].mean_abs_shap ==
          doctest::Approx(permuted.entries[i].mean_abs_shap).epsilon(1e-12));
  }
}

}  // TEST_SUITE
