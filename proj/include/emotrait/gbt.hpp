/**
 * Copyright 2026, emotrait authors
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "emotrait/common.hpp"

namespace emotrait::gbt {

struct BoostParams {
  int rounds = 200;
  double learning_rate = 0.1;
  int max_depth = 3;
  double lambda = 1.0;            // L2 leaf regularization
  double gamma = 0.0;             // split penalty
  double min_child_weight = 1.0;  // minimum hessian sum per child
  int n_classes = 3;
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const BoostParams&) const = default;
};

/// Per-class (gradient, hessian) of the softmax cross-entropy at the given
/// logits; h is floored at 1e-16.
void softmax_grad_hess(std::span<const double> logits, int label, std::span<double> g,
                       std::span<double> h);

std::vector<double> softmax(std::span<const double> logits);

/// feature < 0 marks a leaf (weight valid); otherwise an internal node with
/// both children present. Rows with a missing split feature follow
/// default_left. cover = training rows that reached the node.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  bool default_left = true;
  double weight = 0.0;
  double cover = 0.0;
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  bool leaf_only() const { return nodes.size() == 1; }
  /// Raw leaf value for a row (no learning-rate scaling).
  double value(std::span<const double> row) const;
  /// Cover-weighted mean leaf value (the tree's expectation over training
  /// rows); used as the SHAP bias contribution.
  double expected_value() const;
};

struct SplitCandidate {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
  bool default_left = true;
};

/// Exhaustive scan over midpoints between consecutive distinct present
/// values per feature; the gain rule is
///   1/2 [ G_L^2/(H_L+lambda) + G_R^2/(H_R+lambda) - (G_L+G_R)^2/(H_L+H_R+lambda) ] - gamma.
/// Rows with a missing value are sent as a block to whichever side gains
/// more. Returns feature = -1 when no candidate has positive gain. Ties
/// break toward (lower feature index, lower threshold, missing-left).
SplitCandidate best_split(std::span<const double> rows_data, std::size_t width,
                          std::span<const std::size_t> rows, std::span<const double> g,
                          std::span<const double> h, const BoostParams& params);

/// Greedy recursive growth to max_depth; leaf weight = -G/(H+lambda).
Tree build_tree(std::span<const double> rows_data, std::size_t width,
                std::span<const std::size_t> rows, std::span<const double> g,
                std::span<const double> h, const BoostParams& params);

struct Ensemble {
  BoostParams params;
  int n_features = 0;
  std::vector<double> base_score;  // initial per-class logits
  std::vector<Tree> trees;         // round-major: trees[round * n_classes + class]
  std::vector<double> train_loss;  // multiclass log-loss after each round

  int rounds() const { return params.n_classes == 0 ? 0 : static_cast<int>(trees.size()) / params.n_classes; }
  const Tree& tree(int round, int cls) const { return trees[static_cast<std::size_t>(round) * params.n_classes + cls]; }

  /// Per-class probabilities; throws on width mismatch. NaN feature values
  /// follow each node's default direction.
  std::vector<double> predict_proba(std::span<const double> row) const;
  int predict_class(std::span<const double> row) const;
  /// Pre-softmax margins per class.
  std::vector<double> margins(std::span<const double> row) const;

  /// Versioned JSON with thresholds/weights as decimal strings, so
  /// serialization round trips bit-exactly.
  std::string to_json() const;
  static Ensemble from_json(const std::string& text);
};

/// Fits rounds x n_classes trees to the softmax objective. Internally rows
/// are reordered canonically (lexicographic by content), making the fit
/// invariant to the input row order.
Ensemble train(std::span<const double> features, std::size_t width, std::span<const int> labels,
               const BoostParams& params);

/// Multiclass log-loss of an ensemble on a dataset.
double log_loss(const Ensemble& ensemble, std::span<const double> features, std::size_t width,
                std::span<const int> labels);

/// The small default hyperparameter grid used by the auto pipeline:
/// learning_rate in {0.05, 0.1, 0.3} x max_depth in {2, 3, 4}.
std::vector<BoostParams> default_grid(const BoostParams& base);

}  // namespace emotrait::gbt
