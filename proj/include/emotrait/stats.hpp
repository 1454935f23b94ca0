/**
 * Copyright 2026, emotrait authors
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "emotrait/features.hpp"

namespace emotrait {

// ---------------------------------------------------------------------------
// Significance stars. Correlation tables use two levels, regression tables
// three; both follow the published footnotes exactly.
// ---------------------------------------------------------------------------

enum class StarLevel : int { kNone = 0, kOne, kTwo, kThree };

std::string_view star_string(StarLevel s);
StarLevel correlation_stars(double p);  // * p<0.05, ** p<0.01
StarLevel regression_stars(double p);   // * p<0.05, ** p<0.01, *** p<0.001

// ---------------------------------------------------------------------------
// Student-t tail via the regularized incomplete beta function.
// ---------------------------------------------------------------------------

/// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double regularized_incomplete_beta(double a, double b, double x);

/// Two-sided p-value P(|T| >= |t|) for Student-t with df degrees of freedom.
/// Absolute error <= 1e-10. Throws for df < 1.
double student_t_sf(double t, double df);

// ---------------------------------------------------------------------------
// Pearson correlation
// ---------------------------------------------------------------------------

struct CorrelationCell {
  double r = 0.0;
  double p = 1.0;
  std::size_t n = 0;
  StarLevel stars = StarLevel::kNone;
};

/// Sample correlation with a two-sided t-test (df = n-2). Throws for n < 3
/// or constant input.
CorrelationCell pearson(std::span<const double> x, std::span<const double> y);

/// 105 x 22 grid, pairwise deletion; cells with fewer than 3 complete pairs
/// or a constant side are absent.
struct CorrelationTable {
  std::string cohort_id;
  // feature-major: cells[feature * kTraitCount + trait]
  std::vector<std::optional<CorrelationCell>> cells;

  const std::optional<CorrelationCell>& cell(int feature, TraitKind trait) const {
    return cells[static_cast<std::size_t>(feature) * kTraitCount + static_cast<std::size_t>(trait)];
  }
  std::string to_csv() const;   // r to 3 decimals with star suffix
  std::string to_json() const;  // full precision
};

CorrelationTable correlation_table(const FeatureMatrix& features, const TraitTable& traits);

// ---------------------------------------------------------------------------
// OLS regression with adjusted R-squared, VIF screening and greedy forward
// selection.
// ---------------------------------------------------------------------------

struct OlsTerm {
  std::string name;
  double coef = 0.0;
  double se = 0.0;
  double t = 0.0;
  double p = 1.0;
  StarLevel stars = StarLevel::kNone;
};

struct RegressionModel {
  std::string dependent;
  std::vector<OlsTerm> terms;  // predictors, selection order
  OlsTerm intercept;
  double r2 = 0.0;
  double adj_r2 = 0.0;
  std::size_t n = 0;
  std::map<std::string, double> vifs;

  std::string to_json() const;
  static RegressionModel from_json(const std::string& text);
};

/// Dense candidate design used by ols_fit / vif / forward_select. NaN cells
/// are allowed only where the caller filters them out (forward_select skips
/// incomplete columns).
struct Design {
  std::size_t n = 0;
  std::size_t p = 0;
  std::vector<double> values;  // row-major n x p
  std::vector<std::string> names;

  double at(std::size_t row, std::size_t col) const { return values[row * p + col]; }
};

/// Least squares with an intercept prepended to the given predictors.
/// Standard errors come from s^2 (X'X)^-1. Throws a singular-design error
/// naming the dependent column when X is rank deficient.
RegressionModel ols_fit(const Design& predictors, std::span<const double> y,
                        const std::string& dependent);

/// VIF_j = 1 / (1 - R^2_j) from regressing column j on the remaining columns
/// plus an intercept; exactly collinear columns report +infinity.
std::vector<double> vif(const Design& predictors);

struct SelectConfig {
  double vif_max = 5.0;
  double epsilon = 0.005;  // minimum adjusted-R^2 gain per step
};

/// Greedy forward selection maximizing adjusted R^2 under the VIF screen.
/// Candidates must be complete and non-constant over the given rows.
RegressionModel forward_select(const Design& candidates, std::span<const double> y,
                               const std::string& dependent, const SelectConfig& config = {});

/// Trait-level wrapper: listwise-deletes rows missing the trait, admits
/// feature columns complete on the surviving rows.
RegressionModel forward_select_trait(const FeatureMatrix& features,
                                     std::span<const std::optional<double>> trait_scores,
                                     TraitKind trait, const SelectConfig& config = {});

}  // namespace emotrait
