/**
 * Copyright 2026, emotrait authors
 * SPDX-License-Identifier: Apache-2.0
 */
#include "emotrait/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace emotrait {

using nlohmann::json;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

std::string_view star_string(StarLevel s) {
  switch (s) {
    case StarLevel::kNone: return "";
    case StarLevel::kOne: return "*";
    case StarLevel::kTwo: return "**";
    case StarLevel::kThree: return "***";
  }
  return "";
}

StarLevel correlation_stars(double p) {
  if (p < 0.01) return StarLevel::kTwo;
  if (p < 0.05) return StarLevel::kOne;
  return StarLevel::kNone;
}

StarLevel regression_stars(double p) {
  if (p < 0.001) return StarLevel::kThree;
  if (p < 0.01) return StarLevel::kTwo;
  if (p < 0.05) return StarLevel::kOne;
  return StarLevel::kNone;
}

// ---------------------------------------------------------------------------
// Incomplete beta (continued fraction, modified Lentz)
// ---------------------------------------------------------------------------

namespace {

double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 500;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw InvariantError("incomplete beta needs positive parameters");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return std::exp(ln_front) * beta_continued_fraction(a, b, x) / a;
  }
  return 1.0 - std::exp(ln_front) * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_sf(double t, double df) {
  if (!(df >= 1.0)) throw ValidationError("student_t_sf requires df >= 1");
  if (t == 0.0) return 1.0;
  if (!std::isfinite(t)) return 0.0;
  const double x = df / (df + t * t);
  return regularized_incomplete_beta(df / 2.0, 0.5, x);
}

// ---------------------------------------------------------------------------
// Pearson
// ---------------------------------------------------------------------------

CorrelationCell pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InvariantError("pearson: length mismatch");
  const std::size_t n = x.size();
  if (n < 3) throw ValidationError("pearson requires at least 3 pairs");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) throw ValidationError("pearson: correlation undefined for constant input");
  CorrelationCell cell;
  cell.n = n;
  cell.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  const double df = static_cast<double>(n - 2);
  const double denom = 1.0 - cell.r * cell.r;
  if (denom <= 0.0) {
    cell.p = 0.0;
  } else {
    cell.p = student_t_sf(cell.r * std::sqrt(df / denom), df);
  }
  cell.stars = correlation_stars(cell.p);
  return cell;
}

CorrelationTable correlation_table(const FeatureMatrix& features, const TraitTable& traits) {
  CorrelationTable table;
  table.cohort_id = features.cohort_id;
  table.cells.resize(static_cast<std::size_t>(kFeatureCount) * kTraitCount);

  // trait columns aligned to the matrix's row order
  std::vector<std::vector<std::optional<double>>> trait_cols(
      kTraitCount, std::vector<std::optional<double>>(features.rows()));
  for (std::size_t r = 0; r < features.rows(); ++r) {
    auto it = traits.rows.find(features.participants[r]);
    if (it == traits.rows.end()) continue;
    for (int t = 0; t < kTraitCount; ++t) trait_cols[static_cast<std::size_t>(t)][r] = it->second[static_cast<std::size_t>(t)];
  }

  std::vector<double> xs, ys;
  for (int f = 0; f < kFeatureCount; ++f) {
    for (int t = 0; t < kTraitCount; ++t) {
      xs.clear();
      ys.clear();
      for (std::size_t r = 0; r < features.rows(); ++r) {
        const double v = features.at(r, static_cast<std::size_t>(f));
        const auto& s = trait_cols[static_cast<std::size_t>(t)][r];
        if (std::isnan(v) || !s.has_value()) continue;
        xs.push_back(v);
        ys.push_back(*s);
      }
      auto& slot = table.cells[static_cast<std::size_t>(f) * kTraitCount + static_cast<std::size_t>(t)];
      if (xs.size() < 3) continue;
      try {
        slot = pearson(xs, ys);
      } catch (const ValidationError&) {
        // constant side under pairwise deletion: cell stays absent
      }
    }
  }
  return table;
}

namespace {

std::string format_r3(double r) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", r);
  return buf;
}

}  // namespace

std::string CorrelationTable::to_csv() const {
  std::ostringstream out;
  out << "Variable";
  for (TraitKind t : all_traits()) out << ',' << trait_code(t);
  out << '\n';
  for (int f = 0; f < kFeatureCount; ++f) {
    out << feature_name(f);
    for (int t = 0; t < kTraitCount; ++t) {
      out << ',';
      const auto& c = cell(f, static_cast<TraitKind>(t));
      if (c) out << format_r3(c->r) << star_string(c->stars);
    }
    out << '\n';
  }
  return out.str();
}

std::string CorrelationTable::to_json() const {
  json j;
  j["schema_version"] = 1;
  j["kind"] = "correlation_table";
  j["cohort_id"] = cohort_id;
  json cells_json = json::array();
  for (int f = 0; f < kFeatureCount; ++f) {
    for (int t = 0; t < kTraitCount; ++t) {
      const auto& c = cell(f, static_cast<TraitKind>(t));
      if (!c) continue;
      json e;
      e["feature"] = feature_name(f);
      e["trait"] = std::string(trait_code(static_cast<TraitKind>(t)));
      e["r"] = c->r;
      e["p"] = c->p;
      e["n"] = c->n;
      e["stars"] = std::string(star_string(c->stars));
      cells_json.push_back(std::move(e));
    }
  }
  j["cells"] = std::move(cells_json);
  return j.dump(2);
}

// ---------------------------------------------------------------------------
// Householder QR least squares
// ---------------------------------------------------------------------------

namespace {

struct QrResult {
  std::vector<double> coef;      // per input column; 0 for skipped columns
  std::vector<double> cov_diag;  // diag of (X'X)^-1, per input column
  std::vector<bool> skipped;     // dependent columns dropped (skip mode only)
  double rss = 0.0;
  int first_dependent = -1;      // column index, -1 when full rank
};

/// Least squares via Householder QR on the (column-major) copy of X.
/// skip_dependent drops collinear columns instead of reporting them.
QrResult qr_least_squares(const std::vector<double>& x_rowmajor, std::size_t n, std::size_t p,
                          std::vector<double> y, bool skip_dependent, bool want_cov) {
  QrResult result;
  result.coef.assign(p, 0.0);
  result.cov_diag.assign(p, 0.0);
  result.skipped.assign(p, false);

  // column-major working copy
  std::vector<double> a(n * p);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) a[j * n + i] = x_rowmajor[i * p + j];
  }
  std::vector<double> norm0(p, 0.0);
  for (std::size_t j = 0; j < p; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[j * n + i] * a[j * n + i];
    norm0[j] = std::sqrt(s);
  }

  std::vector<std::size_t> active;  // columns kept, in order
  std::vector<double> w(n);
  std::size_t rank = 0;
  for (std::size_t j = 0; j < p; ++j) {
    double* col = a.data() + j * n;
    double sigma2 = 0.0;
    for (std::size_t i = rank; i < n; ++i) sigma2 += col[i] * col[i];
    const double sigma = std::sqrt(sigma2);
    if (sigma <= std::max(1e-10 * norm0[j], 1e-300) || rank >= n) {
      if (skip_dependent) {
        result.skipped[j] = true;
        continue;
      }
      result.first_dependent = static_cast<int>(j);
      return result;
    }
    const double alpha = col[rank] >= 0.0 ? -sigma : sigma;
    double wnorm2 = 0.0;
    for (std::size_t i = rank; i < n; ++i) {
      w[i] = col[i];
      if (i == rank) w[i] -= alpha;
      wnorm2 += w[i] * w[i];
    }
    col[rank] = alpha;
    for (std::size_t i = rank + 1; i < n; ++i) col[i] = 0.0;
    if (wnorm2 > 0.0) {
      for (std::size_t m = j + 1; m < p; ++m) {
        double* cm = a.data() + m * n;
        double dot = 0.0;
        for (std::size_t i = rank; i < n; ++i) dot += w[i] * cm[i];
        const double f = 2.0 * dot / wnorm2;
        for (std::size_t i = rank; i < n; ++i) cm[i] -= f * w[i];
      }
      double dot = 0.0;
      for (std::size_t i = rank; i < n; ++i) dot += w[i] * y[i];
      const double f = 2.0 * dot / wnorm2;
      for (std::size_t i = rank; i < n; ++i) y[i] -= f * w[i];
    }
    active.push_back(j);
    ++rank;
  }

  result.rss = 0.0;
  for (std::size_t i = rank; i < n; ++i) result.rss += y[i] * y[i];

  // back substitution: R is rank x rank over the active columns
  std::vector<double> beta(rank, 0.0);
  for (std::size_t k = rank; k-- > 0;) {
    double s = y[k];
    for (std::size_t m = k + 1; m < rank; ++m) s -= a[active[m] * n + k] * beta[m];
    beta[k] = s / a[active[k] * n + k];
  }
  for (std::size_t k = 0; k < rank; ++k) result.coef[active[k]] = beta[k];

  if (want_cov) {
    // R^-1 (upper triangular), then diag of (X'X)^-1 = diag(R^-1 R^-T)
    std::vector<double> rinv(rank * rank, 0.0);
    for (std::size_t k = rank; k-- > 0;) {
      rinv[k * rank + k] = 1.0 / a[active[k] * n + k];
      for (std::size_t m = k + 1; m < rank; ++m) {
        double s = 0.0;
        for (std::size_t q = k + 1; q <= m; ++q) s += a[active[q] * n + k] * rinv[q * rank + m];
        rinv[k * rank + m] = -s / a[active[k] * n + k];
      }
    }
    for (std::size_t k = 0; k < rank; ++k) {
      double s = 0.0;
      for (std::size_t m = k; m < rank; ++m) s += rinv[k * rank + m] * rinv[k * rank + m];
      result.cov_diag[active[k]] = s;
    }
  }
  return result;
}

OlsTerm make_term(const std::string& name, double coef, double se, double df) {
  OlsTerm term;
  term.name = name;
  term.coef = coef;
  term.se = se;
  term.t = se > 0.0 ? coef / se : 0.0;
  term.p = se > 0.0 ? student_t_sf(term.t, df) : (coef == 0.0 ? 1.0 : 0.0);
  term.stars = regression_stars(term.p);
  return term;
}

}  // namespace

RegressionModel ols_fit(const Design& predictors, std::span<const double> y,
                        const std::string& dependent) {
  const std::size_t n = y.size();
  const std::size_t p = predictors.p;
  if (predictors.n != n) throw InvariantError("ols_fit: row count mismatch");
  if (n <= p + 1) throw ValidationError("ols_fit requires n > p+1");

  // intercept first, then the predictors
  std::vector<double> x((p + 1) * n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i * (p + 1)] = 1.0;
    for (std::size_t j = 0; j < p; ++j) x[i * (p + 1) + j + 1] = predictors.at(i, j);
  }
  auto qr = qr_least_squares(x, n, p + 1, std::vector<double>(y.begin(), y.end()),
                             /*skip_dependent=*/false, /*want_cov=*/true);
  if (qr.first_dependent >= 0) {
    const std::string name = qr.first_dependent == 0
                                 ? std::string("(Intercept)")
                                 : predictors.names[static_cast<std::size_t>(qr.first_dependent - 1)];
    throw ValidationError("singular design for " + dependent + ": column '" + name +
                          "' is linearly dependent");
  }

  double ybar = 0.0;
  for (double v : y) ybar += v;
  ybar /= static_cast<double>(n);
  double tss = 0.0;
  for (double v : y) tss += (v - ybar) * (v - ybar);
  if (tss <= 0.0) throw ValidationError("ols_fit: dependent variable '" + dependent + "' is constant");

  RegressionModel model;
  model.dependent = dependent;
  model.n = n;
  const double df = static_cast<double>(n - p - 1);
  const double rss = std::max(qr.rss, 0.0);
  const double s2 = rss / df;
  model.r2 = std::clamp(1.0 - rss / tss, 0.0, 1.0);
  model.adj_r2 = 1.0 - (1.0 - model.r2) * static_cast<double>(n - 1) / df;

  model.intercept = make_term("(Intercept)", qr.coef[0], std::sqrt(s2 * qr.cov_diag[0]), df);
  for (std::size_t j = 0; j < p; ++j) {
    model.terms.push_back(
        make_term(predictors.names[j], qr.coef[j + 1], std::sqrt(s2 * qr.cov_diag[j + 1]), df));
  }
  if (p >= 1) {
    const auto vifs = vif(predictors);
    for (std::size_t j = 0; j < p; ++j) model.vifs[predictors.names[j]] = vifs[j];
  }
  return model;
}

std::vector<double> vif(const Design& predictors) {
  const std::size_t n = predictors.n;
  const std::size_t p = predictors.p;
  if (n <= p) throw ValidationError("vif requires n > p");
  std::vector<double> out(p, 1.0);
  if (p < 2) return out;

  for (std::size_t j = 0; j < p; ++j) {
    // regress column j on the others plus an intercept
    std::vector<double> x(n * p);
    std::vector<double> yj(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i * p] = 1.0;
      std::size_t c = 1;
      for (std::size_t m = 0; m < p; ++m) {
        if (m == j) continue;
        x[i * p + c] = predictors.at(i, m);
        ++c;
      }
      yj[i] = predictors.at(i, j);
    }
    double ybar = 0.0;
    for (double v : yj) ybar += v;
    ybar /= static_cast<double>(n);
    double tss = 0.0;
    for (double v : yj) tss += (v - ybar) * (v - ybar);
    if (tss <= 0.0) {
      out[j] = kInf;  // constant column is fit exactly by the intercept
      continue;
    }
    auto qr = qr_least_squares(x, n, p, std::move(yj), /*skip_dependent=*/true, /*want_cov=*/false);
    const double r2 = 1.0 - std::max(qr.rss, 0.0) / tss;
    out[j] = r2 >= 1.0 - 1e-12 ? kInf : 1.0 / (1.0 - r2);
  }
  return out;
}

namespace {

RegressionModel intercept_only_model(std::span<const double> y, const std::string& dependent) {
  const std::size_t n = y.size();
  if (n < 3) throw ValidationError("forward_select requires at least 3 rows");
  double ybar = 0.0;
  for (double v : y) ybar += v;
  ybar /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : y) ss += (v - ybar) * (v - ybar);
  const double df = static_cast<double>(n - 1);
  const double se = std::sqrt(ss / df / static_cast<double>(n));
  RegressionModel model;
  model.dependent = dependent;
  model.n = n;
  model.r2 = 0.0;
  model.adj_r2 = 0.0;
  model.intercept = make_term("(Intercept)", ybar, se, df);
  return model;
}

Design subdesign(const Design& all, const std::vector<std::size_t>& cols) {
  Design d;
  d.n = all.n;
  d.p = cols.size();
  d.values.resize(d.n * d.p);
  for (std::size_t c = 0; c < cols.size(); ++c) {
    d.names.push_back(all.names[cols[c]]);
    for (std::size_t i = 0; i < d.n; ++i) d.values[i * d.p + c] = all.at(i, cols[c]);
  }
  return d;
}

}  // namespace

RegressionModel forward_select(const Design& candidates, std::span<const double> y,
                               const std::string& dependent, const SelectConfig& config) {
  const std::size_t n = y.size();
  if (candidates.n != n) throw InvariantError("forward_select: row count mismatch");

  std::vector<std::size_t> admissible;
  for (std::size_t j = 0; j < candidates.p; ++j) {
    bool complete = true;
    double first = candidates.at(0, j);
    bool constant = true;
    for (std::size_t i = 0; i < n; ++i) {
      const double v = candidates.at(i, j);
      if (std::isnan(v)) {
        complete = false;
        break;
      }
      if (v != first) constant = false;
    }
    if (complete && !constant) admissible.push_back(j);
  }

  RegressionModel best = intercept_only_model(y, dependent);
  if (admissible.empty()) return best;

  std::vector<std::size_t> selected;
  std::vector<bool> in_model(candidates.p, false);
  for (;;) {
    if (n <= selected.size() + 2) break;  // keep a residual degree of freedom

    struct Scored {
      double adj;
      std::size_t col;
      RegressionModel model;
    };
    std::vector<Scored> scored;
    for (std::size_t j : admissible) {
      if (in_model[j]) continue;
      auto cols = selected;
      cols.push_back(j);
      try {
        auto model = ols_fit(subdesign(candidates, cols), y, dependent);
        scored.push_back({model.adj_r2, j, std::move(model)});
      } catch (const ValidationError&) {
        // singular with this candidate; skip it
      }
    }
    if (scored.empty()) break;
    std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
      if (a.adj != b.adj) return a.adj > b.adj;
      return a.col < b.col;
    });

    bool accepted = false;
    for (auto& candidate : scored) {
      if (candidate.adj - best.adj_r2 < config.epsilon) break;  // nothing left clears epsilon
      double max_vif = 0.0;
      for (const auto& [name, v] : candidate.model.vifs) max_vif = std::max(max_vif, v);
      if (max_vif > config.vif_max) continue;  // would breach the collinearity screen
      best = std::move(candidate.model);
      selected.push_back(candidate.col);
      in_model[candidate.col] = true;
      accepted = true;
      break;
    }
    if (!accepted) break;
  }
  return best;
}

RegressionModel forward_select_trait(const FeatureMatrix& features,
                                     std::span<const std::optional<double>> trait_scores,
                                     TraitKind trait, const SelectConfig& config) {
  if (trait_scores.size() != features.rows()) {
    throw InvariantError("forward_select_trait: trait column misaligned");
  }
  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < features.rows(); ++r) {
    if (trait_scores[r].has_value()) rows.push_back(r);
  }
  Design candidates;
  candidates.n = rows.size();
  candidates.p = kFeatureCount;
  candidates.names = feature_names();
  candidates.values.resize(rows.size() * kFeatureCount);
  std::vector<double> y(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    y[i] = *trait_scores[rows[i]];
    for (int c = 0; c < kFeatureCount; ++c) {
      candidates.values[i * kFeatureCount + static_cast<std::size_t>(c)] = features.at(rows[i], static_cast<std::size_t>(c));
    }
  }
  return forward_select(candidates, y, std::string(trait_code(trait)), config);
}

std::string RegressionModel::to_json() const {
  json j;
  j["schema_version"] = 1;
  j["kind"] = "regression_model";
  j["dependent"] = dependent;
  j["n"] = n;
  j["r2"] = r2;
  j["adj_r2"] = adj_r2;
  auto term_json = [](const OlsTerm& t) {
    json e;
    e["name"] = t.name;
    e["coef"] = t.coef;
    e["se"] = t.se;
    e["t"] = t.t;
    e["p"] = t.p;
    e["stars"] = std::string(star_string(t.stars));
    return e;
  };
  j["intercept"] = term_json(intercept);
  json terms_json = json::array();
  for (const auto& t : terms) terms_json.push_back(term_json(t));
  j["terms"] = std::move(terms_json);
  json vif_json = json::object();
  for (const auto& [name, v] : vifs) {
    if (std::isinf(v)) {
      vif_json[name] = "inf";
    } else {
      vif_json[name] = v;
    }
  }
  j["vifs"] = std::move(vif_json);
  return j.dump(2);
}

RegressionModel RegressionModel::from_json(const std::string& text) {
  const json j = json::parse(text);
  if (j.value("schema_version", 0) != 1) throw ParseError("unsupported regression model schema");
  RegressionModel model;
  model.dependent = j.at("dependent").get<std::string>();
  model.n = j.at("n").get<std::size_t>();
  model.r2 = j.at("r2").get<double>();
  model.adj_r2 = j.at("adj_r2").get<double>();
  auto term_from = [](const json& e) {
    OlsTerm t;
    t.name = e.at("name").get<std::string>();
    t.coef = e.at("coef").get<double>();
    t.se = e.at("se").get<double>();
    t.t = e.at("t").get<double>();
    t.p = e.at("p").get<double>();
    t.stars = regression_stars(t.p);
    return t;
  };
  model.intercept = term_from(j.at("intercept"));
  for (const auto& e : j.at("terms")) model.terms.push_back(term_from(e));
  for (const auto& [name, v] : j.at("vifs").items()) {
    model.vifs[name] = v.is_string() ? kInf : v.get<double>();
  }
  return model;
}

}  // namespace emotrait
