/**
 * Copyright 2026, emotrait authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * Test-only oracles. These deliberately take different computational routes
 * than the library (numerical quadrature, long-double normal equations,
 * exhaustive sorts) so agreement is meaningful.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace oracle {

// ---------------------------------------------------------------------------
// Adaptive Simpson quadrature
// ---------------------------------------------------------------------------

inline double simpson_rec(const std::function<double(double)>& f, double a, double b, double fa,
                          double fb, double fm, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol) {
    return left + right + (left + right - whole) / 15.0;
  }
  return simpson_rec(f, a, m, fa, fm, flm, left, tol * 0.5, depth - 1) +
         simpson_rec(f, m, b, fm, fb, frm, right, tol * 0.5, depth - 1);
}

inline double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_rec(f, a, b, fa, fb, fm, whole, tol, 60);
}

/// Two-sided Student-t tail by direct quadrature of the density; the far
/// tail is handled with the u = 1/x substitution so heavy tails integrate
/// over a finite interval.
inline double t_sf_numeric(double t, double df) {
  if (t == 0.0) return 1.0;
  const double at = std::abs(t);
  const double log_c = std::lgamma((df + 1.0) / 2.0) - std::lgamma(df / 2.0) -
                       0.5 * std::log(df * M_PI);
  auto density = [&](double x) {
    return std::exp(log_c - (df + 1.0) / 2.0 * std::log1p(x * x / df));
  };
  const double cut = std::max(2.0 * at, 60.0);
  const double head = integrate(density, at, cut, 1e-14);
  auto tail_sub = [&](double u) {
    if (u <= 0.0) return 0.0;
    const double x = 1.0 / u;
    return density(x) * x * x;
  };
  const double tail = integrate(tail_sub, 0.0, 1.0 / cut, 1e-14);
  return std::min(1.0, 2.0 * (head + tail));
}

// ---------------------------------------------------------------------------
// Long-double normal-equations least squares (with intercept)
// ---------------------------------------------------------------------------

struct OlsOracle {
  std::vector<double> coef;  // intercept first
  std::vector<double> se;
  double r2 = 0.0;
  double adj_r2 = 0.0;
  bool singular = false;
};

inline OlsOracle ols_normal_equations(const std::vector<double>& predictors, std::size_t n,
                                      std::size_t p, const std::vector<double>& y) {
  const std::size_t q = p + 1;
  std::vector<long double> xtx(q * q, 0.0L), xty(q, 0.0L);
  auto x_at = [&](std::size_t i, std::size_t j) -> long double {
    return j == 0 ? 1.0L : static_cast<long double>(predictors[i * p + (j - 1)]);
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < q; ++a) {
      xty[a] += x_at(i, a) * static_cast<long double>(y[i]);
      for (std::size_t b = 0; b < q; ++b) xtx[a * q + b] += x_at(i, a) * x_at(i, b);
    }
  }
  // Gauss-Jordan inverse with partial pivoting
  std::vector<long double> inv(q * q, 0.0L);
  for (std::size_t i = 0; i < q; ++i) inv[i * q + i] = 1.0L;
  std::vector<long double> m = xtx;
  OlsOracle out;
  for (std::size_t col = 0; col < q; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < q; ++r) {
      if (std::abs(static_cast<double>(m[r * q + col])) >
          std::abs(static_cast<double>(m[pivot * q + col]))) {
        pivot = r;
      }
    }
    if (std::abs(static_cast<double>(m[pivot * q + col])) < 1e-24) {
      out.singular = true;
      return out;
    }
    if (pivot != col) {
      for (std::size_t c = 0; c < q; ++c) {
        std::swap(m[pivot * q + c], m[col * q + c]);
        std::swap(inv[pivot * q + c], inv[col * q + c]);
      }
    }
    const long double d = m[col * q + col];
    for (std::size_t c = 0; c < q; ++c) {
      m[col * q + c] /= d;
      inv[col * q + c] /= d;
    }
    for (std::size_t r = 0; r < q; ++r) {
      if (r == col) continue;
      const long double f = m[r * q + col];
      if (f == 0.0L) continue;
      for (std::size_t c = 0; c < q; ++c) {
        m[r * q + c] -= f * m[col * q + c];
        inv[r * q + c] -= f * inv[col * q + c];
      }
    }
  }
  std::vector<long double> beta(q, 0.0L);
  for (std::size_t a = 0; a < q; ++a) {
    for (std::size_t b = 0; b < q; ++b) beta[a] += inv[a * q + b] * xty[b];
  }
  long double rss = 0.0L, ybar = 0.0L;
  for (std::size_t i = 0; i < n; ++i) ybar += y[i];
  ybar /= static_cast<long double>(n);
  long double tss = 0.0L;
  for (std::size_t i = 0; i < n; ++i) {
    long double fit = 0.0L;
    for (std::size_t a = 0; a < q; ++a) fit += x_at(i, a) * beta[a];
    const long double e = static_cast<long double>(y[i]) - fit;
    rss += e * e;
    tss += (static_cast<long double>(y[i]) - ybar) * (static_cast<long double>(y[i]) - ybar);
  }
  const long double df = static_cast<long double>(n - q);
  const long double s2 = rss / df;
  out.coef.resize(q);
  out.se.resize(q);
  for (std::size_t a = 0; a < q; ++a) {
    out.coef[a] = static_cast<double>(beta[a]);
    out.se[a] = static_cast<double>(std::sqrt(static_cast<double>(s2 * inv[a * q + a])));
  }
  out.r2 = static_cast<double>(1.0L - rss / tss);
  out.adj_r2 = static_cast<double>(1.0L - (rss / df) / (tss / static_cast<long double>(n - 1)));
  return out;
}

/// R^2 of regressing column j on the remaining columns (plus intercept),
/// straight from the normal equations; VIF = 1/(1-R^2).
inline double vif_normal_equations(const std::vector<double>& predictors, std::size_t n,
                                   std::size_t p, std::size_t j) {
  std::vector<double> others((p - 1) * n);
  std::vector<double> yj(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t c = 0;
    for (std::size_t m = 0; m < p; ++m) {
      if (m == j) continue;
      others[i * (p - 1) + c] = predictors[i * p + m];
      ++c;
    }
    yj[i] = predictors[i * p + j];
  }
  const auto fit = ols_normal_equations(others, n, p - 1, yj);
  if (fit.singular) return std::numeric_limits<double>::infinity();
  const double r2 = fit.r2;
  if (r2 >= 1.0 - 1e-12) return std::numeric_limits<double>::infinity();
  return 1.0 / (1.0 - r2);
}

// ---------------------------------------------------------------------------
// Misc
// ---------------------------------------------------------------------------

inline double pearson_naive(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  long double mx = 0.0L, my = 0.0L;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<long double>(n);
  my /= static_cast<long double>(n);
  long double sxy = 0.0L, sxx = 0.0L, syy = 0.0L;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return static_cast<double>(sxy / std::sqrt(sxx * syy));
}

inline std::vector<std::size_t> knn_bruteforce(const std::vector<std::vector<double>>& points,
                                               std::size_t query, int k) {
  std::vector<std::pair<double, std::size_t>> dist;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (i == query) continue;
    double s = 0.0;
    for (std::size_t d = 0; d < points[i].size(); ++d) {
      const double diff = points[i][d] - points[query][d];
      s += diff * diff;
    }
    dist.emplace_back(s, i);
  }
  std::sort(dist.begin(), dist.end());
  std::vector<std::size_t> out;
  for (int i = 0; i < k; ++i) out.push_back(dist[static_cast<std::size_t>(i)].second);
  return out;
}

}  // namespace oracle
