/**
 * Copyright 2026, emotrait authors
 * SPDX-License-Identifier: Apache-2.0
 */
#include <doctest.h>

#include <cmath>

#include "emotrait/resample.hpp"
#include "helpers.hpp"

using namespace emotrait;

namespace {

Rows make_rows(const std::vector<std::vector<double>>& points) {
  Rows rows;
  rows.width = points.empty() ? 0 : points[0].size();
  for (const auto& p : points) rows.push_row(p);
  return rows;
}

double dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

/// Segment test: s lies between some pair (a, b) of original minority rows.
bool on_some_segment(const Rows& minority, std::span<const double> s, double tol = 1e-9) {
  for (std::size_t a = 0; a < minority.n; ++a) {
    for (std::size_t b = 0; b < minority.n; ++b) {
      if (a == b) continue;
      const double gap =
          dist(minority.row(a), s) + dist(s, minority.row(b)) - dist(minority.row(a), minority.row(b));
      if (std::abs(gap) <= tol) return true;
    }
  }
  return false;
}

}  // namespace

TEST_SUITE("resample") {

TEST_CASE("knn on a line returns the closest points in order") {
  const auto points = make_rows({{0.0}, {1.0}, {2.0}, {10.0}});
  const auto nn = knn(points, 0, 2);
  REQUIRE(nn.size() == 2);
  CHECK(nn[0] == 1);
  CHECK(nn[1] == 2);
}

TEST_CASE("knn breaks ties by lower index") {
  const auto points = make_rows({{3.0, 3.0}, {3.0, 3.0}, {3.0, 3.0}, {3.0, 3.0}, {3.0, 3.0}});
  const auto nn = knn(points, 2, 3);
  CHECK(nn == std::vector<std::size_t>{0, 1, 3});
}

TEST_CASE("knn requires k+1 points and excludes the query") {
  const auto points = make_rows({{0.0}, {1.0}});
  CHECK_THROWS_AS(knn(points, 0, 2), ValidationError);
  const auto nn = knn(points, 0, 1);
  CHECK(nn == std::vector<std::size_t>{1});
}

TEST_CASE("knn matches the exhaustive distance-sort oracle") {
  Rng rng(99);
  std::vector<std::vector<double>> cloud(50, std::vector<double>(105));
  for (auto& p : cloud) {
    for (double& v : p) v = rng.uniform();
  }
  const auto rows = make_rows(cloud);
  for (std::size_t q = 0; q < 10; ++q) {
    CHECK(knn(rows, q, 7) == oracle::knn_bruteforce(cloud, q, 7));
  }
}

TEST_CASE("smote synthetics live on segments between minority points") {
  const auto minority = make_rows({{0.0, 0.0}, {1.0, 1.0}});
  Rng rng(1);
  const auto synth = smote(minority, 1000, 1, rng);
  REQUIRE(synth.n == 1000);
  double delta_sum = 0.0;
  for (std::size_t i = 0; i < synth.n; ++i) {
    const auto s = synth.row(i);
    CHECK(s[0] == doctest::Approx(s[1]).epsilon(1e-12));  // the segment is the diagonal
    CHECK(s[0] >= 0.0);
    CHECK(s[0] <= 1.0);
    delta_sum += s[0];
  }
  // delta ~ U(0,1): the empirical mean position is near the midpoint
  CHECK(std::abs(delta_sum / 1000.0 - 0.5) < 0.05);
}

TEST_CASE("smote preconditions") {
  const auto single = make_rows({{0.0}});
  Rng rng(1);
  CHECK_THROWS_AS(smote(single, 5, 1, rng), ValidationError);
  const auto pair = make_rows({{0.0}, {1.0}});
  CHECK_THROWS_AS(smote(pair, 5, 2, rng), ValidationError);  // k must stay below |minority|
}

TEST_CASE("smote output is a convex combination of kNN pairs") {
  Rng data_rng(5);
  std::vector<std::vector<double>> pts(12, std::vector<double>(6));
  for (auto& p : pts) {
    for (double& v : p) v = data_rng.normal();
  }
  const auto minority = make_rows(pts);
  Rng rng(2);
  const auto synth = smote(minority, 200, 4, rng);
  for (std::size_t i = 0; i < synth.n; ++i) {
    CHECK(on_some_segment(minority, synth.row(i)));
  }
}

TEST_CASE("adasyn allocates to boundary points") {
  // A sits next to the majority (r = 1); B is far with A as nearest neighbor
  // (r = 0). Every synthetic therefore grows from A toward B.
  const auto all = make_rows({
      {0.0, 0.0},   // A (minority)
      {0.0, 3.0},   // B (minority)
      {0.5, 0.0},   // majority
      {5.0, 5.0},   // majority
      {6.0, 5.0},   // majority
      {5.0, 6.0},   // majority
  });
  const std::vector<int> labels{1, 1, 0, 0, 0, 0};
  Rng rng(3);
  const auto synth = adasyn(all, labels, 1, 2, 1, rng);
  CHECK(synth.n == 2);
  for (std::size_t i = 0; i < synth.n; ++i) {
    const auto s = synth.row(i);
    CHECK(s[0] == doctest::Approx(0.0));       // on the A-B segment (x = 0)
    CHECK(s[1] >= 0.0);
    CHECK(s[1] <= 3.0);
  }
}

TEST_CASE("interior minority cluster falls back to plain smote") {
  // minority cluster far from the majority: every kNN ball is pure minority
  const auto all = make_rows({
      {0.0, 0.0}, {0.1, 0.0}, {0.0, 0.1}, {0.1, 0.1},  // minority
      {10.0, 10.0}, {10.1, 10.0}, {10.0, 10.1}, {10.1, 10.1}, {10.2, 10.2},  // majority
  });
  const std::vector<int> labels{1, 1, 1, 1, 0, 0, 0, 0, 0};
  Rng rng(4);
  const auto synth = adasyn(all, labels, 1, 5, 2, rng);
  CHECK(synth.n == 5);
  Rows minority;
  minority.width = 2;
  for (std::size_t i = 0; i < 4; ++i) minority.push_row(all.row(i));
  for (std::size_t i = 0; i < synth.n; ++i) CHECK(on_some_segment(minority, synth.row(i)));
}

TEST_CASE("balance is a no-op on already balanced classes") {
  Rng data_rng(8);
  std::vector<std::vector<double>> pts(90, std::vector<double>(4));
  std::vector<int> labels(90);
  for (std::size_t i = 0; i < 90; ++i) {
    for (double& v : pts[i]) v = data_rng.normal();
    labels[i] = static_cast<int>(i % 3);
  }
  const auto rows = make_rows(pts);
  ResamplePlan plan;
  plan.strategy = ResampleStrategy::kSmote;
  plan.seed = 11;
  const auto out = balance(rows, labels, plan);
  CHECK(out.labels.size() == 90);
  CHECK(out.features.values == rows.values);
  CHECK(std::none_of(out.synthetic.begin(), out.synthetic.end(), [](bool b) { return b; }));
}

TEST_CASE("balance reaches exact majority counts and preserves originals") {
  Rng data_rng(9);
  std::vector<std::vector<double>> pts;
  std::vector<int> labels;
  const std::vector<std::pair<int, int>> counts{{0, 10}, {1, 30}, {2, 20}};
  for (const auto& [cls, count] : counts) {
    for (int i = 0; i < count; ++i) {
      std::vector<double> p(5);
      for (double& v : p) v = data_rng.normal() + cls * 3.0;
      pts.push_back(p);
      labels.push_back(cls);
    }
  }
  const auto rows = make_rows(pts);

  for (auto strategy : {ResampleStrategy::kSmote, ResampleStrategy::kAdasyn}) {
    ResamplePlan plan;
    plan.strategy = strategy;
    plan.seed = 21;
    const auto out = balance(rows, labels, plan);
    std::array<std::size_t, 3> balanced{};
    for (int label : out.labels) balanced[static_cast<std::size_t>(label)] += 1;
    CHECK(balanced[0] == 30);
    CHECK(balanced[1] == 30);
    CHECK(balanced[2] == 30);
    // originals verbatim and first
    REQUIRE(out.labels.size() >= labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
      CHECK(out.labels[i] == labels[i]);
      CHECK_FALSE(out.synthetic[i]);
      for (std::size_t d = 0; d < 5; ++d) CHECK(out.features.row(i)[d] == rows.row(i)[d]);
    }
    for (std::size_t i = labels.size(); i < out.labels.size(); ++i) CHECK(out.synthetic[i]);

    // determinism contract
    const auto again = balance(rows, labels, plan);
    CHECK(again.features.values == out.features.values);
    CHECK(again.labels == out.labels);
  }
}

TEST_CASE("balance degrades k with a warning for tiny classes") {
  Rng data_rng(10);
  std::vector<std::vector<double>> pts;
  std::vector<int> labels;
  for (int i = 0; i < 3; ++i) {
    pts.push_back({data_rng.normal(), data_rng.normal()});
    labels.push_back(0);
  }
  for (int i = 0; i < 12; ++i) {
    pts.push_back({data_rng.normal() + 5.0, data_rng.normal()});
    labels.push_back(1);
  }
  ResamplePlan plan;
  plan.strategy = ResampleStrategy::kSmote;
  plan.k_neighbors = 5;
  plan.seed = 2;
  const auto out = balance(make_rows(pts), labels, plan);
  CHECK(!out.warnings.empty());
  std::array<std::size_t, 2> balanced{};
  for (int label : out.labels) balanced[static_cast<std::size_t>(label)] += 1;
  CHECK(balanced[0] == 12);
  CHECK(balanced[1] == 12);
}

TEST_CASE("balance rejects single-class input and unresolved auto") {
  const auto rows = make_rows({{0.0}, {1.0}, {2.0}});
  const std::vector<int> labels{1, 1, 1};
  ResamplePlan plan;
  plan.strategy = ResampleStrategy::kSmote;
  CHECK_THROWS_AS(balance(rows, labels, plan), ValidationError);
  plan.strategy = ResampleStrategy::kAuto;
  const std::vector<int> two_class{0, 1, 1};
  CHECK_THROWS_AS(balance(rows, two_class, plan), InvariantError);
}

TEST_CASE("synthetics are convex combinations over random imbalanced datasets") {
  for (int trial = 0; trial < 20; ++trial) {
    Rng rng(static_cast<std::uint64_t>(trial) * 7 + 1);
    std::vector<std::vector<double>> pts;
    std::vector<int> labels;
    const std::array<std::size_t, 3> counts{4 + rng.index(8), 12 + rng.index(10), 25 + rng.index(10)};
    for (int cls = 0; cls < 3; ++cls) {
      for (std::size_t i = 0; i < counts[static_cast<std::size_t>(cls)]; ++i) {
        std::vector<double> p(7);
        for (double& v : p) v = rng.normal() + cls;
        pts.push_back(p);
        labels.push_back(cls);
      }
    }
    const auto rows = make_rows(pts);
    ResamplePlan plan;
    plan.strategy = trial % 2 == 0 ? ResampleStrategy::kSmote : ResampleStrategy::kAdasyn;
    plan.seed = static_cast<std::uint64_t>(trial);
    const auto out = balance(rows, labels, plan);

    std::array<std::size_t, 3> balanced{};
    for (int label : out.labels) balanced[static_cast<std::size_t>(label)] += 1;
    const std::size_t majority = *std::max_element(counts.begin(), counts.end());
    for (std::size_t c = 0; c < 3; ++c) CHECK(balanced[c] == majority);

    for (std::size_t i = labels.size(); i < out.labels.size(); ++i) {
      Rows minority;
      minority.width = rows.width;
      for (std::size_t j = 0; j < labels.size(); ++j) {
        if (labels[j] == out.labels[i]) minority.push_row(rows.row(j));
      }
      CHECK(on_some_segment(minority, out.features.row(i)));
    }
  }
}

}  // TEST_SUITE
