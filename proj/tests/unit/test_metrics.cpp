#include <algorithm>
#include <set>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "hotspot/metrics.hpp"
#include "hotspot/rng.hpp"
#include "oracles.hpp"

using namespace hotspot;
using namespace hotspot::metrics;
using test_util::code_of;

namespace {

// Average precision by brute force over distinct thresholds.
double ap_oracle(const std::vector<int>& y, const std::vector<double>& s) {
  std::set<double, std::greater<>> thresholds(s.begin(), s.end());
  double positives = 0;
  for (int v : y) positives += v;
  double prev_recall = 0, area = 0;
  for (double t : thresholds) {
    double tp = 0, fp = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (s[i] >= t) (y[i] ? tp : fp) += 1;
    }
    const double recall = tp / positives;
    area += (recall - prev_recall) * tp / (tp + fp);
    prev_recall = recall;
  }
  return area;
}

}  // namespace

TEST_CASE("confusion examples") {
  const std::vector<int> y = {1, 0, 1, 0};
  const std::vector<double> s = {0.9, 0.2, 0.3, 0.6};
  const auto c = confusion(y, s);
  CHECK(c == ConfusionCounts{1, 1, 1, 1});
  const std::vector<double> at = {0.5, 0.49, 0.5, 0.49};
  CHECK(confusion(y, at).tp == 2);
  CHECK(confusion(y, at).fp == 0);
  const std::vector<double> shorter = {0.1};
  CHECK(code_of([&] { confusion(y, shorter); }) == ErrorCode::kLengthMismatch);
  CHECK(code_of([&] { confusion(y, s, 1.5); }) == ErrorCode::kInvalidParams);
}

TEST_CASE("confusion matches brute force") {
  Rng rng(1);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 1 + rng.below(40);
    std::vector<int> y(n);
    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = rng.bernoulli(0.4);
      s[i] = static_cast<double>(rng.below(5)) / 4;
    }
    const double th = static_cast<double>(rng.below(5)) / 4;
    ConfusionCounts want;
    for (std::size_t i = 0; i < n; ++i) {
      const bool p = s[i] >= th;
      if (p && y[i]) ++want.tp;
      if (p && !y[i]) ++want.fp;
      if (!p && !y[i]) ++want.tn;
      if (!p && y[i]) ++want.fn;
    }
    CHECK(confusion(y, s, th) == want);
    CHECK(confusion(y, s, th).total() == n);
  }
}

TEST_CASE("precision recall f1") {
  const auto m = prf1({8, 2, 85, 5});
  CHECK(m.precision == doctest::Approx(0.8));
  CHECK(m.recall == doctest::Approx(8.0 / 13));
  CHECK(m.f1 == doctest::Approx(2 * 0.8 * (8.0 / 13) / (0.8 + 8.0 / 13)));
  const auto zero = prf1({0, 0, 5, 0});
  CHECK(zero.precision == 0);
  CHECK(zero.recall == 0);
  CHECK(zero.f1 == 0);
  const auto perfect = prf1({3, 0, 3, 0});
  CHECK(perfect.f1 == 1);
}

TEST_CASE("f1 lies between min and max of precision and recall") {
  Rng rng(2);
  for (int t = 0; t < 500; ++t) {
    ConfusionCounts c{rng.below(20), rng.below(20), rng.below(20), rng.below(20)};
    const auto m = prf1(c);
    CHECK(m.f1 >= 0);
    CHECK(m.f1 <= 1);
    if (m.precision > 0 && m.recall > 0) {
      CHECK(m.f1 >= std::min(m.precision, m.recall) - 1e-12);
      CHECK(m.f1 <= std::max(m.precision, m.recall) + 1e-12);
    }
  }
}

TEST_CASE("roc curve") {
  const std::vector<int> y = {0, 0, 1, 1};
  const std::vector<double> perfect = {0.1, 0.2, 0.8, 0.9};
  const auto r = roc_curve(y, perfect);
  CHECK(r.area == 1.0);
  CHECK(r.points.front().x == 0);
  CHECK(r.points.front().y == 0);
  CHECK(r.points.back().x == 1);
  CHECK(r.points.back().y == 1);
  const std::vector<double> flat(4, 0.5);
  CHECK(roc_curve(y, flat).area == 0.5);
  const std::vector<int> ones(4, 1);
  CHECK(code_of([&] { roc_curve(ones, flat); }) == ErrorCode::kSingleClassLabels);
}

TEST_CASE("roc area equals the pairwise statistic") {
  Rng rng(3);
  for (int t = 0; t < 300; ++t) {
    const std::size_t n = 2 + rng.below(30);
    std::vector<int> y(n);
    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = i < 1 ? 1 : (i < 2 ? 0 : static_cast<int>(rng.bernoulli(0.5)));
      s[i] = static_cast<double>(rng.below(6));
    }
    const auto r = roc_curve(y, s);
    CHECK(r.area == doctest::Approx(oracle::pairwise_auc(y, s)).epsilon(1e-12));
    for (std::size_t k = 1; k < r.points.size(); ++k) {
      CHECK(r.points[k].x >= r.points[k - 1].x);
      CHECK(r.points[k].y >= r.points[k - 1].y);
    }
    std::vector<double> shifted(n);
    for (std::size_t i = 0; i < n; ++i) shifted[i] = 3 * s[i] + 7;
    CHECK(roc_curve(y, shifted).area == r.area);
  }
}

TEST_CASE("pr curve") {
  const std::vector<int> y = {0, 0, 1, 1};
  const std::vector<double> perfect = {0.1, 0.2, 0.8, 0.9};
  CHECK(pr_curve(y, perfect).area == 1.0);
  const std::vector<double> flat(4, 0.5);
  const auto c = pr_curve(y, flat);
  CHECK(c.points.back().x == 1.0);
  CHECK(c.points.back().y == 0.5);
  const std::vector<int> zeros(4, 0);
  CHECK(code_of([&] { pr_curve(zeros, flat); }) == ErrorCode::kNoPositives);
}

TEST_CASE("pr area matches the brute force average precision") {
  Rng rng(4);
  for (int t = 0; t < 300; ++t) {
    const std::size_t n = 1 + rng.below(25);
    std::vector<int> y(n);
    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = i == 0 ? 1 : static_cast<int>(rng.bernoulli(0.4));
      s[i] = static_cast<double>(rng.below(7)) / 6;
    }
    CHECK(pr_curve(y, s).area == doctest::Approx(ap_oracle(y, s)).epsilon(1e-12));
  }
}

TEST_CASE("weight sweep") {
  const std::vector<int> y = {1, 0, 1, 0};
  auto fn = [](double w) {
    return w < 2 ? std::vector<double>{0.4, 0.1, 0.4, 0.1} : std::vector<double>{0.9, 0.1, 0.9, 0.1};
  };
  const std::vector<double> one = {1};
  const auto single = weight_sweep(fn, y, one);
  CHECK(single.rows.size() == 1);
  CHECK(single.best_weight == 1);
  const std::vector<double> ws = {1, 1, 5, 10};
  const auto sweep = weight_sweep(fn, y, ws);
  REQUIRE(sweep.rows.size() == 4);
  CHECK(sweep.rows[0].f1 == sweep.rows[1].f1);
  CHECK(sweep.best_weight == 5);
  std::ostringstream out;
  write_sweep_csv(out, sweep);
  CHECK(out.str().rfind("weight,precision,recall,f1\n", 0) == 0);
  const std::vector<double> none;
  CHECK(code_of([&] { weight_sweep(fn, y, none); }) == ErrorCode::kInvalidParams);
}
