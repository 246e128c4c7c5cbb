#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "hotspot/gbdt.hpp"
#include "hotspot/rng.hpp"

using namespace hotspot;
using namespace hotspot::gbdt;
using test_util::code_of;

namespace {

FeatureMatrix make_matrix(std::vector<std::string> columns, const std::vector<std::vector<double>>& rows,
                          const std::vector<int>& labels) {
  FeatureMatrix m;
  m.columns = std::move(columns);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    m.append({"u" + std::to_string(r), 0}, rows[r], labels[r]);
  }
  return m;
}

TrainParams small_params() {
  TrainParams p;
  p.min_samples_per_leaf = 1;
  p.goss_enabled = false;
  p.positive_class_weight = 1.0;
  p.max_leaves = 8;
  p.max_iterations = 50;
  p.learning_rate = 0.3;
  return p;
}

// Cell (1,1) is doubled: with equal cells every root split has zero gain.
FeatureMatrix xor_matrix() {
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  for (int rep = 0; rep < 10; ++rep) {
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) {
        if (a == 1 && b == 1) {
          rows.push_back({1.0, 1.0});
          labels.push_back(0);
        }
        rows.push_back({static_cast<double>(a), static_cast<double>(b)});
        labels.push_back(a ^ b);
      }
    }
  }
  return make_matrix({"a", "b"}, rows, labels);
}

// Column "signal" carries the label, "noise" is random.
FeatureMatrix planted(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  for (std::size_t i = 0; i < n; ++i) {
    const int y = rng.bernoulli(0.3) ? 1 : 0;
    rows.push_back({rng.uniform(), y + 0.5 * rng.uniform(), 0.0});
    labels.push_back(y);
  }
  return make_matrix({"noise", "signal", "unused"}, rows, labels);
}

}  // namespace

TEST_CASE("softmax") {
  const std::vector<double> zero = {0, 0};
  const auto p = softmax_proba(zero);
  CHECK(p[0] == 0.5);
  CHECK(p[1] == 0.5);
  const std::vector<double> big = {1000, 1000};
  const auto q = softmax_proba(big);
  CHECK(q[0] == 0.5);
  CHECK(std::isfinite(q[1]));
  const std::vector<double> ln3 = {0, std::log(3.0)};
  const auto r = softmax_proba(ln3);
  CHECK(r[0] == doctest::Approx(0.25));
  CHECK(r[1] == doctest::Approx(0.75));
  Rng rng(5);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> s = {rng.normal(0, 50), rng.normal(0, 50), rng.normal(0, 50)};
    const auto pr = softmax_proba(s);
    CHECK(std::accumulate(pr.begin(), pr.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("residuals") {
  LabelMatrix y{2, {1, 0}};
  const std::vector<double> probs = {0.5, 0.5, 0.9, 0.1};
  const auto r = residuals(y, probs);
  CHECK(r[0] == -0.5);
  CHECK(r[1] == 0.5);
  CHECK(r[2] == doctest::Approx(0.1));
  CHECK(r[3] == doctest::Approx(-0.1));
}

TEST_CASE("weighted gradients scale positives") {
  LabelMatrix y{2, {1, 0}};
  const std::vector<double> probs = {0.9, 0.1, 0.9, 0.1};
  const auto g = weighted_gradients(y, probs, 5.0, 1);
  CHECK(g.grad[0] == doctest::Approx(5 * 0.9));
  CHECK(g.grad[1] == doctest::Approx(5 * -0.9));
  CHECK(g.grad[2] == doctest::Approx(-0.1));
  CHECK(g.hess[0] == doctest::Approx(5 * 0.09));
  CHECK(g.hess[2] == doctest::Approx(0.09));
}

TEST_CASE("binning") {
  const auto m = BinMapper::fit({3, 1, 2, 2, 1}, 255);
  CHECK(m.num_bins() == 3);
  CHECK(m.bin(1) == 0);
  CHECK(m.bin(2) == 1);
  CHECK(m.bin(3) == 2);
  const auto c = BinMapper::fit({4, 4, 4}, 255);
  CHECK(c.num_bins() == 1);
  Rng rng(3);
  std::vector<double> v;
  for (int i = 0; i < 5000; ++i) v.push_back(rng.normal(0, 1));
  const auto q = BinMapper::fit(v, 16);
  CHECK(q.num_bins() <= 16);
  std::sort(v.begin(), v.end());
  for (std::size_t i = 1; i < v.size(); ++i) CHECK(q.bin(v[i - 1]) <= q.bin(v[i]));
}

TEST_CASE("constant feature is never split") {
  auto m = make_matrix({"c", "x"}, {{1, 0}, {1, 1}, {1, 0}, {1, 1}}, {0, 1, 0, 1});
  const auto e = train(m, small_params());
  for (const auto& t : e.trees) {
    for (const auto& n : t.nodes) CHECK(n.feature != 0);
  }
}

TEST_CASE("goss with a = 1 keeps everything") {
  const std::vector<double> g = {0.3, 0.1, 0.9, 0.2};
  const auto ctx = goss_sample(g, 1.0, 0.0, 1);
  CHECK(ctx.top.size() == 4);
  CHECK(ctx.sampled.empty());
  CHECK(ctx.used.size() == 4);
}

TEST_CASE("goss set sizes and amplification") {
  std::vector<double> g(10);
  for (int i = 0; i < 10; ++i) g[i] = i;
  const auto ctx = goss_sample(g, 0.2, 0.1, 9);
  CHECK(ctx.top == std::vector<std::size_t>{8, 9});
  CHECK(ctx.sampled.size() == 1);
  CHECK(ctx.amplification == doctest::Approx(8.0));
  CHECK(ctx.weights[ctx.sampled[0]] == doctest::Approx(8.0));
  CHECK(std::find(ctx.top.begin(), ctx.top.end(), ctx.sampled[0]) == ctx.top.end());
}

TEST_CASE("goss ties go to lower indices") {
  const std::vector<double> g(10, 1.0);
  const auto ctx = goss_sample(g, 0.5, 0.1, 1);
  CHECK(ctx.top == std::vector<std::size_t>{0, 1, 2, 3, 4});
}

TEST_CASE("goss sample is seeded") {
  Rng rng(11);
  std::vector<double> g(200);
  for (auto& x : g) x = rng.uniform();
  CHECK(goss_sample(g, 0.2, 0.1, 4).sampled == goss_sample(g, 0.2, 0.1, 4).sampled);
  CHECK(goss_sample(g, 0.2, 0.1, 4).sampled != goss_sample(g, 0.2, 0.1, 5).sampled);
}

TEST_CASE("split gain") {
  const auto ctx = full_sample(2);
  const std::vector<double> g = {1.0, -1.0};
  const std::vector<std::uint16_t> bins = {0, 1};
  CHECK(split_gain(ctx, g, bins, 0, 1) == doctest::Approx(1.0));
  CHECK(code_of([&] { split_gain(ctx, g, bins, 1, 1); }) == ErrorCode::kDegenerateSplit);
  CHECK(code_of([&] { split_gain(ctx, g, bins, 0, 2); }) == ErrorCode::kDegenerateSplit);
}

TEST_CASE("exclusive features share one bundle") {
  std::vector<std::vector<std::uint16_t>> binned = {{1, 0, 0, 2}, {0, 1, 2, 0}};
  const std::vector<std::size_t> nb = {3, 3};
  const auto set = efb_bundle(binned, nb, 0.0);
  REQUIRE(set.bundles.size() == 1);
  for (std::size_t f = 0; f < 2; ++f) {
    for (std::size_t i = 0; i < 4; ++i) CHECK(set.feature_bin(f, i) == binned[f][i]);
  }
  for (std::size_t i = 0; i < 4; ++i) {
    const auto cell = unbundle(set.bundles[0], set.columns[0][i]);
    if (binned[0][i] == 0 && binned[1][i] == 0) {
      CHECK_FALSE(cell.has_value());
    } else {
      REQUIRE(cell.has_value());
      CHECK(binned[cell->first][i] == cell->second);
    }
  }
}

TEST_CASE("overlapping features stay apart with a zero budget") {
  std::vector<std::vector<std::uint16_t>> binned = {{1, 1, 0}, {1, 0, 1}};
  const std::vector<std::size_t> nb = {2, 2};
  CHECK(efb_bundle(binned, nb, 0.0).bundles.size() == 2);
  CHECK(efb_bundle(binned, nb, 0.5).bundles.size() == 1);
}

TEST_CASE("training loss decreases on separable data") {
  auto m = make_matrix({"x"}, {{0}, {1}, {2}, {3}}, {0, 0, 1, 1});
  auto p = small_params();
  p.max_iterations = 20;
  std::vector<IterationLog> log;
  train(m, p, nullptr, &log);
  REQUIRE(log.size() >= 2);
  for (std::size_t i = 1; i < log.size(); ++i) CHECK(log[i].train_loss < log[i - 1].train_loss);
}

TEST_CASE("xor is learned") {
  const auto m = xor_matrix();
  const auto e = train(m, small_params());
  const auto p = predict(e, m);
  for (std::size_t r = 0; r < m.rows(); ++r) CHECK((p.at(r, 1) > 0.5) == (m.labels[r] == 1));
}

TEST_CASE("tree structure") {
  const auto m = planted(2000, 1);
  auto p = small_params();
  p.max_leaves = 5;
  p.max_iterations = 10;
  const auto e = train(m, p);
  for (const auto& t : e.trees) {
    CHECK(t.num_leaves() <= 5);
    for (const auto& n : t.nodes) {
      if (!n.is_leaf()) CHECK(n.gain > 0.0);
    }
  }
}

TEST_CASE("empty ensemble predicts uniform") {
  const auto m = planted(100, 2);
  auto p = small_params();
  p.max_iterations = 0;
  const auto e = train(m, p);
  CHECK(e.trees.empty());
  const auto pr = predict(e, m);
  for (double v : pr.values) CHECK(v == 0.5);
}

TEST_CASE("prediction is matched by column name") {
  const auto m = planted(500, 3);
  const auto e = train(m, small_params());
  FeatureMatrix permuted;
  permuted.columns = {"unused", "signal", "noise"};
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const std::vector<double> row = {m.at(r, 2), m.at(r, 1), m.at(r, 0)};
    permuted.append(m.keys[r], row, m.labels[r]);
  }
  CHECK(predict(e, m).values == predict(e, permuted).values);
  FeatureMatrix missing;
  missing.columns = {"signal", "noise"};
  CHECK(code_of([&] { predict(e, missing); }) == ErrorCode::kColumnMismatch);
}

TEST_CASE("input errors") {
  auto one = make_matrix({"x"}, {{0}, {1}}, {1, 1});
  CHECK(code_of([&] { train(one, small_params()); }) == ErrorCode::kSingleClassData);
  auto nan = make_matrix({"x"}, {{0}, {std::nan("")}}, {0, 1});
  CHECK(code_of([&] { train(nan, small_params()); }) == ErrorCode::kNonFiniteInput);
  auto bad = small_params();
  bad.learning_rate = 0;
  CHECK(code_of([&] { bad.validate(); }) == ErrorCode::kInvalidParams);
  bad = small_params();
  bad.max_leaves = 1;
  CHECK(code_of([&] { bad.validate(); }) == ErrorCode::kInvalidParams);
  bad = small_params();
  bad.goss_enabled = true;
  bad.goss_a = 0.7;
  bad.goss_b = 0.5;
  CHECK(code_of([&] { bad.validate(); }) == ErrorCode::kInvalidParams);
}

TEST_CASE("model json round trip") {
  const auto m = planted(800, 4);
  auto p = small_params();
  p.goss_enabled = true;
  p.efb_enabled = true;
  const auto e = train(m, p);
  const auto back = ensemble_from_json(nlohmann::json::parse(to_json(e).dump()));
  CHECK(predict(back, m).values == predict(e, m).values);
  CHECK(to_json(back) == to_json(e));
  CHECK(code_of([&] { ensemble_from_json(nlohmann::json{{"format", "other"}}); }) == ErrorCode::kBadModel);
}

TEST_CASE("training is deterministic") {
  const auto m = planted(800, 5);
  auto p = small_params();
  p.goss_enabled = true;
  CHECK(to_json(train(m, p)) == to_json(train(m, p)));
}

TEST_CASE("importance ranks the planted column first") {
  const auto m = planted(1000, 6);
  // Gains are per-sample, so one-sample leaves would inflate noise splits.
  auto p = small_params();
  p.min_samples_per_leaf = 20;
  const auto e = train(m, p);
  const auto imp = feature_importance(e);
  REQUIRE(imp.size() == 3);
  CHECK(imp[0].column == "signal");
  CHECK(imp.back().column == "unused");
  CHECK(imp.back().gain == 0.0);
  CHECK(imp.back().splits == 0);
}

TEST_CASE("probabilities sum to one") {
  const auto m = planted(300, 7);
  const auto pr = predict(train(m, small_params()), m);
  for (std::size_t r = 0; r < pr.rows; ++r) CHECK(pr.at(r, 0) + pr.at(r, 1) == doctest::Approx(1.0));
}
