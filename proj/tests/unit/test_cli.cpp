#include <sys/wait.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "hotspot/app.hpp"
#include "hotspot/rng.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace hotspot;

namespace {

const fs::path kRoot = fs::absolute("cli_test_work");

int run(const std::string& args) {
  const std::string cmd = std::string(HOTSPOT_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::size_t line_count(const fs::path& p) {
  const auto text = slurp(p);
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

fs::path fresh(const std::string& name) {
  const auto dir = kRoot / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string dirs(const fs::path& d) {
  return "--data-dir " + (d / "data").string() + " --work-dir " + (d / "work").string();
}

// generate, ingest, featurize, train, evaluate on a small separable dataset.
void pipeline(const fs::path& d) {
  const auto g = dirs(d) + " --seed 5";
  REQUIRE(run(g + " generate --preset separable --users 200") == 0);
  REQUIRE(run(g + " ingest") == 0);
  REQUIRE(run(g + " featurize") == 0);
  REQUIRE(run(g + " --iterations 20 train") == 0);
  REQUIRE(run(g + " --iterations 20 evaluate --weights 1,5,10") == 0);
}

}  // namespace

TEST_CASE("configuration errors exit with 2") {
  const auto d = fresh("config");
  CHECK(run(dirs(d) + " generate --affected-fraction 1.5") == 2);
  CHECK(run(dirs(d) + " generate --preset bogus") == 2);
  CHECK(run(dirs(d) + " --no-such-flag generate") == 2);
  CHECK_FALSE(fs::exists(d / "data" / "cp.csv"));
}

TEST_CASE("missing input exits with 3") {
  const auto d = fresh("missing");
  CHECK(run(dirs(d) + " train") == 3);
  CHECK(run(dirs(d) + " ingest") == 3);
}

TEST_CASE("full pipeline is reproducible") {
  const auto a = fresh("pipe_a");
  const auto b = fresh("pipe_b");
  pipeline(a);
  pipeline(b);
  for (const char* f : {"features.csv", "model.json", "eval.json", "importance.csv", "roc.csv"}) {
    CHECK_MESSAGE(slurp(a / "work" / f) == slurp(b / "work" / f), f);
  }
  CHECK(line_count(a / "work" / "weight_sweep.csv") == 4);
  const auto eval = nlohmann::json::parse(slurp(a / "work" / "eval.json"));
  CHECK(eval.at("f1").get<double>() >= 0.0);
  CHECK(eval.at("roc_auc").get<double>() > 0.9);

  REQUIRE(run(dirs(a) + " predict") == 0);
  CHECK(slurp(a / "work" / "predictions.csv").rfind("user_id,window_start,p_affected,flag\n", 0) == 0);
}

TEST_CASE("predicting only normal users flags nobody") {
  const auto d = fresh("normal");
  pipeline(d);
  std::ifstream in(d / "work" / "test_features.csv");
  const auto m = features::read_features_csv(in);
  const auto normal = m.filter([&](std::size_t r) { return m.labels[r] == 0; });
  {
    std::ofstream out(d / "normal.csv");
    features::write_features_csv(out, normal);
  }
  REQUIRE(run(dirs(d) + " predict --input " + (d / "normal.csv").string()) == 0);
  CHECK(line_count(d / "work" / "affected_users.csv") == 1);
}

TEST_CASE("empty predict input") {
  const auto d = fresh("empty");
  pipeline(d);
  { std::ofstream out(d / "empty.csv"); }
  CHECK(run(dirs(d) + " predict --input " + (d / "empty.csv").string()) == 0);
  CHECK(line_count(d / "work" / "predictions.csv") == 1);
  CHECK(line_count(d / "work" / "affected_users.csv") == 1);
}

TEST_CASE("a perfectly separating column gives F1 of 1") {
  const auto d = fresh("perfect");
  fs::create_directories(d / "work");
  features::FeatureMatrix m;
  m.columns = {"x", "noise"};
  Rng rng(8);
  for (int u = 0; u < 400; ++u) {
    const int y = u % 4 == 0 ? 1 : 0;
    const std::vector<double> row = {static_cast<double>(y), rng.uniform()};
    m.append({"u" + std::to_string(u), 0}, row, y);
  }
  {
    std::ofstream out(d / "work" / "features.csv");
    features::write_features_csv(out, m);
  }
  REQUIRE(run(dirs(d) + " --iterations 30 train") == 0);
  REQUIRE(run(dirs(d) + " --iterations 30 evaluate") == 0);
  const auto eval = nlohmann::json::parse(slurp(d / "work" / "eval.json"));
  CHECK(eval.at("f1").get<double>() == 1.0);
  CHECK(eval.at("roc_auc").get<double>() == 1.0);
  const auto imp = slurp(d / "work" / "importance.csv");
  CHECK(imp.find("\n1,x,") != std::string::npos);
}

TEST_CASE("user split keeps users whole and honours the ratio") {
  features::FeatureMatrix m;
  m.columns = {"x"};
  for (int u = 0; u < 1000; ++u) {
    for (int w = 0; w < 3; ++w) {
      const std::vector<double> row = {1.0};
      m.append({"user" + std::to_string(u), w * 300000}, row, u % 10 == 0);
    }
  }
  const auto s = app::split_by_user(m, 0.7, 0.15, 7);
  auto users = [](const features::FeatureMatrix& x) {
    std::set<std::string> out;
    for (const auto& k : x.keys) out.insert(k.user_id);
    return out;
  };
  const auto tr = users(s.train), va = users(s.valid), te = users(s.test);
  CHECK(s.train.rows() + s.valid.rows() + s.test.rows() == m.rows());
  const double share = static_cast<double>(tr.size() + va.size()) / 1000;
  CHECK(std::fabs(share - 0.7) <= 0.02);
  for (const auto& u : te) {
    CHECK(tr.count(u) == 0);
    CHECK(va.count(u) == 0);
  }
  for (const auto& u : va) CHECK(tr.count(u) == 0);
  const auto again = app::split_by_user(m, 0.7, 0.15, 7);
  CHECK(again.test.keys == s.test.keys);
}

TEST_CASE("schema export") {
  const auto d = fresh("schema");
  REQUIRE(run("schema export -o " + (d / "schema.json").string()) == 0);
  const auto doc = nlohmann::json::parse(slurp(d / "schema.json"));
  CHECK(schema::schema_from_json(doc) == schema::default_schema());
}
