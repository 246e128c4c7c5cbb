#include <algorithm>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "hotspot/synth.hpp"

using namespace hotspot;
using namespace hotspot::synth;
using schema::Plane;
using test_util::code_of;

namespace {

SynthConfig small(std::uint64_t seed = 42) {
  auto c = preset("separable");
  c.n_users = 100;
  c.span_s = 1800;
  c.event_end_s = 1800;
  c.seed = seed;
  return c;
}

std::string csv_of(const std::vector<ingest::RawRecord>& rs, Plane plane) {
  std::ostringstream out;
  ingest::write_csv(out, std::span<const ingest::RawRecord>(rs), schema::default_schema(), plane);
  return out.str();
}

std::size_t slot(std::string_view name) {
  const auto& s = schema::default_schema();
  return s.slot_of(*s.base_index(name));
}

}  // namespace

TEST_CASE("presets") {
  CHECK(preset("separable").affected_fraction == 0.08);
  CHECK(preset("hard").affected_latency_shift_ms < preset("separable").affected_latency_shift_ms);
  CHECK(preset("paper-scale").n_users == 21028);
  CHECK(code_of([] { preset("bogus"); }) == ErrorCode::kUnknownPreset);
  for (const char* name : {"separable", "hard", "paper-scale"}) CHECK_NOTHROW(preset(name).validate());
}

TEST_CASE("config json round trip and preset key") {
  auto c = small(9);
  CHECK(to_json(synth_from_json(to_json(c))) == to_json(c));
  const auto h = synth_from_json(nlohmann::json{{"preset", "hard"}, {"n_users", 5}});
  CHECK(h.n_users == 5);
  CHECK(h.affected_latency_shift_ms == preset("hard").affected_latency_shift_ms);
  CHECK(code_of([] { synth_from_json(nlohmann::json{{"n_users", "many"}}); }) == ErrorCode::kInvalidConfig);
}

TEST_CASE("invalid configs") {
  auto c = small();
  c.affected_fraction = 1.5;
  CHECK(code_of([&] { c.validate(); }) == ErrorCode::kInvalidConfig);
  c = small();
  c.n_users = 0;
  CHECK(code_of([&] { generate(c); }) == ErrorCode::kInvalidConfig);
  c = small();
  c.event_end_s = c.span_s + 1;
  CHECK(code_of([&] { c.validate(); }) == ErrorCode::kInvalidConfig);
}

TEST_CASE("same seed gives identical output, other seeds differ") {
  const auto a = generate(small(1));
  const auto b = generate(small(1));
  const auto c = generate(small(2));
  CHECK(csv_of(a.cp, Plane::kControl) == csv_of(b.cp, Plane::kControl));
  CHECK(csv_of(a.up, Plane::kUser) == csv_of(b.up, Plane::kUser));
  CHECK(a.labels == b.labels);
  CHECK(csv_of(a.up, Plane::kUser) != csv_of(c.up, Plane::kUser));
}

TEST_CASE("exact affected count and every user labelled") {
  for (double f : {0.0, 0.08, 0.13, 0.5}) {
    auto c = small();
    c.affected_fraction = f;
    c.complaint_fraction = 0.0;
    const auto d = generate(c);
    CHECK(d.labels.size() == 100);
    std::size_t pos = 0;
    for (const auto& [u, l] : d.labels) pos += l;
    CHECK(pos == affected_count(c));
    CHECK(pos == static_cast<std::size_t>(f * 100 + 1e-9));
  }
}

TEST_CASE("records are sorted and pass the consistency check") {
  const auto d = generate(small());
  auto key = [](const ingest::RawRecord& r) { return std::tie(r.timestamp_ms, r.user_id); };
  CHECK(std::is_sorted(d.up.begin(), d.up.end(), [&](const auto& x, const auto& y) { return key(x) < key(y); }));
  const auto& s = schema::default_schema();
  const auto cp = ingest::consistency_check(d.cp, s);
  const auto up = ingest::consistency_check(d.up, s);
  CHECK(cp.report.rows_kept == d.cp.size());
  CHECK(up.report.rows_kept == d.up.size());
}

TEST_CASE("dirty mode injects rejections") {
  auto c = small();
  c.dirty_invalid_rate = 0.02;
  c.dirty_negative_rate = 0.02;
  c.dirty_duplicate_rate = 0.02;
  const auto d = generate(c);
  const auto up = ingest::consistency_check(d.up, schema::default_schema());
  CHECK(up.report.rows_invalid > 0);
  CHECK(up.report.rows_erroneous > 0);
  CHECK(up.report.rows_duplicate > 0);
  CHECK(up.report.reconciles());
}

TEST_CASE("affected users' ack time is shifted by the configured amount") {
  auto c = small(3);
  c.n_users = 500;
  c.affected_fraction = 0.2;
  c.complaint_fraction = 0.0;
  const auto d = generate(c);
  double sum[2] = {0, 0};
  double n[2] = {0, 0};
  const auto s = slot("tcp_link_ack_time");
  for (const auto& r : d.up) {
    const int l = d.labels.at(r.user_id);
    sum[l] += r.values[s];
    n[l] += 1;
  }
  REQUIRE(n[0] > 1000);
  REQUIRE(n[1] > 1000);
  const double diff = sum[1] / n[1] - sum[0] / n[0];
  CHECK(diff == doctest::Approx(c.affected_latency_shift_ms).epsilon(0.1));
}

TEST_CASE("labels csv round trip") {
  const auto d = generate(small());
  std::ostringstream out;
  write_labels_csv(out, d.labels);
  std::istringstream in(out.str());
  CHECK(read_labels_csv(in) == d.labels);
  std::istringstream bad("user,label\n");
  CHECK(code_of([&] { read_labels_csv(bad); }) == ErrorCode::kHeaderMismatch);
}
