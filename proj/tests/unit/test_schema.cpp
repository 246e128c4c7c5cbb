#include <set>

#include "doctest.h"
#include "hotspot/error.hpp"
#include "hotspot/schema.hpp"
#include "helpers.hpp"

using namespace hotspot;
using namespace hotspot::schema;
using test_util::code_of;

TEST_CASE("default schema has 30 base fields split 6/24 and 9/21") {
  const auto& s = default_schema();
  CHECK(s.base().size() == 30);
  CHECK(s.plane_fields(Plane::kControl).size() == 6);
  CHECK(s.plane_fields(Plane::kUser).size() == 24);
  int enumerated = 0;
  for (const auto& f : s.base()) enumerated += f.kind == FieldKind::kEnumerated;
  CHECK(enumerated == 9);
  CHECK(30 - enumerated == 21);
}

TEST_CASE("default derived pairs expand to 33 one-hot positions") {
  const auto& s = default_schema();
  REQUIRE(s.derived().size() == 3);
  CHECK(s.find_derived("procedure_type_x_procedure_status") != nullptr);
  std::size_t width = 0;
  for (const auto& d : s.derived()) width += d.domain.size();
  CHECK(width == 33);
}

TEST_CASE("names are unique across base and derived fields") {
  const auto& s = default_schema();
  std::set<std::string> names;
  for (const auto& f : s.base()) names.insert(f.name);
  for (const auto& d : s.derived()) names.insert(d.name);
  CHECK(names.size() == s.base().size() + s.derived().size());
}

TEST_CASE("default_schema is stable across calls") {
  CHECK(default_schema() == default_schema());
  CHECK(&default_schema() == &default_schema());
}

TEST_CASE("lookup") {
  const auto& s = default_schema();
  const auto l4 = std::get<const FieldSpec*>(lookup(s, "l4_protocol"));
  CHECK(l4->kind == FieldKind::kEnumerated);
  CHECK(l4->domain == std::vector<std::string>{"1", "2"});
  const auto up = std::get<const FieldSpec*>(lookup(s, "upload_traffic"));
  CHECK(up->kind == FieldKind::kNumeric);
  CHECK(up->unit == "bytes");
  CHECK(std::holds_alternative<const DerivedFieldSpec*>(lookup(s, "procedure_type_x_failure_cause")));
  CHECK(code_of([&] { lookup(s, "nonexistent"); }) == ErrorCode::kUnknownField);
}

TEST_CASE("combined codes") {
  const auto& s = default_schema();
  const auto& pair = *s.find_derived("procedure_type_x_procedure_status");
  CHECK(combined_code(s, pair, "1", "0") == "1|0");
  CHECK(render_code(combined_code(s, pair, "1", "0")) == "10");
  CHECK(code_of([&] { combined_code(s, pair, "9", "0"); }) == ErrorCode::kDomainViolation);
  CHECK(code_of([&] { combined_code(s, pair, "1", "7"); }) == ErrorCode::kDomainViolation);
}

TEST_CASE("combined codes decode back and are injective over every derived domain") {
  const auto& s = default_schema();
  for (const auto& d : s.derived()) {
    std::set<std::string> seen;
    for (const auto& a : s.find_base(d.source_a)->domain) {
      for (const auto& b : s.find_base(d.source_b)->domain) {
        const auto code = combined_code(s, d, a, b);
        CHECK(decode_combined(code) == std::pair{a, b});
        CHECK(seen.insert(code).second);
      }
    }
  }
}

TEST_CASE("separator keeps (1,0) and (10,) apart") {
  CHECK(decode_combined("1|0") != decode_combined("10|"));
}

TEST_CASE("json round trip") {
  const auto& s = default_schema();
  CHECK(schema_from_json(to_json(s)) == s);
}

TEST_CASE("invalid descriptions are rejected") {
  auto field = [](std::string name, FieldKind kind, Plane plane, std::vector<std::string> domain) {
    FieldSpec f;
    f.name = std::move(name);
    f.kind = kind;
    f.plane = plane;
    f.domain = std::move(domain);
    return f;
  };
  const auto e = FieldKind::kEnumerated;
  const auto n = FieldKind::kNumeric;
  const auto cp = Plane::kControl;
  const auto up = Plane::kUser;
  CHECK(code_of([&] { SchemaRegistry({field("x", e, cp, {"1"}), field("x", n, cp, {})}, {}, "t"); }) ==
        ErrorCode::kInvalidSchema);
  CHECK(code_of([&] { SchemaRegistry({field("x", e, cp, {})}, {}, "t"); }) == ErrorCode::kInvalidSchema);
  CHECK(code_of([&] { SchemaRegistry({field("x", e, cp, {"1", "1"})}, {}, "t"); }) ==
        ErrorCode::kInvalidSchema);
  CHECK(code_of([&] { SchemaRegistry({field("x", n, cp, {"1"})}, {}, "t"); }) == ErrorCode::kInvalidSchema);
  CHECK(code_of([&] { SchemaRegistry({field("x", e, cp, {"a"})}, {}, "t"); }) == ErrorCode::kInvalidSchema);
  DerivedFieldSpec cross{"x_y", "x", "y", cp, {"1|1"}};
  CHECK(code_of([&] {
          SchemaRegistry({field("x", e, cp, {"1"}), field("y", e, up, {"1"})}, {cross}, "t");
        }) == ErrorCode::kInvalidSchema);
  DerivedFieldSpec outside{"x_y", "x", "y", cp, {"1|2"}};
  CHECK(code_of([&] {
          SchemaRegistry({field("x", e, cp, {"1"}), field("y", e, cp, {"1"})}, {outside}, "t");
        }) == ErrorCode::kInvalidSchema);
}
