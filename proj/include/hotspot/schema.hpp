#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"

namespace hotspot::schema {

enum class FieldKind { kEnumerated, kNumeric };
enum class Plane { kControl, kUser };

std::string_view to_string(FieldKind kind);
std::string_view to_string(Plane plane);
/// Short column prefix used in feature names ("cp" / "up").
std::string_view plane_prefix(Plane plane);

/// One base field of a signalling record.
struct FieldSpec {
  std::string name;
  FieldKind kind = FieldKind::kNumeric;
  Plane plane = Plane::kUser;
  /// Admissible codes in one-hot order (enumerated fields only). Codes are
  /// non-negative integer literals.
  std::vector<std::string> domain;
  /// Free-text unit (numeric fields only).
  std::string unit;
  /// Numeric values below zero are erroneous when set.
  bool non_negative = true;

  bool operator==(const FieldSpec&) const = default;
};

/// A field formed by concatenating two enumerated fields of the same plane.
struct DerivedFieldSpec {
  std::string name;
  std::string source_a;
  std::string source_b;
  Plane plane = Plane::kControl;
  /// Admissible combined codes ("a|b") in one-hot order.
  std::vector<std::string> domain;

  bool operator==(const DerivedFieldSpec&) const = default;
};

inline constexpr char kCodeSeparator = '|';

/// Immutable registry of base and derived fields. Construction validates every
/// invariant; an invalid description throws Error(kInvalidSchema).
class SchemaRegistry {
 public:
  SchemaRegistry(std::vector<FieldSpec> base, std::vector<DerivedFieldSpec> derived,
                 std::string version);

  const std::vector<FieldSpec>& base() const noexcept { return base_; }
  const std::vector<DerivedFieldSpec>& derived() const noexcept { return derived_; }
  const std::string& version() const noexcept { return version_; }

  /// Indices into base() of the fields that belong to `plane`, in schema order.
  /// Record values are stored in this order ("slots").
  const std::vector<std::size_t>& plane_fields(Plane plane) const noexcept;
  /// Indices into derived() of the derived fields of `plane`, in schema order.
  const std::vector<std::size_t>& plane_derived(Plane plane) const noexcept;

  const FieldSpec* find_base(std::string_view name) const noexcept;
  const DerivedFieldSpec* find_derived(std::string_view name) const noexcept;
  std::optional<std::size_t> base_index(std::string_view name) const noexcept;

  /// Slot of a base field within its plane's value vector.
  std::size_t slot_of(std::size_t base_index) const noexcept { return slot_[base_index]; }

  /// Position of an integer code in the domain of base field `base_index`,
  /// or -1 when the code is not admissible.
  int domain_index(std::size_t base_index, double code) const noexcept;

  bool operator==(const SchemaRegistry& other) const {
    return base_ == other.base_ && derived_ == other.derived_ && version_ == other.version_;
  }

 private:
  std::vector<FieldSpec> base_;
  std::vector<DerivedFieldSpec> derived_;
  std::string version_;
  std::vector<std::size_t> plane_fields_[2];
  std::vector<std::size_t> plane_derived_[2];
  std::vector<std::size_t> slot_;
  std::vector<std::vector<std::int64_t>> codes_;
};

using FieldRef = std::variant<const FieldSpec*, const DerivedFieldSpec*>;

/// The shipped 30-field registry (6 control-plane, 24 user-plane fields) with
/// three derived control-plane pairs.
const SchemaRegistry& default_schema();

/// Throws Error(kUnknownField) when `name` is neither a base nor a derived field.
FieldRef lookup(const SchemaRegistry& registry, std::string_view name);

/// Joins two source codes into a derived code ("1", "0") -> "1|0".
/// Throws Error(kDomainViolation) if either code (or the pair) is not admissible.
std::string combined_code(const SchemaRegistry& registry, const DerivedFieldSpec& spec,
                          std::string_view code_a, std::string_view code_b);

std::pair<std::string, std::string> decode_combined(std::string_view code);

/// Report rendering of a code: the separator is dropped ("1|0" -> "10").
std::string render_code(std::string_view code);

nlohmann::json to_json(const SchemaRegistry& registry);
SchemaRegistry schema_from_json(const nlohmann::json& doc);

}  // namespace hotspot::schema
