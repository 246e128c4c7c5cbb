#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "hotspot/schema.hpp"
#include "json.hpp"

namespace hotspot::ingest {

using schema::Plane;
using schema::SchemaRegistry;

/// One signalling (control plane) or user-plane event.
///
/// `values` is indexed by slot, i.e. by the order of
/// `registry.plane_fields(plane)`. Enumerated fields hold their integer code,
/// numeric fields their measurement. A cleared bit in `present` means the cell
/// was missing; the matching value is then meaningless.
struct RawRecord {
  std::string user_id;
  std::int64_t timestamp_ms = 0;
  Plane plane = Plane::kUser;
  std::vector<double> values;
  std::uint64_t present = 0;

  bool has(std::size_t slot) const noexcept { return (present >> slot) & 1U; }
  void set(std::size_t slot, double value) {
    values[slot] = value;
    present |= std::uint64_t{1} << slot;
  }
  void clear(std::size_t slot) noexcept { present &= ~(std::uint64_t{1} << slot); }

  bool operator==(const RawRecord& other) const;
};

/// A record after cleaning: numerics are total and derived fields are filled.
/// `derived[k]` is the domain position of `registry.plane_derived(plane)[k]`,
/// or -1 when either source was missing.
struct CleanRecord : RawRecord {
  std::vector<int> derived;
};

struct ParseError {
  std::size_t line = 0;
  std::string message;
};

struct ParseResult {
  std::vector<RawRecord> records;
  std::vector<ParseError> errors;
};

/// Reads `user_id,timestamp,<fields...>`. Unparseable cells become missing;
/// rows with a wrong cell count or a bad timestamp are reported and skipped.
/// Throws Error(kHeaderMismatch) when user_id/timestamp are absent or a column
/// does not name a field of `plane`.
ParseResult parse_csv(std::istream& in, const SchemaRegistry& registry, Plane plane);

struct IngestReport {
  std::size_t rows_read = 0;
  std::size_t rows_invalid = 0;
  std::size_t rows_erroneous = 0;
  std::size_t rows_duplicate = 0;
  std::size_t rows_kept = 0;
  std::size_t parse_errors = 0;
  std::map<std::string, double> imputation_means;
  std::vector<std::string> all_missing_columns;

  bool reconciles() const noexcept {
    return rows_read == rows_kept + rows_invalid + rows_erroneous + rows_duplicate;
  }
};

struct CheckResult {
  std::vector<RawRecord> kept;
  IngestReport report;
};

/// Drops invalid (enumerated code outside its domain), erroneous (non-finite,
/// or negative where the field demands non-negative) and duplicate records.
/// The first of a set of identical records is kept; order is preserved.
CheckResult consistency_check(std::vector<RawRecord> records, const SchemaRegistry& registry);

struct Imputation {
  std::map<std::string, double> means;
  std::vector<std::string> all_missing;
};

/// Fills missing numeric cells with the column mean over present cells.
/// Columns with no present cell are filled with 0 and listed in `all_missing`.
/// Enumerated cells are left missing.
Imputation impute_numeric(std::vector<RawRecord>& records, const SchemaRegistry& registry);

/// Applies previously computed means (prediction-time data).
void apply_imputation(std::vector<RawRecord>& records, const SchemaRegistry& registry,
                      const Imputation& imputation);

std::vector<CleanRecord> derive_fields(std::vector<RawRecord> records,
                                       const SchemaRegistry& registry);

/// Writes records of one plane in the layout parse_csv reads.
void write_csv(std::ostream& out, std::span<const RawRecord> records,
               const SchemaRegistry& registry, Plane plane);
void write_csv(std::ostream& out, std::span<const CleanRecord> records,
               const SchemaRegistry& registry, Plane plane);

nlohmann::json to_json(const IngestReport& report);
nlohmann::json to_json(const Imputation& imputation);
Imputation imputation_from_json(const nlohmann::json& doc);

}  // namespace hotspot::ingest
