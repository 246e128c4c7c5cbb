#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hotspot/ingest.hpp"
#include "hotspot/schema.hpp"
#include "json.hpp"

namespace hotspot::features {

using ingest::CleanRecord;
using schema::Plane;
using schema::SchemaRegistry;

inline constexpr std::int64_t kDefaultWindowSeconds = 300;

struct OneHotVector {
  std::string field;
  std::vector<std::uint8_t> bits;
};

/// Position of `code` in the field's domain set to 1; std::nullopt encodes a
/// missing value as all zeros. Throws Error(kDomainViolation) for unknown codes.
OneHotVector one_hot(const schema::FieldSpec& spec, std::optional<std::string_view> code);
OneHotVector one_hot(const schema::DerivedFieldSpec& spec, std::optional<std::string_view> code);

/// A tumbling, epoch-aligned slice of one user's records.
struct Window {
  std::string user_id;
  std::int64_t window_start_ms = 0;
  std::int64_t length_s = kDefaultWindowSeconds;
  std::vector<const CleanRecord*> control;
  std::vector<const CleanRecord*> user;

  const std::vector<const CleanRecord*>& members(Plane plane) const {
    return plane == Plane::kControl ? control : user;
  }
};

std::int64_t window_start_of(std::int64_t timestamp_ms, std::int64_t length_s);

/// Groups records by (user_id, window_start), sorted by that key. Windows
/// without records are not produced. The returned windows point into `records`.
std::vector<Window> slice_windows(std::span<const CleanRecord> records, std::int64_t length_s);

struct NamedVector {
  std::vector<std::string> names;
  std::vector<double> values;
};

/// Plane record total followed by per-code counts of every enumerated and
/// derived field of `plane` (the sum of the members' one-hot vectors).
NamedVector aggregate_categorical(const Window& window, const SchemaRegistry& registry, Plane plane);

struct SixStats {
  double max = 0.0;
  double min = 0.0;
  double mean = 0.0;
  double stddev = 0.0;  // population
  double median = 0.0;
  double sum = 0.0;
  std::size_t count = 0;
};

/// All six statistics are 0 for an empty input.
SixStats six_stats(std::span<const double> values);

/// max, min, mean, std, median, sum for every numeric field of `plane`.
NamedVector aggregate_numeric(const Window& window, const SchemaRegistry& registry, Plane plane);

/// Aggregates of one plane for one (user, window) key.
struct PlaneRow {
  std::string user_id;
  std::int64_t window_start_ms = 0;
  std::vector<double> values;
};

/// Rows for the windows in which `plane` has at least one record.
std::vector<PlaneRow> aggregate_plane(std::span<const Window> windows,
                                      const SchemaRegistry& registry, Plane plane);

struct WindowRow {
  std::string user_id;
  std::int64_t window_start_ms = 0;
  std::vector<double> features;
  int label = -1;
};

/// Full outer join on (user_id, window_start). An absent side contributes
/// zeros of the given width. Inputs must be sorted by key; output is sorted.
std::vector<WindowRow> join_planes(std::span<const PlaneRow> cp_rows,
                                   std::span<const PlaneRow> up_rows, std::size_t cp_width,
                                   std::size_t up_width);

struct Series {
  std::string user_id;
  std::string feature;
  std::vector<double> values;
};

/// y(t+1) - y(t). Throws Error(kTooShort) below two points.
std::vector<double> diff1(std::span<const double> y);
/// diff1(diff1(y)). Throws Error(kTooShort) below three points.
std::vector<double> diff2(std::span<const double> y);
Series diff1(const Series& series);
Series diff2(const Series& series);

/// Describes where a feature column comes from.
struct ColumnInfo {
  std::string name;
  Plane plane = Plane::kUser;
  std::string source;     // field name, or "" for plane totals
  std::string transform;  // "total", "count", "max", "min", "mean", "std", "median", "sum"
  std::string code;       // rendered code for "count" columns
  int diff_order = 0;     // 0 = level, 1 = first difference, 2 = second difference
};

/// Column layout produced by build_matrix: base columns (control plane block,
/// then user plane block; each block is total, code counts, statistics), then
/// the same names with _d1, then with _d2.
std::vector<ColumnInfo> feature_columns(const SchemaRegistry& registry);
std::vector<ColumnInfo> plane_columns(const SchemaRegistry& registry, Plane plane);

struct RowKey {
  std::string user_id;
  std::int64_t window_start_ms = 0;

  bool operator==(const RowKey&) const = default;
};

/// Dense row-major matrix of window features. `labels[r]` is 0/1, or -1 when
/// unknown.
struct FeatureMatrix {
  std::vector<std::string> columns;
  std::vector<RowKey> keys;
  std::vector<double> values;
  std::vector<int> labels;

  std::size_t rows() const noexcept { return keys.size(); }
  std::size_t cols() const noexcept { return columns.size(); }
  std::span<const double> row(std::size_t r) const {
    return {values.data() + r * columns.size(), columns.size()};
  }
  double at(std::size_t r, std::size_t c) const { return values[r * columns.size() + c]; }
  void append(RowKey key, std::span<const double> row, int label);
  /// Rows whose index satisfies `keep`, in order.
  template <typename Pred>
  FeatureMatrix filter(Pred keep) const {
    FeatureMatrix out;
    out.columns = columns;
    for (std::size_t r = 0; r < rows(); ++r) {
      if (keep(r)) out.append(keys[r], row(r), labels[r]);
    }
    return out;
  }
};

using LabelMap = std::map<std::string, int, std::less<>>;

/// Per-(user, window) features: counts and statistics for both planes, plus
/// backward first and second differences of every base column along the
/// user's consecutive windows. Windows with no records between a user's first
/// and last window count as all-zero for differencing but produce no row.
/// With `labels`, every user must be present (Error(kMissingLabel)).
FeatureMatrix build_matrix(std::span<const CleanRecord> cp_records,
                           std::span<const CleanRecord> up_records,
                           const SchemaRegistry& registry, std::int64_t window_s,
                           const LabelMap* labels);

void write_features_csv(std::ostream& out, const FeatureMatrix& matrix);
/// Reads the write_features_csv layout; the label column is optional and an
/// empty label cell means unknown.
FeatureMatrix read_features_csv(std::istream& in);

nlohmann::json columns_json(const SchemaRegistry& registry);

}  // namespace hotspot::features
