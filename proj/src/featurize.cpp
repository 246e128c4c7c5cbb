#include "hotspot/featurize.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include "hotspot/error.hpp"
#include "hotspot/text_io.hpp"

namespace hotspot::features {

using schema::FieldKind;
using schema::FieldSpec;

namespace {

constexpr const char* kStatNames[6] = {"max", "min", "mean", "std", "median", "sum"};

OneHotVector encode(const std::string& name, const std::vector<std::string>& domain,
                    std::optional<std::string_view> code) {
  OneHotVector v{name, std::vector<std::uint8_t>(domain.size(), 0)};
  if (!code) return v;
  auto it = std::find(domain.begin(), domain.end(), *code);
  if (it == domain.end()) {
    throw Error(ErrorCode::kDomainViolation,
                "code '" + std::string(*code) + "' not in domain of '" + name + "'");
  }
  v.bits[static_cast<std::size_t>(it - domain.begin())] = 1;
  return v;
}

std::size_t categorical_width(const SchemaRegistry& registry, Plane plane) {
  std::size_t width = 1;
  for (std::size_t idx : registry.plane_fields(plane)) {
    const FieldSpec& f = registry.base()[idx];
    if (f.kind == FieldKind::kEnumerated) width += f.domain.size();
  }
  for (std::size_t d : registry.plane_derived(plane)) width += registry.derived()[d].domain.size();
  return width;
}

std::size_t numeric_width(const SchemaRegistry& registry, Plane plane) {
  std::size_t n = 0;
  for (std::size_t idx : registry.plane_fields(plane)) {
    if (registry.base()[idx].kind == FieldKind::kNumeric) ++n;
  }
  return 6 * n;
}

// Writes total + code counts into `out` (categorical_width entries).
void categorical_into(const Window& window, const SchemaRegistry& registry, Plane plane,
                      double* out) {
  const auto& members = window.members(plane);
  const auto& fields = registry.plane_fields(plane);
  out[0] = static_cast<double>(members.size());
  std::size_t offset = 1;
  for (std::size_t s = 0; s < fields.size(); ++s) {
    const FieldSpec& f = registry.base()[fields[s]];
    if (f.kind != FieldKind::kEnumerated) continue;
    std::fill(out + offset, out + offset + f.domain.size(), 0.0);
    for (const CleanRecord* r : members) {
      if (!r->has(s)) continue;
      const int pos = registry.domain_index(fields[s], r->values[s]);
      if (pos >= 0) out[offset + static_cast<std::size_t>(pos)] += 1.0;
    }
    offset += f.domain.size();
  }
  const auto& derived = registry.plane_derived(plane);
  for (std::size_t k = 0; k < derived.size(); ++k) {
    const std::size_t width = registry.derived()[derived[k]].domain.size();
    std::fill(out + offset, out + offset + width, 0.0);
    for (const CleanRecord* r : members) {
      if (k < r->derived.size() && r->derived[k] >= 0) {
        out[offset + static_cast<std::size_t>(r->derived[k])] += 1.0;
      }
    }
    offset += width;
  }
}

void numeric_into(const Window& window, const SchemaRegistry& registry, Plane plane, double* out,
                  std::vector<double>& scratch) {
  const auto& members = window.members(plane);
  const auto& fields = registry.plane_fields(plane);
  std::size_t offset = 0;
  for (std::size_t s = 0; s < fields.size(); ++s) {
    if (registry.base()[fields[s]].kind != FieldKind::kNumeric) continue;
    scratch.clear();
    for (const CleanRecord* r : members) {
      if (r->has(s)) scratch.push_back(r->values[s]);
    }
    const SixStats st = six_stats(scratch);
    out[offset + 0] = st.max;
    out[offset + 1] = st.min;
    out[offset + 2] = st.mean;
    out[offset + 3] = st.stddev;
    out[offset + 4] = st.median;
    out[offset + 5] = st.sum;
    offset += 6;
  }
}

std::vector<Window> slice_pointers(std::vector<const CleanRecord*> records, std::int64_t length_s) {
  if (length_s <= 0) throw Error(ErrorCode::kInvalidConfig, "window length must be positive");
  std::stable_sort(records.begin(), records.end(), [&](const CleanRecord* a, const CleanRecord* b) {
    if (a->user_id != b->user_id) return a->user_id < b->user_id;
    const auto wa = window_start_of(a->timestamp_ms, length_s);
    const auto wb = window_start_of(b->timestamp_ms, length_s);
    if (wa != wb) return wa < wb;
    return a->timestamp_ms < b->timestamp_ms;
  });
  std::vector<Window> windows;
  for (const CleanRecord* r : records) {
    const auto start = window_start_of(r->timestamp_ms, length_s);
    if (windows.empty() || windows.back().user_id != r->user_id ||
        windows.back().window_start_ms != start) {
      Window w;
      w.user_id = r->user_id;
      w.window_start_ms = start;
      w.length_s = length_s;
      windows.push_back(std::move(w));
    }
    auto& members = r->plane == Plane::kControl ? windows.back().control : windows.back().user;
    members.push_back(r);
  }
  return windows;
}

bool key_less(const std::string& ua, std::int64_t wa, const std::string& ub, std::int64_t wb) {
  if (ua != ub) return ua < ub;
  return wa < wb;
}

std::vector<std::string> names_of(const std::vector<ColumnInfo>& cols) {
  std::vector<std::string> names;
  names.reserve(cols.size());
  for (const auto& c : cols) names.push_back(c.name);
  return names;
}

}  // namespace

OneHotVector one_hot(const schema::FieldSpec& spec, std::optional<std::string_view> code) {
  if (spec.kind != FieldKind::kEnumerated) {
    throw Error(ErrorCode::kDomainViolation, "'" + spec.name + "' is not enumerated");
  }
  return encode(spec.name, spec.domain, code);
}

OneHotVector one_hot(const schema::DerivedFieldSpec& spec, std::optional<std::string_view> code) {
  return encode(spec.name, spec.domain, code);
}

std::int64_t window_start_of(std::int64_t timestamp_ms, std::int64_t length_s) {
  const std::int64_t len = length_s * 1000;
  std::int64_t q = timestamp_ms / len;
  if (timestamp_ms % len != 0 && timestamp_ms < 0) --q;
  return q * len;
}

std::vector<Window> slice_windows(std::span<const CleanRecord> records, std::int64_t length_s) {
  std::vector<const CleanRecord*> ptrs;
  ptrs.reserve(records.size());
  for (const auto& r : records) ptrs.push_back(&r);
  return slice_pointers(std::move(ptrs), length_s);
}

NamedVector aggregate_categorical(const Window& window, const SchemaRegistry& registry,
                                  Plane plane) {
  const std::size_t width = categorical_width(registry, plane);
  NamedVector out;
  out.values.resize(width);
  categorical_into(window, registry, plane, out.values.data());
  auto cols = plane_columns(registry, plane);
  for (std::size_t i = 0; i < width; ++i) out.names.push_back(cols[i].name);
  return out;
}

SixStats six_stats(std::span<const double> values) {
  SixStats st;
  st.count = values.size();
  if (values.empty()) return st;
  const double n = static_cast<double>(values.size());
  st.max = values[0];
  st.min = values[0];
  for (double v : values) {
    st.sum += v;
    st.max = std::max(st.max, v);
    st.min = std::min(st.min, v);
  }
  st.mean = st.sum / n;
  double ss = 0.0;
  for (double v : values) ss += (v - st.mean) * (v - st.mean);
  st.stddev = std::sqrt(ss / n);
  std::vector<double> sorted(values.begin(), values.end());
  const std::size_t mid = sorted.size() / 2;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(mid), sorted.end());
  const double upper = sorted[mid];
  if (sorted.size() % 2 == 1) {
    st.median = upper;
  } else {
    const double lower = *std::max_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(mid));
    st.median = (lower + upper) / 2.0;
  }
  return st;
}

NamedVector aggregate_numeric(const Window& window, const SchemaRegistry& registry, Plane plane) {
  NamedVector out;
  out.values.resize(numeric_width(registry, plane));
  std::vector<double> scratch;
  numeric_into(window, registry, plane, out.values.data(), scratch);
  auto cols = plane_columns(registry, plane);
  const std::size_t skip = categorical_width(registry, plane);
  for (std::size_t i = 0; i < out.values.size(); ++i) out.names.push_back(cols[skip + i].name);
  return out;
}

std::vector<PlaneRow> aggregate_plane(std::span<const Window> windows,
                                      const SchemaRegistry& registry, Plane plane) {
  const std::size_t cat = categorical_width(registry, plane);
  const std::size_t width = cat + numeric_width(registry, plane);
  std::vector<PlaneRow> rows;
  std::vector<double> scratch;
  for (const Window& w : windows) {
    if (w.members(plane).empty()) continue;
    PlaneRow row{w.user_id, w.window_start_ms, std::vector<double>(width, 0.0)};
    categorical_into(w, registry, plane, row.values.data());
    numeric_into(w, registry, plane, row.values.data() + cat, scratch);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<WindowRow> join_planes(std::span<const PlaneRow> cp_rows,
                                   std::span<const PlaneRow> up_rows, std::size_t cp_width,
                                   std::size_t up_width) {
  std::vector<WindowRow> out;
  out.reserve(std::max(cp_rows.size(), up_rows.size()));
  std::size_t i = 0;
  std::size_t j = 0;
  auto emit = [&](const PlaneRow* cp, const PlaneRow* upr) {
    const PlaneRow* key = cp != nullptr ? cp : upr;
    WindowRow row{key->user_id, key->window_start_ms, std::vector<double>(cp_width + up_width, 0.0), -1};
    if (cp != nullptr) std::copy(cp->values.begin(), cp->values.end(), row.features.begin());
    if (upr != nullptr) {
      std::copy(upr->values.begin(), upr->values.end(),
                row.features.begin() + static_cast<std::ptrdiff_t>(cp_width));
    }
    out.push_back(std::move(row));
  };
  while (i < cp_rows.size() || j < up_rows.size()) {
    if (j == up_rows.size() ||
        (i < cp_rows.size() && key_less(cp_rows[i].user_id, cp_rows[i].window_start_ms,
                                        up_rows[j].user_id, up_rows[j].window_start_ms))) {
      emit(&cp_rows[i++], nullptr);
    } else if (i == cp_rows.size() ||
               key_less(up_rows[j].user_id, up_rows[j].window_start_ms, cp_rows[i].user_id,
                        cp_rows[i].window_start_ms)) {
      emit(nullptr, &up_rows[j++]);
    } else {
      emit(&cp_rows[i++], &up_rows[j++]);
    }
  }
  return out;
}

std::vector<double> diff1(std::span<const double> y) {
  if (y.size() < 2) throw Error(ErrorCode::kTooShort, "first difference needs at least 2 points");
  std::vector<double> d(y.size() - 1);
  for (std::size_t t = 0; t + 1 < y.size(); ++t) d[t] = y[t + 1] - y[t];
  return d;
}

std::vector<double> diff2(std::span<const double> y) {
  if (y.size() < 3) throw Error(ErrorCode::kTooShort, "second difference needs at least 3 points");
  return diff1(diff1(y));
}

Series diff1(const Series& series) { return {series.user_id, series.feature, diff1(series.values)}; }

Series diff2(const Series& series) { return {series.user_id, series.feature, diff2(series.values)}; }

std::vector<ColumnInfo> plane_columns(const SchemaRegistry& registry, Plane plane) {
  const std::string prefix(schema::plane_prefix(plane));
  std::vector<ColumnInfo> cols;
  cols.push_back({prefix + (plane == Plane::kControl ? "_signalling_count" : "_record_count"), plane,
                  "", "total", "", 0});
  const auto& fields = registry.plane_fields(plane);
  for (std::size_t idx : fields) {
    const FieldSpec& f = registry.base()[idx];
    if (f.kind != FieldKind::kEnumerated) continue;
    for (const auto& code : f.domain) {
      cols.push_back({prefix + "_" + f.name + "_" + code, plane, f.name, "count", code, 0});
    }
  }
  for (std::size_t d : registry.plane_derived(plane)) {
    const auto& spec = registry.derived()[d];
    for (const auto& code : spec.domain) {
      const std::string rendered = schema::render_code(code);
      cols.push_back({prefix + "_" + spec.name + "_" + rendered, plane, spec.name, "count", rendered, 0});
    }
  }
  for (std::size_t idx : fields) {
    const FieldSpec& f = registry.base()[idx];
    if (f.kind != FieldKind::kNumeric) continue;
    for (const char* stat : kStatNames) {
      cols.push_back({prefix + "_" + f.name + "_" + stat, plane, f.name, stat, "", 0});
    }
  }
  return cols;
}

std::vector<ColumnInfo> feature_columns(const SchemaRegistry& registry) {
  std::vector<ColumnInfo> base = plane_columns(registry, Plane::kControl);
  auto up = plane_columns(registry, Plane::kUser);
  base.insert(base.end(), up.begin(), up.end());
  std::vector<ColumnInfo> cols = base;
  for (int order : {1, 2}) {
    for (ColumnInfo c : base) {
      c.name += order == 1 ? "_d1" : "_d2";
      c.diff_order = order;
      cols.push_back(std::move(c));
    }
  }
  return cols;
}

void FeatureMatrix::append(RowKey key, std::span<const double> row, int label) {
  if (row.size() != columns.size()) {
    throw Error(ErrorCode::kColumnMismatch, "row width " + std::to_string(row.size()) +
                                                " does not match " + std::to_string(columns.size()));
  }
  keys.push_back(std::move(key));
  values.insert(values.end(), row.begin(), row.end());
  labels.push_back(label);
}

FeatureMatrix build_matrix(std::span<const CleanRecord> cp_records,
                           std::span<const CleanRecord> up_records,
                           const SchemaRegistry& registry, std::int64_t window_s,
                           const LabelMap* labels) {
  std::vector<const CleanRecord*> ptrs;
  ptrs.reserve(cp_records.size() + up_records.size());
  for (const auto& r : cp_records) ptrs.push_back(&r);
  for (const auto& r : up_records) ptrs.push_back(&r);
  const std::vector<Window> windows = slice_pointers(std::move(ptrs), window_s);

  const std::size_t cp_width = categorical_width(registry, Plane::kControl) +
                               numeric_width(registry, Plane::kControl);
  const std::size_t up_width =
      categorical_width(registry, Plane::kUser) + numeric_width(registry, Plane::kUser);
  const std::size_t base_width = cp_width + up_width;
  const std::int64_t window_ms = window_s * 1000;

  FeatureMatrix matrix;
  matrix.columns = names_of(feature_columns(registry));

  std::vector<double> out_row(3 * base_width);
  std::vector<double> series;
  std::size_t begin = 0;
  while (begin < windows.size()) {
    std::size_t end = begin;
    while (end < windows.size() && windows[end].user_id == windows[begin].user_id) ++end;
    const std::string& user = windows[begin].user_id;
    int label = -1;
    if (labels != nullptr) {
      auto it = labels->find(user);
      if (it == labels->end()) throw Error(ErrorCode::kMissingLabel, "no label for user '" + user + "'");
      label = it->second;
    }

    std::span<const Window> user_windows(windows.data() + begin, end - begin);
    const auto cp_rows = aggregate_plane(user_windows, registry, Plane::kControl);
    const auto up_rows = aggregate_plane(user_windows, registry, Plane::kUser);
    const auto rows = join_planes(cp_rows, up_rows, cp_width, up_width);

    const std::int64_t first = rows.front().window_start_ms;
    const auto length = static_cast<std::size_t>((rows.back().window_start_ms - first) / window_ms) + 1;
    std::vector<std::size_t> position(rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) {
      position[k] = static_cast<std::size_t>((rows[k].window_start_ms - first) / window_ms);
    }

    // Level columns, then per-column difference series with empty windows as zeros.
    std::vector<double> d1_cols(rows.size() * base_width, 0.0);
    std::vector<double> d2_cols(rows.size() * base_width, 0.0);
    if (length >= 2) {
      for (std::size_t c = 0; c < base_width; ++c) {
        series.assign(length, 0.0);
        for (std::size_t k = 0; k < rows.size(); ++k) series[position[k]] = rows[k].features[c];
        const auto d1 = diff1(series);
        for (std::size_t k = 0; k < rows.size(); ++k) {
          if (position[k] >= 1) d1_cols[k * base_width + c] = d1[position[k] - 1];
        }
        if (length >= 3) {
          const auto d2 = diff2(series);
          for (std::size_t k = 0; k < rows.size(); ++k) {
            if (position[k] >= 2) d2_cols[k * base_width + c] = d2[position[k] - 2];
          }
        }
      }
    }
    for (std::size_t k = 0; k < rows.size(); ++k) {
      std::copy(rows[k].features.begin(), rows[k].features.end(), out_row.begin());
      std::copy_n(d1_cols.begin() + static_cast<std::ptrdiff_t>(k * base_width), base_width,
                  out_row.begin() + static_cast<std::ptrdiff_t>(base_width));
      std::copy_n(d2_cols.begin() + static_cast<std::ptrdiff_t>(k * base_width), base_width,
                  out_row.begin() + static_cast<std::ptrdiff_t>(2 * base_width));
      matrix.append({user, rows[k].window_start_ms}, out_row, label);
    }
    begin = end;
  }
  return matrix;
}

void write_features_csv(std::ostream& out, const FeatureMatrix& matrix) {
  std::string line = "user_id,window_start";
  for (const auto& c : matrix.columns) {
    line += ',';
    line += c;
  }
  line += ",label\n";
  out << line;
  for (std::size_t r = 0; r < matrix.rows(); ++r) {
    line.clear();
    line += matrix.keys[r].user_id;
    line += ',';
    line += std::to_string(matrix.keys[r].window_start_ms);
    for (double v : matrix.row(r)) {
      line += ',';
      text::append_double(line, v);
    }
    line += ',';
    if (matrix.labels[r] >= 0) line += std::to_string(matrix.labels[r]);
    line += '\n';
    out << line;
  }
}

FeatureMatrix read_features_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kHeaderMismatch, "empty features file");
  const auto header = text::split_line(line);
  if (header.size() < 2 || header[0] != "user_id" || header[1] != "window_start") {
    throw Error(ErrorCode::kHeaderMismatch, "features header must start with user_id,window_start");
  }
  const bool has_label = header.back() == "label";
  const std::size_t first_feature = 2;
  const std::size_t end_feature = header.size() - (has_label ? 1 : 0);
  FeatureMatrix m;
  for (std::size_t c = first_feature; c < end_feature; ++c) m.columns.emplace_back(header[c]);

  std::vector<double> row(m.columns.size());
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = text::split_line(line);
    if (cells.size() != header.size()) {
      throw Error(ErrorCode::kColumnMismatch, "line " + std::to_string(line_no) + ": expected " +
                                                  std::to_string(header.size()) + " cells");
    }
    auto start = text::parse_int(cells[1]);
    if (!start) throw Error(ErrorCode::kNonFiniteInput, "line " + std::to_string(line_no) + ": bad window_start");
    for (std::size_t c = first_feature; c < end_feature; ++c) {
      auto v = text::parse_double(cells[c]);
      if (!v) {
        throw Error(ErrorCode::kNonFiniteInput,
                    "line " + std::to_string(line_no) + ": bad value in column '" + std::string(header[c]) + "'");
      }
      row[c - first_feature] = *v;
    }
    int label = -1;
    if (has_label && !cells.back().empty() && cells.back() != "\r") {
      auto l = text::parse_int(cells.back());
      if (!l || *l < 0) throw Error(ErrorCode::kNonFiniteInput, "line " + std::to_string(line_no) + ": bad label");
      label = static_cast<int>(*l);
    }
    m.append({std::string(cells[0]), *start}, row, label);
  }
  return m;
}

nlohmann::json columns_json(const SchemaRegistry& registry) {
  nlohmann::json cols = nlohmann::json::array();
  for (const auto& c : feature_columns(registry)) {
    cols.push_back({{"name", c.name},
                    {"plane", schema::to_string(c.plane)},
                    {"source", c.source},
                    {"transform", c.transform},
                    {"code", c.code},
                    {"diff_order", c.diff_order}});
  }
  return {{"schema_version", registry.version()}, {"columns", cols}};
}

}  // namespace hotspot::features
