#include "hotspot/ingest.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <istream>
#include <ostream>
#include <unordered_map>

#include "hotspot/error.hpp"
#include "hotspot/text_io.hpp"

namespace hotspot::ingest {

using schema::FieldKind;
using schema::FieldSpec;

bool RawRecord::operator==(const RawRecord& other) const {
  if (user_id != other.user_id || timestamp_ms != other.timestamp_ms || plane != other.plane ||
      present != other.present || values.size() != other.values.size()) {
    return false;
  }
  for (std::size_t s = 0; s < values.size(); ++s) {
    if (has(s) && std::bit_cast<std::uint64_t>(values[s]) !=
                      std::bit_cast<std::uint64_t>(other.values[s])) {
      return false;
    }
  }
  return true;
}

namespace {

std::uint64_t record_hash(const RawRecord& r) {
  std::uint64_t h = text::fnv1a(r.user_id);
  auto mix = [&h](std::uint64_t v) {
    h ^= v + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
  };
  mix(static_cast<std::uint64_t>(r.timestamp_ms));
  mix(static_cast<std::uint64_t>(r.plane));
  mix(r.present);
  for (std::size_t s = 0; s < r.values.size(); ++s) {
    if (r.has(s)) mix(std::bit_cast<std::uint64_t>(r.values[s]));
  }
  return h;
}

template <typename Record>
void write_records(std::ostream& out, std::span<const Record> records,
                   const SchemaRegistry& registry, Plane plane) {
  const auto& fields = registry.plane_fields(plane);
  std::string line = "user_id,timestamp";
  for (std::size_t idx : fields) line += "," + registry.base()[idx].name;
  line += '\n';
  out << line;
  for (const Record& r : records) {
    if (r.plane != plane) continue;
    line.clear();
    line += r.user_id;
    line += ',';
    line += std::to_string(r.timestamp_ms);
    for (std::size_t s = 0; s < fields.size(); ++s) {
      line += ',';
      if (!r.has(s)) continue;
      if (registry.base()[fields[s]].kind == FieldKind::kEnumerated) {
        line += std::to_string(static_cast<std::int64_t>(r.values[s]));
      } else {
        text::append_double(line, r.values[s]);
      }
    }
    line += '\n';
    out << line;
  }
}

}  // namespace

ParseResult parse_csv(std::istream& in, const SchemaRegistry& registry, Plane plane) {
  ParseResult result;
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorCode::kHeaderMismatch, "missing header row");
  }
  const auto header = text::split_line(line);
  if (header.size() < 2 || header[0] != "user_id" || header[1] != "timestamp") {
    throw Error(ErrorCode::kHeaderMismatch, "header must start with user_id,timestamp");
  }
  const auto& fields = registry.plane_fields(plane);
  // column -> slot
  std::vector<std::size_t> slot_of_column;
  std::vector<bool> seen(fields.size(), false);
  for (std::size_t c = 2; c < header.size(); ++c) {
    auto idx = registry.base_index(header[c]);
    if (!idx || registry.base()[*idx].plane != plane) {
      throw Error(ErrorCode::kHeaderMismatch, "column '" + std::string(header[c]) +
                                                  "' is not a " +
                                                  std::string(schema::to_string(plane)) +
                                                  "-plane field");
    }
    const std::size_t slot = registry.slot_of(*idx);
    if (seen[slot]) {
      throw Error(ErrorCode::kHeaderMismatch, "duplicate column '" + std::string(header[c]) + "'");
    }
    seen[slot] = true;
    slot_of_column.push_back(slot);
  }

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = text::split_line(line);
    if (cells.size() != header.size()) {
      result.errors.push_back({line_no, "expected " + std::to_string(header.size()) +
                                            " cells, found " + std::to_string(cells.size())});
      continue;
    }
    if (cells[0].empty()) {
      result.errors.push_back({line_no, "empty user_id"});
      continue;
    }
    auto ts = text::parse_int(cells[1]);
    if (!ts) {
      result.errors.push_back({line_no, "bad timestamp '" + std::string(cells[1]) + "'"});
      continue;
    }
    RawRecord r;
    r.user_id = std::string(cells[0]);
    r.timestamp_ms = *ts;
    r.plane = plane;
    r.values.assign(fields.size(), 0.0);
    for (std::size_t c = 2; c < cells.size(); ++c) {
      const std::size_t slot = slot_of_column[c - 2];
      const FieldSpec& spec = registry.base()[fields[slot]];
      if (spec.kind == FieldKind::kEnumerated) {
        if (auto code = text::parse_int(cells[c])) r.set(slot, static_cast<double>(*code));
      } else if (auto v = text::parse_double(cells[c])) {
        r.set(slot, *v);
      }
    }
    result.records.push_back(std::move(r));
  }
  return result;
}

CheckResult consistency_check(std::vector<RawRecord> records, const SchemaRegistry& registry) {
  CheckResult result;
  IngestReport& report = result.report;
  report.rows_read = records.size();
  std::unordered_multimap<std::uint64_t, std::size_t> seen;  // hash -> index in kept
  seen.reserve(records.size());

  for (RawRecord& r : records) {
    const auto& fields = registry.plane_fields(r.plane);
    bool invalid = false;
    bool erroneous = false;
    for (std::size_t s = 0; s < fields.size() && !invalid; ++s) {
      if (!r.has(s)) continue;
      const FieldSpec& spec = registry.base()[fields[s]];
      const double v = r.values[s];
      if (spec.kind == FieldKind::kEnumerated) {
        if (registry.domain_index(fields[s], v) < 0) invalid = true;
      } else if (!std::isfinite(v) || (spec.non_negative && v < 0.0)) {
        erroneous = true;
      }
    }
    if (invalid) {
      ++report.rows_invalid;
      continue;
    }
    if (erroneous) {
      ++report.rows_erroneous;
      continue;
    }
    const std::uint64_t h = record_hash(r);
    bool duplicate = false;
    auto [lo, hi] = seen.equal_range(h);
    for (auto it = lo; it != hi; ++it) {
      if (result.kept[it->second] == r) {
        duplicate = true;
        break;
      }
    }
    if (duplicate) {
      ++report.rows_duplicate;
      continue;
    }
    seen.emplace(h, result.kept.size());
    result.kept.push_back(std::move(r));
  }
  report.rows_kept = result.kept.size();
  return result;
}

Imputation impute_numeric(std::vector<RawRecord>& records, const SchemaRegistry& registry) {
  Imputation imputation;
  const auto& base = registry.base();
  std::vector<double> sums(base.size(), 0.0);
  std::vector<std::size_t> counts(base.size(), 0);
  for (const RawRecord& r : records) {
    const auto& fields = registry.plane_fields(r.plane);
    for (std::size_t s = 0; s < fields.size(); ++s) {
      if (r.has(s) && base[fields[s]].kind == FieldKind::kNumeric) {
        sums[fields[s]] += r.values[s];
        ++counts[fields[s]];
      }
    }
  }
  for (std::size_t i = 0; i < base.size(); ++i) {
    if (base[i].kind != FieldKind::kNumeric) continue;
    if (counts[i] == 0) {
      imputation.means[base[i].name] = 0.0;
      imputation.all_missing.push_back(base[i].name);
    } else {
      imputation.means[base[i].name] = sums[i] / static_cast<double>(counts[i]);
    }
  }
  apply_imputation(records, registry, imputation);
  return imputation;
}

void apply_imputation(std::vector<RawRecord>& records, const SchemaRegistry& registry,
                      const Imputation& imputation) {
  const auto& base = registry.base();
  std::vector<double> fill(base.size(), 0.0);
  for (std::size_t i = 0; i < base.size(); ++i) {
    if (base[i].kind != FieldKind::kNumeric) continue;
    auto it = imputation.means.find(base[i].name);
    fill[i] = it == imputation.means.end() ? 0.0 : it->second;
  }
  for (RawRecord& r : records) {
    const auto& fields = registry.plane_fields(r.plane);
    for (std::size_t s = 0; s < fields.size(); ++s) {
      if (!r.has(s) && base[fields[s]].kind == FieldKind::kNumeric) r.set(s, fill[fields[s]]);
    }
  }
}

std::vector<CleanRecord> derive_fields(std::vector<RawRecord> records,
                                       const SchemaRegistry& registry) {
  // Resolve every derived field to (slot_a, slot_b, base_a, base_b) once.
  struct Sources {
    std::size_t slot_a, slot_b, base_a, base_b, width_b;
    std::vector<int> pair_to_code;  // pos_a * width_b + pos_b -> derived domain position
  };
  std::vector<Sources> sources[2];
  for (Plane plane : {Plane::kControl, Plane::kUser}) {
    for (std::size_t d : registry.plane_derived(plane)) {
      const auto& spec = registry.derived()[d];
      const std::size_t a = *registry.base_index(spec.source_a);
      const std::size_t b = *registry.base_index(spec.source_b);
      const auto& dom_a = registry.base()[a].domain;
      const auto& dom_b = registry.base()[b].domain;
      Sources src{registry.slot_of(a), registry.slot_of(b), a, b, dom_b.size(), {}};
      src.pair_to_code.assign(dom_a.size() * dom_b.size(), -1);
      for (std::size_t k = 0; k < spec.domain.size(); ++k) {
        auto [ca, cb] = schema::decode_combined(spec.domain[k]);
        const auto pa = std::find(dom_a.begin(), dom_a.end(), ca) - dom_a.begin();
        const auto pb = std::find(dom_b.begin(), dom_b.end(), cb) - dom_b.begin();
        src.pair_to_code[static_cast<std::size_t>(pa) * dom_b.size() + static_cast<std::size_t>(pb)] =
            static_cast<int>(k);
      }
      sources[plane == Plane::kControl ? 0 : 1].push_back(std::move(src));
    }
  }

  std::vector<CleanRecord> out;
  out.reserve(records.size());
  for (RawRecord& r : records) {
    CleanRecord c;
    static_cast<RawRecord&>(c) = std::move(r);
    const auto& plane_sources = sources[c.plane == Plane::kControl ? 0 : 1];
    c.derived.assign(plane_sources.size(), -1);
    for (std::size_t k = 0; k < plane_sources.size(); ++k) {
      const Sources& src = plane_sources[k];
      if (!c.has(src.slot_a) || !c.has(src.slot_b)) continue;
      const int pa = registry.domain_index(src.base_a, c.values[src.slot_a]);
      const int pb = registry.domain_index(src.base_b, c.values[src.slot_b]);
      const int code = (pa < 0 || pb < 0)
                           ? -1
                           : src.pair_to_code[static_cast<std::size_t>(pa) * src.width_b +
                                              static_cast<std::size_t>(pb)];
      if (code < 0) {
        throw Error(ErrorCode::kDomainViolation,
                    "record for user '" + c.user_id + "' has a pair outside '" +
                        registry.derived()[registry.plane_derived(c.plane)[k]].name + "'");
      }
      c.derived[k] = code;
    }
    out.push_back(std::move(c));
  }
  return out;
}

void write_csv(std::ostream& out, std::span<const RawRecord> records,
               const SchemaRegistry& registry, Plane plane) {
  write_records(out, records, registry, plane);
}

void write_csv(std::ostream& out, std::span<const CleanRecord> records,
               const SchemaRegistry& registry, Plane plane) {
  write_records(out, records, registry, plane);
}

nlohmann::json to_json(const IngestReport& report) {
  return {{"rows_read", report.rows_read},
          {"rows_invalid", report.rows_invalid},
          {"rows_erroneous", report.rows_erroneous},
          {"rows_duplicate", report.rows_duplicate},
          {"rows_kept", report.rows_kept},
          {"parse_errors", report.parse_errors},
          {"imputation_means", report.imputation_means},
          {"all_missing_columns", report.all_missing_columns}};
}

nlohmann::json to_json(const Imputation& imputation) {
  return {{"means", imputation.means}, {"all_missing", imputation.all_missing}};
}

Imputation imputation_from_json(const nlohmann::json& doc) {
  Imputation imputation;
  try {
    imputation.means = doc.at("means").get<std::map<std::string, double>>();
    imputation.all_missing = doc.value("all_missing", std::vector<std::string>{});
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, std::string("malformed imputation means: ") + e.what());
  }
  return imputation;
}

}  // namespace hotspot::ingest
