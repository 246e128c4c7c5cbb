#include "hotspot/schema.hpp"

#include <algorithm>
#include <charconv>
#include <set>

#include "hotspot/error.hpp"

namespace hotspot::schema {

namespace {

std::size_t plane_id(Plane plane) { return plane == Plane::kControl ? 0 : 1; }

std::optional<std::int64_t> parse_code(std::string_view text) {
  std::int64_t value = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || value < 0) return std::nullopt;
  return value;
}

[[noreturn]] void invalid(const std::string& message) {
  throw Error(ErrorCode::kInvalidSchema, message);
}

FieldSpec enumerated(std::string name, Plane plane, std::vector<std::string> domain) {
  FieldSpec spec;
  spec.name = std::move(name);
  spec.kind = FieldKind::kEnumerated;
  spec.plane = plane;
  spec.domain = std::move(domain);
  return spec;
}

FieldSpec numeric(std::string name, std::string unit) {
  FieldSpec spec;
  spec.name = std::move(name);
  spec.kind = FieldKind::kNumeric;
  spec.plane = Plane::kUser;
  spec.unit = std::move(unit);
  return spec;
}

std::vector<std::string> cross_product(const std::vector<std::string>& a,
                                       const std::vector<std::string>& b) {
  std::vector<std::string> out;
  out.reserve(a.size() * b.size());
  for (const auto& x : a) {
    for (const auto& y : b) out.push_back(x + kCodeSeparator + y);
  }
  return out;
}

SchemaRegistry build_default() {
  constexpr Plane cp = Plane::kControl;
  constexpr Plane up = Plane::kUser;

  // Control plane: procedure type 1 = attach, 2 = service request,
  // 3 = tracking area update. Status 0 = success, 1 = failure, 255 = timeout.
  // Failure cause 1 = authentication failure, 2 = network failure, 3 = radio loss.
  std::vector<FieldSpec> base = {
      enumerated("procedure_type", cp, {"1", "2", "3"}),
      enumerated("procedure_status", cp, {"0", "1", "255"}),
      enumerated("request_cause", cp, {"0", "1", "2", "3"}),
      enumerated("failure_cause", cp, {"0", "1", "2", "3"}),
      enumerated("paging_result", cp, {"0", "1"}),
      enumerated("erab_release_flag", cp, {"0", "1"}),
      // User plane. L4 protocol 1 = TCP, 2 = UDP.
      enumerated("app_type_code", up, {"1", "2", "3", "4", "5", "6"}),
      enumerated("app_type_whole", up, {"11", "12", "13", "14", "15", "16"}),
      enumerated("l4_protocol", up, {"1", "2"}),
      numeric("upload_traffic", "bytes"),
      numeric("download_traffic", "bytes"),
      numeric("tcp_link_ack_time", "ms"),
      numeric("spendtime", "ms"),
      numeric("window_size", "bytes"),
      numeric("tcp_syn_num", "count"),
      numeric("upload_ip_packets", "count"),
      numeric("download_ip_packets", "count"),
      numeric("tcp_syn_ack_time", "ms"),
      numeric("first_response_time", "ms"),
      numeric("dns_response_time", "ms"),
      numeric("upload_rtt", "ms"),
      numeric("download_rtt", "ms"),
      numeric("tcp_retrans_upload", "count"),
      numeric("tcp_retrans_download", "count"),
      numeric("tcp_out_of_order_upload", "count"),
      numeric("tcp_out_of_order_download", "count"),
      numeric("upload_ip_frag_packets", "count"),
      numeric("download_ip_frag_packets", "count"),
      numeric("session_duration", "ms"),
      numeric("tcp_zero_window_num", "count"),
  };

  auto domain_of = [&](std::string_view name) -> const std::vector<std::string>& {
    return std::find_if(base.begin(), base.end(), [&](const FieldSpec& f) { return f.name == name; })
        ->domain;
  };
  auto pair = [&](std::string a, std::string b) {
    DerivedFieldSpec spec;
    spec.name = a + "_x_" + b;
    spec.plane = cp;
    spec.domain = cross_product(domain_of(a), domain_of(b));
    spec.source_a = std::move(a);
    spec.source_b = std::move(b);
    return spec;
  };
  // One-hot widths 9 + 12 + 12 = 33.
  std::vector<DerivedFieldSpec> derived = {
      pair("procedure_type", "procedure_status"),
      pair("procedure_type", "request_cause"),
      pair("procedure_type", "failure_cause"),
  };
  return SchemaRegistry(std::move(base), std::move(derived), "xdr-default-1");
}

}  // namespace

std::string_view to_string(FieldKind kind) {
  return kind == FieldKind::kEnumerated ? "enumerated" : "numeric";
}

std::string_view to_string(Plane plane) { return plane == Plane::kControl ? "control" : "user"; }

std::string_view plane_prefix(Plane plane) { return plane == Plane::kControl ? "cp" : "up"; }

SchemaRegistry::SchemaRegistry(std::vector<FieldSpec> base, std::vector<DerivedFieldSpec> derived,
                               std::string version)
    : base_(std::move(base)), derived_(std::move(derived)), version_(std::move(version)) {
  std::set<std::string, std::less<>> names;
  slot_.resize(base_.size());
  codes_.resize(base_.size());
  for (std::size_t i = 0; i < base_.size(); ++i) {
    const FieldSpec& f = base_[i];
    if (f.name.empty()) invalid("empty field name");
    if (!names.insert(f.name).second) invalid("duplicate field name '" + f.name + "'");
    if (f.kind == FieldKind::kEnumerated) {
      if (f.domain.empty()) invalid("enumerated field '" + f.name + "' has an empty domain");
      std::set<std::int64_t> seen;
      for (const auto& code : f.domain) {
        auto parsed = parse_code(code);
        if (!parsed) invalid("field '" + f.name + "' has non-integer code '" + code + "'");
        if (!seen.insert(*parsed).second) {
          invalid("field '" + f.name + "' has duplicate code '" + code + "'");
        }
        codes_[i].push_back(*parsed);
      }
    } else if (!f.domain.empty()) {
      invalid("numeric field '" + f.name + "' must not carry a domain");
    }
    auto& slots = plane_fields_[plane_id(f.plane)];
    slot_[i] = slots.size();
    slots.push_back(i);
  }
  for (std::size_t p = 0; p < 2; ++p) {
    if (plane_fields_[p].size() > 64) invalid("more than 64 fields in one plane");
  }

  for (std::size_t i = 0; i < derived_.size(); ++i) {
    const DerivedFieldSpec& d = derived_[i];
    if (!names.insert(d.name).second) invalid("duplicate field name '" + d.name + "'");
    const FieldSpec* a = find_base(d.source_a);
    const FieldSpec* b = find_base(d.source_b);
    if (a == nullptr || b == nullptr) invalid("derived field '" + d.name + "' has unknown sources");
    if (a->kind != FieldKind::kEnumerated || b->kind != FieldKind::kEnumerated) {
      invalid("derived field '" + d.name + "' needs enumerated sources");
    }
    if (a->plane != d.plane || b->plane != d.plane) {
      invalid("derived field '" + d.name + "' mixes planes");
    }
    if (d.domain.empty()) invalid("derived field '" + d.name + "' has an empty domain");
    std::set<std::string> codes;
    std::set<std::string> rendered;
    for (const auto& code : d.domain) {
      auto [ca, cb] = decode_combined(code);
      if (std::find(a->domain.begin(), a->domain.end(), ca) == a->domain.end() ||
          std::find(b->domain.begin(), b->domain.end(), cb) == b->domain.end()) {
        invalid("derived field '" + d.name + "' code '" + code + "' outside source domains");
      }
      if (!codes.insert(code).second) invalid("derived field '" + d.name + "' repeats '" + code + "'");
      // Rendered codes name feature columns, so they must stay distinct too.
      if (!rendered.insert(render_code(code)).second) {
        invalid("derived field '" + d.name + "' has ambiguous rendering for '" + code + "'");
      }
    }
    plane_derived_[plane_id(d.plane)].push_back(i);
  }
}

const std::vector<std::size_t>& SchemaRegistry::plane_fields(Plane plane) const noexcept {
  return plane_fields_[plane_id(plane)];
}

const std::vector<std::size_t>& SchemaRegistry::plane_derived(Plane plane) const noexcept {
  return plane_derived_[plane_id(plane)];
}

const FieldSpec* SchemaRegistry::find_base(std::string_view name) const noexcept {
  auto it = std::find_if(base_.begin(), base_.end(), [&](const FieldSpec& f) { return f.name == name; });
  return it == base_.end() ? nullptr : &*it;
}

const DerivedFieldSpec* SchemaRegistry::find_derived(std::string_view name) const noexcept {
  auto it = std::find_if(derived_.begin(), derived_.end(),
                         [&](const DerivedFieldSpec& f) { return f.name == name; });
  return it == derived_.end() ? nullptr : &*it;
}

std::optional<std::size_t> SchemaRegistry::base_index(std::string_view name) const noexcept {
  const FieldSpec* f = find_base(name);
  if (f == nullptr) return std::nullopt;
  return static_cast<std::size_t>(f - base_.data());
}

int SchemaRegistry::domain_index(std::size_t base_index, double code) const noexcept {
  const auto& codes = codes_[base_index];
  for (std::size_t k = 0; k < codes.size(); ++k) {
    if (static_cast<double>(codes[k]) == code) return static_cast<int>(k);
  }
  return -1;
}

const SchemaRegistry& default_schema() {
  static const SchemaRegistry registry = build_default();
  return registry;
}

FieldRef lookup(const SchemaRegistry& registry, std::string_view name) {
  if (const FieldSpec* f = registry.find_base(name)) return f;
  if (const DerivedFieldSpec* d = registry.find_derived(name)) return d;
  throw Error(ErrorCode::kUnknownField, "no field named '" + std::string(name) + "'");
}

std::string combined_code(const SchemaRegistry& registry, const DerivedFieldSpec& spec,
                          std::string_view code_a, std::string_view code_b) {
  auto check = [&](std::string_view field, std::string_view code) {
    const FieldSpec* f = registry.find_base(field);
    if (f == nullptr || std::find(f->domain.begin(), f->domain.end(), code) == f->domain.end()) {
      throw Error(ErrorCode::kDomainViolation,
                  "code '" + std::string(code) + "' not in domain of '" + std::string(field) + "'");
    }
  };
  check(spec.source_a, code_a);
  check(spec.source_b, code_b);
  std::string code;
  code.reserve(code_a.size() + code_b.size() + 1);
  code.append(code_a).push_back(kCodeSeparator);
  code.append(code_b);
  if (std::find(spec.domain.begin(), spec.domain.end(), code) == spec.domain.end()) {
    throw Error(ErrorCode::kDomainViolation, "pair '" + code + "' not admitted by '" + spec.name + "'");
  }
  return code;
}

std::pair<std::string, std::string> decode_combined(std::string_view code) {
  auto pos = code.find(kCodeSeparator);
  if (pos == std::string_view::npos) {
    throw Error(ErrorCode::kDomainViolation, "'" + std::string(code) + "' is not a combined code");
  }
  return {std::string(code.substr(0, pos)), std::string(code.substr(pos + 1))};
}

std::string render_code(std::string_view code) {
  std::string out;
  out.reserve(code.size());
  for (char c : code) {
    if (c != kCodeSeparator) out.push_back(c);
  }
  return out;
}

nlohmann::json to_json(const SchemaRegistry& registry) {
  nlohmann::json fields = nlohmann::json::array();
  for (const auto& f : registry.base()) {
    fields.push_back({{"name", f.name},
                      {"kind", to_string(f.kind)},
                      {"plane", to_string(f.plane)},
                      {"domain", f.domain},
                      {"unit", f.unit},
                      {"non_negative", f.non_negative}});
  }
  nlohmann::json derived = nlohmann::json::array();
  for (const auto& d : registry.derived()) {
    derived.push_back({{"name", d.name},
                       {"source_a", d.source_a},
                       {"source_b", d.source_b},
                       {"plane", to_string(d.plane)},
                       {"domain", d.domain}});
  }
  return {{"version", registry.version()}, {"fields", fields}, {"derived", derived}};
}

SchemaRegistry schema_from_json(const nlohmann::json& doc) {
  auto plane_of = [](const std::string& s) {
    if (s == "control") return Plane::kControl;
    if (s == "user") return Plane::kUser;
    invalid("unknown plane '" + s + "'");
  };
  try {
    std::vector<FieldSpec> base;
    for (const auto& j : doc.at("fields")) {
      FieldSpec f;
      f.name = j.at("name").get<std::string>();
      const auto kind = j.at("kind").get<std::string>();
      if (kind == "enumerated") {
        f.kind = FieldKind::kEnumerated;
      } else if (kind == "numeric") {
        f.kind = FieldKind::kNumeric;
      } else {
        invalid("unknown kind '" + kind + "'");
      }
      f.plane = plane_of(j.at("plane").get<std::string>());
      f.domain = j.value("domain", std::vector<std::string>{});
      f.unit = j.value("unit", std::string{});
      f.non_negative = j.value("non_negative", true);
      base.push_back(std::move(f));
    }
    std::vector<DerivedFieldSpec> derived;
    for (const auto& j : doc.value("derived", nlohmann::json::array())) {
      DerivedFieldSpec d;
      d.name = j.at("name").get<std::string>();
      d.source_a = j.at("source_a").get<std::string>();
      d.source_b = j.at("source_b").get<std::string>();
      d.plane = plane_of(j.at("plane").get<std::string>());
      d.domain = j.at("domain").get<std::vector<std::string>>();
      derived.push_back(std::move(d));
    }
    return SchemaRegistry(std::move(base), std::move(derived), doc.value("version", std::string{}));
  } catch (const nlohmann::json::exception& e) {
    invalid(std::string("malformed schema document: ") + e.what());
  }
}

}  // namespace hotspot::schema
