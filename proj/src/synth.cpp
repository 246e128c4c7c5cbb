#include "hotspot/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>

#include "hotspot/error.hpp"
#include "hotspot/rng.hpp"
#include "hotspot/text_io.hpp"

namespace hotspot::synth {

namespace {

using ingest::RawRecord;
using schema::Plane;

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::kInvalidConfig, what); }

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

enum class Population { kNormal, kAffected, kComplaint };

// Slot of every default-schema field used by the generator.
struct Slots {
  explicit Slots(const schema::SchemaRegistry& r) : registry(r) {}
  std::size_t operator()(std::string_view name) const {
    return registry.slot_of(*registry.base_index(name));
  }
  const schema::SchemaRegistry& registry;
};

constexpr std::uint64_t kAssignStream = 0xA55167ULL;
constexpr std::uint64_t kDirtyStream = 0xD1127ULL;

class UserGenerator {
 public:
  UserGenerator(const SynthConfig& config, const schema::SchemaRegistry& registry)
      : config_(config),
        slot_(registry),
        cp_width_(registry.plane_fields(Plane::kControl).size()),
        up_width_(registry.plane_fields(Plane::kUser).size()) {}

  void run(const std::string& user, Population population, Rng& rng,
           std::vector<RawRecord>& cp, std::vector<RawRecord>& up) const {
    const std::int64_t window_ms = config_.window_s * 1000;
    const std::int64_t windows = (config_.span_s + config_.window_s - 1) / config_.window_s;
    const std::int64_t event_begin = config_.start_ms + config_.event_start_s * 1000;
    const std::int64_t event_end = config_.start_ms + config_.event_end_s * 1000;
    const std::int64_t span_end = config_.start_ms + config_.span_s * 1000;
    for (std::int64_t w = 0; w < windows; ++w) {
      const std::int64_t begin = config_.start_ms + w * window_ms;
      const std::int64_t end = std::min(begin + window_ms, span_end);
      const bool degraded =
          population == Population::kAffected && begin < event_end && end > event_begin;
      auto stamp = [&] { return begin + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(end - begin))); };

      const bool silent = degraded && rng.bernoulli(config_.cp_silence_prob);
      const std::uint32_t n_cp = rng.poisson(config_.cp_rate);
      const std::uint32_t n_up = rng.poisson(config_.up_rate);
      if (!silent) {
        for (std::uint32_t k = 0; k < n_cp; ++k) cp.push_back(control(user, stamp(), population, degraded, rng));
      }
      for (std::uint32_t k = 0; k < n_up; ++k) up.push_back(user_plane(user, stamp(), degraded, rng));
    }
  }

 private:
  RawRecord control(const std::string& user, std::int64_t ts, Population population,
                    bool degraded, Rng& rng) const {
    RawRecord r{user, ts, Plane::kControl, std::vector<double>(cp_width_, 0.0), 0};
    double failure = degraded ? config_.affected_failure_prob : config_.failure_prob;
    double timeout = degraded ? config_.affected_timeout_prob : config_.timeout_prob;
    if (population == Population::kComplaint) {
      failure = std::min(1.0, 2.0 * failure);
      timeout = std::min(1.0, 2.0 * timeout);
    }
    const double u = rng.uniform();
    const int status = u < failure ? 1 : (u < failure + timeout ? 255 : 0);
    r.set(slot_("procedure_type"), static_cast<double>(1 + rng.below(3)));
    r.set(slot_("procedure_status"), status);
    r.set(slot_("request_cause"), static_cast<double>(rng.below(4)));
    r.set(slot_("failure_cause"), status == 0 ? 0.0 : static_cast<double>(1 + rng.below(3)));
    r.set(slot_("paging_result"), status == 0 ? 1.0 : 0.0);
    r.set(slot_("erab_release_flag"), rng.bernoulli(degraded ? 0.4 : 0.1) ? 1.0 : 0.0);
    return r;
  }

  RawRecord user_plane(const std::string& user, std::int64_t ts, bool degraded, Rng& rng) const {
    RawRecord r{user, ts, Plane::kUser, std::vector<double>(up_width_, 0.0), 0};
    const double loc = config_.latency_location_ms;
    const double noise = config_.latency_noise_ms;
    const double shift = degraded ? config_.affected_latency_shift_ms : 0.0;
    auto latency = [&](double scale) { return std::round(scale * (loc + rng.exponential(noise))); };

    const auto app = static_cast<double>(1 + rng.below(6));
    r.set(slot_("app_type_code"), app);
    r.set(slot_("app_type_whole"), 10.0 + app);
    r.set(slot_("l4_protocol"), rng.bernoulli(0.8) ? 1.0 : 2.0);

    double upload = std::round(rng.exponential(config_.traffic_mean_bytes));
    if (degraded) upload = std::round(upload * config_.affected_upload_factor);
    const double download = std::round(rng.exponential(4.0 * config_.traffic_mean_bytes));
    r.set(slot_("upload_traffic"), upload);
    r.set(slot_("download_traffic"), download);
    r.set(slot_("upload_ip_packets"), std::floor(upload / 1200.0) + 1.0);
    r.set(slot_("download_ip_packets"), std::floor(download / 1400.0) + 1.0);

    const double ack = latency(1.0) + shift;
    const double spend = latency(3.0) + shift;
    r.set(slot_("tcp_link_ack_time"), ack);
    r.set(slot_("spendtime"), spend);
    r.set(slot_("tcp_syn_ack_time"), latency(0.5));
    r.set(slot_("first_response_time"), latency(2.0));
    r.set(slot_("dns_response_time"), latency(0.4));
    r.set(slot_("upload_rtt"), latency(0.8));
    r.set(slot_("download_rtt"), latency(0.8));
    r.set(slot_("session_duration"), spend + std::round(rng.exponential(5000.0)));

    r.set(slot_("window_size"), static_cast<double>(16384 + rng.below(49152)));
    r.set(slot_("tcp_syn_num"), 1.0 + rng.poisson(degraded ? 0.5 : 0.1));
    r.set(slot_("tcp_retrans_upload"), rng.poisson(degraded ? 1.0 : 0.2));
    r.set(slot_("tcp_retrans_download"), rng.poisson(degraded ? 1.0 : 0.2));
    r.set(slot_("tcp_out_of_order_upload"), rng.poisson(0.1));
    r.set(slot_("tcp_out_of_order_download"), rng.poisson(0.1));
    r.set(slot_("upload_ip_frag_packets"), rng.poisson(0.05));
    r.set(slot_("download_ip_frag_packets"), rng.poisson(0.05));
    r.set(slot_("tcp_zero_window_num"), rng.poisson(degraded ? 0.3 : 0.05));
    return r;
  }

  const SynthConfig& config_;
  Slots slot_;
  std::size_t cp_width_;
  std::size_t up_width_;
};

void make_dirty(const SynthConfig& config, const Slots& slot, std::vector<RawRecord>& records,
                Plane plane, Rng& rng) {
  const std::size_t n = records.size();
  const std::size_t code_slot = slot(plane == Plane::kControl ? "procedure_type" : "app_type_code");
  for (std::size_t i = 0; i < n; ++i) {
    if (rng.bernoulli(config.dirty_invalid_rate)) records[i].set(code_slot, 99.0);
    if (plane == Plane::kUser && rng.bernoulli(config.dirty_negative_rate)) {
      const std::size_t s = slot("upload_traffic");
      records[i].set(s, -1.0 - records[i].values[s]);
    }
    if (rng.bernoulli(config.dirty_duplicate_rate)) records.push_back(records[i]);
  }
}

void sort_records(std::vector<RawRecord>& records) {
  std::stable_sort(records.begin(), records.end(), [](const RawRecord& a, const RawRecord& b) {
    if (a.timestamp_ms != b.timestamp_ms) return a.timestamp_ms < b.timestamp_ms;
    return a.user_id < b.user_id;
  });
}

std::string user_name(int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "u%06d", index);
  return buf;
}

}  // namespace

void SynthConfig::validate() const {
  if (n_users < 1) bad("n_users must be positive");
  if (!is_probability(affected_fraction)) bad("affected_fraction must be in [0, 1]");
  if (!is_probability(complaint_fraction) || affected_fraction + complaint_fraction > 1.0) {
    bad("complaint_fraction must be in [0, 1 - affected_fraction]");
  }
  if (window_s < 1) bad("window_s must be positive");
  if (span_s < window_s) bad("span_s must cover at least one window");
  if (event_start_s < 0 || event_end_s < event_start_s || event_end_s > span_s) {
    bad("event interval must lie within the span");
  }
  if (!(cp_rate >= 0.0 && cp_rate <= 100.0) || !(up_rate >= 0.0 && up_rate <= 100.0)) {
    bad("record rates must be in [0, 100]");
  }
  for (double p : {failure_prob, affected_failure_prob, timeout_prob, affected_timeout_prob,
                   cp_silence_prob, dirty_invalid_rate, dirty_negative_rate, dirty_duplicate_rate}) {
    if (!is_probability(p)) bad("probabilities must be in [0, 1]");
  }
  if (failure_prob + timeout_prob > 1.0 || affected_failure_prob + affected_timeout_prob > 1.0) {
    bad("failure and timeout probabilities must sum to at most 1");
  }
  if (!(latency_location_ms >= 0.0) || !(latency_noise_ms > 0.0)) {
    bad("latency location must be non-negative and noise positive");
  }
  if (!(affected_latency_shift_ms > 0.0) || !std::isfinite(affected_latency_shift_ms)) {
    bad("affected latency shift must be positive");
  }
  if (!(traffic_mean_bytes > 0.0) || !(affected_upload_factor > 0.0)) {
    bad("traffic parameters must be positive");
  }
}

SynthConfig preset(std::string_view name) {
  SynthConfig c;
  if (name == "separable") {
    c.complaint_fraction = 0.02;
    return c;
  }
  if (name == "hard") {
    c.complaint_fraction = 0.05;
    c.event_start_s = 1800;
    c.event_end_s = 5400;
    c.failure_prob = 0.05;
    c.affected_failure_prob = 0.1;
    c.timeout_prob = 0.02;
    c.affected_timeout_prob = 0.05;
    c.cp_silence_prob = 0.15;
    c.latency_noise_ms = 40.0;
    c.affected_latency_shift_ms = 10.0;
    c.affected_upload_factor = 0.8;
    return c;
  }
  if (name == "paper-scale") {
    // 21028 users x 12 windows is about 252k feature rows.
    c.n_users = 21028;
    c.complaint_fraction = 0.02;
    c.span_s = 3600;
    c.event_end_s = 3600;
    c.cp_rate = 4.0;
    c.up_rate = 3.0;
    return c;
  }
  throw Error(ErrorCode::kUnknownPreset, "unknown preset '" + std::string(name) + "'");
}

nlohmann::json to_json(const SynthConfig& c) {
  return {{"n_users", c.n_users},
          {"affected_fraction", c.affected_fraction},
          {"complaint_fraction", c.complaint_fraction},
          {"start_ms", c.start_ms},
          {"span_s", c.span_s},
          {"window_s", c.window_s},
          {"event_start_s", c.event_start_s},
          {"event_end_s", c.event_end_s},
          {"cp_rate", c.cp_rate},
          {"up_rate", c.up_rate},
          {"failure_prob", c.failure_prob},
          {"affected_failure_prob", c.affected_failure_prob},
          {"timeout_prob", c.timeout_prob},
          {"affected_timeout_prob", c.affected_timeout_prob},
          {"cp_silence_prob", c.cp_silence_prob},
          {"latency_location_ms", c.latency_location_ms},
          {"latency_noise_ms", c.latency_noise_ms},
          {"affected_latency_shift_ms", c.affected_latency_shift_ms},
          {"traffic_mean_bytes", c.traffic_mean_bytes},
          {"affected_upload_factor", c.affected_upload_factor},
          {"seed", c.seed},
          {"dirty_invalid_rate", c.dirty_invalid_rate},
          {"dirty_negative_rate", c.dirty_negative_rate},
          {"dirty_duplicate_rate", c.dirty_duplicate_rate}};
}

SynthConfig synth_from_json(const nlohmann::json& doc, SynthConfig c) {
  try {
    if (doc.contains("preset")) c = preset(doc.at("preset").get<std::string>());
#define HOTSPOT_READ(key) c.key = doc.value(#key, c.key)
    HOTSPOT_READ(n_users);
    HOTSPOT_READ(affected_fraction);
    HOTSPOT_READ(complaint_fraction);
    HOTSPOT_READ(start_ms);
    HOTSPOT_READ(span_s);
    HOTSPOT_READ(window_s);
    HOTSPOT_READ(event_start_s);
    HOTSPOT_READ(event_end_s);
    HOTSPOT_READ(cp_rate);
    HOTSPOT_READ(up_rate);
    HOTSPOT_READ(failure_prob);
    HOTSPOT_READ(affected_failure_prob);
    HOTSPOT_READ(timeout_prob);
    HOTSPOT_READ(affected_timeout_prob);
    HOTSPOT_READ(cp_silence_prob);
    HOTSPOT_READ(latency_location_ms);
    HOTSPOT_READ(latency_noise_ms);
    HOTSPOT_READ(affected_latency_shift_ms);
    HOTSPOT_READ(traffic_mean_bytes);
    HOTSPOT_READ(affected_upload_factor);
    HOTSPOT_READ(seed);
    HOTSPOT_READ(dirty_invalid_rate);
    HOTSPOT_READ(dirty_negative_rate);
    HOTSPOT_READ(dirty_duplicate_rate);
#undef HOTSPOT_READ
  } catch (const nlohmann::json::exception& ex) {
    bad(std::string("bad synth config: ") + ex.what());
  }
  return c;
}

std::size_t affected_count(const SynthConfig& config) {
  return static_cast<std::size_t>(std::floor(config.affected_fraction * config.n_users + 1e-9));
}

LabeledDataset generate(const SynthConfig& config) {
  config.validate();
  const auto& registry = schema::default_schema();
  const auto n = static_cast<std::size_t>(config.n_users);
  const std::size_t n_affected = affected_count(config);
  const std::size_t n_complaint = std::min(
      n - n_affected,
      static_cast<std::size_t>(std::floor(config.complaint_fraction * config.n_users + 1e-9)));

  // A seeded shuffle picks which users are affected / complaining.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  {
    Rng rng(mix_seed(config.seed, kAssignStream));
    for (std::size_t k = n; k > 1; --k) std::swap(order[k - 1], order[rng.below(k)]);
  }
  std::vector<Population> population(n, Population::kNormal);
  for (std::size_t k = 0; k < n_affected; ++k) population[order[k]] = Population::kAffected;
  for (std::size_t k = n_affected; k < n_affected + n_complaint; ++k) {
    population[order[k]] = Population::kComplaint;
  }

  LabeledDataset out;
  const UserGenerator gen(config, registry);
  for (std::size_t u = 0; u < n; ++u) {
    const std::string user = user_name(static_cast<int>(u));
    Rng rng(mix_seed(config.seed, u));
    gen.run(user, population[u], rng, out.cp, out.up);
    out.labels.emplace(user, population[u] == Population::kAffected ? 1 : 0);
  }
  if (config.dirty_invalid_rate > 0.0 || config.dirty_negative_rate > 0.0 ||
      config.dirty_duplicate_rate > 0.0) {
    Rng rng(mix_seed(config.seed, kDirtyStream));
    const Slots slot(registry);
    make_dirty(config, slot, out.cp, Plane::kControl, rng);
    make_dirty(config, slot, out.up, Plane::kUser, rng);
  }
  sort_records(out.cp);
  sort_records(out.up);
  return out;
}

void write_labels_csv(std::ostream& out, const features::LabelMap& labels) {
  std::string text = "user_id,label\n";
  for (const auto& [user, label] : labels) {
    text += user;
    text += ',';
    text += std::to_string(label);
    text += '\n';
  }
  out << text;
}

features::LabelMap read_labels_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kHeaderMismatch, "labels file is empty");
  const auto header = text::split_line(line);
  if (header.size() != 2 || header[0] != "user_id" || header[1] != "label") {
    throw Error(ErrorCode::kHeaderMismatch, "labels header must be user_id,label");
  }
  features::LabelMap labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = text::split_line(line);
    const auto label = cells.size() == 2 ? text::parse_int(cells[1]) : std::nullopt;
    if (!label || cells[0].empty() || *label < 0) {
      throw Error(ErrorCode::kMissingLabel, "bad label on line " + std::to_string(line_no));
    }
    labels[std::string(cells[0])] = static_cast<int>(*label);
  }
  return labels;
}

void write_dataset(const std::filesystem::path& dir, const LabeledDataset& data,
                   const SynthConfig& config) {
  const auto& registry = schema::default_schema();
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw Error(ErrorCode::kIoError, "cannot write " + (dir / name).string());
    return out;
  };
  {
    auto out = open("cp.csv");
    ingest::write_csv(out, data.cp, registry, Plane::kControl);
  }
  {
    auto out = open("up.csv");
    ingest::write_csv(out, data.up, registry, Plane::kUser);
  }
  {
    auto out = open("labels.csv");
    write_labels_csv(out, data.labels);
  }
  nlohmann::json truth = {{"config", to_json(config)},
                          {"schema_version", registry.version()},
                          {"affected_users", affected_count(config)},
                          {"cp_records", data.cp.size()},
                          {"up_records", data.up.size()}};
  text::write_file(dir / "truth.json", truth.dump(2) + "\n");
}

}  // namespace hotspot::synth
