#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "hotspot/featurize.hpp"
#include "hotspot/ingest.hpp"
#include "json.hpp"

// Seeded generator of labelled control/user plane record streams: normal
// users plus users degraded by a hotspot event.
namespace hotspot::synth {

struct SynthConfig {
  int n_users = 1000;
  double affected_fraction = 0.08;
  /// Users with mildly elevated failure rates that are still labelled 0.
  double complaint_fraction = 0.0;

  std::int64_t start_ms = 1577836800000;  // 2020-01-01T00:00:00Z
  std::int64_t span_s = 7200;
  std::int64_t window_s = 300;
  /// Degradation interval, seconds after start_ms.
  std::int64_t event_start_s = 0;
  std::int64_t event_end_s = 7200;

  /// Mean records per user and window.
  double cp_rate = 6.0;
  double up_rate = 4.0;

  double failure_prob = 0.02;
  double affected_failure_prob = 0.15;
  double timeout_prob = 0.01;
  double affected_timeout_prob = 0.1;
  /// Chance that an affected user's window has no control plane records.
  double cp_silence_prob = 0.9;

  /// Latency = location + exponential noise (+ shift for affected users), ms.
  double latency_location_ms = 50.0;
  double latency_noise_ms = 30.0;
  double affected_latency_shift_ms = 25.0;
  double traffic_mean_bytes = 20000.0;
  /// Multiplies affected users' upload traffic.
  double affected_upload_factor = 0.5;

  std::uint64_t seed = 42;

  /// Dirty mode: per-record rates of out-of-domain codes, negative traffic and
  /// duplicated rows.
  double dirty_invalid_rate = 0.0;
  double dirty_negative_rate = 0.0;
  double dirty_duplicate_rate = 0.0;

  /// Throws Error(kInvalidConfig).
  void validate() const;
};

/// "separable", "hard" or "paper-scale". Throws Error(kUnknownPreset).
SynthConfig preset(std::string_view name);

nlohmann::json to_json(const SynthConfig& config);
/// Missing keys keep the values of `base`. Throws Error(kInvalidConfig) on bad types.
SynthConfig synth_from_json(const nlohmann::json& doc, SynthConfig base = {});

struct LabeledDataset {
  std::vector<ingest::RawRecord> cp;
  std::vector<ingest::RawRecord> up;
  features::LabelMap labels;
};

/// Records sorted by (timestamp, user_id). Uses the default schema.
LabeledDataset generate(const SynthConfig& config);

/// Exactly floor(affected_fraction * n_users) users.
std::size_t affected_count(const SynthConfig& config);

void write_labels_csv(std::ostream& out, const features::LabelMap& labels);
/// Throws Error(kHeaderMismatch) / Error(kMissingLabel) for malformed input.
features::LabelMap read_labels_csv(std::istream& in);

/// cp.csv, up.csv, labels.csv and truth.json under `dir`.
void write_dataset(const std::filesystem::path& dir, const LabeledDataset& data,
                   const SynthConfig& config);

}  // namespace hotspot::synth
