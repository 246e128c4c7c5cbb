#include <cmath>

#include "hotspot/app.hpp"
#include "hotspot/text_io.hpp"

namespace hotspot::app {

namespace {

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::kInvalidConfig, what); }

}  // namespace

int exit_code_for(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInvalidConfig:
    case ErrorCode::kUnknownPreset:
    case ErrorCode::kInvalidParams:
      return kExitConfig;
    case ErrorCode::kUnknownField:
    case ErrorCode::kDomainViolation:
    case ErrorCode::kInvalidSchema:
    case ErrorCode::kHeaderMismatch:
    case ErrorCode::kIoError:
    case ErrorCode::kTooShort:
    case ErrorCode::kMissingLabel:
    case ErrorCode::kSingleClassData:
    case ErrorCode::kNonFiniteInput:
    case ErrorCode::kColumnMismatch:
    case ErrorCode::kBadModel:
    case ErrorCode::kLengthMismatch:
    case ErrorCode::kSingleClassLabels:
    case ErrorCode::kNoPositives:
      return kExitData;
    case ErrorCode::kDegenerateSplit:
      break;
  }
  return kExitInternal;
}

void PipelineConfig::validate() const {
  if (data_dir.empty() || work_dir.empty()) bad("data_dir and work_dir must be non-empty");
  if (window_s < 1) bad("window_s must be positive");
  if (!(split_ratio > 0.0 && split_ratio < 1.0)) bad("split_ratio must be in (0, 1)");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
    bad("validation_fraction must be in [0, 1)");
  }
  if (!(threshold >= 0.0 && threshold <= 1.0)) bad("threshold must be in [0, 1]");
  for (double w : sweep_weights) {
    if (!(w > 0.0) || !std::isfinite(w)) bad("sweep weights must be positive");
  }
  if (affected_min_windows < 0) bad("affected_min_windows must be non-negative");
  try {
    train.validate();
  } catch (const Error& e) {
    bad(e.what());
  }
  synth.validate();
}

void PipelineConfig::set_seed(std::uint64_t seed) {
  synth.seed = seed;
  train.seed = seed;
  split_seed = seed;
}

nlohmann::json to_json(const PipelineConfig& c) {
  return {{"data_dir", c.data_dir.string()},
          {"work_dir", c.work_dir.string()},
          {"predict_input", c.predict_input.string()},
          {"imputation_means", c.imputation_means.string()},
          {"window_s", c.window_s},
          {"split_ratio", c.split_ratio},
          {"validation_fraction", c.validation_fraction},
          {"split_seed", c.split_seed},
          {"threshold", c.threshold},
          {"sweep_weights", c.sweep_weights},
          {"affected_min_windows", c.affected_min_windows},
          {"train", gbdt::to_json(c.train)},
          {"synth", synth::to_json(c.synth)}};
}

PipelineConfig config_from_json(const nlohmann::json& doc, PipelineConfig c) {
  if (!doc.is_object()) bad("config must be a JSON object");
  try {
    c.data_dir = doc.value("data_dir", c.data_dir.string());
    c.work_dir = doc.value("work_dir", c.work_dir.string());
    c.predict_input = doc.value("predict_input", c.predict_input.string());
    c.imputation_means = doc.value("imputation_means", c.imputation_means.string());
    c.window_s = doc.value("window_s", c.window_s);
    c.split_ratio = doc.value("split_ratio", c.split_ratio);
    c.validation_fraction = doc.value("validation_fraction", c.validation_fraction);
    c.split_seed = doc.value("split_seed", c.split_seed);
    c.threshold = doc.value("threshold", c.threshold);
    c.sweep_weights = doc.value("sweep_weights", c.sweep_weights);
    c.affected_min_windows = doc.value("affected_min_windows", c.affected_min_windows);
    if (doc.contains("train")) c.train = gbdt::params_from_json(doc.at("train"), c.train);
    if (doc.contains("synth")) c.synth = synth::synth_from_json(doc.at("synth"), c.synth);
    if (doc.contains("seed")) c.set_seed(doc.at("seed").get<std::uint64_t>());
  } catch (const nlohmann::json::exception& e) {
    bad(std::string("bad config value: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kInvalidParams) bad(e.what());
    throw;
  }
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::string content;
  try {
    content = text::read_file(path);
  } catch (const Error& e) {
    bad(e.what());
  }
  const auto doc = nlohmann::json::parse(content, nullptr, false);
  if (doc.is_discarded()) bad("config file " + path.string() + " is not valid JSON");
  return config_from_json(doc);
}

}  // namespace hotspot::app
