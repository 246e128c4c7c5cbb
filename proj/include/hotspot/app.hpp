#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "hotspot/error.hpp"
#include "hotspot/featurize.hpp"
#include "hotspot/gbdt.hpp"
#include "hotspot/metrics.hpp"
#include "hotspot/synth.hpp"
#include "json.hpp"

// Batch commands wiring generate -> ingest -> featurize -> train -> evaluate
// -> predict through files.
namespace hotspot::app {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitInternal = 4;

int exit_code_for(ErrorCode code) noexcept;

struct PipelineConfig {
  /// Raw dataset: cp.csv, up.csv, labels.csv (generate writes here).
  std::filesystem::path data_dir = "data";
  /// Every derived artifact.
  std::filesystem::path work_dir = "work";
  /// Feature file scored by predict; empty means work_dir/test_features.csv.
  std::filesystem::path predict_input;
  /// Means persisted by an earlier ingest run. When set, ingest fills missing
  /// numerics with them instead of this data's own means.
  std::filesystem::path imputation_means;
  std::int64_t window_s = features::kDefaultWindowSeconds;
  /// Share of users in the training side.
  double split_ratio = 0.7;
  /// Share of training users held back for early stopping; 0 disables it.
  double validation_fraction = 0.15;
  std::uint64_t split_seed = 7;
  double threshold = 0.5;
  std::vector<double> sweep_weights;
  /// predict lists users with more flagged windows than this in the latest hour.
  int affected_min_windows = 2;
  gbdt::TrainParams train;
  synth::SynthConfig synth;

  /// Throws Error(kInvalidConfig).
  void validate() const;
  /// Applies one seed to the generator, the split and training.
  void set_seed(std::uint64_t seed);
};

nlohmann::json to_json(const PipelineConfig& config);
/// Missing keys keep the values of `base`. Throws Error(kInvalidConfig).
PipelineConfig config_from_json(const nlohmann::json& doc, PipelineConfig base = {});
PipelineConfig load_config(const std::filesystem::path& path);

struct SplitMatrices {
  features::FeatureMatrix train;
  features::FeatureMatrix valid;
  features::FeatureMatrix test;
};

/// Users ranked by a seeded FNV-1a hash of their id; the first
/// round(ratio * users) go to training, and the last
/// round(validation_fraction * training users) of those to validation.
SplitMatrices split_by_user(const features::FeatureMatrix& matrix, double ratio,
                            double validation_fraction, std::uint64_t seed);

/// Trains one model per weight on `train` (early stopping on `valid` when it
/// has rows) and scores `eval` at `threshold`.
metrics::WeightSweep run_weight_sweep(const features::FeatureMatrix& train,
                                      const features::FeatureMatrix& valid,
                                      const features::FeatureMatrix& eval,
                                      const gbdt::TrainParams& params,
                                      const std::vector<double>& weights, double threshold);

int cmd_generate(const PipelineConfig& config);
int cmd_ingest(const PipelineConfig& config);
int cmd_featurize(const PipelineConfig& config);
int cmd_train(const PipelineConfig& config);
int cmd_evaluate(const PipelineConfig& config);
int cmd_predict(const PipelineConfig& config);
/// Writes the default schema to `out`, or stdout when empty.
int cmd_schema_export(const std::filesystem::path& out);

/// Runs `body`, printing any error to stderr and mapping it to an exit code.
int guarded(const std::string& command, const std::function<int()>& body);

}  // namespace hotspot::app
