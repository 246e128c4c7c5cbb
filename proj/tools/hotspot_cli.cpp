// hotspot: command-line front end for the complaint-hotspot pipeline.
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hotspot/app.hpp"

namespace {

struct Overrides {
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> data_dir;
  std::optional<std::string> work_dir;
  std::optional<std::int64_t> window_s;
  std::optional<double> split_ratio;
  std::optional<double> threshold;
  std::optional<int> max_leaves;
  std::optional<int> iterations;
  std::optional<double> learning_rate;
  std::optional<double> positive_weight;
  std::optional<bool> goss;
  std::optional<bool> efb;
  std::optional<std::string> preset;
  std::optional<int> users;
  std::optional<double> affected_fraction;
  std::optional<std::vector<double>> weights;
  std::optional<std::string> input;
  std::optional<int> min_windows;
  std::optional<std::string> imputation;
};

hotspot::app::PipelineConfig resolve(const Overrides& o) {
  using hotspot::app::PipelineConfig;
  PipelineConfig c = o.config ? hotspot::app::load_config(*o.config) : PipelineConfig{};
  if (o.preset) c.synth = hotspot::synth::preset(*o.preset);
  if (o.data_dir) c.data_dir = *o.data_dir;
  if (o.work_dir) c.work_dir = *o.work_dir;
  if (o.window_s) c.window_s = *o.window_s;
  if (o.split_ratio) c.split_ratio = *o.split_ratio;
  if (o.threshold) c.threshold = *o.threshold;
  if (o.max_leaves) c.train.max_leaves = *o.max_leaves;
  if (o.iterations) c.train.max_iterations = *o.iterations;
  if (o.learning_rate) c.train.learning_rate = *o.learning_rate;
  if (o.positive_weight) c.train.positive_class_weight = *o.positive_weight;
  if (o.goss) c.train.goss_enabled = *o.goss;
  if (o.efb) c.train.efb_enabled = *o.efb;
  if (o.users) c.synth.n_users = *o.users;
  if (o.affected_fraction) c.synth.affected_fraction = *o.affected_fraction;
  if (o.weights) c.sweep_weights = *o.weights;
  if (o.input) c.predict_input = *o.input;
  if (o.min_windows) c.affected_min_windows = *o.min_windows;
  if (o.imputation) c.imputation_means = *o.imputation;
  if (o.window_s) c.synth.window_s = *o.window_s;
  if (o.seed) c.set_seed(*o.seed);
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Complaint-hotspot prediction pipeline"};
  cli.require_subcommand(1);
  cli.fallthrough();
  Overrides o;
  cli.add_option("-c,--config", o.config, "JSON config file; flags override its keys");
  cli.add_option("--seed", o.seed, "Seed for generation, split and training");
  cli.add_option("--data-dir", o.data_dir, "Directory with cp.csv, up.csv, labels.csv");
  cli.add_option("--work-dir", o.work_dir, "Directory for derived artifacts");
  cli.add_option("--window", o.window_s, "Window length in seconds");
  cli.add_option("--split", o.split_ratio, "Share of users used for training");
  cli.add_option("--threshold", o.threshold, "Decision threshold on p_affected");
  cli.add_option("--max-leaves", o.max_leaves);
  cli.add_option("--iterations", o.iterations, "Maximum boosting iterations");
  cli.add_option("--learning-rate", o.learning_rate);
  cli.add_option("--positive-weight", o.positive_weight, "Weight of positive-class samples");
  cli.add_option("--goss", o.goss, "Enable one-side sampling (true/false)");
  cli.add_option("--efb", o.efb, "Enable feature bundling (true/false)");

  auto* generate = cli.add_subcommand("generate", "Write a synthetic labelled dataset");
  generate->add_option("--preset", o.preset, "separable, hard or paper-scale");
  generate->add_option("--users", o.users);
  generate->add_option("--affected-fraction", o.affected_fraction);
  auto* ingest = cli.add_subcommand("ingest", "Clean cp.csv/up.csv into the work directory");
  ingest->add_option("--imputation", o.imputation, "Reuse imputation_means.json from a training run");
  auto* featurize = cli.add_subcommand("featurize", "Build features.csv from cleaned records");
  auto* train = cli.add_subcommand("train", "Split by user and train a model");
  auto* evaluate = cli.add_subcommand("evaluate", "Score the test split and write reports");
  evaluate->add_option("--weights", o.weights, "Positive weights to sweep")->delimiter(',');
  auto* predict = cli.add_subcommand("predict", "Score feature rows and list affected users");
  predict->add_option("--input", o.input, "Feature CSV to score");
  predict->add_option("--min-windows", o.min_windows,
                      "Users need more flagged windows than this in the latest hour");
  auto* schema = cli.add_subcommand("schema", "Schema utilities");
  schema->require_subcommand(1);
  auto* schema_export = schema->add_subcommand("export", "Print the default schema as JSON");
  std::string schema_out;
  schema_export->add_option("-o,--out", schema_out, "Output file (default stdout)");

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = cli.exit(e);
    return code == 0 ? 0 : hotspot::app::kExitConfig;
  }

  using namespace hotspot::app;
  auto run = [&](const std::string& name, int (*cmd)(const PipelineConfig&)) {
    return guarded(name, [&] { return cmd(resolve(o)); });
  };
  if (*generate) return run("generate", cmd_generate);
  if (*ingest) return run("ingest", cmd_ingest);
  if (*featurize) return run("featurize", cmd_featurize);
  if (*train) return run("train", cmd_train);
  if (*evaluate) return run("evaluate", cmd_evaluate);
  if (*predict) return run("predict", cmd_predict);
  if (*schema_export) return guarded("schema export", [&] { return cmd_schema_export(schema_out); });
  return kExitInternal;
}
