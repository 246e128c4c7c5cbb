#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <unordered_map>

#include "hotspot/app.hpp"
#include "hotspot/ingest.hpp"
#include "hotspot/text_io.hpp"

namespace hotspot::app {

namespace fs = std::filesystem;
using features::FeatureMatrix;
using schema::Plane;

namespace {

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  return in;
}

FeatureMatrix load_features(const fs::path& path) {
  auto in = open_in(path);
  return features::read_features_csv(in);
}

void save_features(const fs::path& path, const FeatureMatrix& m) {
  auto out = open_out(path);
  features::write_features_csv(out, m);
}

void write_json(const fs::path& path, const nlohmann::json& doc) {
  text::write_file(path, doc.dump(2) + "\n");
}

gbdt::Ensemble load_model(const fs::path& path) {
  const auto doc = nlohmann::json::parse(text::read_file(path), nullptr, false);
  if (doc.is_discarded()) throw Error(ErrorCode::kBadModel, path.string() + " is not valid JSON");
  return gbdt::ensemble_from_json(doc);
}

void require_labels(const FeatureMatrix& m, const std::string& what) {
  for (int l : m.labels) {
    if (l != 0 && l != 1) throw Error(ErrorCode::kMissingLabel, what + " has a row without a 0/1 label");
  }
}

const FeatureMatrix* optional_matrix(const FeatureMatrix& m) { return m.rows() > 0 ? &m : nullptr; }

}  // namespace

SplitMatrices split_by_user(const FeatureMatrix& matrix, double ratio, double validation_fraction,
                            std::uint64_t seed) {
  std::vector<std::string> users;
  for (const auto& k : matrix.keys) users.push_back(k.user_id);
  std::sort(users.begin(), users.end());
  users.erase(std::unique(users.begin(), users.end()), users.end());

  std::vector<std::pair<std::uint64_t, std::string>> ranked;
  ranked.reserve(users.size());
  for (auto& u : users) ranked.emplace_back(text::fnv1a(u, seed), std::move(u));
  std::sort(ranked.begin(), ranked.end());

  const auto n_train = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(ranked.size())));
  auto n_valid = static_cast<std::size_t>(std::llround(validation_fraction * static_cast<double>(n_train)));
  if (n_valid >= n_train) n_valid = n_train == 0 ? 0 : n_train - 1;

  // 0 = test, 1 = train, 2 = validation
  std::unordered_map<std::string, int> side;
  for (std::size_t k = 0; k < ranked.size(); ++k) {
    int s = 0;
    if (k < n_train) s = k + n_valid >= n_train ? 2 : 1;
    side.emplace(ranked[k].second, s);
  }
  SplitMatrices out;
  auto of = [&](std::size_t r) { return side.at(matrix.keys[r].user_id); };
  out.train = matrix.filter([&](std::size_t r) { return of(r) == 1; });
  out.valid = matrix.filter([&](std::size_t r) { return of(r) == 2; });
  out.test = matrix.filter([&](std::size_t r) { return of(r) == 0; });
  return out;
}

metrics::WeightSweep run_weight_sweep(const FeatureMatrix& train, const FeatureMatrix& valid,
                                      const FeatureMatrix& eval, const gbdt::TrainParams& params,
                                      const std::vector<double>& weights, double threshold) {
  auto score = [&](double w) {
    gbdt::TrainParams p = params;
    p.positive_class_weight = w;
    const auto model = gbdt::train(train, p, optional_matrix(valid));
    return gbdt::predict(model, eval).column(p.positive_class);
  };
  return metrics::weight_sweep(score, eval.labels, weights, threshold);
}

int cmd_generate(const PipelineConfig& config) {
  config.validate();
  const auto data = synth::generate(config.synth);
  synth::write_dataset(config.data_dir, data, config.synth);
  std::cout << "generated " << data.labels.size() << " users, " << data.cp.size() << " cp and "
            << data.up.size() << " up records in " << config.data_dir.string() << "\n";
  return kExitOk;
}

int cmd_ingest(const PipelineConfig& config) {
  config.validate();
  const auto& registry = schema::default_schema();
  std::optional<ingest::Imputation> persisted;
  if (!config.imputation_means.empty()) {
    const auto doc = nlohmann::json::parse(text::read_file(config.imputation_means), nullptr, false);
    if (doc.is_discarded()) throw Error(ErrorCode::kInvalidConfig, "imputation means file is not valid JSON");
    persisted = ingest::imputation_from_json(doc);
  }
  nlohmann::json report;
  ingest::Imputation imputation;
  for (Plane plane : {Plane::kControl, Plane::kUser}) {
    const std::string prefix(schema::plane_prefix(plane));
    auto in = open_in(config.data_dir / (prefix + ".csv"));
    auto parsed = ingest::parse_csv(in, registry, plane);
    auto checked = ingest::consistency_check(std::move(parsed.records), registry);
    checked.report.parse_errors = parsed.errors.size();
    ingest::Imputation imp;
    if (persisted) {
      ingest::apply_imputation(checked.kept, registry, *persisted);
      imp = *persisted;
    } else {
      imp = ingest::impute_numeric(checked.kept, registry);
    }
    // Means of the other plane's fields are not part of this plane's report.
    for (std::size_t idx : registry.plane_fields(plane)) {
      const auto& name = registry.base()[idx].name;
      if (auto it = imp.means.find(name); it != imp.means.end()) {
        checked.report.imputation_means[name] = it->second;
        imputation.means[name] = it->second;
      }
      if (std::find(imp.all_missing.begin(), imp.all_missing.end(), name) != imp.all_missing.end()) {
        checked.report.all_missing_columns.push_back(name);
        imputation.all_missing.push_back(name);
      }
    }
    auto out = open_out(config.work_dir / ("clean_" + prefix + ".csv"));
    ingest::write_csv(out, std::span<const ingest::RawRecord>(checked.kept), registry, plane);
    report[std::string(schema::to_string(plane))] = ingest::to_json(checked.report);
    std::cout << prefix << ": kept " << checked.report.rows_kept << " of " << checked.report.rows_read
              << " (invalid " << checked.report.rows_invalid << ", erroneous "
              << checked.report.rows_erroneous << ", duplicate " << checked.report.rows_duplicate
              << ", unparseable " << parsed.errors.size() << ")\n";
  }
  write_json(config.work_dir / "ingest_report.json", report);
  write_json(config.work_dir / "imputation_means.json", ingest::to_json(imputation));
  return kExitOk;
}

int cmd_featurize(const PipelineConfig& config) {
  config.validate();
  const auto& registry = schema::default_schema();
  std::vector<ingest::CleanRecord> records[2];
  for (Plane plane : {Plane::kControl, Plane::kUser}) {
    const std::string prefix(schema::plane_prefix(plane));
    auto in = open_in(config.work_dir / ("clean_" + prefix + ".csv"));
    auto parsed = ingest::parse_csv(in, registry, plane);
    if (!parsed.errors.empty()) {
      throw Error(ErrorCode::kHeaderMismatch, "clean_" + prefix + ".csv has unparseable rows; rerun ingest");
    }
    records[plane == Plane::kControl ? 0 : 1] = ingest::derive_fields(std::move(parsed.records), registry);
  }
  features::LabelMap labels;
  const fs::path labels_path = config.data_dir / "labels.csv";
  const bool labelled = fs::exists(labels_path);
  if (labelled) {
    auto in = open_in(labels_path);
    labels = synth::read_labels_csv(in);
  }
  const auto matrix = features::build_matrix(records[0], records[1], registry, config.window_s,
                                             labelled ? &labels : nullptr);
  save_features(config.work_dir / "features.csv", matrix);
  write_json(config.work_dir / "columns.json", features::columns_json(registry));
  std::cout << "featurized " << matrix.rows() << " windows x " << matrix.cols() << " columns\n";
  return kExitOk;
}

int cmd_train(const PipelineConfig& config) {
  config.validate();
  const auto matrix = load_features(config.work_dir / "features.csv");
  require_labels(matrix, "features.csv");
  const auto split = split_by_user(matrix, config.split_ratio, config.validation_fraction, config.split_seed);
  save_features(config.work_dir / "train_features.csv", split.train);
  save_features(config.work_dir / "valid_features.csv", split.valid);
  save_features(config.work_dir / "test_features.csv", split.test);

  std::vector<gbdt::IterationLog> log;
  const auto model = gbdt::train(split.train, config.train, optional_matrix(split.valid), &log);
  text::write_file(config.work_dir / "model.json", gbdt::to_json(model).dump(1) + "\n");

  std::string csv = "iteration,train_loss,valid_loss\n";
  for (const auto& e : log) {
    csv += std::to_string(e.iteration);
    csv += ',';
    text::append_double(csv, e.train_loss);
    csv += ',';
    if (e.valid_loss) text::append_double(csv, *e.valid_loss);
    csv += '\n';
  }
  text::write_file(config.work_dir / "train_log.csv", csv);
  std::cout << "trained " << model.iterations() << " iterations on " << split.train.rows()
            << " windows (validation " << split.valid.rows() << ", test " << split.test.rows() << ")\n";
  return kExitOk;
}

int cmd_evaluate(const PipelineConfig& config) {
  config.validate();
  const auto model = load_model(config.work_dir / "model.json");
  const auto test = load_features(config.work_dir / "test_features.csv");
  require_labels(test, "test_features.csv");
  const auto probs = gbdt::predict(model, test);
  const auto scores = probs.column(model.params.positive_class);
  std::vector<int> labels(test.labels.size());
  for (std::size_t r = 0; r < labels.size(); ++r) {
    labels[r] = test.labels[r] == model.params.positive_class ? 1 : 0;
  }

  const auto counts = metrics::confusion(labels, scores, config.threshold);
  const auto m = metrics::prf1(counts);
  const auto roc = metrics::roc_curve(labels, scores);
  const auto pr = metrics::pr_curve(labels, scores);
  {
    auto out = open_out(config.work_dir / "roc.csv");
    metrics::write_curve_csv(out, roc);
  }
  {
    auto out = open_out(config.work_dir / "pr.csv");
    metrics::write_curve_csv(out, pr);
  }
  std::string csv = "rank,column,gain,splits\n";
  std::size_t rank = 0;
  for (const auto& imp : gbdt::feature_importance(model)) {
    csv += std::to_string(++rank) + ',' + imp.column + ',';
    text::append_double(csv, imp.gain);
    csv += ',' + std::to_string(imp.splits) + '\n';
  }
  text::write_file(config.work_dir / "importance.csv", csv);

  nlohmann::json report = {{"rows", test.rows()},
                           {"positives", counts.tp + counts.fn},
                           {"threshold", config.threshold},
                           {"confusion", metrics::to_json(counts)},
                           {"precision", m.precision},
                           {"recall", m.recall},
                           {"f1", m.f1},
                           {"roc_auc", roc.area},
                           {"pr_area", pr.area},
                           {"pr_area_method", "average precision (right-step sum), not trapezoid"},
                           {"iterations", model.iterations()}};
  if (!config.sweep_weights.empty()) {
    const auto train = load_features(config.work_dir / "train_features.csv");
    const auto valid = load_features(config.work_dir / "valid_features.csv");
    FeatureMatrix eval = test;
    eval.labels = labels;
    const auto sweep = run_weight_sweep(train, valid, eval, model.params, config.sweep_weights, config.threshold);
    auto out = open_out(config.work_dir / "weight_sweep.csv");
    metrics::write_sweep_csv(out, sweep);
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : sweep.rows) {
      rows.push_back({{"weight", r.weight}, {"precision", r.precision}, {"recall", r.recall}, {"f1", r.f1}});
    }
    report["weight_sweep"] = {{"rows", rows}, {"best_weight", sweep.best_weight}};
  }
  write_json(config.work_dir / "eval.json", report);
  std::cout << "precision " << m.precision << " recall " << m.recall << " f1 " << m.f1 << " auc "
            << roc.area << "\n";
  return kExitOk;
}

int cmd_predict(const PipelineConfig& config) {
  config.validate();
  const auto model = load_model(config.work_dir / "model.json");
  const fs::path input =
      config.predict_input.empty() ? config.work_dir / "test_features.csv" : config.predict_input;
  FeatureMatrix rows;
  if (fs::exists(input) && fs::file_size(input) == 0) {
    rows.columns = model.columns;
  } else {
    rows = load_features(input);
  }
  const auto probs = gbdt::predict(model, rows);
  const std::int64_t window_ms = config.window_s * 1000;

  std::int64_t latest = 0;
  for (const auto& k : rows.keys) latest = std::max(latest, k.window_start_ms);
  const std::int64_t hour_begin = latest + window_ms - 3600 * 1000;

  std::string csv = "user_id,window_start,p_affected,flag\n";
  std::map<std::string, int> flagged;
  for (std::size_t r = 0; r < rows.rows(); ++r) {
    const double p = probs.at(r, model.params.positive_class);
    const bool flag = p >= config.threshold;
    csv += rows.keys[r].user_id + ',' + std::to_string(rows.keys[r].window_start_ms) + ',';
    text::append_double(csv, p);
    csv += flag ? ",1\n" : ",0\n";
    if (flag && rows.keys[r].window_start_ms >= hour_begin) ++flagged[rows.keys[r].user_id];
  }
  text::write_file(config.work_dir / "predictions.csv", csv);

  std::string users = "user_id,flagged_windows\n";
  std::size_t listed = 0;
  for (const auto& [user, count] : flagged) {
    if (count > config.affected_min_windows) {
      users += user + ',' + std::to_string(count) + '\n';
      ++listed;
    }
  }
  text::write_file(config.work_dir / "affected_users.csv", users);
  std::cout << "scored " << rows.rows() << " windows, " << listed << " affected users\n";
  return kExitOk;
}

int cmd_schema_export(const fs::path& out) {
  const std::string doc = schema::to_json(schema::default_schema()).dump(2) + "\n";
  if (out.empty()) {
    std::cout << doc;
  } else {
    text::write_file(out, doc);
  }
  return kExitOk;
}

int guarded(const std::string& command, const std::function<int()>& body) {
  try {
    return body();
  } catch (const Error& e) {
    std::cerr << "hotspot " << command << ": " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "hotspot " << command << ": " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "hotspot " << command << ": internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}

}  // namespace hotspot::app
