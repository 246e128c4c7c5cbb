#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <unordered_map>

#include "hotspot/error.hpp"
#include "hotspot/gbdt.hpp"
#include "hotspot/rng.hpp"
#include "tree_learner.hpp"

namespace hotspot::gbdt {

namespace {

void check_finite(const FeatureMatrix& m, const char* what) {
  for (double v : m.values) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::kNonFiniteInput, std::string(what) + " contains a non-finite value");
    }
  }
}

LabelMatrix label_matrix(const FeatureMatrix& m, int num_classes, const char* what) {
  LabelMatrix labels{num_classes, m.labels};
  for (int l : labels.labels) {
    if (l < 0 || l >= num_classes) {
      throw Error(ErrorCode::kMissingLabel,
                  std::string(what) + " has a row without a valid class label");
    }
  }
  return labels;
}

// Values of `rows` rearranged into the ensemble's column order.
std::vector<double> aligned_values(const std::vector<std::string>& columns, const FeatureMatrix& rows) {
  if (rows.cols() != columns.size()) {
    throw Error(ErrorCode::kColumnMismatch, "expected " + std::to_string(columns.size()) +
                                                " columns, got " + std::to_string(rows.cols()));
  }
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t c = 0; c < rows.cols(); ++c) index.emplace(rows.columns[c], c);
  std::vector<std::size_t> source(columns.size());
  bool identity = true;
  for (std::size_t c = 0; c < columns.size(); ++c) {
    auto it = index.find(columns[c]);
    if (it == index.end()) throw Error(ErrorCode::kColumnMismatch, "missing column '" + columns[c] + "'");
    source[c] = it->second;
    identity = identity && it->second == c;
  }
  if (identity) return rows.values;
  std::vector<double> out(rows.values.size());
  const std::size_t width = columns.size();
  for (std::size_t r = 0; r < rows.rows(); ++r) {
    for (std::size_t c = 0; c < width; ++c) out[r * width + c] = rows.values[r * width + source[c]];
  }
  return out;
}

}  // namespace

std::size_t Tree::num_leaves() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

double Tree::predict(std::span<const double> row) const {
  std::size_t k = 0;
  while (!nodes[k].is_leaf()) {
    const TreeNode& node = nodes[k];
    k = static_cast<std::size_t>(row[static_cast<std::size_t>(node.feature)] <= node.threshold
                                     ? node.left
                                     : node.right);
  }
  return nodes[k].value;
}

Ensemble train(const FeatureMatrix& matrix, const TrainParams& params,
               const FeatureMatrix* validation, std::vector<IterationLog>* log) {
  params.validate();
  const int num_classes = params.num_classes;
  const auto k_classes = static_cast<std::size_t>(num_classes);
  const LabelMatrix labels = label_matrix(matrix, num_classes, "training data");
  {
    std::vector<bool> present(k_classes, false);
    for (int l : labels.labels) present[static_cast<std::size_t>(l)] = true;
    if (std::count(present.begin(), present.end(), true) < 2) {
      throw Error(ErrorCode::kSingleClassData, "training labels contain fewer than two classes");
    }
  }
  check_finite(matrix, "training data");

  const std::size_t n = matrix.rows();
  const std::size_t features = matrix.cols();

  Ensemble model;
  model.params = params;
  model.columns = matrix.columns;

  BinnedData binned = bin_features(matrix, params.histogram_bins);
  std::vector<std::size_t> num_bins(features);
  for (std::size_t f = 0; f < features; ++f) num_bins[f] = binned.mappers[f].num_bins();
  const BundleSet data = params.efb_enabled
                             ? efb_bundle(binned.columns, num_bins, params.efb_conflict_budget)
                             : singleton_bundles(binned.columns, num_bins);
  binned.columns.clear();
  binned.columns.shrink_to_fit();
  model.mappers = std::move(binned.mappers);
  model.bundles = data.bundles;

  std::vector<double> valid_values;
  LabelMatrix valid_labels;
  std::vector<double> valid_scores;
  if (validation != nullptr) {
    valid_labels = label_matrix(*validation, num_classes, "validation data");
    check_finite(*validation, "validation data");
    valid_values = aligned_values(model.columns, *validation);
    valid_scores.assign(validation->rows() * k_classes, 0.0);
  }

  const detail::TreeLearner learner(data, model.mappers, params);
  std::vector<double> scores(n * k_classes, 0.0);
  std::vector<double> probs(n * k_classes);
  std::vector<double> magnitude(n);
  std::vector<double> grad_m(n);
  std::vector<double> hess_m(n);
  std::vector<double> scratch;

  auto probabilities = [&](const std::vector<double>& raw, std::vector<double>& out) {
    out = raw;
    for (std::size_t i = 0; i * k_classes < out.size(); ++i) {
      softmax_inplace({out.data() + i * k_classes, k_classes});
    }
  };

  double best_loss = std::numeric_limits<double>::infinity();
  int best_iteration = -1;
  for (int it = 0; it < params.max_iterations; ++it) {
    probabilities(scores, probs);
    const GradientSet g =
        weighted_gradients(labels, probs, params.positive_class_weight, params.positive_class);

    GossSplitContext sample;
    if (params.goss_enabled) {
      for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t m = 0; m < k_classes; ++m) s += g.grad[i * k_classes + m] * g.grad[i * k_classes + m];
        magnitude[i] = std::sqrt(s);
      }
      sample = goss_sample(magnitude, params.goss_a, params.goss_b,
                           mix_seed(params.seed, static_cast<std::uint64_t>(it)));
    } else {
      sample = full_sample(n);
    }

    std::vector<Tree> round;
    bool any_split = false;
    for (std::size_t m = 0; m < k_classes; ++m) {
      for (std::size_t i = 0; i < n; ++i) {
        grad_m[i] = g.grad[i * k_classes + m];
        hess_m[i] = g.hess[i * k_classes + m];
      }
      Tree tree = learner.grow(grad_m, hess_m, sample);
      tree.class_id = static_cast<int>(m);
      tree.iteration = it;
      any_split = any_split || tree.num_leaves() > 1;
      round.push_back(std::move(tree));
    }
    if (!any_split) break;

    for (std::size_t m = 0; m < k_classes; ++m) {
      const Tree& tree = round[m];
      for (std::size_t i = 0; i < n; ++i) scores[i * k_classes + m] += tree.nodes[learner.leaf_of(tree, i)].value;
      if (validation != nullptr) {
        const std::size_t width = features;
        for (std::size_t r = 0; r < validation->rows(); ++r) {
          valid_scores[r * k_classes + m] += tree.predict({valid_values.data() + r * width, width});
        }
      }
    }
    for (Tree& t : round) model.trees.push_back(std::move(t));

    IterationLog entry;
    entry.iteration = it;
    probabilities(scores, scratch);
    entry.train_loss = multiclass_log_loss(labels, scratch);
    if (validation != nullptr) {
      probabilities(valid_scores, scratch);
      const double loss = multiclass_log_loss(valid_labels, scratch);
      entry.valid_loss = loss;
      if (loss < best_loss) {
        best_loss = loss;
        best_iteration = it;
      }
    }
    if (log != nullptr) log->push_back(entry);
    if (validation != nullptr && it - best_iteration >= params.early_stopping_rounds) break;
  }
  if (validation != nullptr && best_iteration >= 0) {
    model.trees.resize(static_cast<std::size_t>(best_iteration + 1) * k_classes);
  }
  return model;
}

std::vector<double> Probabilities::column(int m) const {
  std::vector<double> out(rows);
  for (std::size_t r = 0; r < rows; ++r) out[r] = at(r, m);
  return out;
}

Probabilities predict(const Ensemble& ensemble, const FeatureMatrix& rows) {
  const std::vector<double> values = aligned_values(ensemble.columns, rows);
  for (double v : values) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kNonFiniteInput, "prediction input is not finite");
  }
  const auto k = static_cast<std::size_t>(ensemble.num_classes());
  const std::size_t width = ensemble.columns.size();
  Probabilities out;
  out.rows = rows.rows();
  out.classes = ensemble.num_classes();
  out.values.assign(out.rows * k, 0.0);
  for (std::size_t r = 0; r < out.rows; ++r) {
    std::span<const double> row(values.data() + r * width, width);
    std::span<double> scores(out.values.data() + r * k, k);
    for (const Tree& tree : ensemble.trees) scores[static_cast<std::size_t>(tree.class_id)] += tree.predict(row);
    softmax_inplace(scores);
  }
  return out;
}

std::vector<Importance> feature_importance(const Ensemble& ensemble) {
  std::vector<Importance> out(ensemble.columns.size());
  for (std::size_t c = 0; c < out.size(); ++c) out[c].column = ensemble.columns[c];
  for (const Tree& tree : ensemble.trees) {
    for (const TreeNode& node : tree.nodes) {
      if (node.is_leaf()) continue;
      Importance& imp = out[static_cast<std::size_t>(node.feature)];
      imp.gain += node.gain;
      ++imp.splits;
    }
  }
  std::sort(out.begin(), out.end(), [](const Importance& a, const Importance& b) {
    if (a.gain != b.gain) return a.gain > b.gain;
    return a.column < b.column;
  });
  return out;
}

}  // namespace hotspot::gbdt
