#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hotspot/featurize.hpp"
#include "json.hpp"

// Histogram gradient-boosted trees with a softmax loss, per-class sample
// weights, gradient-based one-side sampling (GOSS) and exclusive feature
// bundling (EFB).
namespace hotspot::gbdt {

using features::FeatureMatrix;

/// kSquared squares the amplified child gradient sums before dividing by the
/// child sizes (variance gain). kPaperLiteral divides the unsquared sums; it
/// exists for comparison only.
enum class GainForm { kSquared, kPaperLiteral };

struct TrainParams {
  int num_classes = 2;
  int max_leaves = 120;
  double learning_rate = 0.1;
  int max_iterations = 500;
  /// Stop after this many iterations without a validation-loss improvement.
  int early_stopping_rounds = 20;
  /// Multiplies gradients and hessians of samples whose label is positive_class.
  double positive_class_weight = 5.0;
  int positive_class = 1;
  bool goss_enabled = true;
  double goss_a = 0.2;
  double goss_b = 0.1;
  bool efb_enabled = true;
  double efb_conflict_budget = 0.0;
  int histogram_bins = 255;
  int min_samples_per_leaf = 20;
  GainForm gain_form = GainForm::kSquared;
  std::uint64_t seed = 42;

  /// Throws Error(kInvalidParams).
  void validate() const;
};

nlohmann::json to_json(const TrainParams& params);
/// Missing keys keep their defaults.
TrainParams params_from_json(const nlohmann::json& doc, TrainParams base = {});

// ---------------------------------------------------------------------------
// Loss

/// Softmax with max-shift; probabilities sum to 1.
std::vector<double> softmax_proba(std::span<const double> scores);
void softmax_inplace(std::span<double> scores);

/// One-hot view of integer class labels: q(i, m) = 1 iff labels[i] == m.
struct LabelMatrix {
  int num_classes = 2;
  std::vector<int> labels;

  std::size_t size() const noexcept { return labels.size(); }
  double q(std::size_t i, int m) const noexcept { return labels[i] == m ? 1.0 : 0.0; }
};

/// r(i, m) = q(i, m) - P(i, m); probs and the result are row-major n x K.
std::vector<double> residuals(const LabelMatrix& labels, std::span<const double> probs);

/// Per-sample, per-class gradient (P - q) and softmax diagonal hessian
/// P (1 - P), both multiplied by `positive_weight` for samples of
/// `positive_class`. Row-major n x K.
struct GradientSet {
  std::size_t num_samples = 0;
  int num_classes = 2;
  std::vector<double> grad;
  std::vector<double> hess;
};

GradientSet weighted_gradients(const LabelMatrix& labels, std::span<const double> probs,
                               double positive_weight, int positive_class);

/// Mean of -log P(i, label_i).
double multiclass_log_loss(const LabelMatrix& labels, std::span<const double> probs);

// ---------------------------------------------------------------------------
// Binning

/// Maps raw values to histogram bins. Bin k holds values v with
/// bounds[k-1] < v <= bounds[k]; the last bin is open above.
class BinMapper {
 public:
  BinMapper() = default;
  explicit BinMapper(std::vector<double> bounds);

  /// Quantile boundaries over `values`, at most `max_bins` bins. With no more
  /// distinct values than bins every distinct value gets its own bin.
  static BinMapper fit(std::vector<double> values, int max_bins);

  std::uint16_t bin(double value) const noexcept;
  std::size_t num_bins() const noexcept { return bounds_.size() + 1; }
  /// Largest value mapped to bin `b` (b < num_bins() - 1).
  double upper_bound(std::size_t b) const { return bounds_[b]; }
  const std::vector<double>& bounds() const noexcept { return bounds_; }

 private:
  std::vector<double> bounds_;
};

struct BinnedData {
  std::vector<BinMapper> mappers;
  std::vector<std::vector<std::uint16_t>> columns;  // column-major
};

BinnedData bin_features(const FeatureMatrix& matrix, int max_bins);

// ---------------------------------------------------------------------------
// Exclusive feature bundling

/// Features sharing one histogram column. A member's non-zero bin b maps to
/// bundle bin offsets[k] + b - 1; bundle bin 0 means every member is at bin 0.
struct FeatureBundle {
  std::vector<std::size_t> features;
  std::vector<std::uint32_t> offsets;
  std::vector<std::uint32_t> member_bins;
  std::uint32_t num_bins = 1;
  /// Rows where two or more members were non-zero.
  std::size_t conflicts = 0;
};

struct BundleSet {
  std::vector<FeatureBundle> bundles;
  std::vector<std::vector<std::uint16_t>> columns;
  /// feature -> (bundle, member position)
  std::vector<std::pair<std::size_t, std::size_t>> location;

  /// Bin of original feature `f` for sample `i`.
  std::uint16_t feature_bin(std::size_t f, std::size_t i) const noexcept;
};

/// Greedy bundling: features ordered by non-zero count (descending, then
/// index) join the first bundle whose conflict rows stay within
/// `conflict_budget` * rows, else open a new bundle.
BundleSet efb_bundle(const std::vector<std::vector<std::uint16_t>>& binned,
                     std::span<const std::size_t> num_bins, double conflict_budget);

/// One bundle per feature (EFB disabled).
BundleSet singleton_bundles(const std::vector<std::vector<std::uint16_t>>& binned,
                            std::span<const std::size_t> num_bins);

/// (feature, bin) stored in a bundle cell; std::nullopt when every member is at bin 0.
std::optional<std::pair<std::size_t, std::uint16_t>> unbundle(const FeatureBundle& bundle,
                                                              std::uint32_t value);

// ---------------------------------------------------------------------------
// GOSS

/// Sample selection for one boosting iteration: the top-gradient set A, the
/// random remainder sample B and the amplification (1 - a) / b applied to B.
struct GossSplitContext {
  std::size_t n = 0;
  std::vector<std::size_t> top;      // A, ascending
  std::vector<std::size_t> sampled;  // B, ascending
  double amplification = 1.0;
  /// A and B merged, ascending.
  std::vector<std::size_t> used;
  /// 1 for A, amplification for B, 0 for samples left out.
  std::vector<double> weights;
};

/// |A| = ceil(a n) largest magnitudes (ties by lower index), |B| = ceil(b n)
/// drawn without replacement from the rest.
GossSplitContext goss_sample(std::span<const double> magnitudes, double a, double b,
                             std::uint64_t seed);
/// Every sample with weight 1.
GossSplitContext full_sample(std::size_t n);

/// Split value of threshold `threshold` on one binned feature over the node
/// samples `node` (default: every used sample). Throws Error(kDegenerateSplit)
/// when a child has fewer than `min_samples_per_leaf` samples.
double split_gain(const GossSplitContext& ctx, std::span<const double> gradients,
                  std::span<const std::uint16_t> feature_bins, std::uint16_t threshold,
                  std::size_t min_samples_per_leaf, GainForm form = GainForm::kSquared,
                  std::span<const std::size_t> node = {});

// ---------------------------------------------------------------------------
// Trees and ensembles

struct TreeNode {
  int feature = -1;  // -1 for leaves
  std::uint16_t threshold_bin = 0;
  double threshold = 0.0;  // left iff value <= threshold
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf output, learning rate applied
  double gain = 0.0;   // split improvement
  std::size_t count = 0;

  bool is_leaf() const noexcept { return feature < 0; }
};

struct Tree {
  int class_id = 0;
  int iteration = 0;
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  std::size_t num_leaves() const noexcept;
  /// `row` is in the ensemble's column order.
  double predict(std::span<const double> row) const;
};

struct IterationLog {
  int iteration = 0;
  double train_loss = 0.0;
  std::optional<double> valid_loss;
};

struct Ensemble {
  TrainParams params;
  std::vector<std::string> columns;
  std::vector<BinMapper> mappers;
  std::vector<FeatureBundle> bundles;
  /// Iteration-major, class-minor.
  std::vector<Tree> trees;

  int num_classes() const noexcept { return params.num_classes; }
  int iterations() const noexcept {
    return params.num_classes == 0 ? 0 : static_cast<int>(trees.size()) / params.num_classes;
  }
};

/// Throws Error(kSingleClassData) / Error(kNonFiniteInput) / Error(kInvalidParams).
Ensemble train(const FeatureMatrix& matrix, const TrainParams& params,
               const FeatureMatrix* validation = nullptr, std::vector<IterationLog>* log = nullptr);

struct Probabilities {
  std::size_t rows = 0;
  int classes = 2;
  std::vector<double> values;  // row-major

  double at(std::size_t r, int m) const { return values[r * static_cast<std::size_t>(classes) + static_cast<std::size_t>(m)]; }
  std::vector<double> column(int m) const;
};

/// Columns are matched by name. Throws Error(kColumnMismatch).
Probabilities predict(const Ensemble& ensemble, const FeatureMatrix& rows);

struct Importance {
  std::string column;
  double gain = 0.0;
  std::size_t splits = 0;
};

/// Every column, by total split gain descending, ties by name.
std::vector<Importance> feature_importance(const Ensemble& ensemble);

nlohmann::json to_json(const Ensemble& ensemble);
/// Throws Error(kBadModel).
Ensemble ensemble_from_json(const nlohmann::json& doc);

}  // namespace hotspot::gbdt
