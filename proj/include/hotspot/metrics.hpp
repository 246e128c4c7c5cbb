#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace hotspot::metrics {

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const noexcept { return tp + fp + tn + fn; }
  bool operator==(const ConfusionCounts&) const = default;
};

/// Row r is predicted positive iff scores[r] >= threshold; labels are 0/1.
/// Throws Error(kLengthMismatch), Error(kInvalidParams) for a threshold outside [0, 1].
ConfusionCounts confusion(std::span<const int> labels, std::span<const double> scores,
                          double threshold = 0.5);

struct Prf1 {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Each ratio is 0 when its denominator is 0.
Prf1 prf1(const ConfusionCounts& c);

enum class CurveKind { kRoc, kPr };

struct CurvePoint {
  double threshold = 0.0;
  double x = 0.0;
  double y = 0.0;
};

struct Curve {
  CurveKind kind = CurveKind::kRoc;
  std::vector<CurvePoint> points;
  double area = 0.0;
};

/// (FPR, TPR) after each distinct score, descending, between (0,0) and (1,1);
/// trapezoid area. Throws Error(kSingleClassLabels).
Curve roc_curve(std::span<const int> labels, std::span<const double> scores);

/// (recall, precision) after each distinct score, descending; area is the
/// average precision sum of (R_k - R_{k-1}) P_k. Throws Error(kNoPositives).
Curve pr_curve(std::span<const int> labels, std::span<const double> scores);

struct WeightSweepRow {
  double weight = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct WeightSweep {
  std::vector<WeightSweepRow> rows;
  /// First weight with the largest F1.
  double best_weight = 0.0;
};

/// `score_fn(w)` trains with positive weight w and returns positive-class
/// scores aligned with `labels`. Throws Error(kInvalidParams) for an empty list.
WeightSweep weight_sweep(const std::function<std::vector<double>(double)>& score_fn,
                         std::span<const int> labels, std::span<const double> weights,
                         double threshold = 0.5);

void write_curve_csv(std::ostream& out, const Curve& curve);
void write_sweep_csv(std::ostream& out, const WeightSweep& sweep);
nlohmann::json to_json(const ConfusionCounts& c);
nlohmann::json to_json(const Prf1& m);

}  // namespace hotspot::metrics
