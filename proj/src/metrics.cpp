#include "hotspot/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "hotspot/error.hpp"
#include "hotspot/text_io.hpp"

namespace hotspot::metrics {

namespace {

void check_lengths(std::span<const int> labels, std::span<const double> scores) {
  if (labels.size() != scores.size()) {
    throw Error(ErrorCode::kLengthMismatch, "labels and scores differ in length");
  }
}

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

// Cumulative (tp, fp) after each group of equal scores, highest score first.
struct Step {
  double threshold;
  std::size_t tp;
  std::size_t fp;
};

std::vector<Step> descending_steps(std::span<const int> labels, std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<Step> steps;
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const std::size_t i = order[k];
    (labels[i] == 1 ? tp : fp) += 1;
    if (k + 1 == order.size() || scores[order[k + 1]] != scores[i]) {
      steps.push_back({scores[i], tp, fp});
    }
  }
  return steps;
}

}  // namespace

ConfusionCounts confusion(std::span<const int> labels, std::span<const double> scores,
                          double threshold) {
  check_lengths(labels, scores);
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw Error(ErrorCode::kInvalidParams, "threshold must be in [0, 1]");
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    const bool actual = labels[i] == 1;
    if (predicted) {
      ++(actual ? c.tp : c.fp);
    } else {
      ++(actual ? c.fn : c.tn);
    }
  }
  return c;
}

Prf1 prf1(const ConfusionCounts& c) {
  Prf1 m;
  m.precision = ratio(c.tp, c.tp + c.fp);
  m.recall = ratio(c.tp, c.tp + c.fn);
  const double s = m.precision + m.recall;
  m.f1 = s == 0.0 ? 0.0 : 2.0 * m.precision * m.recall / s;
  return m;
}

Curve roc_curve(std::span<const int> labels, std::span<const double> scores) {
  check_lengths(labels, scores);
  const auto positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  const std::size_t negatives = labels.size() - positives;
  if (positives == 0 || negatives == 0) {
    throw Error(ErrorCode::kSingleClassLabels, "ROC needs both classes");
  }
  Curve curve;
  curve.kind = CurveKind::kRoc;
  const auto steps = descending_steps(labels, scores);
  curve.points.push_back({std::nextafter(steps.front().threshold, HUGE_VAL), 0.0, 0.0});
  // Integer trapezoid sum: each segment adds dFP * (tp_prev + tp).
  std::size_t twice_area = 0;
  std::size_t prev_tp = 0;
  std::size_t prev_fp = 0;
  for (const Step& s : steps) {
    twice_area += (s.fp - prev_fp) * (s.tp + prev_tp);
    curve.points.push_back({s.threshold, ratio(s.fp, negatives), ratio(s.tp, positives)});
    prev_tp = s.tp;
    prev_fp = s.fp;
  }
  if (curve.points.back().x != 1.0 || curve.points.back().y != 1.0) {
    curve.points.push_back({steps.back().threshold, 1.0, 1.0});
  }
  curve.area = static_cast<double>(twice_area) /
               (2.0 * static_cast<double>(positives) * static_cast<double>(negatives));
  return curve;
}

Curve pr_curve(std::span<const int> labels, std::span<const double> scores) {
  check_lengths(labels, scores);
  const auto positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  if (positives == 0) throw Error(ErrorCode::kNoPositives, "PR curve needs a positive label");
  Curve curve;
  curve.kind = CurveKind::kPr;
  double prev_recall = 0.0;
  for (const Step& s : descending_steps(labels, scores)) {
    const double recall = ratio(s.tp, positives);
    const double precision = ratio(s.tp, s.tp + s.fp);
    curve.area += (recall - prev_recall) * precision;
    curve.points.push_back({s.threshold, recall, precision});
    prev_recall = recall;
  }
  return curve;
}

WeightSweep weight_sweep(const std::function<std::vector<double>(double)>& score_fn,
                         std::span<const int> labels, std::span<const double> weights,
                         double threshold) {
  if (weights.empty()) throw Error(ErrorCode::kInvalidParams, "weight list is empty");
  WeightSweep sweep;
  double best_f1 = -1.0;
  for (double w : weights) {
    const std::vector<double> scores = score_fn(w);
    const Prf1 m = prf1(confusion(labels, scores, threshold));
    sweep.rows.push_back({w, m.precision, m.recall, m.f1});
    if (m.f1 > best_f1) {
      best_f1 = m.f1;
      sweep.best_weight = w;
    }
  }
  return sweep;
}

void write_curve_csv(std::ostream& out, const Curve& curve) {
  std::string text = "threshold,x,y\n";
  for (const CurvePoint& p : curve.points) {
    text::append_double(text, p.threshold);
    text += ',';
    text::append_double(text, p.x);
    text += ',';
    text::append_double(text, p.y);
    text += '\n';
  }
  out << text;
}

void write_sweep_csv(std::ostream& out, const WeightSweep& sweep) {
  std::string text = "weight,precision,recall,f1\n";
  for (const WeightSweepRow& r : sweep.rows) {
    for (double v : {r.weight, r.precision, r.recall}) {
      text::append_double(text, v);
      text += ',';
    }
    text::append_double(text, r.f1);
    text += '\n';
  }
  out << text;
}

nlohmann::json to_json(const ConfusionCounts& c) {
  return {{"tp", c.tp}, {"fp", c.fp}, {"tn", c.tn}, {"fn", c.fn}};
}

nlohmann::json to_json(const Prf1& m) {
  return {{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}};
}

}  // namespace hotspot::metrics
