#include <algorithm>
#include <cmath>

#include "hotspot/error.hpp"
#include "hotspot/gbdt.hpp"

namespace hotspot::gbdt {

namespace {

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::kInvalidParams, what); }

std::string_view to_string(GainForm form) {
  return form == GainForm::kSquared ? "squared" : "paper_literal";
}

}  // namespace

void TrainParams::validate() const {
  if (num_classes < 2) bad("num_classes must be at least 2");
  if (max_leaves < 2) bad("max_leaves must be at least 2");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) bad("learning_rate must be positive");
  if (max_iterations < 0) bad("max_iterations must be non-negative");
  if (early_stopping_rounds < 1) bad("early_stopping_rounds must be positive");
  if (!(positive_class_weight > 0.0) || !std::isfinite(positive_class_weight)) {
    bad("positive_class_weight must be positive");
  }
  if (positive_class < 0 || positive_class >= num_classes) bad("positive_class out of range");
  if (!(goss_a > 0.0 && goss_a <= 1.0)) bad("goss_a must be in (0, 1]");
  if (!(goss_b >= 0.0 && goss_a + goss_b <= 1.0)) bad("goss_b must be in [0, 1 - goss_a]");
  if (!(efb_conflict_budget >= 0.0 && efb_conflict_budget <= 1.0)) {
    bad("efb_conflict_budget must be in [0, 1]");
  }
  if (histogram_bins < 2 || histogram_bins > 65535) bad("histogram_bins must be in [2, 65535]");
  if (min_samples_per_leaf < 1) bad("min_samples_per_leaf must be positive");
}

nlohmann::json to_json(const TrainParams& p) {
  return {{"num_classes", p.num_classes},
          {"max_leaves", p.max_leaves},
          {"learning_rate", p.learning_rate},
          {"max_iterations", p.max_iterations},
          {"early_stopping_rounds", p.early_stopping_rounds},
          {"positive_class_weight", p.positive_class_weight},
          {"positive_class", p.positive_class},
          {"goss_enabled", p.goss_enabled},
          {"goss_a", p.goss_a},
          {"goss_b", p.goss_b},
          {"efb_enabled", p.efb_enabled},
          {"efb_conflict_budget", p.efb_conflict_budget},
          {"histogram_bins", p.histogram_bins},
          {"min_samples_per_leaf", p.min_samples_per_leaf},
          {"gain_form", to_string(p.gain_form)},
          {"seed", p.seed}};
}

TrainParams params_from_json(const nlohmann::json& doc, TrainParams p) {
  try {
    p.num_classes = doc.value("num_classes", p.num_classes);
    p.max_leaves = doc.value("max_leaves", p.max_leaves);
    p.learning_rate = doc.value("learning_rate", p.learning_rate);
    p.max_iterations = doc.value("max_iterations", p.max_iterations);
    p.early_stopping_rounds = doc.value("early_stopping_rounds", p.early_stopping_rounds);
    p.positive_class_weight = doc.value("positive_class_weight", p.positive_class_weight);
    p.positive_class = doc.value("positive_class", p.positive_class);
    p.goss_enabled = doc.value("goss_enabled", p.goss_enabled);
    p.goss_a = doc.value("goss_a", p.goss_a);
    p.goss_b = doc.value("goss_b", p.goss_b);
    p.efb_enabled = doc.value("efb_enabled", p.efb_enabled);
    p.efb_conflict_budget = doc.value("efb_conflict_budget", p.efb_conflict_budget);
    p.histogram_bins = doc.value("histogram_bins", p.histogram_bins);
    p.min_samples_per_leaf = doc.value("min_samples_per_leaf", p.min_samples_per_leaf);
    p.seed = doc.value("seed", p.seed);
    if (doc.contains("gain_form")) {
      const auto form = doc.at("gain_form").get<std::string>();
      if (form == "squared") {
        p.gain_form = GainForm::kSquared;
      } else if (form == "paper_literal") {
        p.gain_form = GainForm::kPaperLiteral;
      } else {
        bad("unknown gain_form '" + form + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    bad(std::string("malformed training parameters: ") + e.what());
  }
  return p;
}

void softmax_inplace(std::span<double> scores) {
  if (scores.empty()) return;
  const double shift = *std::max_element(scores.begin(), scores.end());
  double total = 0.0;
  for (double& s : scores) {
    s = std::exp(s - shift);
    total += s;
  }
  for (double& s : scores) s /= total;
}

std::vector<double> softmax_proba(std::span<const double> scores) {
  std::vector<double> p(scores.begin(), scores.end());
  softmax_inplace(p);
  return p;
}

std::vector<double> residuals(const LabelMatrix& labels, std::span<const double> probs) {
  const auto k = static_cast<std::size_t>(labels.num_classes);
  if (probs.size() != labels.size() * k) {
    throw Error(ErrorCode::kLengthMismatch, "probability matrix does not match labels");
  }
  std::vector<double> r(probs.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (std::size_t m = 0; m < k; ++m) {
      r[i * k + m] = labels.q(i, static_cast<int>(m)) - probs[i * k + m];
    }
  }
  return r;
}

GradientSet weighted_gradients(const LabelMatrix& labels, std::span<const double> probs,
                               double positive_weight, int positive_class) {
  const auto k = static_cast<std::size_t>(labels.num_classes);
  if (probs.size() != labels.size() * k) {
    throw Error(ErrorCode::kLengthMismatch, "probability matrix does not match labels");
  }
  GradientSet g;
  g.num_samples = labels.size();
  g.num_classes = labels.num_classes;
  g.grad.resize(probs.size());
  g.hess.resize(probs.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double w = labels.labels[i] == positive_class ? positive_weight : 1.0;
    for (std::size_t m = 0; m < k; ++m) {
      const double p = probs[i * k + m];
      g.grad[i * k + m] = w * (p - labels.q(i, static_cast<int>(m)));
      g.hess[i * k + m] = w * p * (1.0 - p);
    }
  }
  return g;
}

double multiclass_log_loss(const LabelMatrix& labels, std::span<const double> probs) {
  if (labels.size() == 0) return 0.0;
  const auto k = static_cast<std::size_t>(labels.num_classes);
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double p = probs[i * k + static_cast<std::size_t>(labels.labels[i])];
    total -= std::log(std::max(p, 1e-300));
  }
  return total / static_cast<double>(labels.size());
}

}  // namespace hotspot::gbdt
