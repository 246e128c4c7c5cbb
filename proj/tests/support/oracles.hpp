#pragma once

// Reference implementations used only by tests. Each one recomputes a result
// by the most direct route available (brute force, sorting, pair counting)
// and shares no code with the library.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

namespace oracle {

/// Mann-Whitney statistic: share of (positive, negative) pairs ranked
/// correctly, ties counted half. Returned as (2 wins + ties) / (2 P N).
inline double pairwise_auc(const std::vector<int>& labels, const std::vector<double>& scores) {
  std::size_t wins = 0;
  std::size_t ties = 0;
  std::size_t pos = 0;
  std::size_t neg = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] == 1 ? pos : neg) += 1;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < labels.size(); ++j) {
      if (labels[j] == 1) continue;
      if (scores[i] > scores[j]) ++wins;
      if (scores[i] == scores[j]) ++ties;
    }
  }
  return static_cast<double>(2 * wins + ties) /
         (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
}

struct Stats {
  double max = 0, min = 0, mean = 0, stddev = 0, median = 0, sum = 0;
};

/// Sorting-based statistics with long double accumulation; zeros when empty.
inline Stats six_stats(std::vector<double> v) {
  Stats s;
  if (v.empty()) return s;
  std::sort(v.begin(), v.end());
  long double total = 0;
  for (double x : v) total += x;
  const long double mean = total / static_cast<long double>(v.size());
  long double sq = 0;
  for (double x : v) sq += (x - mean) * (x - mean);
  s.min = v.front();
  s.max = v.back();
  s.sum = static_cast<double>(total);
  s.mean = static_cast<double>(mean);
  s.stddev = static_cast<double>(std::sqrt(sq / static_cast<long double>(v.size())));
  const std::size_t n = v.size();
  s.median = n % 2 == 1 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
  return s;
}

struct RootSplit {
  int feature = -1;
  int bin = -1;  // index of the threshold among the feature's sorted distinct values
  double gain = 0.0;
};

/// Exhaustive search over every feature and every distinct raw value v
/// (left child: x <= v) for the split maximising the variance gain
/// (L^2/n_l + R^2/n_r)/n - G^2/n^2 over all samples. Children need at least
/// `min_leaf` samples. Ties keep the first (feature, value) found. nullopt when
/// no split has positive gain.
inline std::optional<RootSplit> best_root_split(const std::vector<std::vector<double>>& columns,
                                                const std::vector<double>& grad,
                                                std::size_t min_leaf) {
  const std::size_t n = grad.size();
  double total = 0.0;
  for (double g : grad) total += g;
  const double dn = static_cast<double>(n);
  const double parent = total * total / dn / dn;
  std::optional<RootSplit> best;
  for (std::size_t f = 0; f < columns.size(); ++f) {
    std::vector<double> values = columns[f];
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    for (std::size_t d = 0; d + 1 < values.size(); ++d) {
      double left = 0.0;
      std::size_t n_left = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (columns[f][i] <= values[d]) {
          left += grad[i];
          ++n_left;
        }
      }
      const std::size_t n_right = n - n_left;
      if (n_left < min_leaf || n_right < min_leaf) continue;
      const double right = total - left;
      const double gain = (left * left / static_cast<double>(n_left) +
                           right * right / static_cast<double>(n_right)) / dn - parent;
      if (!best || gain > best->gain) best = RootSplit{static_cast<int>(f), static_cast<int>(d), gain};
    }
  }
  if (best && !(best->gain > 0.0)) return std::nullopt;
  return best;
}

/// Sum of squared errors around the mean of each child, for cross-checking
/// the argmax of best_root_split by least squares.
inline double split_sse(const std::vector<double>& column, const std::vector<double>& grad,
                        double threshold) {
  double sl = 0, sr = 0;
  std::size_t nl = 0, nr = 0;
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (column[i] <= threshold) {
      sl += grad[i];
      ++nl;
    } else {
      sr += grad[i];
      ++nr;
    }
  }
  const double ml = nl ? sl / static_cast<double>(nl) : 0.0;
  const double mr = nr ? sr / static_cast<double>(nr) : 0.0;
  double sse = 0;
  for (std::size_t i = 0; i < grad.size(); ++i) {
    const double m = column[i] <= threshold ? ml : mr;
    sse += (grad[i] - m) * (grad[i] - m);
  }
  return sse;
}

/// -log softmax(scores)[label], evaluated directly.
inline double log_loss(const std::vector<double>& scores, int label) {
  long double z = 0;
  for (double s : scores) z += std::exp(static_cast<long double>(s));
  return static_cast<double>(std::log(z) - scores[static_cast<std::size_t>(label)]);
}

}  // namespace oracle
