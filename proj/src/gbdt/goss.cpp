#include <algorithm>
#include <cmath>
#include <numeric>

#include "hotspot/error.hpp"
#include "hotspot/gbdt.hpp"
#include "hotspot/rng.hpp"

namespace hotspot::gbdt {

namespace {

std::size_t ceil_fraction(double fraction, std::size_t n) {
  // Guard against 0.2 * 10 landing a hair above 2.
  const double x = fraction * static_cast<double>(n);
  const double r = std::round(x);
  if (std::abs(x - r) < 1e-9) return static_cast<std::size_t>(r);
  return static_cast<std::size_t>(std::ceil(x));
}

}  // namespace

GossSplitContext full_sample(std::size_t n) {
  GossSplitContext ctx;
  ctx.n = n;
  ctx.top.resize(n);
  std::iota(ctx.top.begin(), ctx.top.end(), 0);
  ctx.used = ctx.top;
  ctx.weights.assign(n, 1.0);
  return ctx;
}

GossSplitContext goss_sample(std::span<const double> magnitudes, double a, double b,
                             std::uint64_t seed) {
  const std::size_t n = magnitudes.size();
  if (!(a > 0.0 && a <= 1.0) || !(b >= 0.0)) {
    throw Error(ErrorCode::kInvalidParams, "GOSS needs 0 < a <= 1 and b >= 0");
  }
  const std::size_t top_count = std::min(n, ceil_fraction(a, n));
  const std::size_t rest_count = ceil_fraction(b, n);
  if (top_count + rest_count > n) {
    throw Error(ErrorCode::kInvalidParams, "GOSS sample sizes exceed the data");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return magnitudes[x] > magnitudes[y]; });

  GossSplitContext ctx;
  ctx.n = n;
  ctx.top.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(top_count));
  std::vector<std::size_t> rest(order.begin() + static_cast<std::ptrdiff_t>(top_count), order.end());
  std::sort(ctx.top.begin(), ctx.top.end());
  std::sort(rest.begin(), rest.end());

  // Partial Fisher-Yates over the remainder.
  Rng rng(seed);
  for (std::size_t k = 0; k < rest_count; ++k) {
    const std::size_t j = k + static_cast<std::size_t>(rng.below(rest.size() - k));
    std::swap(rest[k], rest[j]);
  }
  ctx.sampled.assign(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(rest_count));
  std::sort(ctx.sampled.begin(), ctx.sampled.end());
  ctx.amplification = rest_count == 0 ? 1.0 : (1.0 - a) / b;

  ctx.weights.assign(n, 0.0);
  for (std::size_t i : ctx.top) ctx.weights[i] = 1.0;
  for (std::size_t i : ctx.sampled) ctx.weights[i] = ctx.amplification;
  ctx.used.reserve(ctx.top.size() + ctx.sampled.size());
  std::merge(ctx.top.begin(), ctx.top.end(), ctx.sampled.begin(), ctx.sampled.end(),
             std::back_inserter(ctx.used));
  return ctx;
}

double split_gain(const GossSplitContext& ctx, std::span<const double> gradients,
                  std::span<const std::uint16_t> feature_bins, std::uint16_t threshold,
                  std::size_t min_samples_per_leaf, GainForm form,
                  std::span<const std::size_t> node) {
  if (node.empty()) node = ctx.used;
  // A_l, A_r, B_l, B_r gradient sums and child sizes.
  double top_left = 0.0, top_right = 0.0, rest_left = 0.0, rest_right = 0.0;
  std::size_t n_left = 0, n_right = 0;
  for (std::size_t i : node) {
    const bool in_top = ctx.weights[i] == 1.0 &&
                        std::binary_search(ctx.top.begin(), ctx.top.end(), i);
    const bool left = feature_bins[i] <= threshold;
    if (left) {
      ++n_left;
      (in_top ? top_left : rest_left) += gradients[i];
    } else {
      ++n_right;
      (in_top ? top_right : rest_right) += gradients[i];
    }
  }
  if (n_left < min_samples_per_leaf || n_right < min_samples_per_leaf || n_left == 0 ||
      n_right == 0) {
    throw Error(ErrorCode::kDegenerateSplit, "a child would hold too few samples");
  }
  const double left = top_left + ctx.amplification * rest_left;
  const double right = top_right + ctx.amplification * rest_right;
  const double n = static_cast<double>(node.size());
  if (form == GainForm::kSquared) {
    return (left * left / static_cast<double>(n_left) + right * right / static_cast<double>(n_right)) / n;
  }
  return (left / static_cast<double>(n_left) + right / static_cast<double>(n_right)) / n;
}

}  // namespace hotspot::gbdt
