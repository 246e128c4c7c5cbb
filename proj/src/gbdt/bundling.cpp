#include <algorithm>
#include <cmath>
#include <numeric>

#include "hotspot/gbdt.hpp"

namespace hotspot::gbdt {

namespace {

constexpr std::uint32_t kMaxBundleBins = 65535;

void fill_columns(BundleSet& set, const std::vector<std::vector<std::uint16_t>>& binned) {
  const std::size_t rows = binned.empty() ? 0 : binned.front().size();
  set.location.assign(binned.size(), {0, 0});
  set.columns.assign(set.bundles.size(), std::vector<std::uint16_t>(rows, 0));
  for (std::size_t b = 0; b < set.bundles.size(); ++b) {
    const FeatureBundle& bundle = set.bundles[b];
    auto& column = set.columns[b];
    for (std::size_t k = 0; k < bundle.features.size(); ++k) {
      const std::size_t f = bundle.features[k];
      set.location[f] = {b, k};
      const auto& src = binned[f];
      for (std::size_t i = 0; i < rows; ++i) {
        // On a conflict the earlier member keeps the cell.
        if (src[i] != 0 && column[i] == 0) {
          column[i] = static_cast<std::uint16_t>(bundle.offsets[k] + src[i] - 1);
        }
      }
    }
  }
}

}  // namespace

std::uint16_t BundleSet::feature_bin(std::size_t f, std::size_t i) const noexcept {
  const auto [b, k] = location[f];
  const FeatureBundle& bundle = bundles[b];
  const std::uint32_t v = columns[b][i];
  const std::uint32_t start = bundle.offsets[k];
  if (v >= start && v < start + bundle.member_bins[k] - 1) {
    return static_cast<std::uint16_t>(v - start + 1);
  }
  return 0;
}

BundleSet efb_bundle(const std::vector<std::vector<std::uint16_t>>& binned,
                     std::span<const std::size_t> num_bins, double conflict_budget) {
  const std::size_t features = binned.size();
  const std::size_t rows = features == 0 ? 0 : binned.front().size();
  const auto budget = static_cast<std::size_t>(std::floor(conflict_budget * static_cast<double>(rows)));

  std::vector<std::vector<std::uint32_t>> nonzero(features);
  for (std::size_t f = 0; f < features; ++f) {
    for (std::size_t i = 0; i < rows; ++i) {
      if (binned[f][i] != 0) nonzero[f].push_back(static_cast<std::uint32_t>(i));
    }
  }
  std::vector<std::size_t> order(features);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return nonzero[a].size() > nonzero[b].size();
  });

  BundleSet set;
  // Per bundle: how many members are non-zero on each row (saturating at 2).
  std::vector<std::vector<std::uint8_t>> occupancy;
  std::vector<std::size_t> occupied_rows;
  for (std::size_t f : order) {
    const auto& nz = nonzero[f];
    const auto extra_bins = static_cast<std::uint32_t>(num_bins[f] - 1);
    bool placed = false;
    for (std::size_t b = 0; b < set.bundles.size() && !placed; ++b) {
      FeatureBundle& bundle = set.bundles[b];
      if (bundle.num_bins + extra_bins > kMaxBundleBins) continue;
      // Pigeonhole lower bound on new conflicts.
      if (occupied_rows[b] + nz.size() > rows + budget) continue;
      std::size_t fresh = 0;
      bool over = false;
      for (std::uint32_t i : nz) {
        if (occupancy[b][i] == 1 && ++fresh + bundle.conflicts > budget) {
          over = true;
          break;
        }
      }
      if (over) continue;
      for (std::uint32_t i : nz) {
        if (occupancy[b][i] == 0) ++occupied_rows[b];
        if (occupancy[b][i] < 2) ++occupancy[b][i];
      }
      bundle.conflicts += fresh;
      bundle.features.push_back(f);
      bundle.offsets.push_back(bundle.num_bins);
      bundle.member_bins.push_back(static_cast<std::uint32_t>(num_bins[f]));
      bundle.num_bins += extra_bins;
      placed = true;
    }
    if (!placed) {
      FeatureBundle bundle;
      bundle.features.push_back(f);
      bundle.offsets.push_back(1);
      bundle.member_bins.push_back(static_cast<std::uint32_t>(num_bins[f]));
      bundle.num_bins = 1 + extra_bins;
      set.bundles.push_back(std::move(bundle));
      occupancy.emplace_back(rows, 0);
      for (std::uint32_t i : nz) occupancy.back()[i] = 1;
      occupied_rows.push_back(nz.size());
    }
  }
  fill_columns(set, binned);
  return set;
}

BundleSet singleton_bundles(const std::vector<std::vector<std::uint16_t>>& binned,
                            std::span<const std::size_t> num_bins) {
  BundleSet set;
  for (std::size_t f = 0; f < binned.size(); ++f) {
    FeatureBundle bundle;
    bundle.features.push_back(f);
    bundle.offsets.push_back(1);
    bundle.member_bins.push_back(static_cast<std::uint32_t>(num_bins[f]));
    bundle.num_bins = static_cast<std::uint32_t>(num_bins[f]);
    set.bundles.push_back(std::move(bundle));
  }
  fill_columns(set, binned);
  return set;
}

std::optional<std::pair<std::size_t, std::uint16_t>> unbundle(const FeatureBundle& bundle,
                                                              std::uint32_t value) {
  if (value == 0) return std::nullopt;
  for (std::size_t k = 0; k < bundle.features.size(); ++k) {
    const std::uint32_t start = bundle.offsets[k];
    if (value >= start && value < start + bundle.member_bins[k] - 1) {
      return std::make_pair(bundle.features[k], static_cast<std::uint16_t>(value - start + 1));
    }
  }
  return std::nullopt;
}

}  // namespace hotspot::gbdt
