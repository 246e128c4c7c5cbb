#include <algorithm>
#include <cmath>

#include "hotspot/error.hpp"
#include "hotspot/gbdt.hpp"

namespace hotspot::gbdt {

BinMapper::BinMapper(std::vector<double> bounds) : bounds_(std::move(bounds)) {
  if (!std::is_sorted(bounds_.begin(), bounds_.end()) ||
      std::adjacent_find(bounds_.begin(), bounds_.end()) != bounds_.end()) {
    throw Error(ErrorCode::kBadModel, "bin boundaries must be strictly increasing");
  }
}

BinMapper BinMapper::fit(std::vector<double> values, int max_bins) {
  if (max_bins < 2) throw Error(ErrorCode::kInvalidParams, "need at least 2 bins");
  if (values.empty()) return BinMapper{};
  std::sort(values.begin(), values.end());
  std::vector<double> distinct;
  for (double v : values) {
    if (distinct.empty() || distinct.back() != v) distinct.push_back(v);
  }
  const auto bins = static_cast<std::size_t>(max_bins);
  std::vector<double> bounds;
  if (distinct.size() <= bins) {
    bounds.assign(distinct.begin(), distinct.end() - 1);
    return BinMapper(std::move(bounds));
  }
  // Upper boundary of bin k is the value at the k/bins quantile.
  const std::size_t n = values.size();
  const double top = distinct.back();
  for (std::size_t k = 1; k < bins; ++k) {
    const std::size_t pos = (k * n + bins - 1) / bins - 1;
    const double v = values[pos];
    if (v < top && (bounds.empty() || v > bounds.back())) bounds.push_back(v);
  }
  return BinMapper(std::move(bounds));
}

std::uint16_t BinMapper::bin(double value) const noexcept {
  return static_cast<std::uint16_t>(std::lower_bound(bounds_.begin(), bounds_.end(), value) -
                                    bounds_.begin());
}

BinnedData bin_features(const FeatureMatrix& matrix, int max_bins) {
  BinnedData out;
  const std::size_t rows = matrix.rows();
  const std::size_t cols = matrix.cols();
  out.mappers.reserve(cols);
  out.columns.resize(cols);
  std::vector<double> column(rows);
  for (std::size_t c = 0; c < cols; ++c) {
    for (std::size_t r = 0; r < rows; ++r) column[r] = matrix.values[r * cols + c];
    out.mappers.push_back(BinMapper::fit(column, max_bins));
    const BinMapper& mapper = out.mappers.back();
    auto& binned = out.columns[c];
    binned.resize(rows);
    for (std::size_t r = 0; r < rows; ++r) binned[r] = mapper.bin(column[r]);
  }
  return out;
}

}  // namespace hotspot::gbdt
