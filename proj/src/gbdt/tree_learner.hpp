#pragma once

#include <span>
#include <vector>

#include "hotspot/gbdt.hpp"

namespace hotspot::gbdt::detail {

/// Leaf-wise (best-first) histogram tree growth on bundled, binned data.
class TreeLearner {
 public:
  TreeLearner(const BundleSet& data, const std::vector<BinMapper>& mappers,
              const TrainParams& params);

  /// `grad`/`hess` are per sample for one class; only samples in
  /// `sample.used` participate, weighted by `sample.weights`.
  Tree grow(std::span<const double> grad, std::span<const double> hess,
            const GossSplitContext& sample) const;

  /// Node index of the leaf that training sample `i` falls into.
  std::size_t leaf_of(const Tree& tree, std::size_t i) const;

 private:
  struct Histogram {
    std::vector<double> grad;
    std::vector<std::uint32_t> count;
  };
  struct Split {
    int feature = -1;
    std::uint16_t bin = 0;
    double improvement = 0.0;
  };

  void build_histogram(std::span<const std::size_t> samples, std::span<const double> weighted_grad,
                       Histogram& hist) const;
  Split best_split(const Histogram& hist, double node_grad, std::size_t node_count) const;

  const BundleSet& data_;
  const std::vector<BinMapper>& mappers_;
  const TrainParams& params_;
  std::vector<std::size_t> bundle_offset_;
  std::size_t total_bins_ = 0;
};

}  // namespace hotspot::gbdt::detail
