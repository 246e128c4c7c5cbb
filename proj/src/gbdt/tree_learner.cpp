#include "tree_learner.hpp"

#include <algorithm>
#include <memory>

namespace hotspot::gbdt::detail {

namespace {

// Children term of the split value; `n` is the node size.
double split_value(double left, double n_left, double right, double n_right, double n,
                   GainForm form) {
  if (form == GainForm::kSquared) return (left * left / n_left + right * right / n_right) / n;
  return (left / n_left + right / n_right) / n;
}

double parent_value(double total, double n, GainForm form) {
  if (form == GainForm::kSquared) return total * total / n / n;
  return total / n / n;
}

}  // namespace

TreeLearner::TreeLearner(const BundleSet& data, const std::vector<BinMapper>& mappers,
                         const TrainParams& params)
    : data_(data), mappers_(mappers), params_(params) {
  bundle_offset_.reserve(data.bundles.size());
  for (const auto& bundle : data.bundles) {
    bundle_offset_.push_back(total_bins_);
    total_bins_ += bundle.num_bins;
  }
}

void TreeLearner::build_histogram(std::span<const std::size_t> samples,
                                  std::span<const double> weighted_grad, Histogram& hist) const {
  hist.grad.assign(total_bins_, 0.0);
  hist.count.assign(total_bins_, 0);
  for (std::size_t b = 0; b < data_.columns.size(); ++b) {
    const auto& column = data_.columns[b];
    double* g = hist.grad.data() + bundle_offset_[b];
    std::uint32_t* c = hist.count.data() + bundle_offset_[b];
    for (std::size_t i : samples) {
      const std::uint16_t v = column[i];
      if (v != 0) {
        g[v] += weighted_grad[i];
        ++c[v];
      }
    }
  }
}

TreeLearner::Split TreeLearner::best_split(const Histogram& hist, double node_grad,
                                           std::size_t node_count) const {
  Split best;
  const auto min_leaf = static_cast<std::size_t>(params_.min_samples_per_leaf);
  if (node_count < 2 * min_leaf || node_count < 2) return best;
  const double n = static_cast<double>(node_count);
  const double parent = parent_value(node_grad, n, params_.gain_form);
  bool found = false;
  std::vector<double> g;
  std::vector<std::uint32_t> c;
  for (std::size_t f = 0; f < mappers_.size(); ++f) {
    const std::size_t bins = mappers_[f].num_bins();
    if (bins < 2) continue;
    const auto [b, k] = data_.location[f];
    const std::size_t base = bundle_offset_[b] + data_.bundles[b].offsets[k] - 1;
    // Bin 0 is never accumulated; it is the node total minus the other bins.
    g.assign(bins, 0.0);
    c.assign(bins, 0);
    double nonzero_grad = 0.0;
    std::size_t nonzero_count = 0;
    for (std::size_t bin = 1; bin < bins; ++bin) {
      g[bin] = hist.grad[base + bin];
      c[bin] = hist.count[base + bin];
      nonzero_grad += g[bin];
      nonzero_count += c[bin];
    }
    g[0] = node_grad - nonzero_grad;
    c[0] = static_cast<std::uint32_t>(node_count - nonzero_count);

    double left = 0.0;
    std::size_t n_left = 0;
    for (std::size_t d = 0; d + 1 < bins; ++d) {
      left += g[d];
      n_left += c[d];
      const std::size_t n_right = node_count - n_left;
      if (n_left < min_leaf || n_left == 0) continue;
      if (n_right < min_leaf || n_right == 0) break;
      const double right = node_grad - left;
      const double improvement =
          split_value(left, static_cast<double>(n_left), right, static_cast<double>(n_right), n,
                      params_.gain_form) -
          parent;
      if (!found || improvement > best.improvement) {
        best.feature = static_cast<int>(f);
        best.bin = static_cast<std::uint16_t>(d);
        best.improvement = improvement;
        found = true;
      }
    }
  }
  return best;
}

Tree TreeLearner::grow(std::span<const double> grad, std::span<const double> hess,
                       const GossSplitContext& sample) const {
  const std::size_t n = grad.size();
  std::vector<double> wg(n, 0.0);
  std::vector<double> wh(n, 0.0);
  for (std::size_t i : sample.used) {
    wg[i] = sample.weights[i] * grad[i];
    wh[i] = sample.weights[i] * hess[i];
  }

  struct Leaf {
    int node = 0;
    std::size_t begin = 0;
    std::size_t end = 0;
    double grad = 0.0;
    std::unique_ptr<Histogram> hist;
    Split split;
  };
  auto sum_grad = [&](std::span<const std::size_t> samples) {
    double s = 0.0;
    for (std::size_t i : samples) s += wg[i];
    return s;
  };

  std::vector<std::size_t> order(sample.used.begin(), sample.used.end());
  Tree tree;
  tree.nodes.emplace_back();
  std::vector<Leaf> leaves;
  {
    Leaf root;
    root.begin = 0;
    root.end = order.size();
    root.grad = sum_grad(order);
    root.hist = std::make_unique<Histogram>();
    build_histogram(order, wg, *root.hist);
    root.split = best_split(*root.hist, root.grad, order.size());
    leaves.push_back(std::move(root));
  }

  while (leaves.size() < static_cast<std::size_t>(params_.max_leaves)) {
    int chosen = -1;
    for (std::size_t l = 0; l < leaves.size(); ++l) {
      const Split& s = leaves[l].split;
      if (s.feature < 0 || !(s.improvement > 0.0)) continue;
      if (chosen < 0 || s.improvement > leaves[static_cast<std::size_t>(chosen)].split.improvement) {
        chosen = static_cast<int>(l);
      }
    }
    if (chosen < 0) break;

    Leaf parent = std::move(leaves[static_cast<std::size_t>(chosen)]);
    const auto f = static_cast<std::size_t>(parent.split.feature);
    const std::uint16_t d = parent.split.bin;
    auto first = order.begin() + static_cast<std::ptrdiff_t>(parent.begin);
    auto last = order.begin() + static_cast<std::ptrdiff_t>(parent.end);
    auto mid = std::stable_partition(first, last,
                                     [&](std::size_t i) { return data_.feature_bin(f, i) <= d; });
    const std::size_t split_at = static_cast<std::size_t>(mid - order.begin());

    const int left_node = static_cast<int>(tree.nodes.size());
    const int right_node = left_node + 1;
    TreeNode& node = tree.nodes[static_cast<std::size_t>(parent.node)];
    node.feature = static_cast<int>(f);
    node.threshold_bin = d;
    node.threshold = mappers_[f].upper_bound(d);
    node.gain = parent.split.improvement;
    node.left = left_node;
    node.right = right_node;
    tree.nodes.emplace_back();
    tree.nodes.emplace_back();

    Leaf left;
    left.node = left_node;
    left.begin = parent.begin;
    left.end = split_at;
    Leaf right;
    right.node = right_node;
    right.begin = split_at;
    right.end = parent.end;
    left.grad = sum_grad({order.data() + left.begin, left.end - left.begin});
    right.grad = sum_grad({order.data() + right.begin, right.end - right.begin});

    // Build the smaller child, derive the larger one from the parent.
    const bool left_smaller = (left.end - left.begin) <= (right.end - right.begin);
    Leaf& small = left_smaller ? left : right;
    Leaf& large = left_smaller ? right : left;
    small.hist = std::make_unique<Histogram>();
    build_histogram({order.data() + small.begin, small.end - small.begin}, wg, *small.hist);
    large.hist = std::move(parent.hist);
    for (std::size_t k = 0; k < total_bins_; ++k) {
      large.hist->grad[k] -= small.hist->grad[k];
      large.hist->count[k] -= small.hist->count[k];
    }
    left.split = best_split(*left.hist, left.grad, left.end - left.begin);
    right.split = best_split(*right.hist, right.grad, right.end - right.begin);

    leaves[static_cast<std::size_t>(chosen)] = std::move(left);
    leaves.push_back(std::move(right));
  }

  for (const Leaf& leaf : leaves) {
    double g = 0.0;
    double h = 0.0;
    for (std::size_t k = leaf.begin; k < leaf.end; ++k) {
      g += wg[order[k]];
      h += wh[order[k]];
    }
    TreeNode& node = tree.nodes[static_cast<std::size_t>(leaf.node)];
    node.value = h > 0.0 ? -params_.learning_rate * g / h : 0.0;
    node.count = leaf.end - leaf.begin;
  }
  // Internal node counts, children first (children always follow parents).
  for (std::size_t k = tree.nodes.size(); k-- > 0;) {
    TreeNode& node = tree.nodes[k];
    if (!node.is_leaf()) {
      node.count = tree.nodes[static_cast<std::size_t>(node.left)].count +
                   tree.nodes[static_cast<std::size_t>(node.right)].count;
    }
  }
  return tree;
}

std::size_t TreeLearner::leaf_of(const Tree& tree, std::size_t i) const {
  std::size_t k = 0;
  while (!tree.nodes[k].is_leaf()) {
    const TreeNode& node = tree.nodes[k];
    k = static_cast<std::size_t>(
        data_.feature_bin(static_cast<std::size_t>(node.feature), i) <= node.threshold_bin
            ? node.left
            : node.right);
  }
  return k;
}

}  // namespace hotspot::gbdt::detail
