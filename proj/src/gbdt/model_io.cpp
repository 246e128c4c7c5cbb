#include <cmath>

#include "hotspot/error.hpp"
#include "hotspot/gbdt.hpp"

namespace hotspot::gbdt {

namespace {

constexpr const char* kFormat = "hotspot-gbdt";
constexpr int kVersion = 1;

nlohmann::json node_json(const Tree& tree, std::size_t k) {
  const TreeNode& node = tree.nodes[k];
  if (node.is_leaf()) return {{"value", node.value}, {"count", node.count}};
  return {{"feature", node.feature},
          {"threshold_bin", node.threshold_bin},
          {"threshold", node.threshold},
          {"gain", node.gain},
          {"count", node.count},
          {"left", node_json(tree, static_cast<std::size_t>(node.left))},
          {"right", node_json(tree, static_cast<std::size_t>(node.right))}};
}

// Pre-order; returns the node index.
int read_node(const nlohmann::json& doc, Tree& tree, std::size_t columns) {
  const int index = static_cast<int>(tree.nodes.size());
  tree.nodes.emplace_back();
  TreeNode node;
  node.count = doc.at("count").get<std::size_t>();
  if (doc.contains("feature")) {
    node.feature = doc.at("feature").get<int>();
    if (node.feature < 0 || static_cast<std::size_t>(node.feature) >= columns) {
      throw Error(ErrorCode::kBadModel, "split feature out of range");
    }
    node.threshold_bin = doc.at("threshold_bin").get<std::uint16_t>();
    node.threshold = doc.at("threshold").get<double>();
    node.gain = doc.at("gain").get<double>();
    node.left = read_node(doc.at("left"), tree, columns);
    node.right = read_node(doc.at("right"), tree, columns);
  } else {
    node.value = doc.at("value").get<double>();
  }
  tree.nodes[static_cast<std::size_t>(index)] = node;
  return index;
}

}  // namespace

nlohmann::json to_json(const Ensemble& ensemble) {
  nlohmann::json mappers = nlohmann::json::array();
  for (const BinMapper& m : ensemble.mappers) mappers.push_back(m.bounds());
  nlohmann::json bundles = nlohmann::json::array();
  for (const FeatureBundle& b : ensemble.bundles) {
    bundles.push_back({{"features", b.features},
                       {"offsets", b.offsets},
                       {"member_bins", b.member_bins},
                       {"num_bins", b.num_bins},
                       {"conflicts", b.conflicts}});
  }
  nlohmann::json trees = nlohmann::json::array();
  for (const Tree& t : ensemble.trees) {
    trees.push_back({{"class", t.class_id}, {"iteration", t.iteration}, {"root", node_json(t, 0)}});
  }
  return {{"format", kFormat},
          {"version", kVersion},
          {"columns", ensemble.columns},
          {"params", to_json(ensemble.params)},
          {"bin_mappers", mappers},
          {"bundles", bundles},
          {"trees", trees}};
}

Ensemble ensemble_from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("format").get<std::string>() != kFormat) {
      throw Error(ErrorCode::kBadModel, "not a model document");
    }
    if (doc.at("version").get<int>() != kVersion) {
      throw Error(ErrorCode::kBadModel, "unsupported model version");
    }
    Ensemble e;
    e.params = params_from_json(doc.at("params"));
    e.params.validate();
    e.columns = doc.at("columns").get<std::vector<std::string>>();
    for (const auto& m : doc.at("bin_mappers")) e.mappers.emplace_back(m.get<std::vector<double>>());
    if (e.mappers.size() != e.columns.size()) {
      throw Error(ErrorCode::kBadModel, "bin mapper count differs from column count");
    }
    for (const auto& b : doc.at("bundles")) {
      FeatureBundle bundle;
      bundle.features = b.at("features").get<std::vector<std::size_t>>();
      bundle.offsets = b.at("offsets").get<std::vector<std::uint32_t>>();
      bundle.member_bins = b.at("member_bins").get<std::vector<std::uint32_t>>();
      bundle.num_bins = b.at("num_bins").get<std::uint32_t>();
      bundle.conflicts = b.at("conflicts").get<std::size_t>();
      e.bundles.push_back(std::move(bundle));
    }
    for (const auto& t : doc.at("trees")) {
      Tree tree;
      tree.class_id = t.at("class").get<int>();
      tree.iteration = t.at("iteration").get<int>();
      if (tree.class_id < 0 || tree.class_id >= e.params.num_classes) {
        throw Error(ErrorCode::kBadModel, "tree class out of range");
      }
      read_node(t.at("root"), tree, e.columns.size());
      e.trees.push_back(std::move(tree));
    }
    if (e.trees.size() % static_cast<std::size_t>(e.params.num_classes) != 0) {
      throw Error(ErrorCode::kBadModel, "tree count is not a multiple of the class count");
    }
    return e;
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::kBadModel, std::string("malformed model: ") + ex.what());
  } catch (const Error& ex) {
    if (ex.code() == ErrorCode::kInvalidParams) throw Error(ErrorCode::kBadModel, ex.what());
    throw;
  }
}

}  // namespace hotspot::gbdt
