#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "rfbias/dataset.hpp"
#include "rfbias/error.hpp"

namespace rfbias {

/// Hyperparameters of a bagged CART forest.
struct ForestParams {
  std::size_t ntree = 500;
  std::size_t mtry = 1;
  std::size_t nodesize = 5;  // minimum rows a child may hold
  std::optional<std::size_t> max_terminal_nodes;
  bool bootstrap = true;
  std::uint64_t seed = 0;

  /// max(1, floor(p / 3)).
  static std::size_t default_mtry(std::size_t n_features) {
    return n_features / 3 > 0 ? n_features / 3 : 1;
  }

  void validate(std::size_t n_features) const {
    if (ntree < 1) throw ValidationError("ForestParams.ntree must be >= 1");
    if (mtry < 1 || mtry > n_features) {
      throw ValidationError("ForestParams.mtry must be in [1, " + std::to_string(n_features) + "]");
    }
    if (nodesize < 1) throw ValidationError("ForestParams.nodesize must be >= 1");
    if (max_terminal_nodes && *max_terminal_nodes < 1) {
      throw ValidationError("ForestParams.max_terminal_nodes must be >= 1");
    }
  }
};

/// Hyperparameters of a forest of target-blind random-split trees.
struct PureForestParams {
  std::size_t ntree = 500;
  std::size_t leaf_min = 1;
  std::uint64_t seed = 0;

  void validate() const {
    if (ntree < 1) throw ValidationError("PureForestParams.ntree must be >= 1");
    if (leaf_min < 1) throw ValidationError("PureForestParams.leaf_min must be >= 1");
  }
};

/// Node of a flattened binary tree. Leaves have feature == kLeaf.
struct TreeNode {
  static constexpr std::int32_t kLeaf = -1;

  std::int32_t feature = kLeaf;
  double cutoff = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  double prediction = 0.0;  // leaf: mean of member targets
  std::size_t count = 0;    // leaf: member rows (with bootstrap multiplicity)

  bool is_leaf() const noexcept { return feature == kLeaf; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

/// Regression tree stored as a node array; node 0 is the root.
/// Routing: value < cutoff goes left, otherwise right.
class RegressionTree {
 public:
  RegressionTree() = default;
  explicit RegressionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

  static RegressionTree leaf(double prediction, std::size_t count) {
    TreeNode n;
    n.prediction = prediction;
    n.count = count;
    return RegressionTree({n});
  }

  double predict(std::span<const double> row) const {
    std::size_t i = 0;
    while (!nodes_[i].is_leaf()) {
      const TreeNode& n = nodes_[i];
      i = static_cast<std::size_t>(row[static_cast<std::size_t>(n.feature)] < n.cutoff ? n.left : n.right);
    }
    return nodes_[i].prediction;
  }

  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
  std::vector<TreeNode>& nodes() noexcept { return nodes_; }

  std::size_t leaf_count() const {
    std::size_t c = 0;
    for (const auto& n : nodes_) c += n.is_leaf() ? 1 : 0;
    return c;
  }

  friend bool operator==(const RegressionTree&, const RegressionTree&) = default;

 private:
  std::vector<TreeNode> nodes_;
};

enum class ForestFamily { standard, pure };

inline const char* to_string(ForestFamily f) { return f == ForestFamily::standard ? "standard" : "pure"; }

/// Trained ensemble. Prediction is the arithmetic mean of per-tree predictions.
struct ForestModel {
  std::vector<RegressionTree> trees;
  std::variant<ForestParams, PureForestParams> params;
  std::vector<std::string> feature_names;
  std::string target_name = "target";

  ForestFamily family() const {
    return std::holds_alternative<ForestParams>(params) ? ForestFamily::standard : ForestFamily::pure;
  }
};

inline double predict(const ForestModel& model, std::span<const double> feature_row) {
  if (feature_row.size() != model.feature_names.size()) {
    throw DataError("predict: row has " + std::to_string(feature_row.size()) + " features, model expects " +
                    std::to_string(model.feature_names.size()));
  }
  if (model.trees.empty()) throw DataError("predict: model has no trees");
  double sum = 0.0;
  for (const auto& tree : model.trees) sum += tree.predict(feature_row);
  return sum / static_cast<double>(model.trees.size());
}

inline std::vector<double> predict_batch(const ForestModel& model, const Dataset& data) {
  if (data.empty()) return {};
  if (data.feature_names() != model.feature_names) {
    throw DataError("predict: dataset feature columns do not match the model's");
  }
  std::vector<double> out;
  out.reserve(data.rows());
  for (std::size_t i = 0; i < data.rows(); ++i) out.push_back(predict(model, data.row(i)));
  return out;
}

}  // namespace rfbias
