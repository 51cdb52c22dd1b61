#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "forage/matrix.hpp"

namespace forage {

enum class Criterion { Gini, SquaredError };

struct TreeNode {
  std::int32_t feature = -1;  // -1 for leaves
  double threshold = 0.0;     // rows with x[feature] <= threshold go left
  std::int32_t left = -1;
  std::int32_t right = -1;
  std::int32_t depth = 0;
  double value = 0.0;   // positive fraction (Gini) or mean target (squared error)
  double weight = 0.0;  // total sample weight reaching the node
  double gain = 0.0;    // weighted impurity decrease of the split

  bool is_leaf() const { return feature < 0; }
};

/// Binary decision tree; node 0 is the root.
class DecisionTree {
 public:
  std::vector<TreeNode> nodes;

  /// Node reached by `row`, descending no deeper than `max_depth`.
  std::size_t leaf(std::span<const double> row, int max_depth = -1) const;
  double predict(std::span<const double> row, int max_depth = -1) const {
    return nodes[leaf(row, max_depth)].value;
  }
  int depth() const;
  /// Adds each split's gain to `out[feature]`.
  void add_importances(std::span<double> out) const;
};

/// Column-wise row orders of a training matrix, computed once and shared by
/// every tree grown on (weighted subsets of) the same rows.
class PresortedColumns {
 public:
  explicit PresortedColumns(const Matrix& x);

  const Matrix& x() const { return x_; }
  std::span<const std::uint32_t> order(std::size_t feature) const { return order_[feature]; }

 private:
  const Matrix& x_;
  std::vector<std::vector<std::uint32_t>> order_;
};

struct TreeParams {
  int max_depth = 1;            // root has depth 0; nodes split while depth < max_depth
  std::size_t max_features = 0;  // features tried per split; 0 = all
  std::uint64_t seed = 0;        // per-node feature draws
  Criterion criterion = Criterion::Gini;
};

struct TreeFit {
  DecisionTree tree;
  std::vector<std::int32_t> leaf_of_row;  // -1 for rows with zero weight
};

/// Greedy level-wise CART. `targets` are 0/1 for Gini, real for squared
/// error; `weights` are non-negative sample weights (bootstrap counts).
/// Among equally good splits the lowest feature, then the lowest threshold
/// wins. Each node's feature draw depends only on the seed and the node's
/// position in the tree, so a tree grown to depth d equals a deeper tree
/// truncated at d.
TreeFit fit_tree(const PresortedColumns& data, std::span<const double> targets,
                 std::span<const double> weights, const TreeParams& params);

/// Convenience overload with unit weights.
DecisionTree fit_tree(const Matrix& x, std::span<const double> targets, const TreeParams& params);

}  // namespace forage
