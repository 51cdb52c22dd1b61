#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "forage/learners/tree.hpp"
#include "forage/matrix.hpp"

namespace forage {

struct ForestParams {
  int n_estimators = 100;
  int max_depth = 10;
  std::size_t max_features = 0;  // 0 = floor(sqrt(p))
  bool bootstrap = true;
  std::uint64_t seed = 0;
};

struct ForestModel {
  std::vector<DecisionTree> trees;
  std::vector<double> importances;

  /// Majority vote over trees; a tied vote is negative.
  int predict(std::span<const double> row) const;
};

std::size_t resolve_max_features(std::size_t requested, std::size_t p);

/// Each tree sees its own bootstrap sample (n draws with replacement) and
/// its own seed derived from the forest seed and the tree index, so the
/// first k trees of a forest are exactly a k-tree forest.
ForestModel fit_rf(const Matrix& x, std::span<const std::uint8_t> y, const ForestParams& params);

/// Hard votes for every (tree count, depth) pair, computed in one pass over
/// a forest grown to the largest depth. Result is indexed
/// [count index][depth index][row].
std::vector<std::vector<std::vector<std::uint8_t>>> staged_votes(const ForestModel& forest, const Matrix& x,
                                                                  std::span<const int> tree_counts,
                                                                  std::span<const int> depths);

}  // namespace forage
