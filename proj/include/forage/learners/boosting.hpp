#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "forage/learners/tree.hpp"
#include "forage/matrix.hpp"

namespace forage {

struct BoostParams {
  int n_estimators = 100;
  int max_depth = 3;
  double learning_rate = 0.1;
};

/// Binomial-deviance gradient boosting: F(x) = f0 + lr * sum_m tree_m(x).
struct BoostModel {
  double f0 = 0.0;
  double learning_rate = 0.1;
  std::vector<DecisionTree> stages;
  std::vector<double> importances;

  /// Raw score using the first `stages` trees (-1 = all).
  double decision(std::span<const double> row, int stages = -1) const;
  int predict(std::span<const double> row) const { return decision(row) > 0.0 ? 1 : 0; }
};

/// Mean binomial deviance of scores f against 0/1 labels.
double binomial_deviance(std::span<const std::uint8_t> y, std::span<const double> f);

/// `deviance_trace`, when non-null, receives the training deviance after
/// initialization and after each stage (n_estimators + 1 values).
BoostModel fit_gb(const Matrix& x, std::span<const std::uint8_t> y, const BoostParams& params,
                  std::vector<double>* deviance_trace = nullptr);

/// Hard predictions after each stage count in `checkpoints`, indexed
/// [checkpoint][row].
std::vector<std::vector<std::uint8_t>> staged_predictions(const BoostModel& model, const Matrix& x,
                                                          std::span<const int> checkpoints);

}  // namespace forage
