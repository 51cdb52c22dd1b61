#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "forage/learners/standardizer.hpp"
#include "forage/matrix.hpp"

namespace forage {

struct LrParams {
  double c = 1.0;  // inverse regularization strength
  int max_iter = 100;
  double tol = 1e-6;  // on the infinity norm of the gradient
  bool standardize = true;
};

/// L2-regularized logistic loss over rows whose column 0 is the bias:
///   f(w) = 1/2 * sum_{j>=1} w_j^2 + C * sum_i log(1 + exp(-y_i * w.x_i))
/// The bias weight w_0 is the (unpenalized) intercept.
class LogisticObjective {
 public:
  LogisticObjective(const Matrix& x, std::span<const int> y, double c);

  double value(std::span<const double> w) const;
  std::vector<double> gradient(std::span<const double> w) const;
  std::size_t dim() const { return x_.cols(); }

 private:
  friend class LogisticSolver;
  const Matrix& x_;
  std::span<const int> y_;
  double c_;
};

struct LogisticModel {
  Standardizer standardizer;
  std::vector<double> weights;  // weights[0] multiplies the bias column
  bool converged = false;
  int iterations = 0;

  double decision(std::span<const double> row) const;
};

/// Newton iterations with backtracking line search on the standardized rows.
/// `start`, when given, is the initial weight vector in standardized space.
LogisticModel fit_lr(const Matrix& x, std::span<const int> y, const LrParams& params,
                     std::optional<std::span<const double>> start = std::nullopt);

}  // namespace forage
