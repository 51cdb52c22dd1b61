#pragma once

#include <cstddef>
#include <list>
#include <span>
#include <vector>

#include "forage/learners/standardizer.hpp"
#include "forage/matrix.hpp"

namespace forage {

struct SvmParams {
  double c = 1.0;      // misclassification cost
  double gamma = 1.0;  // K(x, z) = exp(-gamma * |x - z|^2)
  int max_iter = 10000;  // SMO pair updates
  double tol = 1e-3;     // KKT violation
  bool standardize = true;
  std::size_t cache_mb = 256;
};

/// Lazily computed RBF kernel rows with LRU eviction under a byte budget.
class KernelCache {
 public:
  KernelCache(const Matrix& x, double gamma, std::size_t cache_mb);

  std::span<const double> row(std::size_t i);
  double diagonal(std::size_t) const { return 1.0; }
  std::size_t size() const { return x_.rows(); }
  double gamma() const { return gamma_; }

 private:
  const Matrix& x_;
  double gamma_;
  std::vector<double> norms_;
  std::size_t max_rows_;
  std::vector<std::vector<double>> rows_;
  std::vector<std::list<std::size_t>::iterator> where_;
  std::vector<bool> cached_;
  std::list<std::size_t> lru_;  // front = most recent
};

/// Solution of  max_a  sum(a) - 1/2 a'Qa  s.t.  0 <= a <= C, y'a = 0,
/// with Q_ij = y_i y_j K_ij.
struct SvmSolution {
  std::vector<double> alpha;
  double rho = 0.0;  // decision(x) = sum_i alpha_i y_i K(x_i, x) - rho
  int iterations = 0;
  bool converged = false;
  double objective = 0.0;
};

/// SMO with second-order working-set selection. `objective_trace`, when
/// non-null, receives the dual objective after every pair update.
SvmSolution solve_svm_dual(KernelCache& kernel, std::span<const int> y, double c, int max_iter,
                           double tol, std::vector<double>* objective_trace = nullptr);

struct SvmModel {
  Standardizer standardizer;
  Matrix support;             // standardized support vectors
  std::vector<double> coef;   // alpha_i * y_i
  double rho = 0.0;
  double gamma = 1.0;
  bool converged = false;
  int iterations = 0;

  double decision(std::span<const double> row) const;
  /// Decision values for every row of raw (unstandardized) x.
  std::vector<double> decisions(const Matrix& x) const;
};

/// Keeps the rows of `xs` with non-zero alpha.
SvmModel make_svm_model(const Standardizer& standardizer, const Matrix& xs, std::span<const int> y,
                        double gamma, const SvmSolution& solution);

SvmModel fit_svm(const Matrix& x, std::span<const int> y, const SvmParams& params);

/// Decision values of several solutions trained on the same standardized
/// matrix `xs`, evaluated on already-standardized queries. Pairwise
/// distances are computed once and shared by every solution.
std::vector<std::vector<double>> shared_decisions(const Matrix& xs, std::span<const int> y,
                                                  std::span<const double> gammas,
                                                  std::span<const SvmSolution> solutions,
                                                  const Matrix& queries);

}  // namespace forage
