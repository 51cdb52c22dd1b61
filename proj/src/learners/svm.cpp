#include "forage/learners/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include <Eigen/Dense>

#include "forage/error.hpp"

namespace forage {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstRowMap = Eigen::Map<const RowMatrix>;

constexpr double kTau = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kQueryChunk = 2048;

ConstRowMap as_eigen(const Matrix& m) {
  return ConstRowMap(m.data().data(), static_cast<Eigen::Index>(m.rows()),
                     static_cast<Eigen::Index>(m.cols()));
}

void check_labels(std::span<const int> y, std::size_t rows) {
  if (y.size() != rows) throw std::invalid_argument("label count does not match row count");
  bool pos = false;
  bool neg = false;
  for (int v : y) {
    if (v == 1) {
      pos = true;
    } else if (v == -1) {
      neg = true;
    } else {
      throw std::invalid_argument("labels must be -1 or +1");
    }
  }
  if (!pos || !neg) throw DataError("SVM needs both classes in y");
}

}  // namespace

KernelCache::KernelCache(const Matrix& x, double gamma, std::size_t cache_mb)
    : x_(x), gamma_(gamma), rows_(x.rows()), where_(x.rows()), cached_(x.rows(), false) {
  const std::size_t n = x.rows();
  norms_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (double v : x.row(i)) s += v * v;
    norms_[i] = s;
  }
  const std::size_t row_bytes = std::max<std::size_t>(1, n) * sizeof(double);
  max_rows_ = std::max<std::size_t>(2, cache_mb * 1024 * 1024 / row_bytes);
}

std::span<const double> KernelCache::row(std::size_t i) {
  if (cached_[i]) {
    lru_.splice(lru_.begin(), lru_, where_[i]);
    return rows_[i];
  }
  if (lru_.size() >= max_rows_) {
    const std::size_t victim = lru_.back();
    lru_.pop_back();
    cached_[victim] = false;
    std::vector<double>().swap(rows_[victim]);
  }
  const std::size_t n = x_.rows();
  const auto X = as_eigen(x_);
  std::vector<double>& out = rows_[i];
  out.resize(n);
  Eigen::Map<Eigen::VectorXd> k(out.data(), static_cast<Eigen::Index>(n));
  k.noalias() = X * X.row(static_cast<Eigen::Index>(i)).transpose();
  for (std::size_t j = 0; j < n; ++j) {
    const double d2 = std::max(0.0, norms_[i] + norms_[j] - 2.0 * out[j]);
    out[j] = std::exp(-gamma_ * d2);
  }
  out[i] = 1.0;
  lru_.push_front(i);
  where_[i] = lru_.begin();
  cached_[i] = true;
  return out;
}

SvmSolution solve_svm_dual(KernelCache& kernel, std::span<const int> y, double c, int max_iter,
                           double tol, std::vector<double>* objective_trace) {
  const std::size_t n = kernel.size();
  SvmSolution sol;
  sol.alpha.assign(n, 0.0);
  std::vector<double> grad(n, -1.0);  // Q a - e
  auto& alpha = sol.alpha;
  const auto upper = [&](std::size_t t) { return alpha[t] >= c; };
  const auto lower = [&](std::size_t t) { return alpha[t] <= 0.0; };
  const auto objective = [&] {
    double s = 0.0;
    for (std::size_t t = 0; t < n; ++t) s += alpha[t] * (grad[t] - 1.0);
    return -0.5 * s;
  };

  int iter = 0;
  while (true) {
    // Pick i with the largest -y_i G_i among indices free to move up.
    double gmax = -kInf;
    std::ptrdiff_t best_i = -1;
    for (std::size_t t = 0; t < n; ++t) {
      if (y[t] == 1) {
        if (!upper(t) && -grad[t] >= gmax) {
          gmax = -grad[t];
          best_i = static_cast<std::ptrdiff_t>(t);
        }
      } else if (!lower(t) && grad[t] >= gmax) {
        gmax = grad[t];
        best_i = static_cast<std::ptrdiff_t>(t);
      }
    }
    double gmax2 = -kInf;
    std::ptrdiff_t best_j = -1;
    double obj_diff_min = kInf;
    std::span<const double> ki;
    if (best_i >= 0) ki = kernel.row(static_cast<std::size_t>(best_i));
    const auto i = static_cast<std::size_t>(std::max<std::ptrdiff_t>(best_i, 0));
    for (std::size_t t = 0; t < n && best_i >= 0; ++t) {
      double grad_diff;
      if (y[t] == 1) {
        if (lower(t)) continue;
        grad_diff = gmax + grad[t];
        gmax2 = std::max(gmax2, grad[t]);
      } else {
        if (upper(t)) continue;
        grad_diff = gmax - grad[t];
        gmax2 = std::max(gmax2, -grad[t]);
      }
      if (grad_diff > 0.0) {
        double quad = kernel.diagonal(i) + kernel.diagonal(t) - 2.0 * ki[t];
        if (quad <= 0.0) quad = kTau;
        const double obj_diff = -(grad_diff * grad_diff) / quad;
        if (obj_diff <= obj_diff_min) {
          best_j = static_cast<std::ptrdiff_t>(t);
          obj_diff_min = obj_diff;
        }
      }
    }
    if (best_i < 0 || best_j < 0 || gmax + gmax2 < tol) {
      sol.converged = true;
      break;
    }
    if (iter >= max_iter) break;
    ++iter;

    const auto j = static_cast<std::size_t>(best_j);
    const auto kj = kernel.row(j);
    ki = kernel.row(i);  // may have been evicted by the fetch of row j
    const double old_i = alpha[i];
    const double old_j = alpha[j];
    if (y[i] != y[j]) {
      double quad = 2.0 - 2.0 * ki[j];
      if (quad <= 0.0) quad = kTau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0.0) {
        if (alpha[j] < 0.0) {
          alpha[j] = 0.0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = -diff;
      }
      if (diff > 0.0) {
        if (alpha[i] > c) {
          alpha[i] = c;
          alpha[j] = c - diff;
        }
      } else if (alpha[j] > c) {
        alpha[j] = c;
        alpha[i] = c + diff;
      }
    } else {
      double quad = 2.0 - 2.0 * ki[j];
      if (quad <= 0.0) quad = kTau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > c) {
        if (alpha[i] > c) {
          alpha[i] = c;
          alpha[j] = sum - c;
        }
      } else if (alpha[j] < 0.0) {
        alpha[j] = 0.0;
        alpha[i] = sum;
      }
      if (sum > c) {
        if (alpha[j] > c) {
          alpha[j] = c;
          alpha[i] = sum - c;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = sum;
      }
    }
    const double di = (alpha[i] - old_i) * y[i];
    const double dj = (alpha[j] - old_j) * y[j];
    for (std::size_t t = 0; t < n; ++t) grad[t] += y[t] * (ki[t] * di + kj[t] * dj);
    if (objective_trace) objective_trace->push_back(objective());
  }
  sol.iterations = iter;

  double ub = kInf;
  double lb = -kInf;
  double sum_free = 0.0;
  std::size_t free = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * grad[t];
    if (upper(t)) {
      if (y[t] == -1) {
        ub = std::min(ub, yg);
      } else {
        lb = std::max(lb, yg);
      }
    } else if (lower(t)) {
      if (y[t] == 1) {
        ub = std::min(ub, yg);
      } else {
        lb = std::max(lb, yg);
      }
    } else {
      ++free;
      sum_free += yg;
    }
  }
  sol.rho = free > 0 ? sum_free / static_cast<double>(free) : (ub + lb) / 2.0;
  sol.objective = objective();
  return sol;
}

double SvmModel::decision(std::span<const double> row) const {
  std::vector<double> z(row.size());
  standardizer.apply(row, z);
  double f = -rho;
  for (std::size_t s = 0; s < support.rows(); ++s) {
    const auto sv = support.row(s);
    double d2 = 0.0;
    for (std::size_t k = 0; k < z.size(); ++k) {
      const double d = sv[k] - z[k];
      d2 += d * d;
    }
    f += coef[s] * std::exp(-gamma * d2);
  }
  return f;
}

std::vector<double> SvmModel::decisions(const Matrix& x) const {
  if (x.cols() != standardizer.mean.size()) throw DataError("SVM input has the wrong width");
  const Matrix z = standardizer.transform(x);
  std::vector<double> out(x.rows(), -rho);
  if (support.rows() == 0) return out;
  const auto S = as_eigen(support);
  const Eigen::VectorXd s_norm = S.rowwise().squaredNorm();
  const Eigen::Map<const Eigen::VectorXd> w(coef.data(), static_cast<Eigen::Index>(coef.size()));
  const auto Z = as_eigen(z);
  for (Eigen::Index begin = 0; begin < Z.rows(); begin += kQueryChunk) {
    const Eigen::Index len = std::min<Eigen::Index>(kQueryChunk, Z.rows() - begin);
    const auto block = Z.middleRows(begin, len);
    Eigen::MatrixXd d2 = -2.0 * (block * S.transpose());
    d2.colwise() += block.rowwise().squaredNorm();
    d2.rowwise() += s_norm.transpose();
    const Eigen::VectorXd f = (-gamma * d2.array().max(0.0)).exp().matrix() * w;
    for (Eigen::Index r = 0; r < len; ++r) out[static_cast<std::size_t>(begin + r)] += f[r];
  }
  return out;
}

SvmModel make_svm_model(const Standardizer& standardizer, const Matrix& xs, std::span<const int> y,
                        double gamma, const SvmSolution& solution) {
  SvmModel model;
  model.standardizer = standardizer;
  model.gamma = gamma;
  model.rho = solution.rho;
  model.converged = solution.converged;
  model.iterations = solution.iterations;
  std::vector<std::size_t> sv;
  for (std::size_t i = 0; i < solution.alpha.size(); ++i) {
    if (solution.alpha[i] > 0.0) {
      sv.push_back(i);
      model.coef.push_back(solution.alpha[i] * y[i]);
    }
  }
  model.support = xs.select_rows(sv);
  return model;
}

SvmModel fit_svm(const Matrix& x, std::span<const int> y, const SvmParams& params) {
  if (!(params.c > 0.0)) throw std::invalid_argument("SVM parameter C must be > 0");
  if (!(params.gamma > 0.0)) throw std::invalid_argument("SVM parameter gamma must be > 0");
  check_labels(y, x.rows());
  const Standardizer standardizer =
      params.standardize ? Standardizer::fit(x, false) : Standardizer::identity(x.cols());
  const Matrix xs = standardizer.transform(x);
  KernelCache kernel(xs, params.gamma, params.cache_mb);
  const SvmSolution sol = solve_svm_dual(kernel, y, params.c, params.max_iter, params.tol);
  return make_svm_model(standardizer, xs, y, params.gamma, sol);
}

std::vector<std::vector<double>> shared_decisions(const Matrix& xs, std::span<const int> y,
                                                  std::span<const double> gammas,
                                                  std::span<const SvmSolution> solutions,
                                                  const Matrix& queries) {
  if (gammas.size() != solutions.size()) throw std::invalid_argument("one gamma per solution");
  const std::size_t n = xs.rows();
  std::vector<std::vector<double>> out(solutions.size());
  for (std::size_t m = 0; m < solutions.size(); ++m) out[m].assign(queries.rows(), -solutions[m].rho);
  if (queries.rows() == 0) return out;

  // Training columns that carry weight in any solution; distances are only
  // needed against those.
  std::vector<Eigen::Index> used;
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& s : solutions) {
      if (s.alpha[i] > 0.0) {
        used.push_back(static_cast<Eigen::Index>(i));
        break;
      }
    }
  }
  if (used.empty()) return out;
  const auto X = as_eigen(xs);
  const RowMatrix S = X(used, Eigen::all);
  const Eigen::VectorXd s_norm = S.rowwise().squaredNorm();

  std::map<double, std::vector<std::size_t>> by_gamma;
  for (std::size_t m = 0; m < solutions.size(); ++m) by_gamma[gammas[m]].push_back(m);
  std::vector<Eigen::MatrixXd> coefs;
  for (const auto& [gamma, members] : by_gamma) {
    Eigen::MatrixXd w(static_cast<Eigen::Index>(used.size()), static_cast<Eigen::Index>(members.size()));
    for (std::size_t k = 0; k < members.size(); ++k) {
      const auto& a = solutions[members[k]].alpha;
      for (std::size_t u = 0; u < used.size(); ++u) {
        const auto i = static_cast<std::size_t>(used[u]);
        w(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(k)) = a[i] * y[i];
      }
    }
    coefs.push_back(std::move(w));
  }

  const auto Q = as_eigen(queries);
  for (Eigen::Index begin = 0; begin < Q.rows(); begin += kQueryChunk) {
    const Eigen::Index len = std::min<Eigen::Index>(kQueryChunk, Q.rows() - begin);
    const auto block = Q.middleRows(begin, len);
    Eigen::MatrixXd d2 = -2.0 * (block * S.transpose());
    d2.colwise() += block.rowwise().squaredNorm();
    d2.rowwise() += s_norm.transpose();
    d2 = d2.array().max(0.0);
    std::size_t g = 0;
    for (const auto& [gamma, members] : by_gamma) {
      const Eigen::MatrixXd f = (-gamma * d2.array()).exp().matrix() * coefs[g];
      for (std::size_t k = 0; k < members.size(); ++k) {
        auto& dst = out[members[k]];
        for (Eigen::Index r = 0; r < len; ++r) {
          dst[static_cast<std::size_t>(begin + r)] += f(r, static_cast<Eigen::Index>(k));
        }
      }
      ++g;
    }
  }
  return out;
}

}  // namespace forage
