#include "forage/learners/logistic.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "forage/error.hpp"

namespace forage {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstRowMap = Eigen::Map<const RowMatrix>;

/// log(1 + exp(t)) without overflow.
double softplus(double t) { return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

/// 1 / (1 + exp(-t)).
double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
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
  if (!pos || !neg) throw DataError("logistic regression needs both classes in y");
}

}  // namespace

LogisticObjective::LogisticObjective(const Matrix& x, std::span<const int> y, double c)
    : x_(x), y_(y), c_(c) {}

double LogisticObjective::value(std::span<const double> w) const {
  double reg = 0.0;
  for (std::size_t j = 1; j < w.size(); ++j) reg += w[j] * w[j];
  double loss = 0.0;
  for (std::size_t i = 0; i < x_.rows(); ++i) {
    const auto row = x_.row(i);
    double z = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) z += w[j] * row[j];
    loss += softplus(-y_[i] * z);
  }
  return 0.5 * reg + c_ * loss;
}

std::vector<double> LogisticObjective::gradient(std::span<const double> w) const {
  std::vector<double> g(w.begin(), w.end());
  g[0] = 0.0;
  for (std::size_t i = 0; i < x_.rows(); ++i) {
    const auto row = x_.row(i);
    double z = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) z += w[j] * row[j];
    const double coef = -c_ * y_[i] * sigmoid(-y_[i] * z);
    for (std::size_t j = 0; j < w.size(); ++j) g[j] += coef * row[j];
  }
  return g;
}

double LogisticModel::decision(std::span<const double> row) const {
  double z = 0.0;
  for (std::size_t j = 0; j < weights.size(); ++j) {
    z += weights[j] * (row[j] - standardizer.mean[j]) / standardizer.scale[j];
  }
  return z;
}

LogisticModel fit_lr(const Matrix& x, std::span<const int> y, const LrParams& params,
                     std::optional<std::span<const double>> start) {
  if (!(params.c > 0.0)) throw std::invalid_argument("LR parameter C must be > 0");
  if (x.cols() == 0) throw std::invalid_argument("LR needs at least the bias column");
  check_labels(y, x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    if (x(i, 0) != 1.0) throw std::invalid_argument("LR expects column 0 to be the bias column");
  }

  LogisticModel model;
  model.standardizer = params.standardize ? Standardizer::fit(x, /*keep_first_column=*/true)
                                          : Standardizer::identity(x.cols());
  const Matrix xs = model.standardizer.transform(x);
  const auto n = static_cast<Eigen::Index>(xs.rows());
  const auto p = static_cast<Eigen::Index>(xs.cols());
  const ConstRowMap X(xs.data().data(), n, p);
  Eigen::VectorXd yv(n);
  for (Eigen::Index i = 0; i < n; ++i) yv[i] = y[static_cast<std::size_t>(i)];

  Eigen::VectorXd penalty = Eigen::VectorXd::Ones(p);
  penalty[0] = 0.0;

  Eigen::VectorXd w = Eigen::VectorXd::Zero(p);
  if (start) {
    if (start->size() != static_cast<std::size_t>(p)) throw std::invalid_argument("LR start has wrong size");
    for (Eigen::Index j = 0; j < p; ++j) w[j] = (*start)[static_cast<std::size_t>(j)];
  }

  const double c = params.c;
  auto objective = [&](const Eigen::VectorXd& v, Eigen::VectorXd& margins) {
    margins = (X * v).cwiseProduct(yv);
    double loss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) loss += softplus(-margins[i]);
    return 0.5 * v.cwiseProduct(penalty).squaredNorm() + c * loss;
  };

  Eigen::VectorXd margins;
  double f = objective(w, margins);
  for (int iter = 0; iter < params.max_iter; ++iter) {
    // s_i = sigma(-m_i): gradient weight; h_i = sigma(m_i) sigma(-m_i): curvature.
    Eigen::VectorXd s(n);
    Eigen::VectorXd h(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      s[i] = sigmoid(-margins[i]);
      h[i] = s[i] * (1.0 - s[i]);
    }
    const Eigen::VectorXd grad = w.cwiseProduct(penalty) - c * (X.transpose() * s.cwiseProduct(yv));
    model.iterations = iter;
    if (grad.lpNorm<Eigen::Infinity>() <= params.tol) {
      model.converged = true;
      break;
    }
    Eigen::MatrixXd hess = c * (X.transpose() * h.asDiagonal() * X);
    hess.diagonal() += penalty;
    // Tiny ridge keeps the intercept direction solvable when all h vanish.
    hess.diagonal().array() += 1e-12 * (1.0 + hess.diagonal().cwiseAbs().maxCoeff());
    const Eigen::VectorXd step = hess.ldlt().solve(-grad);

    const double slope = grad.dot(step);
    double t = 1.0;
    bool accepted = false;
    Eigen::VectorXd trial_margins;
    for (int ls = 0; ls < 60; ++ls) {
      const Eigen::VectorXd trial = w + t * step;
      const double ft = objective(trial, trial_margins);
      if (ft <= f + 1e-4 * t * slope) {
        w = trial;
        f = ft;
        margins = std::move(trial_margins);
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    model.iterations = iter + 1;
    if (!accepted) break;  // no further progress possible in floating point
  }
  if (!model.converged) {
    Eigen::VectorXd s(n);
    for (Eigen::Index i = 0; i < n; ++i) s[i] = sigmoid(-margins[i]);
    const Eigen::VectorXd grad = w.cwiseProduct(penalty) - c * (X.transpose() * s.cwiseProduct(yv));
    model.converged = grad.lpNorm<Eigen::Infinity>() <= params.tol;
  }
  model.weights.assign(w.data(), w.data() + p);
  return model;
}

}  // namespace forage
