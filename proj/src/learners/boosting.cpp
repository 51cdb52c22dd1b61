#include "forage/learners/boosting.hpp"

#include <cmath>
#include <stdexcept>

#include "forage/error.hpp"

namespace forage {
namespace {

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

/// log(1 + exp(t)) without overflow.
double softplus(double t) { return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

}  // namespace

double BoostModel::decision(std::span<const double> row, int n) const {
  const std::size_t m = n < 0 ? stages.size() : std::min(stages.size(), static_cast<std::size_t>(n));
  double f = f0;
  for (std::size_t k = 0; k < m; ++k) f += learning_rate * stages[k].predict(row);
  return f;
}

double binomial_deviance(std::span<const std::uint8_t> y, std::span<const double> f) {
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    // -2 * log-likelihood = 2 * log(1 + exp(-s f)), s = +-1
    total += 2.0 * softplus(y[i] ? -f[i] : f[i]);
  }
  return total / static_cast<double>(y.size());
}

BoostModel fit_gb(const Matrix& x, std::span<const std::uint8_t> y, const BoostParams& params,
                  std::vector<double>* deviance_trace) {
  if (params.n_estimators < 0) throw std::invalid_argument("boosting stage count must be >= 0");
  if (params.max_depth < 1) throw std::invalid_argument("boosting depth must be >= 1");
  if (!(params.learning_rate > 0.0 && params.learning_rate <= 1.0)) {
    throw std::invalid_argument("learning rate must be in (0, 1]");
  }
  if (y.size() != x.rows()) throw std::invalid_argument("label count does not match row count");
  const std::size_t n = x.rows();
  std::size_t pos = 0;
  for (auto v : y) pos += v ? 1 : 0;
  if (pos == 0 || pos == n) throw DataError("gradient boosting needs both classes in y");

  BoostModel model;
  model.learning_rate = params.learning_rate;
  const double rate = static_cast<double>(pos) / static_cast<double>(n);
  model.f0 = std::log(rate / (1.0 - rate));
  model.importances.assign(x.cols(), 0.0);

  std::vector<double> f(n, model.f0);
  if (deviance_trace) deviance_trace->push_back(binomial_deviance(y, f));
  if (params.n_estimators == 0) return model;

  const PresortedColumns data(x);
  const std::vector<double> weights(n, 1.0);
  std::vector<double> residual(n);
  std::vector<double> prob(n);
  TreeParams tp;
  tp.max_depth = params.max_depth;
  tp.criterion = Criterion::SquaredError;
  for (int m = 0; m < params.n_estimators; ++m) {
    for (std::size_t i = 0; i < n; ++i) {
      prob[i] = sigmoid(f[i]);
      residual[i] = (y[i] ? 1.0 : 0.0) - prob[i];
    }
    TreeFit fit = fit_tree(data, residual, weights, tp);
    auto& nodes = fit.tree.nodes;
    // One Newton step per leaf: sum(r) / sum(p (1 - p)).
    std::vector<double> num(nodes.size(), 0.0);
    std::vector<double> den(nodes.size(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto leaf = static_cast<std::size_t>(fit.leaf_of_row[i]);
      num[leaf] += residual[i];
      den[leaf] += prob[i] * (1.0 - prob[i]);
    }
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      if (!nodes[k].is_leaf()) continue;
      nodes[k].value = std::abs(den[k]) < 1e-150 ? 0.0 : num[k] / den[k];
    }
    for (std::size_t i = 0; i < n; ++i) {
      f[i] += params.learning_rate * nodes[static_cast<std::size_t>(fit.leaf_of_row[i])].value;
    }
    fit.tree.add_importances(model.importances);
    model.stages.push_back(std::move(fit.tree));
    if (deviance_trace) deviance_trace->push_back(binomial_deviance(y, f));
  }
  double total = 0.0;
  for (double v : model.importances) total += v;
  if (total > 0.0) {
    for (double& v : model.importances) v /= total;
  }
  return model;
}

std::vector<std::vector<std::uint8_t>> staged_predictions(const BoostModel& model, const Matrix& x,
                                                          std::span<const int> checkpoints) {
  for (int c : checkpoints) {
    if (c < 0 || static_cast<std::size_t>(c) > model.stages.size()) {
      throw std::invalid_argument("stage checkpoint outside the fitted model");
    }
  }
  std::vector<std::vector<std::uint8_t>> out(checkpoints.size(), std::vector<std::uint8_t>(x.rows(), 0));
  int last = 0;
  for (int c : checkpoints) last = std::max(last, c);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto row = x.row(i);
    double f = model.f0;
    for (int m = 0; m <= last; ++m) {
      for (std::size_t c = 0; c < checkpoints.size(); ++c) {
        if (checkpoints[c] == m) out[c][i] = f > 0.0 ? 1 : 0;
      }
      if (m < last) f += model.learning_rate * model.stages[static_cast<std::size_t>(m)].predict(row);
    }
  }
  return out;
}

}  // namespace forage
