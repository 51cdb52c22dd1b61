#include "forage/learners/forest.hpp"

#include <cmath>
#include <stdexcept>

#include "forage/error.hpp"
#include "forage/rng.hpp"

namespace forage {

int ForestModel::predict(std::span<const double> row) const {
  std::size_t votes = 0;
  for (const auto& t : trees) votes += t.predict(row) > 0.5 ? 1 : 0;
  return 2 * votes > trees.size() ? 1 : 0;
}

std::size_t resolve_max_features(std::size_t requested, std::size_t p) {
  if (requested > 0) return std::min(requested, p);
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(p)))));
}

ForestModel fit_rf(const Matrix& x, std::span<const std::uint8_t> y, const ForestParams& params) {
  if (params.n_estimators < 1) throw std::invalid_argument("forest needs at least one tree");
  if (params.max_depth < 1) throw std::invalid_argument("forest depth must be >= 1");
  if (y.size() != x.rows()) throw std::invalid_argument("label count does not match row count");
  std::size_t pos = 0;
  for (auto v : y) pos += v ? 1 : 0;
  if (pos == 0 || pos == y.size()) throw DataError("random forest needs both classes in y");

  const std::size_t n = x.rows();
  const PresortedColumns data(x);
  std::vector<double> targets(n);
  for (std::size_t i = 0; i < n; ++i) targets[i] = y[i] ? 1.0 : 0.0;

  ForestModel model;
  model.importances.assign(x.cols(), 0.0);
  std::vector<double> weights(n);
  for (int t = 0; t < params.n_estimators; ++t) {
    const std::uint64_t tree_seed = derive_seed(params.seed, "tree", static_cast<std::uint64_t>(t));
    if (params.bootstrap) {
      std::fill(weights.begin(), weights.end(), 0.0);
      Rng rng(tree_seed);
      for (std::size_t k = 0; k < n; ++k) weights[rng.below(n)] += 1.0;
    } else {
      std::fill(weights.begin(), weights.end(), 1.0);
    }
    TreeParams tp;
    tp.max_depth = params.max_depth;
    tp.max_features = resolve_max_features(params.max_features, x.cols());
    tp.seed = mix64(tree_seed);
    tp.criterion = Criterion::Gini;
    model.trees.push_back(fit_tree(data, targets, weights, tp).tree);
    model.trees.back().add_importances(model.importances);
  }
  double total = 0.0;
  for (double v : model.importances) total += v;
  if (total > 0.0) {
    for (double& v : model.importances) v /= total;
  }
  return model;
}

std::vector<std::vector<std::vector<std::uint8_t>>> staged_votes(const ForestModel& forest, const Matrix& x,
                                                                  std::span<const int> tree_counts,
                                                                  std::span<const int> depths) {
  for (int c : tree_counts) {
    if (c < 1 || static_cast<std::size_t>(c) > forest.trees.size()) {
      throw std::invalid_argument("tree count outside the fitted forest");
    }
  }
  const std::size_t nd = depths.size();
  const std::size_t nc = tree_counts.size();
  std::vector<std::vector<std::vector<std::uint8_t>>> out(
      nc, std::vector<std::vector<std::uint8_t>>(nd, std::vector<std::uint8_t>(x.rows(), 0)));
  int max_count = 0;
  for (int c : tree_counts) max_count = std::max(max_count, c);

  std::vector<std::size_t> votes(nd);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto row = x.row(i);
    std::fill(votes.begin(), votes.end(), 0);
    for (int t = 0; t < max_count; ++t) {
      const auto& nodes = forest.trees[static_cast<std::size_t>(t)].nodes;
      // Walk once; the node visited at depth d (or the earlier leaf) is the
      // prediction of the tree truncated at d.
      std::size_t k = 0;
      for (std::size_t d = 0; d < nd; ++d) {
        if (d > 0 && depths[d] < depths[d - 1]) k = 0;
        while (!nodes[k].is_leaf() && nodes[k].depth < depths[d]) {
          const auto& node = nodes[k];
          k = static_cast<std::size_t>(row[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left
                                                                                                  : node.right);
        }
        votes[d] += nodes[k].value > 0.5 ? 1 : 0;
      }
      for (std::size_t c = 0; c < nc; ++c) {
        if (tree_counts[c] != t + 1) continue;
        for (std::size_t d = 0; d < nd; ++d) {
          out[c][d][i] = 2 * votes[d] > static_cast<std::size_t>(t + 1) ? 1 : 0;
        }
      }
    }
  }
  return out;
}

}  // namespace forage
