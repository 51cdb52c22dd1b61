#include "forage/split.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "forage/error.hpp"
#include "forage/rng.hpp"

namespace forage {
namespace {

/// First k entries of a uniform random permutation of `pool`.
template <typename T>
std::vector<T> sample_without_replacement(std::vector<T> pool, std::size_t k, Rng& rng) {
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  return pool;
}

}  // namespace

SplitPlan make_split(const std::vector<std::string>& participant_ids, std::size_t train_count,
                     std::uint64_t seed, const SplitOptions& options) {
  std::vector<std::string> ids = participant_ids;
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
    throw DataError("duplicate participant id in split input");
  }
  if (train_count > ids.size()) {
    throw ConfigError("train_count", "train_count " + std::to_string(train_count) +
                                         " exceeds the number of participants (" +
                                         std::to_string(ids.size()) + ")");
  }
  if (options.n_folds == 0) throw ConfigError("n_folds", "n_folds must be >= 1");
  if (!(options.valid_fraction > 0.0 && options.valid_fraction < 1.0)) {
    throw ConfigError("valid_fraction", "valid_fraction must be in (0, 1)");
  }

  SplitPlan plan;
  plan.seed = seed;
  Rng split_rng(derive_seed(seed, "split"));
  auto shuffled = ids;
  split_rng.shuffle(shuffled);
  std::vector<std::string> train(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(train_count));
  plan.train_participants.insert(train.begin(), train.end());
  plan.test_participants.insert(shuffled.begin() + static_cast<std::ptrdiff_t>(train_count), shuffled.end());

  // Draw from the sorted training list so folds do not depend on the
  // shuffle order above.
  const std::vector<std::string> sorted_train(plan.train_participants.begin(), plan.train_participants.end());
  const auto valid_count = static_cast<std::size_t>(
      std::ceil(options.valid_fraction * static_cast<double>(sorted_train.size()) - 1e-9));
  for (std::size_t k = 0; k < options.n_folds; ++k) {
    Rng fold_rng(derive_seed(seed, "fold", k));
    const auto valid = sample_without_replacement(sorted_train, valid_count, fold_rng);
    Fold fold;
    fold.valid_ids.insert(valid.begin(), valid.end());
    for (const auto& id : sorted_train) {
      if (!fold.valid_ids.contains(id)) fold.train_ids.insert(id);
    }
    plan.folds.push_back(std::move(fold));
  }
  return plan;
}

std::vector<std::size_t> rows_for(const FeatureMatrix& m, const IdSet& ids) {
  std::vector<bool> member(m.participants.size(), false);
  for (std::size_t g = 0; g < m.participants.size(); ++g) member[g] = ids.contains(m.participants[g]);
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    if (member[m.groups[i]]) rows.push_back(i);
  }
  return rows;
}

BalancedSample balance_rows(const FeatureMatrix& m, const std::vector<std::size_t>& scope_rows,
                            std::uint64_t seed) {
  std::vector<std::size_t> pos;
  std::vector<std::size_t> neg;
  for (auto i : scope_rows) (m.labels[i] ? pos : neg).push_back(i);
  if (pos.empty()) throw DataError("task has no positive examples in scope");
  if (neg.size() < pos.size()) {
    throw DataError("scope has fewer negatives (" + std::to_string(neg.size()) + ") than positives (" +
                    std::to_string(pos.size()) + ")");
  }
  Rng rng(seed);
  auto chosen = sample_without_replacement(std::move(neg), pos.size(), rng);
  BalancedSample out;
  out.positives = pos.size();
  out.negatives = chosen.size();
  out.rows = std::move(pos);
  out.rows.insert(out.rows.end(), chosen.begin(), chosen.end());
  std::sort(out.rows.begin(), out.rows.end());
  return out;
}

BalancedSample balance(const FeatureMatrix& m, const IdSet& scope, std::uint64_t seed) {
  return balance_rows(m, rows_for(m, scope), seed);
}

BalancedSample cap_balanced(const FeatureMatrix& m, const BalancedSample& sample,
                            std::size_t max_rows, std::uint64_t seed) {
  if (max_rows == 0 || sample.rows.size() <= max_rows) return sample;
  const std::size_t per_class = max_rows / 2;
  std::vector<std::size_t> pos;
  std::vector<std::size_t> neg;
  for (auto i : sample.rows) (m.labels[i] ? pos : neg).push_back(i);
  Rng rng(seed);
  auto keep_pos = sample_without_replacement(std::move(pos), per_class, rng);
  auto keep_neg = sample_without_replacement(std::move(neg), per_class, rng);
  BalancedSample out;
  out.positives = keep_pos.size();
  out.negatives = keep_neg.size();
  out.rows = std::move(keep_pos);
  out.rows.insert(out.rows.end(), keep_neg.begin(), keep_neg.end());
  std::sort(out.rows.begin(), out.rows.end());
  return out;
}

void write_split_json(const SplitPlan& plan, std::ostream& out) {
  nlohmann::ordered_json j;
  j["seed"] = plan.seed;
  j["train"] = plan.train_participants;
  j["test"] = plan.test_participants;
  auto folds = nlohmann::ordered_json::array();
  for (const auto& f : plan.folds) {
    nlohmann::ordered_json fj;
    fj["train"] = f.train_ids;
    fj["valid"] = f.valid_ids;
    folds.push_back(std::move(fj));
  }
  j["folds"] = std::move(folds);
  out << j.dump(2) << '\n';
}

SplitPlan read_split_json(std::istream& in) {
  const auto j = nlohmann::json::parse(in);
  SplitPlan plan;
  plan.seed = j.at("seed").get<std::uint64_t>();
  plan.train_participants = j.at("train").get<IdSet>();
  plan.test_participants = j.at("test").get<IdSet>();
  for (const auto& fj : j.at("folds")) {
    plan.folds.push_back({fj.at("train").get<IdSet>(), fj.at("valid").get<IdSet>()});
  }
  return plan;
}

}  // namespace forage
