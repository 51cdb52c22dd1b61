#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <set>
#include <string>
#include <vector>

#include "forage/feature_matrix.hpp"

namespace forage {

using IdSet = std::set<std::string>;

struct Fold {
  IdSet train_ids;
  IdSet valid_ids;

  friend bool operator==(const Fold&, const Fold&) = default;
};

/// Participant-level train/test split plus resampled validation folds.
struct SplitPlan {
  IdSet train_participants;
  IdSet test_participants;
  std::vector<Fold> folds;
  std::uint64_t seed = 0;

  friend bool operator==(const SplitPlan&, const SplitPlan&) = default;
};

struct SplitOptions {
  std::size_t n_folds = 5;
  double valid_fraction = 0.25;  // |valid| = ceil(fraction * |train|)
};

/// Draws `train_count` training participants, then for each fold an
/// independent validation subset of them. Folds may overlap.
SplitPlan make_split(const std::vector<std::string>& participant_ids, std::size_t train_count,
                     std::uint64_t seed, const SplitOptions& options = {});

/// All and only rows whose participant is in `ids`, in matrix order.
std::vector<std::size_t> rows_for(const FeatureMatrix& m, const IdSet& ids);

/// Row indices: every positive in scope plus an equal number of negatives
/// sampled uniformly without replacement. Sorted ascending.
struct BalancedSample {
  std::vector<std::size_t> rows;
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

BalancedSample balance(const FeatureMatrix& m, const IdSet& scope, std::uint64_t seed);
BalancedSample balance_rows(const FeatureMatrix& m, const std::vector<std::size_t>& scope_rows,
                            std::uint64_t seed);

/// Keeps at most `max_rows` rows of a balanced sample while staying 50/50.
/// `max_rows` = 0 means no cap.
BalancedSample cap_balanced(const FeatureMatrix& m, const BalancedSample& sample,
                            std::size_t max_rows, std::uint64_t seed);

void write_split_json(const SplitPlan& plan, std::ostream& out);
SplitPlan read_split_json(std::istream& in);

}  // namespace forage
