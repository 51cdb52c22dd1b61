#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "forage/error.hpp"
#include "forage/split.hpp"
#include "test_util.hpp"

using namespace forage;
using namespace forage::testing;

namespace {

std::vector<std::string> ids(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("P" + std::to_string(1000 + i));
  return out;
}

/// A matrix whose rows belong to `groups` participants with labels drawn
/// at `rate`.
FeatureMatrix labeled(Rng& rng, std::size_t participants, std::size_t rows_each, double rate) {
  FeatureMatrix m;
  m.participants = ids(participants);
  m.values = Matrix(participants * rows_each, kFeatureCount, 1.0);
  for (std::size_t p = 0; p < participants; ++p) {
    for (std::size_t r = 0; r < rows_each; ++r) {
      m.groups.push_back(static_cast<std::uint32_t>(p));
      m.labels.push_back(rng.bernoulli(rate) ? 1 : 0);
      m.timestamps.push_back(make_minute(2023, 3, 6, 0, 0) + static_cast<std::int64_t>(r));
    }
  }
  return m;
}

}  // namespace

TEST(MakeSplit, PaperShape) {
  const auto plan = make_split(ids(81), 60, 42);
  EXPECT_EQ(plan.train_participants.size(), 60u);
  EXPECT_EQ(plan.test_participants.size(), 21u);
  ASSERT_EQ(plan.folds.size(), 5u);
  for (const auto& f : plan.folds) {
    EXPECT_EQ(f.valid_ids.size(), 15u);
    EXPECT_EQ(f.train_ids.size(), 45u);
    for (const auto& v : f.valid_ids) {
      EXPECT_TRUE(plan.train_participants.contains(v));
      EXPECT_FALSE(f.train_ids.contains(v));
    }
    std::set<std::string> uni(f.train_ids.begin(), f.train_ids.end());
    uni.insert(f.valid_ids.begin(), f.valid_ids.end());
    EXPECT_EQ(IdSet(uni.begin(), uni.end()), plan.train_participants);
  }
  for (const auto& t : plan.test_participants) EXPECT_FALSE(plan.train_participants.contains(t));
}

TEST(MakeSplit, SameSeedSamePlanDifferentSeedDiffers) {
  EXPECT_EQ(make_split(ids(81), 60, 42), make_split(ids(81), 60, 42));
  EXPECT_NE(make_split(ids(81), 60, 42), make_split(ids(81), 60, 43));
}

TEST(MakeSplit, InputOrderDoesNotMatter) {
  auto shuffled = ids(30);
  Rng rng(3);
  rng.shuffle(shuffled);
  EXPECT_EQ(make_split(ids(30), 20, 9), make_split(shuffled, 20, 9));
}

TEST(MakeSplit, SmallCohortUsesCeilingRule) {
  const auto plan = make_split(ids(10), 8, 1);
  for (const auto& f : plan.folds) {
    EXPECT_EQ(f.valid_ids.size(), 2u);
    EXPECT_EQ(f.train_ids.size(), 6u);
  }
  const auto odd = make_split(ids(10), 7, 1);
  for (const auto& f : odd.folds) EXPECT_EQ(f.valid_ids.size(), 2u);  // ceil(1.75)
}

TEST(MakeSplit, TooManyTrainingParticipantsIsAnError) {
  EXPECT_THROW(make_split(ids(10), 11, 1), ConfigError);
}

TEST(MakeSplit, JsonRoundTrip) {
  const auto plan = make_split(ids(20), 12, 77);
  std::stringstream s;
  write_split_json(plan, s);
  EXPECT_EQ(read_split_json(s), plan);
}

TEST(RowsFor, SetAlgebra) {
  Rng rng(2);
  const auto m = labeled(rng, 6, 10, 0.1);
  EXPECT_TRUE(rows_for(m, {}).empty());
  const IdSet all(m.participants.begin(), m.participants.end());
  const auto full = rows_for(m, all);
  ASSERT_EQ(full.size(), m.rows());
  for (std::size_t i = 0; i < full.size(); ++i) EXPECT_EQ(full[i], i);
  const IdSet a{m.participants[0], m.participants[3]};
  IdSet b;
  for (const auto& id : m.participants) {
    if (!a.contains(id)) b.insert(id);
  }
  auto ra = rows_for(m, a);
  auto rb = rows_for(m, b);
  std::vector<std::size_t> both;
  std::set_intersection(ra.begin(), ra.end(), rb.begin(), rb.end(), std::back_inserter(both));
  EXPECT_TRUE(both.empty());
  std::vector<std::size_t> uni;
  std::set_union(ra.begin(), ra.end(), rb.begin(), rb.end(), std::back_inserter(uni));
  EXPECT_EQ(uni, full);
  for (auto r : ra) EXPECT_TRUE(a.contains(m.participants[m.groups[r]]));
}

TEST(Balance, FiftyFiftyWithAllPositives) {
  FeatureMatrix m;
  m.participants = {"A"};
  m.values = Matrix(5050, kFeatureCount, 1.0);
  for (std::size_t i = 0; i < 5050; ++i) {
    m.labels.push_back(i % 101 == 0 ? 1 : 0);
    m.groups.push_back(0);
  }
  m.timestamps.resize(5050);
  const auto s = balance(m, {"A"}, 1);
  EXPECT_EQ(s.positives, 50u);
  EXPECT_EQ(s.negatives, 50u);
  EXPECT_EQ(s.rows.size(), 100u);
}

TEST(Balance, PropertiesOnRandomScopes) {
  Rng rng(10);
  for (int inst = 0; inst < 50; ++inst) {
    const auto m = labeled(rng, 8, 50 + rng.below(200), rng.uniform(0.01, 0.3));
    IdSet scope;
    for (const auto& id : m.participants) {
      if (rng.bernoulli(0.6)) scope.insert(id);
    }
    const auto rows = rows_for(m, scope);
    std::size_t pos = 0;
    for (auto r : rows) pos += m.labels[r];
    if (pos == 0) {
      EXPECT_THROW(balance(m, scope, inst), DataError);
      continue;
    }
    const auto s = balance(m, scope, inst);
    EXPECT_TRUE(std::is_sorted(s.rows.begin(), s.rows.end()));
    EXPECT_EQ(std::set<std::size_t>(s.rows.begin(), s.rows.end()).size(), s.rows.size());
    std::size_t sp = 0;
    std::size_t sn = 0;
    for (auto r : s.rows) {
      EXPECT_TRUE(scope.contains(m.participants[m.groups[r]]));
      (m.labels[r] ? sp : sn)++;
    }
    EXPECT_EQ(sp, pos);
    EXPECT_EQ(sn, pos);
    EXPECT_EQ(s.positives, pos);
    EXPECT_EQ(s.negatives, pos);
  }
}

TEST(Balance, DeterministicPerSeed) {
  Rng rng(6);
  const auto m = labeled(rng, 4, 500, 0.05);
  const IdSet scope(m.participants.begin(), m.participants.end());
  const auto a = balance(m, scope, 5);
  EXPECT_EQ(a.rows, balance(m, scope, 5).rows);
  const auto b = balance(m, scope, 6);
  std::vector<std::size_t> pa;
  std::vector<std::size_t> pb;
  for (auto r : a.rows) {
    if (m.labels[r]) pa.push_back(r);
  }
  for (auto r : b.rows) {
    if (m.labels[r]) pb.push_back(r);
  }
  EXPECT_EQ(pa, pb);
  EXPECT_NE(a.rows, b.rows);
}

TEST(Balance, ZeroPositivesAndTooFewNegativesAreErrors) {
  Rng rng(1);
  auto m = labeled(rng, 1, 10, 0.0);
  EXPECT_THROW(balance(m, {m.participants[0]}, 1), DataError);
  std::fill(m.labels.begin(), m.labels.end(), 1);
  m.labels[0] = 0;
  EXPECT_THROW(balance(m, {m.participants[0]}, 1), DataError);
}

TEST(CapBalanced, StaysFiftyFiftySubset) {
  Rng rng(3);
  const auto m = labeled(rng, 5, 400, 0.2);
  const IdSet scope(m.participants.begin(), m.participants.end());
  const auto s = balance(m, scope, 2);
  const auto capped = cap_balanced(m, s, 100, 4);
  EXPECT_EQ(capped.rows.size(), 100u);
  EXPECT_EQ(capped.positives, 50u);
  EXPECT_EQ(capped.negatives, 50u);
  std::size_t pos = 0;
  for (auto r : capped.rows) {
    pos += m.labels[r];
    EXPECT_TRUE(std::binary_search(s.rows.begin(), s.rows.end(), r));
  }
  EXPECT_EQ(pos, 50u);
  EXPECT_EQ(cap_balanced(m, s, 0, 4).rows, s.rows);
  EXPECT_EQ(cap_balanced(m, s, s.rows.size() + 10, 4).rows, s.rows);
}
