#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "forage/error.hpp"
#include "forage/features.hpp"
#include "test_util.hpp"

using namespace forage;
using namespace forage::testing;

namespace {

Minute at(int h, int m) { return make_minute(2023, 3, 8, h, m); }

/// Index of the single hot entry.
std::size_t hot(const std::array<double, 6>& v) {
  std::size_t n = 0;
  std::size_t idx = 99;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] == 1.0) {
      ++n;
      idx = i;
    } else {
      EXPECT_EQ(v[i], 0.0);
    }
  }
  EXPECT_EQ(n, 1u);
  return idx;
}

std::vector<double> brute_time_since(const std::vector<Minute>& ts, const std::vector<Minute>& ev, int cap) {
  std::vector<double> out;
  for (const auto t : ts) {
    std::int64_t v = t - ts.front();
    for (auto it = ev.rbegin(); it != ev.rend(); ++it) {
      if (*it <= t) {
        v = t - *it;
        break;
      }
    }
    out.push_back(static_cast<double>(std::min<std::int64_t>(v, cap)));
  }
  return out;
}

Cohort contiguous(std::size_t minutes, std::vector<std::size_t> eating_idx) {
  Participant p;
  p.id = "C";
  const Minute t0 = make_minute(2023, 3, 6, 11, 0);
  for (std::size_t i = 0; i < minutes; ++i) p.records.push_back(record_at(t0 + static_cast<std::int64_t>(i), {32.8, -117.0}));
  for (auto i : eating_idx) p.events.add(EventType::Eating, t0 + static_cast<std::int64_t>(i));
  p.events.normalize();
  Cohort c;
  c.participants.push_back(p);
  return c;
}

}  // namespace

TEST(TimeRange, PaperClockAndBoundaries) {
  EXPECT_EQ(hot(time_range_onehot(at(14, 30))), 3u);
  EXPECT_EQ(hot(time_range_onehot(at(0, 0))), 0u);
  EXPECT_EQ(hot(time_range_onehot(at(23, 59))), 5u);
  EXPECT_EQ(hot(time_range_onehot(at(6, 0))), 1u);
  EXPECT_EQ(hot(time_range_onehot(at(9, 59))), 1u);
  EXPECT_EQ(hot(time_range_onehot(at(10, 0))), 2u);
  EXPECT_EQ(hot(time_range_onehot(at(17, 0))), 4u);
  EXPECT_EQ(hot(time_range_onehot(at(20, 0))), 5u);
}

TEST(TimePattern, Examples) {
  EXPECT_EQ(time_pattern(at(8, 0)), 30.0);
  EXPECT_EQ(time_pattern(at(12, 30)), 0.0);
  EXPECT_EQ(time_pattern(at(15, 30)), 180.0);
  EXPECT_EQ(time_pattern(at(0, 0)), 450.0);
}

TEST(TimePattern, EqualsMinimumOverMidpointsEverywhere) {
  for (int m = 0; m < 1440; ++m) {
    const double ref = std::min({std::abs(m - 450.0), std::abs(m - 750.0), std::abs(m - 1110.0)});
    EXPECT_EQ(time_pattern(at(m / 60, m % 60)), ref);
    EXPECT_LE(ref, 720.0);
  }
}

TEST(TimePattern, OverlappingIntervalsAreRejected) {
  TimePatternSpec spec;
  spec.intervals[1] = {8 * 60, 12 * 60};
  EXPECT_THROW(spec.validate(), ConfigError);
}

TEST(NumericTime, Examples) {
  EXPECT_EQ(numeric_time(at(14, 30)), 14.5);
  EXPECT_EQ(numeric_time(at(0, 0)), 0.0);
  EXPECT_DOUBLE_EQ(numeric_time(at(23, 59)), 23.0 + 59.0 / 60.0);
}

TEST(TimeSince, EventMinuteIsZeroAndCountsUp) {
  const Minute t = at(10, 0);
  std::vector<Minute> ts;
  for (int i = 0; i < 10; ++i) ts.push_back(t + i);
  const std::vector<Minute> ev{t + 2};
  const auto v = time_since(ts, ev, 1440);
  EXPECT_EQ(v[2], 0.0);
  EXPECT_EQ(v[9], 7.0);
  EXPECT_EQ(v[1], 1.0);  // since stream start, no earlier event
}

TEST(TimeSince, MatchesBackwardScanOnRandomStreams) {
  Rng rng(8);
  for (int inst = 0; inst < 200; ++inst) {
    std::vector<Minute> ts;
    Minute t = at(0, 0) + static_cast<std::int64_t>(rng.below(1000));
    const std::size_t n = 1 + rng.below(3000);
    for (std::size_t i = 0; i < n; ++i) {
      ts.push_back(t);
      t = t + static_cast<std::int64_t>(1 + (rng.bernoulli(0.02) ? rng.below(600) : 0));
    }
    std::vector<Minute> ev;
    const double rate = inst % 4 == 0 ? 0.0 : rng.uniform(0.0, 0.05);
    for (auto m : ts) {
      if (rng.bernoulli(rate)) ev.push_back(m);
    }
    const int cap = inst % 2 == 0 ? 1440 : static_cast<int>(1 + rng.below(300));
    const auto got = time_since(ts, ev, cap);
    EXPECT_EQ(got, brute_time_since(ts, ev, cap));
    for (double v : got) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, cap);
    }
  }
}

TEST(BuildMatrix, OffsetZeroLabelsEventRow) {
  const auto c = contiguous(20, {5});
  const auto m = build_matrix(c, {}, {}, {Problem::Eating, 0});
  ASSERT_EQ(m.rows(), 20u);
  for (std::size_t i = 0; i < 20; ++i) EXPECT_EQ(m.labels[i], i == 5 ? 1 : 0);
}

TEST(BuildMatrix, OffsetThreeShiftsLabels) {
  const auto c = contiguous(20, {10});
  const auto m = build_matrix(c, {}, {}, {Problem::Eating, 3});
  ASSERT_EQ(m.rows(), 17u);
  for (std::size_t i = 0; i < m.rows(); ++i) EXPECT_EQ(m.labels[i], i == 7 ? 1 : 0) << i;
  // Features of row 7 look only at the past: eating happened 0 minutes ago never.
  EXPECT_EQ(m.values(7, col::kSinceEating), 7.0);
}

TEST(BuildMatrix, HundredMinutesOffsetFourGivesNinetySix) {
  const auto c = contiguous(100, {});
  EXPECT_EQ(build_matrix(c, {}, {}, {Problem::Eating, 4}).rows(), 96u);
  EXPECT_EQ(build_matrix(c, {}, {}, {Problem::Purchasing, 0}).rows(), 100u);
}

TEST(BuildMatrix, RowsWithoutTargetMinuteAreDropped) {
  Participant p;
  p.id = "G";
  const Minute t0 = at(11, 0);
  for (int i : {0, 1, 2, 10, 11}) p.records.push_back(record_at(t0 + i, {32.8, -117.0}));
  p.events.add(EventType::Eating, t0 + 11);
  Cohort c;
  c.participants.push_back(p);
  const auto m = build_matrix(c, {}, {}, {Problem::Eating, 1});
  ASSERT_EQ(m.rows(), 3u);  // t0, t0+1, t0+10
  EXPECT_EQ(m.timestamps[2], t0 + 10);
  EXPECT_EQ(m.labels[2], 1);
}

TEST(BuildMatrix, InvalidOffsetIsAConfigError) {
  const auto c = contiguous(10, {});
  EXPECT_THROW(build_matrix(c, {}, {}, {Problem::Eating, 5}), ConfigError);
}

TEST(BuildMatrix, ColumnsMatchSources) {
  Rng rng(12);
  const Cohort c = random_cohort(rng, {3, 300, 0.03, true, true});
  const auto outlets = random_outlets(rng, 6);
  const auto homes = infer_homes(c, {}, {});
  const auto m = build_matrix(c, outlets, homes, {Problem::Purchasing, 0});
  std::size_t i = 0;
  for (const auto& p : c.participants) {
    const auto home = homes.find(p.id);
    for (const auto& r : p.records) {
      ASSERT_EQ(m.timestamps[i], r.timestamp);
      const auto d = nearest_outlet_distances(r.position, outlets);
      for (std::size_t k = 0; k < 5; ++k) EXPECT_EQ(m.values(i, col::kDistFoodBeverage + k), d[k]);
      EXPECT_EQ(m.values(i, col::kActivity), r.activity);
      EXPECT_EQ(m.values(i, col::kLux), r.lux);
      EXPECT_EQ(m.values(i, col::kWearing), r.wearing ? 1.0 : 0.0);
      EXPECT_EQ(m.values(i, col::kInHome), in_home(r, home == homes.end() ? nullptr : &home->second));
      EXPECT_EQ(m.values(i, col::kMonday + static_cast<std::size_t>(weekday_index(r.timestamp))), 1.0);
      EXPECT_EQ(m.values(i, col::kNumericTime), numeric_time(r.timestamp));
      EXPECT_EQ(m.labels[i], p.events.contains(EventType::Purchasing, r.timestamp) ? 1 : 0);
      ++i;
    }
  }
  EXPECT_EQ(i, m.rows());
}

TEST(FeatureMatrixProperty, InvariantsHoldOnRandomCohorts) {
  for (std::uint64_t seed = 1; seed <= 15; ++seed) {
    Rng rng(seed);
    const Cohort c = random_cohort(rng, {1 + rng.below(5), 50 + rng.below(400), 0.04, true, true});
    const auto outlets = random_outlets(rng, rng.below(4));
    const auto homes = infer_homes(c, {}, {});
    for (int k = 0; k <= kMaxOffset; ++k) {
      const auto m = build_matrix(c, outlets, homes, {seed % 2 ? Problem::Eating : Problem::Purchasing, k});
      ASSERT_NO_THROW(validate_feature_matrix(m));
      for (std::size_t i = 0; i < m.rows(); ++i) {
        double days = 0;
        double ranges = 0;
        for (std::size_t j = 0; j < 7; ++j) days += m.values(i, col::kMonday + j);
        for (std::size_t j = 0; j < 6; ++j) ranges += m.values(i, col::kTimeRange0 + j);
        EXPECT_EQ(days, 1.0);
        EXPECT_EQ(ranges, 1.0);
        EXPECT_EQ(m.values(i, col::kBias), 1.0);
        EXPECT_GE(m.values(i, col::kTimePattern), 0.0);
        EXPECT_LE(m.values(i, col::kTimePattern), 720.0);
        for (auto cidx : {col::kSinceEating, col::kSincePurchasing, col::kSinceSedentary, col::kSincePa,
                          col::kSinceMvpa}) {
          EXPECT_GE(m.values(i, cidx), 0.0);
          EXPECT_LE(m.values(i, cidx), 1440.0);
        }
        EXPECT_LT(m.values(i, col::kNumericTime), 24.0);
      }
    }
  }
}

TEST(FeatureMatrixProperty, ValidatorRejectsBrokenLayout) {
  const auto c = contiguous(10, {});
  auto m = build_matrix(c, {}, {}, {Problem::Eating, 0});
  auto broken = m;
  broken.values(3, col::kBias) = 0.5;
  EXPECT_THROW(validate_feature_matrix(broken), DataError);
  broken = m;
  broken.values(2, col::kMonday + 3) = 1.0;
  EXPECT_THROW(validate_feature_matrix(broken), DataError);
  broken = m;
  broken.values(1, col::kLux) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(validate_feature_matrix(broken), DataError);
}

TEST(FeatureMatrixProperty, ConcatenationCommutes) {
  Rng rng(41);
  const Cohort c = random_cohort(rng, {4, 250, 0.05, true, true});
  const auto outlets = random_outlets(rng, 3);
  const auto homes = infer_homes(c, {}, {});
  for (int k : {0, 2, 4}) {
    const TaskSpec task{Problem::Eating, k};
    const auto whole = build_matrix(c, outlets, homes, task);
    std::vector<double> values;
    std::vector<std::uint8_t> labels;
    std::vector<Minute> ts;
    std::vector<std::string> ids;
    for (const auto& p : c.participants) {
      Cohort single;
      single.participants.push_back(p);
      const auto part = build_matrix(single, outlets, homes, task);
      values.insert(values.end(), part.values.data().begin(), part.values.data().end());
      labels.insert(labels.end(), part.labels.begin(), part.labels.end());
      ts.insert(ts.end(), part.timestamps.begin(), part.timestamps.end());
      for (std::size_t i = 0; i < part.rows(); ++i) ids.push_back(p.id);
    }
    EXPECT_EQ(whole.values.data(), values);
    EXPECT_EQ(whole.labels, labels);
    EXPECT_EQ(whole.timestamps, ts);
    for (std::size_t i = 0; i < whole.rows(); ++i) EXPECT_EQ(whole.participants[whole.groups[i]], ids[i]);
  }
}

TEST(FeatureMatrixProperty, PositiveCountForOffsetK) {
  Rng rng(5);
  const Cohort c = random_cohort(rng, {3, 400, 0.06, false, true});
  for (int k = 0; k <= kMaxOffset; ++k) {
    const auto m = build_matrix(c, {}, {}, {Problem::Eating, k});
    std::size_t expected = 0;
    for (const auto& p : c.participants) {
      for (std::size_t i = static_cast<std::size_t>(k); i < p.records.size(); ++i) {
        expected += p.events.contains(EventType::Eating, p.records[i].timestamp) ? 1 : 0;
      }
    }
    EXPECT_EQ(m.positives(), expected) << "offset " << k;
  }
}

TEST(FeatureMatrixProperty, FutureEventsNeverChangePastFeatures) {
  Rng rng(19);
  const Cohort c = random_cohort(rng, {2, 300, 0.05, true, true});
  const auto outlets = random_outlets(rng, 3);
  for (int trial = 0; trial < 10; ++trial) {
    Cohort perturbed = c;
    const auto& recs = c.participants[0].records;
    const std::size_t cut = 50 + rng.below(recs.size() - 60);
    const Minute t0 = recs[cut].timestamp;
    auto& events = perturbed.participants[0].events;
    events.retain([&](Minute m) { return m <= t0; });
    for (std::size_t i = cut + 1; i < recs.size(); ++i) {
      for (std::size_t e = 0; e < kEventTypeCount; ++e) {
        if (rng.bernoulli(0.2)) events.add(static_cast<EventType>(e), recs[i].timestamp);
      }
    }
    events.normalize();
    // Homes held fixed so only the event timeline differs.
    const auto homes = infer_homes(c, {}, {});
    for (int k : {0, 4}) {
      const auto a = build_matrix(c, outlets, homes, {Problem::Eating, k});
      const auto b = build_matrix(perturbed, outlets, homes, {Problem::Eating, k});
      ASSERT_EQ(a.rows(), b.rows());
      for (std::size_t i = 0; i < a.rows(); ++i) {
        if (a.groups[i] != 0 || a.timestamps[i] > t0) continue;
        for (std::size_t j = 0; j < kFeatureCount; ++j) ASSERT_EQ(a.values(i, j), b.values(i, j));
      }
    }
  }
}

TEST(LrView, DropsNumericTimeOnly) {
  Rng rng(4);
  const Cohort c = random_cohort(rng, {2, 80, 0.05, true, true});
  const auto m = build_matrix(c, random_outlets(rng, 2), {}, {Problem::Eating, 1});
  const Matrix v = lr_view(m.values);
  ASSERT_EQ(v.cols(), kLrFeatureCount);
  ASSERT_EQ(v.cols(), 34u);
  ASSERT_EQ(v.rows(), m.rows());
  for (std::size_t i = 0; i < v.rows(); ++i) {
    EXPECT_EQ(v(i, 0), 1.0);
    for (std::size_t j = 0; j < 34; ++j) EXPECT_EQ(v(i, j), m.values(i, j));
  }
}

TEST(FeatureCsv, HeaderAndRowCount) {
  const auto c = contiguous(5, {1});
  const auto m = build_matrix(c, {}, {}, {Problem::Eating, 0});
  std::ostringstream out;
  write_feature_csv(m, out);
  std::istringstream in(out.str());
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header.rfind("participant_id,timestamp,label,f0,f1,", 0), 0u);
  EXPECT_NE(header.find(",f34"), std::string::npos);
  int lines = 0;
  for (std::string l; std::getline(in, l);) ++lines;
  EXPECT_EQ(lines, 5);
}
