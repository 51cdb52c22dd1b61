#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "forage/cohort.hpp"
#include "forage/error.hpp"
#include "forage/features.hpp"
#include "forage/geo.hpp"
#include "forage/metrics.hpp"
#include "forage/synth.hpp"
#include "test_util.hpp"

using namespace forage;
using namespace forage::testing;

namespace {

SynthConfig small_config(std::uint64_t seed = 3) {
  SynthConfig c;
  c.n_participants = 12;
  c.days = 5;
  c.seed = seed;
  return c;
}

Cohort ingest(const SynthData& d) {
  std::istringstream r(d.records_csv);
  std::istringstream e(d.events_csv);
  return ingest_cohort(r, e);
}

std::vector<Outlet> outlets_of(const SynthData& d) {
  std::istringstream o(d.outlets_csv);
  return load_outlets(o);
}

BoundingBox bbox_of(const nlohmann::ordered_json& gt) {
  const auto& b = gt.at("bbox");
  return {b.at("min_lat").get<double>(), b.at("max_lat").get<double>(), b.at("min_lon").get<double>(),
          b.at("max_lon").get<double>()};
}

/// |observed - p n| within three binomial standard deviations.
void expect_binomial(std::size_t hits, std::size_t trials, double p, const char* what) {
  ASSERT_GT(trials, 0u) << what;
  const double n = static_cast<double>(trials);
  const double sd = std::sqrt(n * p * (1 - p));
  EXPECT_LE(std::abs(static_cast<double>(hits) - n * p), 3 * sd + 1) << what << ": " << hits << "/" << trials;
}

}  // namespace

TEST(Synth, DefaultShapeIs476280Rows) {
  const auto d = generate(SynthConfig{});
  EXPECT_EQ(d.ground_truth.at("counts").at("rows").get<std::size_t>(), 476280u);
  std::size_t lines = 0;
  for (char ch : d.records_csv) lines += ch == '\n';
  EXPECT_EQ(lines, 476281u);
  EXPECT_EQ(d.ground_truth.at("homes").size(), 81u);
  EXPECT_EQ(d.records_csv.rfind(std::string(kRecordsHeader) + "\n", 0), 0u);
}

TEST(Synth, SameSeedIsByteIdentical) {
  const auto a = generate(small_config(5));
  const auto b = generate(small_config(5));
  EXPECT_EQ(a.records_csv, b.records_csv);
  EXPECT_EQ(a.events_csv, b.events_csv);
  EXPECT_EQ(a.outlets_csv, b.outlets_csv);
  EXPECT_EQ(a.ground_truth, b.ground_truth);
  EXPECT_NE(generate(small_config(6)).records_csv, a.records_csv);
}

TEST(Synth, OutputIngestsAndOutliersAreRemovedExactly) {
  auto cfg = small_config();
  cfg.outlier_fraction = 0.01;
  cfg.missing_gps_fraction = 0.01;
  const auto d = generate(cfg);
  const auto& counts = d.ground_truth.at("counts");
  const Cohort c = ingest(d);
  EXPECT_EQ(c.participants.size(), cfg.n_participants);
  EXPECT_EQ(c.dropped_missing_gps, counts.at("missing_gps_rows").get<std::size_t>());
  const Cohort inside = drop_out_of_bounds(c, bbox_of(d.ground_truth));
  EXPECT_EQ(c.record_count() - inside.record_count(), counts.at("outlier_rows").get<std::size_t>());
  std::set<std::pair<std::string, std::string>> planted;
  for (const auto& o : d.ground_truth.at("outlier_rows")) {
    planted.insert({o.at("participant_id").get<std::string>(), o.at("timestamp").get<std::string>()});
  }
  std::set<std::pair<std::string, std::string>> removed;
  for (std::size_t p = 0; p < c.participants.size(); ++p) {
    std::set<Minute> kept;
    for (const auto& r : inside.participants[p].records) kept.insert(r.timestamp);
    for (const auto& r : c.participants[p].records) {
      if (!kept.contains(r.timestamp)) removed.insert({c.participants[p].id, format_timestamp(r.timestamp)});
    }
  }
  EXPECT_EQ(removed, planted);
}

TEST(Synth, RatesMatchConfiguredProbabilities) {
  auto cfg = small_config(11);
  cfg.n_participants = 30;
  const auto d = generate(cfg);
  const auto& k = d.ground_truth.at("counts");
  const auto get = [&](const char* name) { return k.at(name).get<std::size_t>(); };
  expect_binomial(get("meals"), get("meal_windows"), cfg.meal_probability, "meals");
  expect_binomial(get("confuser_visits"), get("confuser_slots"), cfg.confuser_probability, "confusers");
  expect_binomial(get("shopping_trips"), get("shopping_days"), cfg.purchase_probability, "shopping");
  expect_binomial(get("missing_gps_rows"), get("rows"), cfg.missing_gps_fraction, "missing gps");
  expect_binomial(get("outlier_rows"), get("rows"), cfg.outlier_fraction, "outliers");
  EXPECT_EQ(get("meal_windows"), 3 * cfg.n_participants * cfg.days);
}

TEST(Synth, HomesAreRecoveredWithinFiftyMeters) {
  const auto d = generate(small_config(13));
  const Cohort c = drop_out_of_bounds(ingest(d), bbox_of(d.ground_truth));
  const auto homes = infer_homes(c, {}, {});
  for (const auto& h : d.ground_truth.at("homes")) {
    const auto id = h.at("participant_id").get<std::string>();
    const auto it = homes.find(id);
    ASSERT_NE(it, homes.end()) << id;
    const LatLon truth{h.at("lat").get<double>(), h.at("lon").get<double>()};
    EXPECT_LE(haversine(it->second.position, truth), 50.0) << id;
  }
}

TEST(Synth, PlantedRuleSeparatesLabels) {
  const auto d = generate(small_config(17));
  const Cohort c = drop_out_of_bounds(ingest(d), bbox_of(d.ground_truth));
  const auto outlets = outlets_of(d);
  const auto homes = infer_homes(c, {}, {});
  const SynthRule rule;
  for (auto problem : {Problem::Eating, Problem::Purchasing}) {
    const auto m = build_matrix(c, outlets, homes, {problem, 0});
    ASSERT_GT(m.positives(), 0u);
    std::vector<std::uint8_t> pred(m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i) pred[i] = planted_rule(rule, problem, m.values.row(i)) ? 1 : 0;
    EXPECT_GE(balanced_accuracy(m.labels, pred), 0.9) << to_string(problem);
  }
}

TEST(Synth, WriteProducesFourFiles) {
  const auto dir = scratch_dir("synth_write");
  const auto d = generate(small_config());
  const auto files = write_synth(d, dir);
  ASSERT_EQ(files.size(), 4u);
  EXPECT_EQ(slurp(dir / "records.csv"), d.records_csv);
  EXPECT_EQ(nlohmann::ordered_json::parse(slurp(dir / "ground_truth.json")), d.ground_truth);
}

TEST(Synth, ValidateNamesTheField) {
  const auto field_of = [](SynthConfig c) {
    try {
      c.validate();
    } catch (const ConfigError& e) {
      return e.field();
    }
    return std::string("<none>");
  };
  auto c = SynthConfig{};
  EXPECT_EQ(field_of(c), "<none>");
  c.n_participants = 0;
  EXPECT_EQ(field_of(c), "n_participants");
  c = {};
  c.minutes_per_day = 60;
  EXPECT_EQ(field_of(c), "minutes_per_day");
  c = {};
  c.start_date = "2023-13-01";
  EXPECT_EQ(field_of(c), "start_date");
  c = {};
  c.bbox = {32.6, 32.62, -117.2, -116.7};
  EXPECT_EQ(field_of(c), "synth_bbox");
  c = {};
  c.meal_probability = 1.5;
  EXPECT_EQ(field_of(c), "meal_probability");
  c = {};
  c.missing_gps_fraction = 0.6;
  c.outlier_fraction = 0.6;
  EXPECT_EQ(field_of(c), "outlier_fraction");
  c = {};
  c.home_jitter_m = 30;
  EXPECT_EQ(field_of(c), "home_jitter_m");
  c = {};
  c.outlet_counts[2] = 0;
  EXPECT_EQ(field_of(c), "outlet_counts");
}
