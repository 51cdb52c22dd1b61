#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>

#include "forage/config.hpp"
#include "forage/error.hpp"
#include "test_util.hpp"

using namespace forage;
using namespace forage::testing;
using nlohmann::json;

namespace {

std::string field_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "<none>";
}

struct SeedEnv {
  explicit SeedEnv(const char* v) { ::setenv(kSeedEnvVar, v, 1); }
  ~SeedEnv() { ::unsetenv(kSeedEnvVar); }
};

}  // namespace

TEST(Config, DefaultsValidateAndMatchPaperGrids) {
  const RunConfig c;
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.train_count, 60u);
  EXPECT_EQ(c.n_folds, 5u);
  EXPECT_EQ(c.grids.at(ModelKind::LR).axis_values[0], (std::vector<double>{1000, 100, 10, 1, 0.1}));
  EXPECT_EQ(c.grids.at(ModelKind::RF).axis_values[0], (std::vector<double>{10, 30, 50, 100, 200}));
  EXPECT_EQ(c.grids.at(ModelKind::GB).axis_values[1], (std::vector<double>{1, 2, 3, 4, 5}));
  EXPECT_LE(c.svm_max_train_rows, 5000u);
}

TEST(Config, NestedAndDottedKeysAreEquivalent) {
  RunConfig a;
  RunConfig b;
  apply_json(a, json::parse(R"({"dbscan": {"eps": 40, "min_pts": 7}, "grids": {"lr": {"C": [1, 2]}}})"));
  apply_json(b, json::parse(R"({"dbscan.eps": 40, "dbscan.min_pts": 7, "grids.lr.C": [1, 2]})"));
  EXPECT_EQ(config_to_json(a), config_to_json(b));
  EXPECT_EQ(a.dbscan.eps, 40.0);
  EXPECT_EQ(a.grids.at(ModelKind::LR).axis_values[0], (std::vector<double>{1, 2}));
}

TEST(Config, UnknownAndIllTypedKeysAreRejected) {
  RunConfig c;
  EXPECT_EQ(field_of([&] { apply_json(c, json::parse(R"({"dbscan": {"epsilon": 1}})")); }), "dbscan.epsilon");
  EXPECT_EQ(field_of([&] { apply_json(c, json::parse(R"({"seed": "abc"})")); }), "seed");
  EXPECT_EQ(field_of([&] { apply_json(c, json::parse(R"({"models": ["lr", "knn"]})")); }), "models");
  EXPECT_EQ(field_of([&] { apply_flag(c, "nonsense", "1"); }), "nonsense");
}

TEST(Config, FlagsParseTextAndLists) {
  RunConfig c;
  apply_flag(c, "seed", "99");
  apply_flag(c, "offsets", "0,2");
  apply_flag(c, "models", "[\"gb\"]");
  apply_flag(c, "problems", "purchasing");
  apply_flag(c, "standardize", "false");
  apply_flag(c, "sleep_window.start", "02:30");
  apply_flag(c, "grids.gb.n_estimators", "5,10");
  EXPECT_EQ(c.seed, 99u);
  EXPECT_EQ(c.offsets, (std::vector<int>{0, 2}));
  EXPECT_EQ(c.models, (std::vector<ModelKind>{ModelKind::GB}));
  EXPECT_EQ(c.problems, (std::vector<Problem>{Problem::Purchasing}));
  EXPECT_FALSE(c.standardize);
  EXPECT_EQ(c.sleep_window.start, 150);
  EXPECT_EQ(c.grids.at(ModelKind::GB).axis_values[0], (std::vector<double>{5, 10}));
}

TEST(Config, FileThenEnvThenFlags) {
  const auto dir = scratch_dir("config_precedence");
  const auto file = dir / "cfg.json";
  std::ofstream(file) << R"({"seed": 11, "train_count": 40})";
  RunConfig c = load_config(file);
  EXPECT_EQ(c.seed, 11u);
  {
    SeedEnv env("23");
    apply_seed_env(c);
    EXPECT_EQ(c.seed, 23u);
    apply_flag(c, "seed", "31");
    EXPECT_EQ(c.seed, 31u);
  }
  EXPECT_EQ(c.train_count, 40u);
  SeedEnv bad("-4");
  EXPECT_EQ(field_of([&] { apply_seed_env(c); }), "seed");
}

TEST(Config, MissingOrMalformedFileIsAConfigError) {
  EXPECT_EQ(field_of([] { load_config("/nonexistent/forage.json"); }), "config");
  const auto file = scratch_dir("config_bad") / "bad.json";
  std::ofstream(file) << "{ not json";
  EXPECT_EQ(field_of([&] { load_config(file); }), "config");
}

TEST(Config, ValidateNamesTheField) {
  const auto check = [](const std::string& name, const std::string& value, const std::string& expected) {
    RunConfig c;
    apply_flag(c, name, value);
    EXPECT_EQ(field_of([&] { c.validate(); }), expected) << name << "=" << value;
  };
  check("train_count", "0", "train_count");
  check("valid_fraction", "1.5", "valid_fraction");
  check("dbscan.eps", "0", "dbscan.eps");
  check("offsets", "7", "offsets");
  check("gb.learning_rate", "2", "gb.learning_rate");
  check("grids.rf.max_depth", "2.5", "grids.rf.max_depth");
  check("synth.minutes_per_day", "10", "synth.minutes_per_day");
  check("synth.bbox.max_lat", "32.61", "synth.bbox");
  check("bbox.min_lat", "40", "bbox.min_lat");
}

TEST(Config, EveryFieldRoundTripsThroughJson) {
  RunConfig c;
  apply_flag(c, "seed", "5");
  apply_flag(c, "synth.n_participants", "9");
  const auto doc = config_to_json(c);
  RunConfig back;
  apply_json(back, json::parse(doc.dump()));
  EXPECT_EQ(config_to_json(back), doc);
  EXPECT_EQ(back.synth_config().seed, 5u);
  EXPECT_EQ(back.synth_config().n_participants, 9u);
  for (const auto& f : config_fields()) {
    EXPECT_FALSE(f.help.empty()) << f.name;
    EXPECT_FALSE(f.type.empty()) << f.name;
  }
}

TEST(Config, ExperimentCarriesOptions) {
  RunConfig c;
  apply_flag(c, "threads", "3");
  apply_flag(c, "svm.max_train_rows", "800");
  const auto e = c.experiment();
  EXPECT_EQ(e.options.threads, 3u);
  EXPECT_EQ(e.options.svm_max_train_rows, 800u);
  EXPECT_EQ(e.options.seed, 7u);
  EXPECT_EQ(e.train_count, 60u);
}
