#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "forage/experiment.hpp"
#include "forage/synth.hpp"

namespace forage {

inline constexpr const char* kSeedEnvVar = "FORAGE_SEED";

/// Everything a CLI command needs. Loaded from one JSON file; every field
/// also has a flag of the same dotted name.
struct RunConfig {
  std::filesystem::path records = "data/records.csv";
  std::filesystem::path events = "data/events.csv";
  std::filesystem::path outlets = "data/outlets.csv";
  std::filesystem::path out_dir = "out";
  std::filesystem::path data_dir = "data";  // where `synth` writes
  std::uint64_t seed = 7;
  std::size_t train_count = 60;
  std::size_t n_folds = 5;
  double valid_fraction = 0.25;
  BoundingBox bbox{32.53, 33.51, -117.61, -116.08};  // San Diego County
  DbscanParams dbscan;
  ClockWindow sleep_window;
  int time_since_cap = 1440;
  std::map<ModelKind, Grid> grids;
  bool standardize = true;
  std::vector<Problem> problems{Problem::Eating, Problem::Purchasing};
  std::vector<int> offsets{0, 1, 2, 3, 4};
  std::vector<ModelKind> models{kAllModels.begin(), kAllModels.end()};
  std::size_t threads = 0;  // 0 = available parallelism
  std::size_t svm_max_train_rows = 2000;
  int svm_cv_max_iter_eating = 1000;
  int svm_cv_max_iter_purchasing = 10000;
  int svm_final_max_iter = 10000;
  std::size_t svm_cache_mb = 256;
  int lr_max_iter = 100;
  std::size_t rf_max_features = 0;
  double gb_learning_rate = 0.1;
  SynthConfig synth;

  RunConfig();

  /// Throws ConfigError naming the first invalid field.
  void validate() const;

  ExperimentConfig experiment() const;
  /// The synthetic generator config with this run's seed.
  SynthConfig synth_config() const;
};

/// One configurable field: a dotted name (also the flag name), a type hint
/// for help output, a description, and accessors on RunConfig.
struct ConfigField {
  std::string name;
  std::string type;
  std::string help;
  std::function<void(RunConfig&, const nlohmann::json&)> set;
  std::function<nlohmann::json(const RunConfig&)> get;
};

const std::vector<ConfigField>& config_fields();

/// Applies a JSON document. Nested objects address dotted names, so
/// {"dbscan": {"eps": 40}} and {"dbscan.eps": 40} are equivalent. Unknown
/// keys and ill-typed values throw ConfigError.
void apply_json(RunConfig& config, const nlohmann::json& doc);

/// Applies one flag value given as text. JSON literals are accepted
/// ("[1,2]", "true", "3.5"); list fields also take comma-separated text.
void apply_flag(RunConfig& config, const std::string& name, const std::string& text);

RunConfig load_config(const std::filesystem::path& file);

/// Applies FORAGE_SEED when set.
void apply_seed_env(RunConfig& config);

/// Every field as a nested JSON document.
nlohmann::ordered_json config_to_json(const RunConfig& config);

}  // namespace forage
