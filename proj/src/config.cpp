#include "forage/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <limits>
#include <cstdlib>
#include <fstream>

#include "forage/error.hpp"
#include "forage/parallel.hpp"

namespace forage {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

[[noreturn]] void bad(const std::string& field, const std::string& what) {
  throw ConfigError(field, "config field " + field + ": " + what);
}

template <typename T>
T parse_number(const std::string& field, const std::string& text) {
  T v{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) bad(field, "'" + text + "' is not a valid number");
  return v;
}

std::uint64_t as_u64(const std::string& f, const json& j) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer()) {
    if (j.get<std::int64_t>() < 0) bad(f, "must be non-negative");
    return j.get<std::uint64_t>();
  }
  if (j.is_string()) return parse_number<std::uint64_t>(f, j.get<std::string>());
  bad(f, "expected a non-negative integer");
}

std::int64_t as_i64(const std::string& f, const json& j) {
  if (j.is_number_integer()) return j.get<std::int64_t>();
  if (j.is_string()) return parse_number<std::int64_t>(f, j.get<std::string>());
  bad(f, "expected an integer");
}

int as_int(const std::string& f, const json& j) {
  const auto v = as_i64(f, j);
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) bad(f, "out of range");
  return static_cast<int>(v);
}

double as_double(const std::string& f, const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) return parse_number<double>(f, j.get<std::string>());
  bad(f, "expected a number");
}

bool as_bool(const std::string& f, const json& j) {
  if (j.is_boolean()) return j.get<bool>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
  }
  bad(f, "expected true or false");
}

std::string as_string(const std::string& f, const json& j) {
  if (!j.is_string()) bad(f, "expected a string");
  return j.get<std::string>();
}

/// Array, or a comma-separated string.
std::vector<json> as_list(const std::string& f, const json& j) {
  std::vector<json> out;
  if (j.is_array()) {
    for (const auto& e : j) out.push_back(e);
  } else if (j.is_string()) {
    const auto s = j.get<std::string>();
    std::size_t start = 0;
    while (start <= s.size()) {
      const auto comma = s.find(',', start);
      const auto piece = s.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      if (!piece.empty()) out.emplace_back(piece);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  } else if (j.is_number()) {
    out.push_back(j);
  } else {
    bad(f, "expected a list");
  }
  if (out.empty()) bad(f, "list must not be empty");
  return out;
}

std::string clock_text(int minutes) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02d:%02d", minutes / 60, minutes % 60);
  return buf;
}

int as_clock(const std::string& f, const json& j) {
  try {
    return parse_clock(as_string(f, j));
  } catch (const DataError& e) {
    bad(f, e.what());
  }
}

using Fields = std::vector<ConfigField>;

template <typename Get, typename Set>
void add(Fields& fs, std::string name, std::string type, std::string help, Get get, Set set) {
  fs.push_back({name, std::move(type), std::move(help),
                [name, set](RunConfig& c, const json& j) { set(c, name, j); },
                [get](const RunConfig& c) { return json(get(c)); }});
}

#define FIELD_U(fs, name, member, help)                                                        \
  add(fs, name, "uint", help, [](const RunConfig& c) { return c.member; },                    \
      [](RunConfig& c, const std::string& f, const json& j) {                                 \
        c.member = static_cast<decltype(c.member)>(as_u64(f, j));                             \
      })
#define FIELD_I(fs, name, member, help)                                                        \
  add(fs, name, "int", help, [](const RunConfig& c) { return c.member; },                     \
      [](RunConfig& c, const std::string& f, const json& j) { c.member = as_int(f, j); })
#define FIELD_D(fs, name, member, help)                                                        \
  add(fs, name, "number", help, [](const RunConfig& c) { return c.member; },                  \
      [](RunConfig& c, const std::string& f, const json& j) { c.member = as_double(f, j); })
#define FIELD_P(fs, name, member, help)                                                        \
  add(fs, name, "path", help, [](const RunConfig& c) { return c.member.string(); },           \
      [](RunConfig& c, const std::string& f, const json& j) { c.member = as_string(f, j); })

Fields build_fields() {
  Fields fs;
  FIELD_P(fs, "records", records, "minute records CSV read by featurize and run");
  FIELD_P(fs, "events", events, "event timeline CSV read by featurize and run");
  FIELD_P(fs, "outlets", outlets, "outlet locations CSV read by featurize and run");
  FIELD_P(fs, "out_dir", out_dir, "report directory written by run");
  FIELD_P(fs, "data_dir", data_dir, "directory synth writes records.csv, events.csv, outlets.csv, ground_truth.json to");
  add(fs, "seed", "uint", "root seed for every random draw (FORAGE_SEED overrides the file, --seed overrides both)",
      [](const RunConfig& c) { return c.seed; },
      [](RunConfig& c, const std::string& f, const json& j) { c.seed = as_u64(f, j); });
  FIELD_U(fs, "train_count", train_count, "participants drawn into the training set; the rest are test");
  FIELD_U(fs, "n_folds", n_folds, "validation folds resampled from the training participants");
  FIELD_D(fs, "valid_fraction", valid_fraction, "share of training participants in each validation fold");
  FIELD_D(fs, "bbox.min_lat", bbox.min_lat, "study area south edge; records outside are dropped");
  FIELD_D(fs, "bbox.max_lat", bbox.max_lat, "study area north edge");
  FIELD_D(fs, "bbox.min_lon", bbox.min_lon, "study area west edge");
  FIELD_D(fs, "bbox.max_lon", bbox.max_lon, "study area east edge");
  FIELD_D(fs, "dbscan.eps", dbscan.eps, "home clustering radius in meters");
  FIELD_U(fs, "dbscan.min_pts", dbscan.min_pts, "home clustering core size, point included");
  add(fs, "sleep_window.start", "HH:MM", "start of the nightly window used for home inference",
      [](const RunConfig& c) { return clock_text(c.sleep_window.start); },
      [](RunConfig& c, const std::string& f, const json& j) { c.sleep_window.start = as_clock(f, j); });
  add(fs, "sleep_window.end", "HH:MM", "end (exclusive) of the nightly window used for home inference",
      [](const RunConfig& c) { return clock_text(c.sleep_window.end); },
      [](RunConfig& c, const std::string& f, const json& j) { c.sleep_window.end = as_clock(f, j); });
  FIELD_I(fs, "time_since_cap", time_since_cap, "upper bound in minutes for time-since features");

  for (auto kind : kAllModels) {
    const Grid paper = Grid::paper(kind);
    for (std::size_t a = 0; a < paper.axis_names.size(); ++a) {
      const std::string name = "grids." + std::string(to_string(kind)) + "." + paper.axis_names[a];
      add(fs, name, "list", "hyperparameter values searched for " + std::string(to_string(kind)),
          [kind, a](const RunConfig& c) { return c.grids.at(kind).axis_values[a]; },
          [kind, a](RunConfig& c, const std::string& f, const json& j) {
            std::vector<double> values;
            for (const auto& e : as_list(f, j)) values.push_back(as_double(f, e));
            c.grids.at(kind).axis_values[a] = std::move(values);
          });
    }
  }

  add(fs, "standardize", "bool", "z-score features for LR and SVM fits (bias column untouched)",
      [](const RunConfig& c) { return c.standardize; },
      [](RunConfig& c, const std::string& f, const json& j) { c.standardize = as_bool(f, j); });
  add(fs, "problems", "list", "problems to run: eating, purchasing",
      [](const RunConfig& c) {
        std::vector<std::string> v;
        for (auto p : c.problems) v.emplace_back(to_string(p));
        return v;
      },
      [](RunConfig& c, const std::string& f, const json& j) {
        std::vector<Problem> v;
        for (const auto& e : as_list(f, j)) {
          const auto p = parse_problem(as_string(f, e));
          if (!p) bad(f, "unknown problem '" + e.get<std::string>() + "'");
          if (std::find(v.begin(), v.end(), *p) == v.end()) v.push_back(*p);
        }
        std::sort(v.begin(), v.end());
        c.problems = std::move(v);
      });
  add(fs, "offsets", "list", "prediction offsets in minutes, each 0..4",
      [](const RunConfig& c) { return c.offsets; },
      [](RunConfig& c, const std::string& f, const json& j) {
        std::vector<int> v;
        for (const auto& e : as_list(f, j)) {
          const int k = as_int(f, e);
          if (std::find(v.begin(), v.end(), k) == v.end()) v.push_back(k);
        }
        std::sort(v.begin(), v.end());
        c.offsets = std::move(v);
      });
  add(fs, "models", "list", "models to run: lr, svm, rf, gb",
      [](const RunConfig& c) {
        std::vector<std::string> v;
        for (auto m : c.models) v.emplace_back(to_string(m));
        return v;
      },
      [](RunConfig& c, const std::string& f, const json& j) {
        std::vector<ModelKind> v;
        for (const auto& e : as_list(f, j)) {
          const auto m = parse_model_kind(as_string(f, e));
          if (!m) bad(f, "unknown model '" + e.get<std::string>() + "'");
          if (std::find(v.begin(), v.end(), *m) == v.end()) v.push_back(*m);
        }
        std::sort(v.begin(), v.end());
        c.models = std::move(v);
      });
  FIELD_U(fs, "threads", threads, "worker threads for evaluation and featurization; 0 = all cores");
  FIELD_U(fs, "svm.max_train_rows", svm_max_train_rows, "cap on balanced rows per SVM fit; 0 = no cap");
  FIELD_I(fs, "svm.cv_max_iter_eating", svm_cv_max_iter_eating, "SMO iteration budget during eating grid search");
  FIELD_I(fs, "svm.cv_max_iter_purchasing", svm_cv_max_iter_purchasing,
          "SMO iteration budget during purchasing grid search");
  FIELD_I(fs, "svm.final_max_iter", svm_final_max_iter, "SMO iteration budget for the final fit");
  FIELD_U(fs, "svm.cache_mb", svm_cache_mb, "kernel row cache size in MiB");
  FIELD_I(fs, "lr.max_iter", lr_max_iter, "Newton iteration budget for logistic regression");
  FIELD_U(fs, "rf.max_features", rf_max_features, "features tried per split; 0 = floor(sqrt(35))");
  FIELD_D(fs, "gb.learning_rate", gb_learning_rate, "gradient boosting shrinkage");

  FIELD_U(fs, "synth.n_participants", synth.n_participants, "synthetic participants");
  FIELD_U(fs, "synth.days", synth.days, "days per synthetic participant");
  FIELD_U(fs, "synth.minutes_per_day", synth.minutes_per_day,
          "minute rows per day: 60 sleep-window minutes plus a wake block from 07:00 (61..1080)");
  add(fs, "synth.start_date", "YYYY-MM-DD", "first synthetic day",
      [](const RunConfig& c) { return c.synth.start_date; },
      [](RunConfig& c, const std::string& f, const json& j) { c.synth.start_date = as_string(f, j); });
  FIELD_D(fs, "synth.bbox.min_lat", synth.bbox.min_lat, "synthetic area south edge");
  FIELD_D(fs, "synth.bbox.max_lat", synth.bbox.max_lat, "synthetic area north edge");
  FIELD_D(fs, "synth.bbox.min_lon", synth.bbox.min_lon, "synthetic area west edge");
  FIELD_D(fs, "synth.bbox.max_lon", synth.bbox.max_lon, "synthetic area east edge");
  add(fs, "synth.outlet_counts", "list", "outlets per category in order 445, 446, 447, 7224, 7225",
      [](const RunConfig& c) { return c.synth.outlet_counts; },
      [](RunConfig& c, const std::string& f, const json& j) {
        const auto v = as_list(f, j);
        if (v.size() != kOutletCategoryCount) bad(f, "expected 5 counts");
        for (std::size_t i = 0; i < v.size(); ++i) c.synth.outlet_counts[i] = as_u64(f, v[i]);
      });
  FIELD_D(fs, "synth.meal_probability", synth.meal_probability, "chance of a meal out per meal window");
  FIELD_D(fs, "synth.confuser_probability", synth.confuser_probability,
          "chance of a non-eating visit to an Eating outlet per off-meal slot");
  FIELD_D(fs, "synth.purchase_probability", synth.purchase_probability, "chance of a food shopping trip per day");
  FIELD_D(fs, "synth.away_night_probability", synth.away_night_probability, "chance of sleeping away from home");
  FIELD_D(fs, "synth.missing_gps_fraction", synth.missing_gps_fraction, "share of rows with empty coordinates");
  FIELD_D(fs, "synth.outlier_fraction", synth.outlier_fraction, "share of rows moved outside the study area");
  FIELD_D(fs, "synth.gps_noise_m", synth.gps_noise_m, "GPS jitter radius in meters away from home");
  FIELD_D(fs, "synth.home_jitter_m", synth.home_jitter_m, "GPS jitter radius in meters at home");
  return fs;
}

#undef FIELD_U
#undef FIELD_I
#undef FIELD_D
#undef FIELD_P

const ConfigField* find_field(const std::string& name) {
  for (const auto& f : config_fields()) {
    if (f.name == name) return &f;
  }
  return nullptr;
}

void apply_object(RunConfig& config, const json& obj, const std::string& prefix) {
  for (const auto& [key, value] : obj.items()) {
    const std::string name = prefix.empty() ? key : prefix + "." + key;
    if (const auto* f = find_field(name)) {
      f->set(config, value);
    } else if (value.is_object()) {
      apply_object(config, value, name);
    } else {
      throw ConfigError(name, "unknown config field " + name);
    }
  }
}

void check_bbox(const BoundingBox& b, const std::string& prefix) {
  if (!(b.min_lat < b.max_lat)) throw ConfigError(prefix + ".min_lat", prefix + ".min_lat must be < max_lat");
  if (!(b.min_lon < b.max_lon)) throw ConfigError(prefix + ".min_lon", prefix + ".min_lon must be < max_lon");
  if (b.min_lat < -90.0 || b.max_lat > 90.0) throw ConfigError(prefix + ".min_lat", prefix + " latitude out of range");
  if (b.min_lon < -180.0 || b.max_lon > 180.0) {
    throw ConfigError(prefix + ".min_lon", prefix + " longitude out of range");
  }
}

}  // namespace

RunConfig::RunConfig() {
  for (auto k : kAllModels) grids.emplace(k, Grid::paper(k));
}

const std::vector<ConfigField>& config_fields() {
  static const std::vector<ConfigField> fields = build_fields();
  return fields;
}

void RunConfig::validate() const {
  if (train_count < 1) throw ConfigError("train_count", "train_count must be >= 1");
  if (n_folds < 1) throw ConfigError("n_folds", "n_folds must be >= 1");
  if (!(valid_fraction > 0.0 && valid_fraction < 1.0)) {
    throw ConfigError("valid_fraction", "valid_fraction must be in (0, 1)");
  }
  check_bbox(bbox, "bbox");
  if (!(dbscan.eps > 0.0)) throw ConfigError("dbscan.eps", "dbscan.eps must be > 0");
  if (dbscan.min_pts < 1) throw ConfigError("dbscan.min_pts", "dbscan.min_pts must be >= 1");
  if (sleep_window.start < 0 || sleep_window.start >= 1440) {
    throw ConfigError("sleep_window.start", "sleep_window.start must be before 24:00");
  }
  if (sleep_window.end <= sleep_window.start) {
    throw ConfigError("sleep_window.end", "sleep_window.end must be after sleep_window.start");
  }
  if (time_since_cap < 1) throw ConfigError("time_since_cap", "time_since_cap must be >= 1");
  for (const auto& [kind, grid] : grids) {
    try {
      grid.validate();
    } catch (const ConfigError& e) {
      throw ConfigError("grids." + e.field().substr(e.field().find('.') + 1), e.what());
    }
  }
  if (problems.empty()) throw ConfigError("problems", "problems filter must not be empty");
  if (offsets.empty()) throw ConfigError("offsets", "offsets filter must not be empty");
  for (int k : offsets) {
    if (k < 0 || k > kMaxOffset) throw ConfigError("offsets", "offsets must lie in 0..4");
  }
  if (models.empty()) throw ConfigError("models", "models filter must not be empty");
  if (svm_cv_max_iter_eating < 1) throw ConfigError("svm.cv_max_iter_eating", "must be >= 1");
  if (svm_cv_max_iter_purchasing < 1) throw ConfigError("svm.cv_max_iter_purchasing", "must be >= 1");
  if (svm_final_max_iter < 1) throw ConfigError("svm.final_max_iter", "must be >= 1");
  if (svm_cache_mb < 1) throw ConfigError("svm.cache_mb", "svm.cache_mb must be >= 1");
  if (svm_max_train_rows == 1) throw ConfigError("svm.max_train_rows", "svm.max_train_rows must be 0 or >= 2");
  if (lr_max_iter < 1) throw ConfigError("lr.max_iter", "lr.max_iter must be >= 1");
  if (rf_max_features > kFeatureCount) throw ConfigError("rf.max_features", "rf.max_features must be <= 35");
  if (!(gb_learning_rate > 0.0 && gb_learning_rate <= 1.0)) {
    throw ConfigError("gb.learning_rate", "gb.learning_rate must be in (0, 1]");
  }
  try {
    synth.validate();
  } catch (const ConfigError& e) {
    std::string f = e.field() == "synth_bbox" ? "bbox" : e.field();
    throw ConfigError("synth." + f, e.what());
  }
}

ExperimentConfig RunConfig::experiment() const {
  ExperimentConfig c;
  c.train_count = train_count;
  c.split.n_folds = n_folds;
  c.split.valid_fraction = valid_fraction;
  c.sleep_window = sleep_window;
  c.dbscan = dbscan;
  c.features.time_since_cap = time_since_cap;
  c.problems = problems;
  c.offsets = offsets;
  c.models = models;
  auto& o = c.options;
  o.seed = seed;
  o.grids = grids;
  o.svm_max_train_rows = svm_max_train_rows;
  o.svm_cv_max_iter_eating = svm_cv_max_iter_eating;
  o.svm_cv_max_iter_purchasing = svm_cv_max_iter_purchasing;
  o.svm_final_max_iter = svm_final_max_iter;
  o.threads = resolve_threads(threads);
  o.fit.standardize = standardize;
  o.fit.lr_max_iter = lr_max_iter;
  o.fit.svm_max_iter = svm_final_max_iter;
  o.fit.svm_cache_mb = svm_cache_mb;
  o.fit.rf_max_features = rf_max_features;
  o.fit.gb_learning_rate = gb_learning_rate;
  o.fit.seed = seed;
  return c;
}

SynthConfig RunConfig::synth_config() const {
  SynthConfig s = synth;
  s.seed = seed;
  return s;
}

void apply_json(RunConfig& config, const json& doc) {
  if (!doc.is_object()) throw ConfigError("", "config document must be a JSON object");
  apply_object(config, doc, "");
}

void apply_flag(RunConfig& config, const std::string& name, const std::string& text) {
  const auto* f = find_field(name);
  if (!f) throw ConfigError(name, "unknown config field " + name);
  json value = text;
  if (!text.empty() && (text.front() == '[' || text.front() == '{')) {
    try {
      value = json::parse(text);
    } catch (const json::parse_error&) {
      bad(name, "'" + text + "' is not valid JSON");
    }
  }
  f->set(config, value);
}

RunConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("config", "cannot open config file " + file.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config", "config file " + file.string() + " is not valid JSON: " + e.what());
  }
  RunConfig config;
  apply_json(config, doc);
  return config;
}

void apply_seed_env(RunConfig& config) {
  const char* env = std::getenv(kSeedEnvVar);
  if (env == nullptr || *env == '\0') return;
  try {
    config.seed = parse_number<std::uint64_t>("seed", env);
  } catch (const ConfigError&) {
    throw ConfigError("seed", std::string(kSeedEnvVar) + " must be a non-negative integer");
  }
}

ordered_json config_to_json(const RunConfig& config) {
  ordered_json doc = ordered_json::object();
  for (const auto& f : config_fields()) {
    ordered_json* node = &doc;
    std::size_t start = 0;
    while (true) {
      const auto dot = f.name.find('.', start);
      if (dot == std::string::npos) {
        (*node)[f.name.substr(start)] = ordered_json::parse(f.get(config).dump());
        break;
      }
      node = &(*node)[f.name.substr(start, dot - start)];
      start = dot + 1;
    }
  }
  return doc;
}

}  // namespace forage
