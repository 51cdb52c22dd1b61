// forage: synthetic cohort generation, featurization, the full experiment and
// result inspection from one JSON config.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "forage/config.hpp"
#include "forage/error.hpp"
#include "forage/parallel.hpp"
#include "forage/report.hpp"
#include "forage/synth.hpp"

namespace {

using namespace forage;

enum ExitCode { kOk = 0, kConfigExit = 2, kDataExit = 3, kRuntimeExit = 4 };

int fail(const char* kind, const std::string& message, const std::string& field = "") {
  nlohmann::ordered_json j;
  j["error"] = kind;
  if (!field.empty()) j["field"] = field;
  j["message"] = message;
  std::cerr << j.dump() << std::endl;
  return kind == std::string("config") ? kConfigExit : kind == std::string("data") ? kDataExit : kRuntimeExit;
}

/// Config flags shared by the commands that read a RunConfig.
struct ConfigFlags {
  std::string config_path;
  std::map<std::string, std::string> values;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config file; flags override its fields one to one");
    const RunConfig defaults;
    for (const auto& f : config_fields()) {
      const std::string name = f.name;
      auto* opt = cmd->add_option_function<std::string>(
          "--" + name, [this, name](const std::string& v) { values[name] = v; },
          f.help + " (" + f.type + ", default " + f.get(defaults).dump() + ")");
      opt->type_name(f.type);
      opt->group("Config fields");
    }
  }

  RunConfig resolve() const {
    RunConfig c = config_path.empty() ? RunConfig{} : load_config(config_path);
    apply_seed_env(c);
    for (const auto& [name, text] : values) apply_flag(c, name, text);
    c.validate();
    return c;
  }
};

void require_file(const std::filesystem::path& p, const char* field) {
  if (!std::filesystem::is_regular_file(p)) {
    throw ConfigError(field, std::string(field) + " file not found: " + p.string());
  }
}

Cohort load_cohort(const RunConfig& c) {
  require_file(c.records, "records");
  require_file(c.events, "events");
  const Cohort raw = ingest_cohort(c.records, c.events);
  Cohort cohort = drop_out_of_bounds(raw, c.bbox);
  spdlog::info("ingested {} participants, {} minutes ({} without GPS dropped, {} outside the study area dropped)",
               cohort.participants.size(), cohort.record_count(), raw.dropped_missing_gps,
               raw.record_count() - cohort.record_count());
  return cohort;
}

std::vector<Outlet> load_outlet_file(const RunConfig& c) {
  require_file(c.outlets, "outlets");
  return load_outlets(c.outlets);
}

int cmd_synth(const RunConfig& c) {
  const auto data = generate(c.synth_config());
  const auto files = write_synth(data, c.data_dir);
  spdlog::info("wrote {} synthetic files to {}", files.size(), c.data_dir.string());
  return kOk;
}

int cmd_featurize(const RunConfig& c, const std::string& problem_text, int offset, const std::string& output) {
  const auto problem = parse_problem(problem_text);
  if (!problem) throw ConfigError("problem", "unknown problem '" + problem_text + "'");
  if (offset < 0 || offset > kMaxOffset) throw ConfigError("offset", "offset must lie in 0..4");
  const Cohort cohort = load_cohort(c);
  const auto outlets = load_outlet_file(c);
  const auto homes = infer_homes(cohort, c.sleep_window, c.dbscan);
  FeatureOptions options;
  options.time_since_cap = c.time_since_cap;
  const auto base = compute_base_features(cohort, outlets, homes, options, resolve_threads(c.threads));
  const auto matrix = task_matrix(base, {*problem, offset});
  if (output == "-") {
    write_feature_csv(matrix, std::cout);
    std::cout.flush();
  } else {
    std::ofstream out(output, std::ios::binary);
    write_feature_csv(matrix, out);
    out.close();
    if (!out) throw Error("cannot write " + output);
  }
  spdlog::info("featurized {} rows, {} positive", matrix.rows(), matrix.positives());
  return kOk;
}

int cmd_run(const RunConfig& c) {
  const Cohort cohort = load_cohort(c);
  const auto outlets = load_outlet_file(c);
  const auto run = run_experiment(cohort, outlets, c.experiment());
  const auto files = emit_reports(run.results, &run.split, c.out_dir);
  std::size_t skipped = 0;
  for (const auto& r : run.results) skipped += r.skipped ? 1 : 0;
  spdlog::info("{} result cells ({} skipped), {} files written to {}", run.results.size(), skipped, files.size(),
               c.out_dir.string());
  return kOk;
}

struct InspectArgs {
  std::string query = "importances";
  std::string results;
  std::size_t top = 10;
  std::string problem;
  int offset = -1;
  std::string model;
};

int cmd_inspect(const RunConfig& c, const InspectArgs& a) {
  const std::filesystem::path path = a.results.empty() ? c.out_dir / "results.json" : std::filesystem::path(a.results);
  std::ifstream in(path);
  if (!in) throw ConfigError("results", "cannot open results file " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(path.string() + " is not valid JSON: " + e.what());
  }
  auto results = results_from_json(doc);
  std::erase_if(results, [&](const ExperimentResult& r) {
    return (!a.problem.empty() && to_string(r.task.problem) != a.problem) ||
           (a.offset >= 0 && r.task.offset_minutes != a.offset) ||
           (!a.model.empty() && to_string(r.kind) != a.model);
  });

  if (a.query == "summary") {
    if (results.empty()) throw DataError("no result cells match the filters");
    std::cout << summary_csv(results);
  } else if (a.query == "cells") {
    std::cout << "problem,mins,model,status,train_acc,valid_acc,test_acc\n";
    for (const auto& r : results) {
      std::cout << to_string(r.task.problem) << ',' << r.task.offset_minutes << ',' << to_string(r.kind) << ',';
      if (r.skipped) {
        std::cout << "skipped,,,\n";
      } else {
        std::cout << "ok," << format_score(r.mean_train) << ',' << format_score(r.mean_valid) << ','
                  << format_score(r.test) << '\n';
      }
    }
  } else if (a.query == "importances") {
    std::cout << "problem,mins,model,rank,feature_id,feature,importance\n";
    for (const auto& r : results) {
      if (!r.importances) continue;
      const auto& imp = *r.importances;
      std::vector<std::size_t> order(imp.size());
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return imp[x] > imp[y]; });
      for (std::size_t k = 0; k < std::min(a.top, order.size()); ++k) {
        const std::size_t f = order[k];
        std::cout << to_string(r.task.problem) << ',' << r.task.offset_minutes << ',' << to_string(r.kind) << ','
                  << k + 1 << ',' << f << ',' << feature_name(f) << ',' << format_score(imp[f]) << '\n';
      }
    }
  } else {
    throw ConfigError("query", "unknown query '" + a.query + "' (expected importances, summary or cells)");
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  auto logger = spdlog::stderr_logger_mt("forage");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%H:%M:%S] [%l] %v");

  CLI::App app{"Predict eating and food purchasing minutes from wearable GPS and accelerometer data"};
  app.require_subcommand(1, 1);
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

  auto* synth = app.add_subcommand("synth", "Generate a synthetic cohort into data_dir");
  ConfigFlags synth_flags;
  synth_flags.attach(synth);

  auto* featurize = app.add_subcommand("featurize", "Ingest, infer homes and export one task's feature matrix as CSV");
  ConfigFlags featurize_flags;
  featurize_flags.attach(featurize);
  std::string feat_problem = "eating";
  int feat_offset = 0;
  std::string feat_output = "-";
  featurize->add_option("--problem", feat_problem, "eating or purchasing")->capture_default_str();
  featurize->add_option("--offset", feat_offset, "prediction offset in minutes, 0..4")->capture_default_str();
  featurize->add_option("--output", feat_output, "output CSV path, - for standard output")->capture_default_str();

  auto* run = app.add_subcommand("run", "Run the full experiment and write reports to out_dir");
  ConfigFlags run_flags;
  run_flags.attach(run);

  auto* inspect = app.add_subcommand("inspect", "Print tables from a results.json");
  ConfigFlags inspect_flags;
  inspect_flags.attach(inspect);
  InspectArgs inspect_args;
  inspect->add_option("query", inspect_args.query, "importances, summary or cells")->capture_default_str();
  inspect->add_option("--results", inspect_args.results, "results.json path (default <out_dir>/results.json)");
  inspect->add_option("--top", inspect_args.top, "rows per task for importances")->capture_default_str();
  inspect->add_option("--problem", inspect_args.problem, "only this problem");
  inspect->add_option("--offset", inspect_args.offset, "only this offset");
  inspect->add_option("--model", inspect_args.model, "only this model");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("config", e.what());
  }
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (synth->parsed()) return cmd_synth(synth_flags.resolve());
    if (featurize->parsed()) {
      return cmd_featurize(featurize_flags.resolve(), feat_problem, feat_offset, feat_output);
    }
    if (run->parsed()) return cmd_run(run_flags.resolve());
    if (inspect->parsed()) return cmd_inspect(inspect_flags.resolve(), inspect_args);
  } catch (const ConfigError& e) {
    return fail("config", e.what(), e.field());
  } catch (const DataError& e) {
    return fail("data", e.what());
  } catch (const std::exception& e) {
    return fail("runtime", e.what());
  }
  return kOk;
}
