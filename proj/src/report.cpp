#include "forage/report.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "forage/error.hpp"

namespace forage {

using nlohmann::json;
using nlohmann::ordered_json;

std::string format_score(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

namespace {

std::string param_value(double v) { return format_double(v); }

std::string task_suffix(const TaskSpec& t) {
  return std::string(to_string(t.problem)) + "_min" + std::to_string(t.offset_minutes);
}

}  // namespace

std::string summary_csv(std::span<const ExperimentResult> results) {
  std::ostringstream out;
  out << "model";
  for (auto p : {Problem::Eating, Problem::Purchasing}) {
    const auto name = std::string(to_string(p));
    out << ',' << name << "_train," << name << "_valid," << name << "_test," << name << "_tasks";
  }
  out << '\n';
  for (auto kind : kAllModels) {
    bool present = false;
    for (const auto& r : results) present = present || r.kind == kind;
    if (!present) continue;
    out << to_string(kind);
    for (auto p : {Problem::Eating, Problem::Purchasing}) {
      double tr = 0.0;
      double va = 0.0;
      double te = 0.0;
      int n = 0;
      for (const auto& r : results) {
        if (r.kind != kind || r.task.problem != p || r.skipped) continue;
        tr += r.mean_train;
        va += r.mean_valid;
        te += r.test;
        ++n;
      }
      if (n == 0) {
        out << ",,,,0";
      } else {
        out << ',' << format_score(tr / n) << ',' << format_score(va / n) << ',' << format_score(te / n) << ','
            << n;
      }
    }
    out << '\n';
  }
  return out.str();
}

namespace {

std::string model_csv(std::span<const ExperimentResult> results, ModelKind kind, const Grid& grid) {
  std::ostringstream out;
  out << "problem,mins,status,train_acc,valid_acc,test_acc";
  for (const auto& name : grid.axis_names) out << ',' << name;
  out << '\n';
  for (const auto& r : results) {
    if (r.kind != kind) continue;
    out << to_string(r.task.problem) << ',' << r.task.offset_minutes << ',';
    if (r.skipped) {
      out << "skipped,,,";
      for (std::size_t a = 0; a < grid.axis_names.size(); ++a) out << ',';
    } else {
      out << "ok," << format_score(r.mean_train) << ',' << format_score(r.mean_valid) << ','
          << format_score(r.test);
      for (const auto& name : grid.axis_names) out << ',' << param_value(param(r.chosen, name));
    }
    out << '\n';
  }
  return out.str();
}

std::string cv_csv(const ExperimentResult& r) {
  std::ostringstream out;
  const auto& first = r.cv.points.front();
  bool comma = false;
  for (const auto& [name, v] : first.params) {
    out << (comma ? "," : "") << name;
    comma = true;
  }
  for (std::size_t k = 0; k < first.folds.size(); ++k) out << ",fold" << k + 1 << "_train,fold" << k + 1 << "_valid";
  out << ",mean_train,mean_valid\n";
  for (const auto& p : r.cv.points) {
    comma = false;
    for (const auto& [name, v] : p.params) {
      out << (comma ? "," : "") << param_value(v);
      comma = true;
    }
    for (const auto& f : p.folds) out << ',' << format_score(f.train) << ',' << format_score(f.valid);
    out << ',' << format_score(p.mean_train) << ',' << format_score(p.mean_valid) << '\n';
  }
  return out.str();
}

std::string importance_csv(const std::vector<const ExperimentResult*>& cells) {
  std::ostringstream out;
  out << "feature_id,feature";
  for (const auto* r : cells) out << ',' << to_string(r->kind);
  out << '\n';
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    out << f << ',' << feature_name(f);
    for (const auto* r : cells) out << ',' << format_score((*r->importances)[f]);
    out << '\n';
  }
  return out.str();
}

ordered_json params_json(const ParamList& params) {
  ordered_json j = ordered_json::object();
  for (const auto& [k, v] : params) j[k] = v;
  return j;
}

/// Parameters in the kind's axis order; JSON objects do not keep key order.
ParamList params_from(const json& j, ModelKind kind) {
  ParamList p;
  for (const auto& name : Grid::paper(kind).axis_names) {
    if (j.contains(name)) p.emplace_back(name, j.at(name).get<double>());
  }
  if (p.size() != j.size()) throw DataError("results document has unknown hyperparameters");
  return p;
}

}  // namespace

ordered_json results_to_json(std::span<const ExperimentResult> results) {
  ordered_json arr = ordered_json::array();
  for (const auto& r : results) {
    ordered_json j;
    j["problem"] = std::string(to_string(r.task.problem));
    j["offset"] = r.task.offset_minutes;
    j["model"] = std::string(to_string(r.kind));
    j["status"] = r.skipped ? "skipped" : "ok";
    if (r.skipped) {
      j["reason"] = r.reason;
      arr.push_back(std::move(j));
      continue;
    }
    j["chosen_params"] = params_json(r.chosen);
    const auto& best = r.cv.points[r.cv.best];
    ordered_json folds = ordered_json::array();
    for (const auto& f : best.folds) folds.push_back({f.train, f.valid});
    j["fold_scores"] = folds;
    j["mean_train"] = r.mean_train;
    j["mean_valid"] = r.mean_valid;
    j["final_train"] = r.final_train;
    j["test"] = r.test;
    j["final_converged"] = r.final_converged;
    ordered_json grid = ordered_json::array();
    for (const auto& p : r.cv.points) {
      ordered_json g;
      g["params"] = params_json(p.params);
      ordered_json fs = ordered_json::array();
      for (const auto& f : p.folds) fs.push_back({f.train, f.valid});
      g["fold_scores"] = fs;
      g["mean_train"] = p.mean_train;
      g["mean_valid"] = p.mean_valid;
      grid.push_back(std::move(g));
    }
    j["grid"] = grid;
    if (r.importances) j["importances"] = *r.importances;
    arr.push_back(std::move(j));
  }
  return arr;
}

std::vector<ExperimentResult> results_from_json(const json& doc) {
  std::vector<ExperimentResult> out;
  try {
    for (const auto& j : doc) {
      ExperimentResult r;
      const auto problem = parse_problem(j.at("problem").get<std::string>());
      const auto kind = parse_model_kind(j.at("model").get<std::string>());
      if (!problem || !kind) throw DataError("results document has an unknown problem or model");
      r.task = {*problem, j.at("offset").get<int>()};
      r.kind = *kind;
      r.skipped = j.at("status").get<std::string>() == "skipped";
      if (r.skipped) {
        r.reason = j.value("reason", "");
        out.push_back(std::move(r));
        continue;
      }
      r.chosen = params_from(j.at("chosen_params"), r.kind);
      r.mean_train = j.at("mean_train").get<double>();
      r.mean_valid = j.at("mean_valid").get<double>();
      r.final_train = j.at("final_train").get<double>();
      r.test = j.at("test").get<double>();
      r.final_converged = j.value("final_converged", true);
      for (const auto& g : j.at("grid")) {
        GridPointScores p;
        p.params = params_from(g.at("params"), r.kind);
        for (const auto& f : g.at("fold_scores")) p.folds.push_back({f.at(0).get<double>(), f.at(1).get<double>()});
        p.mean_train = g.at("mean_train").get<double>();
        p.mean_valid = g.at("mean_valid").get<double>();
        if (p.params == r.chosen) r.cv.best = r.cv.points.size();
        r.cv.points.push_back(std::move(p));
      }
      if (j.contains("importances")) r.importances = j.at("importances").get<std::vector<double>>();
      out.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed results document: ") + e.what());
  }
  return out;
}

std::vector<std::filesystem::path> emit_reports(std::span<const ExperimentResult> results, const SplitPlan* split,
                                                const std::filesystem::path& out_dir) {
  if (results.empty()) throw Error("no results to report");

  std::map<std::string, std::string> files;  // name -> content
  files["summary.csv"] = summary_csv(results);
  for (auto kind : kAllModels) {
    std::vector<const ExperimentResult*> cells;
    for (const auto& r : results) {
      if (r.kind == kind) cells.push_back(&r);
    }
    if (cells.empty()) continue;
    files["results_" + std::string(to_string(kind)) + ".csv"] = model_csv(results, kind, Grid::paper(kind));
  }
  std::map<std::pair<int, int>, std::vector<const ExperimentResult*>> importance_cells;
  for (const auto& r : results) {
    if (r.skipped) continue;
    files["cv_" + std::string(to_string(r.kind)) + "_" + task_suffix(r.task) + ".csv"] = cv_csv(r);
    if (r.importances) {
      importance_cells[{static_cast<int>(r.task.problem), r.task.offset_minutes}].push_back(&r);
    }
  }
  for (const auto& [key, cells] : importance_cells) {
    files["importances_" + task_suffix(cells.front()->task) + ".csv"] = importance_csv(cells);
  }
  files["results.json"] = results_to_json(results).dump(2) + "\n";
  if (split) {
    std::ostringstream s;
    write_split_json(*split, s);
    files["split.json"] = s.str();
  }

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error("cannot create output directory " + out_dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> written;
  for (const auto& [name, content] : files) {
    const auto path = out_dir / name;
    std::ofstream f(path, std::ios::binary);
    f << content;
    f.close();
    if (!f) throw Error("cannot write " + path.string());
    written.push_back(path);
  }
  return written;
}

}  // namespace forage
