#include "forage/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include <spdlog/spdlog.h>

#include "forage/error.hpp"
#include "forage/metrics.hpp"
#include "forage/parallel.hpp"
#include "forage/rng.hpp"

namespace forage {

std::vector<ParamList> Grid::points() const {
  std::vector<ParamList> out{ParamList{}};
  for (std::size_t a = 0; a < axis_names.size(); ++a) {
    std::vector<ParamList> next;
    for (const auto& prefix : out) {
      for (double v : axis_values[a]) {
        auto p = prefix;
        p.emplace_back(axis_names[a], v);
        next.push_back(std::move(p));
      }
    }
    out = std::move(next);
  }
  return out;
}

void Grid::validate() const {
  const std::string field = "grid." + std::string(to_string(kind));
  const auto expected = paper(kind).axis_names;
  if (axis_names != expected || axis_values.size() != axis_names.size()) {
    throw ConfigError(field, "grid axes for " + std::string(to_string(kind)) + " are malformed");
  }
  for (std::size_t a = 0; a < axis_names.size(); ++a) {
    const auto& name = axis_names[a];
    if (axis_values[a].empty()) throw ConfigError(field + "." + name, "grid axis " + name + " is empty");
    std::set<double> seen;
    for (double v : axis_values[a]) {
      if (!std::isfinite(v) || v <= 0.0) {
        throw ConfigError(field + "." + name, "grid axis " + name + " needs positive values");
      }
      if ((name == "n_estimators" || name == "max_depth") && (v != std::floor(v) || v < 1.0)) {
        throw ConfigError(field + "." + name, "grid axis " + name + " needs integers >= 1");
      }
      if (!seen.insert(v).second) {
        throw ConfigError(field + "." + name, "grid axis " + name + " repeats a value");
      }
    }
  }
}

Grid Grid::paper(ModelKind kind) {
  const std::vector<double> costs{1000, 100, 10, 1, 0.1};
  const std::vector<double> trees{10, 30, 50, 100, 200};
  switch (kind) {
    case ModelKind::LR:
      return {kind, {"C"}, {costs}};
    case ModelKind::SVM:
      return {kind, {"gamma", "C"}, {{0.01, 0.1, 1, 10, 100}, costs}};
    case ModelKind::RF:
      return {kind, {"n_estimators", "max_depth"}, {trees, {2, 5, 10, 15, 20}}};
    case ModelKind::GB:
      return {kind, {"n_estimators", "max_depth"}, {trees, {1, 2, 3, 4, 5}}};
  }
  throw std::invalid_argument("unknown model kind");
}

const Grid& ExperimentOptions::grid(ModelKind kind) const {
  static const std::map<ModelKind, Grid> defaults = [] {
    std::map<ModelKind, Grid> g;
    for (auto k : kAllModels) g.emplace(k, Grid::paper(k));
    return g;
  }();
  auto it = grids.find(kind);
  return it != grids.end() ? it->second : defaults.at(kind);
}

namespace {

std::string task_key(const TaskSpec& task) {
  return std::string(to_string(task.problem)) + "/min" + std::to_string(task.offset_minutes);
}

std::string describe(const ParamList& params) {
  std::string s;
  for (const auto& [k, v] : params) {
    if (!s.empty()) s += ",";
    s += k + "=" + format_double(v);
  }
  return s;
}

/// Rethrows the in-flight exception with `where` prepended, keeping its category.
[[noreturn]] void rethrow_annotated(const std::string& where) {
  try {
    throw;
  } catch (const ConfigError& e) {
    throw ConfigError(e.field(), where + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(where + ": " + e.what());
  } catch (const UnsupportedOperation& e) {
    throw UnsupportedOperation(where + ": " + e.what());
  } catch (const std::exception& e) {
    throw Error(where + ": " + e.what());
  }
}

std::vector<std::uint8_t> labels_of(const FeatureMatrix& m, std::span<const std::size_t> rows) {
  std::vector<std::uint8_t> y(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) y[i] = m.labels[rows[i]];
  return y;
}

void notify_fit(const ExperimentOptions& o, const TaskSpec& t, ModelKind k, int fold, const FeatureMatrix& m,
                std::span<const std::size_t> rows) {
  if (o.observer) o.observer->on_fit(t, k, fold, m, rows);
}

void notify_score(const ExperimentOptions& o, const TaskSpec& t, ModelKind k, int fold, ScoreRole role,
                  const FeatureMatrix& m, std::span<const std::size_t> rows) {
  if (o.observer) o.observer->on_score(t, k, fold, role, m, rows);
}

/// Position of `v` in `values`.
std::size_t index_of(const std::vector<int>& values, int v) {
  return static_cast<std::size_t>(std::find(values.begin(), values.end(), v) - values.begin());
}

std::vector<int> distinct_ints(const std::vector<ParamList>& points, std::string_view name) {
  std::vector<int> out;
  for (const auto& p : points) {
    const int v = static_cast<int>(param(p, name));
    if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
  }
  return out;
}

/// Scores of every grid point on one fold.
std::vector<FoldScore> fold_scores(const FeatureMatrix& m, const SplitPlan& split, const TaskSpec& task,
                                   const Grid& grid, std::size_t k, const ExperimentOptions& options) {
  const auto points = grid.points();
  const std::string key = task_key(task);
  const Fold& fold = split.folds[k];
  const int fold_id = static_cast<int>(k);
  const auto train_scope = rows_for(m, fold.train_ids);
  const auto valid_rows = rows_for(m, fold.valid_ids);
  BalancedSample sample = balance_rows(m, train_scope, derive_seed(options.seed, "balance/" + key, k));
  if (grid.kind == ModelKind::SVM) {
    sample = cap_balanced(m, sample, options.svm_max_train_rows, derive_seed(options.seed, "svm-cap/" + key, k));
  }
  const auto& fit_rows = sample.rows;
  const auto y_train = labels_of(m, fit_rows);
  const auto y_valid = labels_of(m, valid_rows);
  const Matrix x_train = m.values.select_rows(fit_rows);
  const Matrix x_valid = m.values.select_rows(valid_rows);

  std::vector<FoldScore> scores(points.size());
  const auto record = [&](std::size_t g, std::span<const std::uint8_t> train_pred,
                          std::span<const std::uint8_t> valid_pred) {
    notify_score(options, task, grid.kind, fold_id, ScoreRole::Train, m, fit_rows);
    notify_score(options, task, grid.kind, fold_id, ScoreRole::Valid, m, valid_rows);
    scores[g].train = balanced_accuracy(y_train, train_pred);
    scores[g].valid = balanced_accuracy(y_valid, valid_pred);
  };

  switch (grid.kind) {
    case ModelKind::LR: {
      const Matrix v = lr_view(x_valid);
      const Matrix t = lr_view(x_train);
      for (std::size_t g = 0; g < points.size(); ++g) {
        try {
          notify_fit(options, task, grid.kind, fold_id, m, fit_rows);
          const auto model = fit_model(ModelKind::LR, x_train, y_train, points[g], options.fit);
          record(g, predict(model, t), predict(model, v));
        } catch (...) {
          rethrow_annotated("fold " + std::to_string(k + 1) + " grid point " + describe(points[g]));
        }
      }
      break;
    }
    case ModelKind::SVM: {
      const auto ys = signed_labels(y_train);
      const Standardizer standardizer =
          options.fit.standardize ? Standardizer::fit(x_train, false) : Standardizer::identity(x_train.cols());
      const Matrix xs = standardizer.transform(x_train);
      const Matrix vs = standardizer.transform(x_valid);
      std::vector<SvmSolution> solutions(points.size());
      std::vector<double> gammas(points.size());
      std::vector<bool> done(points.size(), false);
      for (std::size_t g = 0; g < points.size(); ++g) {
        if (done[g]) continue;
        const double gamma = param(points[g], "gamma");
        KernelCache kernel(xs, gamma, options.fit.svm_cache_mb);
        for (std::size_t h = g; h < points.size(); ++h) {
          if (done[h] || param(points[h], "gamma") != gamma) continue;
          try {
            notify_fit(options, task, grid.kind, fold_id, m, fit_rows);
            solutions[h] = solve_svm_dual(kernel, ys, param(points[h], "C"),
                                          options.svm_cv_max_iter(task.problem), 1e-3);
          } catch (...) {
            rethrow_annotated("fold " + std::to_string(k + 1) + " grid point " + describe(points[h]));
          }
          gammas[h] = gamma;
          done[h] = true;
        }
      }
      const auto train_dec = shared_decisions(xs, ys, gammas, solutions, xs);
      const auto valid_dec = shared_decisions(xs, ys, gammas, solutions, vs);
      const auto hard = [](const std::vector<double>& d) {
        std::vector<std::uint8_t> out(d.size());
        for (std::size_t i = 0; i < d.size(); ++i) out[i] = d[i] > 0.0 ? 1 : 0;
        return out;
      };
      for (std::size_t g = 0; g < points.size(); ++g) record(g, hard(train_dec[g]), hard(valid_dec[g]));
      break;
    }
    case ModelKind::RF: {
      const auto counts = distinct_ints(points, "n_estimators");
      const auto depths = distinct_ints(points, "max_depth");
      ForestParams fp;
      fp.n_estimators = *std::max_element(counts.begin(), counts.end());
      fp.max_depth = *std::max_element(depths.begin(), depths.end());
      fp.max_features = options.fit.rf_max_features;
      fp.seed = derive_seed(options.seed, "rf/" + key, k);
      ForestModel forest;
      try {
        notify_fit(options, task, grid.kind, fold_id, m, fit_rows);
        forest = fit_rf(x_train, y_train, fp);
      } catch (...) {
        rethrow_annotated("fold " + std::to_string(k + 1));
      }
      const auto train_votes = staged_votes(forest, x_train, counts, depths);
      const auto valid_votes = staged_votes(forest, x_valid, counts, depths);
      for (std::size_t g = 0; g < points.size(); ++g) {
        const auto c = index_of(counts, static_cast<int>(param(points[g], "n_estimators")));
        const auto d = index_of(depths, static_cast<int>(param(points[g], "max_depth")));
        record(g, train_votes[c][d], valid_votes[c][d]);
      }
      break;
    }
    case ModelKind::GB: {
      const auto counts = distinct_ints(points, "n_estimators");
      const auto depths = distinct_ints(points, "max_depth");
      const int stages = *std::max_element(counts.begin(), counts.end());
      for (int depth : depths) {
        BoostParams bp;
        bp.n_estimators = stages;
        bp.max_depth = depth;
        bp.learning_rate = options.fit.gb_learning_rate;
        BoostModel model;
        try {
          notify_fit(options, task, grid.kind, fold_id, m, fit_rows);
          model = fit_gb(x_train, y_train, bp);
        } catch (...) {
          rethrow_annotated("fold " + std::to_string(k + 1) + " max_depth=" + std::to_string(depth));
        }
        const auto train_pred = staged_predictions(model, x_train, counts);
        const auto valid_pred = staged_predictions(model, x_valid, counts);
        for (std::size_t g = 0; g < points.size(); ++g) {
          if (static_cast<int>(param(points[g], "max_depth")) != depth) continue;
          const auto c = index_of(counts, static_cast<int>(param(points[g], "n_estimators")));
          record(g, train_pred[c], valid_pred[c]);
        }
      }
      break;
    }
  }
  return scores;
}

GridSearchResult assemble(const Grid& grid, const std::vector<std::vector<FoldScore>>& per_fold) {
  GridSearchResult out;
  const auto points = grid.points();
  for (std::size_t g = 0; g < points.size(); ++g) {
    GridPointScores s;
    s.params = points[g];
    double tr = 0.0;
    double va = 0.0;
    for (const auto& fold : per_fold) {
      s.folds.push_back(fold[g]);
      tr += fold[g].train;
      va += fold[g].valid;
    }
    const auto n = static_cast<double>(per_fold.size());
    s.mean_train = tr / n;
    s.mean_valid = va / n;
    out.points.push_back(std::move(s));
  }
  for (std::size_t g = 1; g < out.points.size(); ++g) {
    if (out.points[g].mean_valid > out.points[out.best].mean_valid) out.best = g;
  }
  return out;
}

/// Reason a cell cannot be evaluated, or empty.
std::string skip_reason(const FeatureMatrix& m, const SplitPlan& split) {
  const auto classes = [&](const IdSet& ids) {
    std::size_t pos = 0;
    std::size_t n = 0;
    for (auto i : rows_for(m, ids)) {
      pos += m.labels[i];
      ++n;
    }
    return std::pair{pos, n - pos};
  };
  const auto check = [&](const IdSet& ids, const std::string& what, bool fitted) -> std::string {
    const auto [pos, neg] = classes(ids);
    if (pos == 0) return "no positive examples in " + what;
    if (neg == 0) return "no negative examples in " + what;
    if (fitted && neg < pos) return "fewer negatives than positives in " + what;
    return {};
  };
  if (auto r = check(split.train_participants, "training rows", true); !r.empty()) return r;
  if (auto r = check(split.test_participants, "test rows", false); !r.empty()) return r;
  for (std::size_t k = 0; k < split.folds.size(); ++k) {
    const std::string f = "fold " + std::to_string(k + 1);
    if (auto r = check(split.folds[k].train_ids, f + " training rows", true); !r.empty()) return r;
    if (auto r = check(split.folds[k].valid_ids, f + " validation rows", false); !r.empty()) return r;
  }
  return {};
}

/// Final fit on a balanced sample of all training participants and test scoring.
void finish_cell(const FeatureMatrix& m, const SplitPlan& split, ExperimentResult& r,
                 const ExperimentOptions& options) {
  const std::string key = task_key(r.task);
  const auto& best = r.cv.points[r.cv.best];
  r.chosen = best.params;
  r.mean_train = best.mean_train;
  r.mean_valid = best.mean_valid;

  const auto train_scope = rows_for(m, split.train_participants);
  BalancedSample sample = balance_rows(m, train_scope, derive_seed(options.seed, "final-balance/" + key));
  if (r.kind == ModelKind::SVM) {
    sample = cap_balanced(m, sample, options.svm_max_train_rows, derive_seed(options.seed, "final-svm-cap/" + key));
  }
  const auto y_train = labels_of(m, sample.rows);
  const Matrix x_train = m.values.select_rows(sample.rows);
  FitOptions fit = options.fit;
  fit.svm_max_iter = options.svm_final_max_iter;
  fit.seed = derive_seed(options.seed, "rf-final/" + key);
  TrainedModel model;
  try {
    notify_fit(options, r.task, r.kind, -1, m, sample.rows);
    model = fit_model(r.kind, x_train, y_train, r.chosen, fit);
  } catch (...) {
    rethrow_annotated("final fit " + describe(r.chosen));
  }
  r.final_converged = model.converged();
  if (!r.final_converged) {
    spdlog::warn("{} {}: final fit stopped at its iteration limit", key, to_string(r.kind));
  }
  notify_score(options, r.task, r.kind, -1, ScoreRole::Train, m, sample.rows);
  r.final_train = balanced_accuracy(y_train, predict_features(model, x_train));

  const auto test_rows = rows_for(m, split.test_participants);
  notify_score(options, r.task, r.kind, -1, ScoreRole::Test, m, test_rows);
  const Matrix x_test = m.values.select_rows(test_rows);
  r.test = balanced_accuracy(labels_of(m, test_rows), predict_features(model, x_test));
  if (r.kind == ModelKind::RF || r.kind == ModelKind::GB) r.importances = feature_importances(model);
  spdlog::info("{} {}: chose {} valid {:.4f} test {:.4f}", key, to_string(r.kind), describe(r.chosen),
               r.mean_valid, r.test);
}

}  // namespace

GridSearchResult grid_search(const FeatureMatrix& m, const SplitPlan& split, const TaskSpec& task,
                             const Grid& grid, const ExperimentOptions& options) {
  grid.validate();
  if (split.folds.empty()) throw ConfigError("n_folds", "split has no folds");
  std::vector<std::vector<FoldScore>> per_fold(split.folds.size());
  parallel_for(split.folds.size(), options.threads,
               [&](std::size_t k) { per_fold[k] = fold_scores(m, split, task, grid, k, options); });
  return assemble(grid, per_fold);
}

ExperimentResult evaluate_cell(const FeatureMatrix& m, const SplitPlan& split, const TaskSpec& task,
                               ModelKind kind, const ExperimentOptions& options) {
  ExperimentResult r;
  r.task = task;
  r.kind = kind;
  r.reason = skip_reason(m, split);
  if (!r.reason.empty()) {
    r.skipped = true;
    return r;
  }
  r.cv = grid_search(m, split, task, options.grid(kind), options);
  finish_cell(m, split, r, options);
  return r;
}

ExperimentRun run_experiment(const Cohort& cohort, std::span<const Outlet> outlets,
                             const ExperimentConfig& config) {
  const auto& options = config.options;
  if (config.problems.empty()) throw ConfigError("problems", "problems filter is empty");
  if (config.offsets.empty()) throw ConfigError("offsets", "offsets filter is empty");
  if (config.models.empty()) throw ConfigError("models", "models filter is empty");
  std::set<Problem> problems(config.problems.begin(), config.problems.end());
  std::set<int> offsets(config.offsets.begin(), config.offsets.end());
  std::set<ModelKind> models(config.models.begin(), config.models.end());
  for (int o : offsets) {
    if (o < 0 || o > kMaxOffset) throw ConfigError("offsets", "offset must be in 0..4, got " + std::to_string(o));
  }
  for (auto k : models) options.grid(k).validate();

  ExperimentRun run;
  run.split = make_split(cohort.participant_ids(), config.train_count, options.seed, config.split);
  spdlog::info("split: {} training, {} test participants, {} folds", run.split.train_participants.size(),
               run.split.test_participants.size(), run.split.folds.size());
  run.homes = infer_homes(cohort, config.sleep_window, config.dbscan);
  spdlog::info("homes inferred for {} of {} participants", run.homes.size(), cohort.participants.size());
  const BaseFeatures base = compute_base_features(cohort, outlets, run.homes, config.features, options.threads);
  spdlog::info("featurized {} minute rows", base.matrix.rows());

  for (Problem problem : problems) {
    for (int offset : offsets) {
      const TaskSpec task{problem, offset};
      const FeatureMatrix m = task_matrix(base, task);
      const std::string key = task_key(task);
      spdlog::info("{}: {} rows, {} positive", key, m.rows(), m.positives());

      std::vector<ExperimentResult> cells;
      for (ModelKind kind : models) {
        ExperimentResult r;
        r.task = task;
        r.kind = kind;
        r.reason = skip_reason(m, run.split);
        r.skipped = !r.reason.empty();
        if (r.skipped) spdlog::warn("{} {}: skipped ({})", key, to_string(kind), r.reason);
        cells.push_back(std::move(r));
      }

      // Fan out every (model, fold) pair, then every final fit.
      struct Unit {
        std::size_t cell;
        std::size_t fold;
      };
      std::vector<Unit> units;
      for (std::size_t c = 0; c < cells.size(); ++c) {
        if (cells[c].skipped) continue;
        for (std::size_t k = 0; k < run.split.folds.size(); ++k) units.push_back({c, k});
      }
      // Costliest kinds first keeps workers busy at the tail.
      std::stable_sort(units.begin(), units.end(), [&](const Unit& a, const Unit& b) {
        const auto rank = [](ModelKind k) { return k == ModelKind::RF ? 0 : k == ModelKind::SVM ? 1 : k == ModelKind::GB ? 2 : 3; };
        return rank(cells[a.cell].kind) < rank(cells[b.cell].kind);
      });
      std::vector<std::vector<std::vector<FoldScore>>> per_fold(
          cells.size(), std::vector<std::vector<FoldScore>>(run.split.folds.size()));
      parallel_for(units.size(), options.threads, [&](std::size_t u) {
        const auto& unit = units[u];
        const auto kind = cells[unit.cell].kind;
        try {
          per_fold[unit.cell][unit.fold] = fold_scores(m, run.split, task, options.grid(kind), unit.fold, options);
        } catch (...) {
          rethrow_annotated(key + " " + std::string(to_string(kind)));
        }
      });
      std::vector<std::size_t> live;
      for (std::size_t c = 0; c < cells.size(); ++c) {
        if (cells[c].skipped) continue;
        cells[c].cv = assemble(options.grid(cells[c].kind), per_fold[c]);
        live.push_back(c);
      }
      parallel_for(live.size(), options.threads, [&](std::size_t i) {
        auto& cell = cells[live[i]];
        try {
          finish_cell(m, run.split, cell, options);
        } catch (...) {
          rethrow_annotated(key + " " + std::string(to_string(cell.kind)));
        }
      });
      for (auto& c : cells) run.results.push_back(std::move(c));
    }
  }
  return run;
}

}  // namespace forage
