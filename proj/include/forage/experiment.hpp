#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "forage/cohort.hpp"
#include "forage/features.hpp"
#include "forage/geo.hpp"
#include "forage/learners/model.hpp"
#include "forage/split.hpp"

namespace forage {

/// Hyperparameter axes for one model kind. Points enumerate the first axis
/// outermost, in listed order.
struct Grid {
  ModelKind kind = ModelKind::LR;
  std::vector<std::string> axis_names;
  std::vector<std::vector<double>> axis_values;

  std::vector<ParamList> points() const;
  /// Throws ConfigError if an axis is empty or holds an invalid value.
  void validate() const;

  static Grid paper(ModelKind kind);
};

enum class ScoreRole { Train, Valid, Test };

/// Instrumentation hooks. Every model fit and every scoring pass reports the
/// matrix rows it touched. Calls may arrive from worker threads.
class ProtocolObserver {
 public:
  virtual ~ProtocolObserver() = default;
  /// fold = -1 for the final fit.
  virtual void on_fit(const TaskSpec& task, ModelKind kind, int fold, const FeatureMatrix& m,
                      std::span<const std::size_t> rows) = 0;
  virtual void on_score(const TaskSpec& task, ModelKind kind, int fold, ScoreRole role,
                        const FeatureMatrix& m, std::span<const std::size_t> rows) = 0;
};

struct FoldScore {
  double train = 0.0;
  double valid = 0.0;
};

struct GridPointScores {
  ParamList params;
  std::vector<FoldScore> folds;
  double mean_train = 0.0;
  double mean_valid = 0.0;
};

struct GridSearchResult {
  std::vector<GridPointScores> points;  // grid order
  std::size_t best = 0;
};

struct ExperimentOptions {
  std::uint64_t seed = 0;
  FitOptions fit;
  std::map<ModelKind, Grid> grids;  // missing kinds use Grid::paper
  std::size_t svm_max_train_rows = 2000;  // cap per balanced sample; 0 = none
  int svm_cv_max_iter_eating = 1000;
  int svm_cv_max_iter_purchasing = 10000;
  int svm_final_max_iter = 10000;
  std::size_t threads = 1;
  ProtocolObserver* observer = nullptr;

  const Grid& grid(ModelKind kind) const;
  int svm_cv_max_iter(Problem p) const {
    return p == Problem::Eating ? svm_cv_max_iter_eating : svm_cv_max_iter_purchasing;
  }
};

/// Per grid point and fold: fit on the fold's balanced training sample,
/// score on the fold's full validation rows. The best point has the highest
/// mean validation score; ties go to the earliest point.
GridSearchResult grid_search(const FeatureMatrix& m, const SplitPlan& split, const TaskSpec& task,
                             const Grid& grid, const ExperimentOptions& options);

struct ExperimentResult {
  TaskSpec task;
  ModelKind kind = ModelKind::LR;
  bool skipped = false;
  std::string reason;  // why the cell was skipped
  ParamList chosen;
  GridSearchResult cv;
  double mean_train = 0.0;
  double mean_valid = 0.0;
  double final_train = 0.0;
  double test = 0.0;
  bool final_converged = true;
  std::optional<std::vector<double>> importances;
};

struct ExperimentConfig {
  std::size_t train_count = 60;
  SplitOptions split;
  ClockWindow sleep_window;
  DbscanParams dbscan;
  FeatureOptions features;
  std::vector<Problem> problems{Problem::Eating, Problem::Purchasing};
  std::vector<int> offsets{0, 1, 2, 3, 4};
  std::vector<ModelKind> models{kAllModels.begin(), kAllModels.end()};
  ExperimentOptions options;
};

struct ExperimentRun {
  SplitPlan split;
  HomeTable homes;
  std::vector<ExperimentResult> results;  // problem, offset, model order
};

/// Full protocol for one task and model on a prepared matrix: grid search,
/// final fit on a balanced sample of all training participants, test score.
ExperimentResult evaluate_cell(const FeatureMatrix& m, const SplitPlan& split, const TaskSpec& task,
                               ModelKind kind, const ExperimentOptions& options);

ExperimentRun run_experiment(const Cohort& cohort, std::span<const Outlet> outlets,
                             const ExperimentConfig& config);

}  // namespace forage
