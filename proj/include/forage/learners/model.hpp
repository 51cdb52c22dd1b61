#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "forage/learners/boosting.hpp"
#include "forage/learners/forest.hpp"
#include "forage/learners/logistic.hpp"
#include "forage/learners/svm.hpp"
#include "forage/matrix.hpp"

namespace forage {

enum class ModelKind { LR, SVM, RF, GB };

inline constexpr std::array<ModelKind, 4> kAllModels = {ModelKind::LR, ModelKind::SVM, ModelKind::RF,
                                                        ModelKind::GB};

std::string_view to_string(ModelKind kind);
std::optional<ModelKind> parse_model_kind(std::string_view text);

/// Input width each kind expects: 34 for LR, 35 otherwise.
std::size_t input_width(ModelKind kind);

/// Named hyperparameter values in a fixed order, e.g. {{"gamma", 0.1}, {"C", 10}}.
using ParamList = std::vector<std::pair<std::string, double>>;

/// Value of `name` in `params`; throws std::invalid_argument if absent.
double param(const ParamList& params, std::string_view name);

/// Settings that are not tuned by the grid.
struct FitOptions {
  bool standardize = true;
  int lr_max_iter = 100;
  int svm_max_iter = 10000;
  std::size_t svm_cache_mb = 256;
  std::size_t rf_max_features = 0;  // 0 = floor(sqrt(p))
  double gb_learning_rate = 0.1;
  std::uint64_t seed = 0;
};

struct TrainedModel {
  ModelKind kind = ModelKind::LR;
  ParamList hyperparameters;
  std::variant<LogisticModel, SvmModel, ForestModel, BoostModel> fitted;

  bool converged() const;
};

/// Fits `kind` on a full 35-column feature block (the LR view is taken
/// internally). Labels are 0/1.
TrainedModel fit_model(ModelKind kind, const Matrix& x, std::span<const std::uint8_t> y,
                       const ParamList& params, const FitOptions& options);

/// Hard 0/1 labels. `x` must have input_width(model.kind) columns.
std::vector<std::uint8_t> predict(const TrainedModel& model, const Matrix& x);

/// Hard labels from a full 35-column block, taking the LR view as needed.
std::vector<std::uint8_t> predict_features(const TrainedModel& model, const Matrix& x);

/// Normalized impurity-decrease totals (35 values). Throws
/// UnsupportedOperation for LR and SVM.
std::vector<double> feature_importances(const TrainedModel& model);

inline constexpr int kModelFormatVersion = 1;

nlohmann::json model_to_json(const TrainedModel& model);
TrainedModel model_from_json(const nlohmann::json& doc);

}  // namespace forage
