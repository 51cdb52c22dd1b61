#include "forage/learners/model.hpp"

#include <stdexcept>

#include "forage/error.hpp"
#include "forage/feature_matrix.hpp"

namespace forage {

using nlohmann::json;

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::LR:
      return "lr";
    case ModelKind::SVM:
      return "svm";
    case ModelKind::RF:
      return "rf";
    case ModelKind::GB:
      return "gb";
  }
  return "?";
}

std::optional<ModelKind> parse_model_kind(std::string_view text) {
  for (auto k : kAllModels) {
    if (to_string(k) == text) return k;
  }
  return std::nullopt;
}

std::size_t input_width(ModelKind kind) { return kind == ModelKind::LR ? kLrFeatureCount : kFeatureCount; }

double param(const ParamList& params, std::string_view name) {
  for (const auto& [k, v] : params) {
    if (k == name) return v;
  }
  throw std::invalid_argument("missing hyperparameter " + std::string(name));
}

bool TrainedModel::converged() const {
  if (const auto* lr = std::get_if<LogisticModel>(&fitted)) return lr->converged;
  if (const auto* svm = std::get_if<SvmModel>(&fitted)) return svm->converged;
  return true;
}

TrainedModel fit_model(ModelKind kind, const Matrix& x, std::span<const std::uint8_t> y,
                       const ParamList& params, const FitOptions& options) {
  if (x.cols() != kFeatureCount) throw DataError("feature block must have 35 columns");
  TrainedModel model;
  model.kind = kind;
  model.hyperparameters = params;
  switch (kind) {
    case ModelKind::LR: {
      LrParams p;
      p.c = param(params, "C");
      p.max_iter = options.lr_max_iter;
      p.standardize = options.standardize;
      const auto ys = signed_labels(y);
      model.fitted = fit_lr(lr_view(x), ys, p);
      break;
    }
    case ModelKind::SVM: {
      SvmParams p;
      p.c = param(params, "C");
      p.gamma = param(params, "gamma");
      p.max_iter = options.svm_max_iter;
      p.standardize = options.standardize;
      p.cache_mb = options.svm_cache_mb;
      const auto ys = signed_labels(y);
      model.fitted = fit_svm(x, ys, p);
      break;
    }
    case ModelKind::RF: {
      ForestParams p;
      p.n_estimators = static_cast<int>(param(params, "n_estimators"));
      p.max_depth = static_cast<int>(param(params, "max_depth"));
      p.max_features = options.rf_max_features;
      p.seed = options.seed;
      model.fitted = fit_rf(x, y, p);
      break;
    }
    case ModelKind::GB: {
      BoostParams p;
      p.n_estimators = static_cast<int>(param(params, "n_estimators"));
      p.max_depth = static_cast<int>(param(params, "max_depth"));
      p.learning_rate = options.gb_learning_rate;
      model.fitted = fit_gb(x, y, p);
      break;
    }
  }
  return model;
}

std::vector<std::uint8_t> predict(const TrainedModel& model, const Matrix& x) {
  if (x.cols() != input_width(model.kind)) {
    throw DataError("model " + std::string(to_string(model.kind)) + " expects " +
                    std::to_string(input_width(model.kind)) + " columns, got " + std::to_string(x.cols()));
  }
  std::vector<std::uint8_t> out(x.rows());
  if (const auto* lr = std::get_if<LogisticModel>(&model.fitted)) {
    for (std::size_t i = 0; i < x.rows(); ++i) out[i] = lr->decision(x.row(i)) > 0.0 ? 1 : 0;
  } else if (const auto* svm = std::get_if<SvmModel>(&model.fitted)) {
    const auto d = svm->decisions(x);
    for (std::size_t i = 0; i < x.rows(); ++i) out[i] = d[i] > 0.0 ? 1 : 0;
  } else if (const auto* rf = std::get_if<ForestModel>(&model.fitted)) {
    for (std::size_t i = 0; i < x.rows(); ++i) out[i] = static_cast<std::uint8_t>(rf->predict(x.row(i)));
  } else {
    const auto& gb = std::get<BoostModel>(model.fitted);
    for (std::size_t i = 0; i < x.rows(); ++i) out[i] = static_cast<std::uint8_t>(gb.predict(x.row(i)));
  }
  return out;
}

std::vector<std::uint8_t> predict_features(const TrainedModel& model, const Matrix& x) {
  if (model.kind == ModelKind::LR && x.cols() == kFeatureCount) return predict(model, lr_view(x));
  return predict(model, x);
}

std::vector<double> feature_importances(const TrainedModel& model) {
  if (const auto* rf = std::get_if<ForestModel>(&model.fitted)) return rf->importances;
  if (const auto* gb = std::get_if<BoostModel>(&model.fitted)) return gb->importances;
  throw UnsupportedOperation("feature importances are only defined for rf and gb, not " +
                             std::string(to_string(model.kind)));
}

namespace {

json standardizer_json(const Standardizer& s) { return {{"mean", s.mean}, {"scale", s.scale}}; }

Standardizer standardizer_from(const json& j) {
  Standardizer s;
  s.mean = j.at("mean").get<std::vector<double>>();
  s.scale = j.at("scale").get<std::vector<double>>();
  return s;
}

json tree_json(const DecisionTree& t) {
  json feature = json::array(), threshold = json::array(), left = json::array(), right = json::array(),
       depth = json::array(), value = json::array(), weight = json::array(), gain = json::array();
  for (const auto& n : t.nodes) {
    feature.push_back(n.feature);
    threshold.push_back(n.threshold);
    left.push_back(n.left);
    right.push_back(n.right);
    depth.push_back(n.depth);
    value.push_back(n.value);
    weight.push_back(n.weight);
    gain.push_back(n.gain);
  }
  return {{"feature", feature}, {"threshold", threshold}, {"left", left},     {"right", right},
          {"depth", depth},     {"value", value},         {"weight", weight}, {"gain", gain}};
}

DecisionTree tree_from(const json& j) {
  DecisionTree t;
  const auto& feature = j.at("feature");
  t.nodes.resize(feature.size());
  for (std::size_t k = 0; k < t.nodes.size(); ++k) {
    auto& n = t.nodes[k];
    n.feature = feature.at(k).get<std::int32_t>();
    n.threshold = j.at("threshold").at(k).get<double>();
    n.left = j.at("left").at(k).get<std::int32_t>();
    n.right = j.at("right").at(k).get<std::int32_t>();
    n.depth = j.at("depth").at(k).get<std::int32_t>();
    n.value = j.at("value").at(k).get<double>();
    n.weight = j.at("weight").at(k).get<double>();
    n.gain = j.at("gain").at(k).get<double>();
  }
  return t;
}

}  // namespace

json model_to_json(const TrainedModel& model) {
  json doc;
  doc["format_version"] = kModelFormatVersion;
  doc["kind"] = std::string(to_string(model.kind));
  json hp = json::array();
  for (const auto& [k, v] : model.hyperparameters) hp.push_back({{"name", k}, {"value", v}});
  doc["hyperparameters"] = hp;
  if (const auto* lr = std::get_if<LogisticModel>(&model.fitted)) {
    doc["standardizer"] = standardizer_json(lr->standardizer);
    doc["weights"] = lr->weights;
    doc["converged"] = lr->converged;
    doc["iterations"] = lr->iterations;
  } else if (const auto* svm = std::get_if<SvmModel>(&model.fitted)) {
    doc["standardizer"] = standardizer_json(svm->standardizer);
    doc["support_rows"] = svm->support.rows();
    doc["support_cols"] = svm->support.cols();
    doc["support"] = svm->support.data();
    doc["coef"] = svm->coef;
    doc["rho"] = svm->rho;
    doc["gamma"] = svm->gamma;
    doc["converged"] = svm->converged;
    doc["iterations"] = svm->iterations;
  } else if (const auto* rf = std::get_if<ForestModel>(&model.fitted)) {
    json trees = json::array();
    for (const auto& t : rf->trees) trees.push_back(tree_json(t));
    doc["trees"] = trees;
    doc["importances"] = rf->importances;
  } else {
    const auto& gb = std::get<BoostModel>(model.fitted);
    json trees = json::array();
    for (const auto& t : gb.stages) trees.push_back(tree_json(t));
    doc["f0"] = gb.f0;
    doc["learning_rate"] = gb.learning_rate;
    doc["stages"] = trees;
    doc["importances"] = gb.importances;
  }
  return doc;
}

TrainedModel model_from_json(const json& doc) {
  try {
    if (doc.at("format_version").get<int>() != kModelFormatVersion) {
      throw DataError("unsupported model format version");
    }
    const auto kind = parse_model_kind(doc.at("kind").get<std::string>());
    if (!kind) throw DataError("unknown model kind in model document");
    TrainedModel model;
    model.kind = *kind;
    for (const auto& e : doc.at("hyperparameters")) {
      model.hyperparameters.emplace_back(e.at("name").get<std::string>(), e.at("value").get<double>());
    }
    switch (*kind) {
      case ModelKind::LR: {
        LogisticModel lr;
        lr.standardizer = standardizer_from(doc.at("standardizer"));
        lr.weights = doc.at("weights").get<std::vector<double>>();
        lr.converged = doc.at("converged").get<bool>();
        lr.iterations = doc.at("iterations").get<int>();
        model.fitted = std::move(lr);
        break;
      }
      case ModelKind::SVM: {
        SvmModel svm;
        svm.standardizer = standardizer_from(doc.at("standardizer"));
        svm.support = Matrix(doc.at("support_rows").get<std::size_t>(), doc.at("support_cols").get<std::size_t>(),
                             doc.at("support").get<std::vector<double>>());
        svm.coef = doc.at("coef").get<std::vector<double>>();
        svm.rho = doc.at("rho").get<double>();
        svm.gamma = doc.at("gamma").get<double>();
        svm.converged = doc.at("converged").get<bool>();
        svm.iterations = doc.at("iterations").get<int>();
        model.fitted = std::move(svm);
        break;
      }
      case ModelKind::RF: {
        ForestModel rf;
        for (const auto& t : doc.at("trees")) rf.trees.push_back(tree_from(t));
        rf.importances = doc.at("importances").get<std::vector<double>>();
        model.fitted = std::move(rf);
        break;
      }
      case ModelKind::GB: {
        BoostModel gb;
        gb.f0 = doc.at("f0").get<double>();
        gb.learning_rate = doc.at("learning_rate").get<double>();
        for (const auto& t : doc.at("stages")) gb.stages.push_back(tree_from(t));
        gb.importances = doc.at("importances").get<std::vector<double>>();
        model.fitted = std::move(gb);
        break;
      }
    }
    return model;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed model document: ") + e.what());
  }
}

}  // namespace forage
