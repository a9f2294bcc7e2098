#pragma once

// Uniform train/score contract over all classifiers. Labels: 1 = genuine, 0 = impostor.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "touchauth/classifiers/linear.hpp"
#include "touchauth/classifiers/mlp.hpp"
#include "touchauth/classifiers/standardize.hpp"
#include "touchauth/classifiers/svm.hpp"
#include "touchauth/classifiers/tree.hpp"
#include "touchauth/error.hpp"
#include "touchauth/matrix.hpp"

namespace touchauth {

enum class ClassifierKind {
  SvmRbf,
  RandomForest,
  NeuralNet,
  GaussianNb,
  Knn,
  DecisionTree,
  LogisticRegression,
  OcSvmRbf,
  IsolationForest,
  Ensemble,
};

inline constexpr std::pair<ClassifierKind, std::string_view> kClassifierNames[] = {
    {ClassifierKind::SvmRbf, "svm_rbf"},
    {ClassifierKind::RandomForest, "random_forest"},
    {ClassifierKind::NeuralNet, "neural_net"},
    {ClassifierKind::GaussianNb, "gaussian_nb"},
    {ClassifierKind::Knn, "knn"},
    {ClassifierKind::DecisionTree, "decision_tree"},
    {ClassifierKind::LogisticRegression, "logistic_regression"},
    {ClassifierKind::OcSvmRbf, "oc_svm_rbf"},
    {ClassifierKind::IsolationForest, "isolation_forest"},
    {ClassifierKind::Ensemble, "ensemble"},
};

inline std::string_view to_string(ClassifierKind k) {
  for (const auto& [kind, name] : kClassifierNames)
    if (kind == k) return name;
  return "unknown";
}

inline ClassifierKind parse_classifier_kind(std::string_view name) {
  for (const auto& [kind, n] : kClassifierNames)
    if (n == name) return kind;
  throw Error(ErrorKind::Config, "unknown classifier '" + std::string(name) + "'");
}

inline bool is_one_class(ClassifierKind k) { return k == ClassifierKind::OcSvmRbf || k == ClassifierKind::IsolationForest; }

struct ClassifierSpec {
  ClassifierKind kind = ClassifierKind::Ensemble;
  SvmParams svm{};
  ForestParams forest{};
  MlpParams mlp{};
  GaussianNbParams nb{};
  KnnParams knn{};
  TreeParams tree{};
  LogisticRegressionParams logistic{};
  OneClassSvmParams oc_svm{};
  IsolationForestParams iforest{};
  std::vector<ClassifierSpec> members;  // ensemble only
  std::uint64_t seed = 0;

  static ClassifierSpec defaults(ClassifierKind kind, std::uint64_t seed = 0) {
    ClassifierSpec s;
    s.kind = kind;
    s.seed = seed;
    if (kind == ClassifierKind::Ensemble)
      for (auto m : {ClassifierKind::SvmRbf, ClassifierKind::RandomForest, ClassifierKind::NeuralNet})
        s.members.push_back(defaults(m, seed));
    return s;
  }

  std::string name() const { return std::string(to_string(kind)); }

  /// Accepts a bare name or {"kind": name, <overrides>}.
  static ClassifierSpec from_json(const nlohmann::json& j, std::uint64_t seed = 0) {
    if (j.is_string()) return defaults(parse_classifier_kind(j.get<std::string>()), seed);
    if (!j.is_object() || !j.contains("kind")) throw Error(ErrorKind::Config, "classifier must be a name or an object with 'kind'");
    ClassifierSpec s = defaults(parse_classifier_kind(j.at("kind").get<std::string>()), j.value("seed", seed));
    try {
      switch (s.kind) {
        case ClassifierKind::SvmRbf:
          s.svm.C = j.value("C", s.svm.C);
          s.svm.gamma = gamma_from(j, s.svm.gamma);
          s.svm.platt_folds = j.value("platt_folds", s.svm.platt_folds);
          break;
        case ClassifierKind::RandomForest:
          s.forest.trees = j.value("trees", s.forest.trees);
          s.forest.max_depth = j.value("max_depth", s.forest.max_depth);
          break;
        case ClassifierKind::NeuralNet:
          s.mlp.hidden = j.value("hidden", s.mlp.hidden);
          s.mlp.dropout = j.value("dropout", s.mlp.dropout);
          s.mlp.batch_norm = j.value("batch_norm", s.mlp.batch_norm);
          s.mlp.epochs = j.value("epochs", s.mlp.epochs);
          s.mlp.batch_size = j.value("batch_size", s.mlp.batch_size);
          s.mlp.adam.learning_rate = j.value("learning_rate", s.mlp.adam.learning_rate);
          break;
        case ClassifierKind::GaussianNb:
          s.nb.var_smoothing = j.value("var_smoothing", s.nb.var_smoothing);
          break;
        case ClassifierKind::Knn:
          s.knn.k = j.value("k", s.knn.k);
          break;
        case ClassifierKind::DecisionTree:
          s.tree.max_depth = j.contains("max_depth") && !j.at("max_depth").is_null() ? j.at("max_depth").get<int>() : -1;
          break;
        case ClassifierKind::LogisticRegression:
          s.logistic.C = j.value("C", s.logistic.C);
          s.logistic.max_iter = j.value("max_iter", s.logistic.max_iter);
          break;
        case ClassifierKind::OcSvmRbf:
          s.oc_svm.nu = j.value("nu", s.oc_svm.nu);
          s.oc_svm.gamma = gamma_from(j, s.oc_svm.gamma);
          break;
        case ClassifierKind::IsolationForest:
          s.iforest.estimators = j.value("estimators", s.iforest.estimators);
          s.iforest.max_samples = j.value("max_samples", s.iforest.max_samples);
          break;
        case ClassifierKind::Ensemble:
          if (j.contains("members")) {
            s.members.clear();
            for (const auto& m : j.at("members")) s.members.push_back(from_json(m, s.seed));
          }
          break;
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::Config, std::string("bad classifier override: ") + e.what());
    }
    if (s.kind == ClassifierKind::Ensemble && s.members.empty())
      throw Error(ErrorKind::Config, "ensemble needs at least one member");
    return s;
  }

  nlohmann::json to_json() const {
    nlohmann::json j{{"kind", name()}, {"seed", seed}};
    switch (kind) {
      case ClassifierKind::SvmRbf:
        j["C"] = svm.C;
        j["gamma"] = svm.gamma > 0 ? nlohmann::json(svm.gamma) : nlohmann::json("scale");
        j["platt_folds"] = svm.platt_folds;
        break;
      case ClassifierKind::RandomForest:
        j["trees"] = forest.trees;
        j["max_depth"] = forest.max_depth;
        break;
      case ClassifierKind::NeuralNet:
        j["hidden"] = mlp.hidden;
        j["dropout"] = mlp.dropout;
        j["batch_norm"] = mlp.batch_norm;
        j["epochs"] = mlp.epochs;
        j["batch_size"] = mlp.batch_size;
        j["learning_rate"] = mlp.adam.learning_rate;
        break;
      case ClassifierKind::GaussianNb: j["var_smoothing"] = nb.var_smoothing; break;
      case ClassifierKind::Knn: j["k"] = knn.k; break;
      case ClassifierKind::DecisionTree:
        j["max_depth"] = tree.max_depth < 0 ? nlohmann::json(nullptr) : nlohmann::json(tree.max_depth);
        break;
      case ClassifierKind::LogisticRegression:
        j["C"] = logistic.C;
        j["max_iter"] = logistic.max_iter;
        break;
      case ClassifierKind::OcSvmRbf:
        j["nu"] = oc_svm.nu;
        j["gamma"] = oc_svm.gamma > 0 ? nlohmann::json(oc_svm.gamma) : nlohmann::json("scale");
        break;
      case ClassifierKind::IsolationForest:
        j["estimators"] = iforest.estimators;
        j["max_samples"] = iforest.max_samples;
        break;
      case ClassifierKind::Ensemble: {
        auto arr = nlohmann::json::array();
        for (const auto& m : members) arr.push_back(m.to_json());
        j["members"] = arr;
        break;
      }
    }
    return j;
  }

 private:
  static double gamma_from(const nlohmann::json& j, double fallback) {
    if (!j.contains("gamma")) return fallback;
    const auto& g = j.at("gamma");
    if (g.is_string() && g.get<std::string>() == "scale") return 0.0;
    return g.get<double>();
  }
};

class TrainedModel;

namespace detail {
struct OneClassState {
  double lo = 0.0, hi = 0.0;  // raw-score bounds on the training rows
};
}  // namespace detail

/// Fitted scorer. Immutable after training; score() is safe to call concurrently.
class TrainedModel {
 public:
  using Fitted = std::variant<std::monostate, BinarySvm, RandomForest, Mlp, GaussianNb, Knn, DecisionTree,
                              LogisticRegression, OneClassSvm, IsolationForest>;

  const ClassifierSpec& spec() const { return spec_; }
  std::size_t input_dim() const { return dim_; }
  std::size_t training_rows() const { return rows_; }
  std::size_t training_genuine() const { return genuine_; }
  const std::vector<TrainedModel>& members() const { return members_; }

  /// Two-class kinds need both labels; one-class kinds use only label-1 rows (all
  /// rows when labels are absent).
  static TrainedModel train(const ClassifierSpec& spec, const Matrix& X, const std::optional<std::vector<int>>& y) {
    if (X.rows() == 0) throw Error(ErrorKind::EmptyMatrix, "no training rows");
    if (y && y->size() != X.rows()) throw Error(ErrorKind::DimensionMismatch, "label count differs from row count");
    TrainedModel m;
    m.spec_ = spec;
    m.dim_ = X.cols();
    m.rows_ = X.rows();
    m.genuine_ = y ? static_cast<std::size_t>(std::count_if(y->begin(), y->end(), [](int v) { return v > 0; }))
                   : X.rows();

    if (spec.kind == ClassifierKind::Ensemble) {
      for (const auto& member : spec.members) m.members_.push_back(train(member, X, y));
      return m;
    }

    if (is_one_class(spec.kind)) {
      Matrix genuine;
      for (std::size_t r = 0; r < X.rows(); ++r)
        if (!y || (*y)[r] > 0) genuine.append_row(X.row(r));
      if (genuine.rows() < 2) throw Error(ErrorKind::TooFewSamples, "one-class model needs at least 2 genuine rows");
      m.scaler_ = Standardizer::fit(genuine);
      const Matrix Z = m.scaler_.transform(genuine);
      if (spec.kind == ClassifierKind::OcSvmRbf)
        m.fitted_ = OneClassSvm::train(Z, spec.oc_svm);
      else
        m.fitted_ = IsolationForest::train(Z, spec.iforest, spec.seed);
      m.bounds_.lo = std::numeric_limits<double>::infinity();
      m.bounds_.hi = -std::numeric_limits<double>::infinity();
      for (std::size_t r = 0; r < Z.rows(); ++r) {
        const double raw = m.raw_one_class(Z.row(r));
        m.bounds_.lo = std::min(m.bounds_.lo, raw);
        m.bounds_.hi = std::max(m.bounds_.hi, raw);
      }
      return m;
    }

    if (!y) throw Error(ErrorKind::SingleClassForBinarySpec, "binary classifier needs labels");
    if (m.genuine_ == 0 || m.genuine_ == X.rows())
      throw Error(ErrorKind::SingleClassForBinarySpec, "binary classifier needs both labels present");
    if (m.genuine_ < 2) throw Error(ErrorKind::TooFewSamples, "fewer than 2 genuine rows");
    std::vector<int> labels(y->size());
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = (*y)[i] > 0 ? 1 : 0;

    m.scaler_ = Standardizer::fit(X);
    const Matrix Z = m.scaler_.transform(X);
    std::mt19937_64 rng(spec.seed);
    switch (spec.kind) {
      case ClassifierKind::SvmRbf: m.fitted_ = BinarySvm::train(Z, labels, spec.svm, spec.seed); break;
      case ClassifierKind::RandomForest: m.fitted_ = RandomForest::train(Z, labels, spec.forest, spec.seed); break;
      case ClassifierKind::NeuralNet: m.fitted_ = Mlp::train(Z, labels, spec.mlp, spec.seed); break;
      case ClassifierKind::GaussianNb: m.fitted_ = GaussianNb::train(Z, labels, spec.nb); break;
      case ClassifierKind::Knn: m.fitted_ = Knn::train(Z, labels, spec.knn); break;
      case ClassifierKind::DecisionTree: m.fitted_ = DecisionTree::train(Z, labels, spec.tree, rng); break;
      case ClassifierKind::LogisticRegression:
        m.fitted_ = LogisticRegression::train(Z, labels, spec.logistic);
        break;
      default: break;
    }
    return m;
  }

  /// Scores in [0,1], higher = more genuine.
  std::vector<double> score(const Matrix& X) const {
    if (X.rows() > 0 && X.cols() != dim_)
      throw Error(ErrorKind::DimensionMismatch,
                  "expected " + std::to_string(dim_) + " columns, got " + std::to_string(X.cols()));
    if (spec_.kind == ClassifierKind::Ensemble) {
      std::vector<double> total(X.rows(), 0.0);
      for (const auto& member : members_) {
        const auto s = member.score(X);
        for (std::size_t i = 0; i < s.size(); ++i) total[i] += s[i];
      }
      for (auto& t : total) t /= static_cast<double>(members_.size());
      return total;
    }
    const Matrix Z = scaler_.transform(X);
    std::vector<double> out(Z.rows());
    if (const auto* nn = std::get_if<Mlp>(&fitted_)) {
      out = nn->predict(Z);
    } else {
      for (std::size_t r = 0; r < Z.rows(); ++r) out[r] = score_row(Z.row(r));
    }
    for (auto& v : out) v = std::isnan(v) ? 0.0 : std::clamp(v, 0.0, 1.0);
    return out;
  }

  nlohmann::json to_json() const {
    nlohmann::json j{{"format", "touchauth-model"}, {"version", 1}, {"spec", spec_.to_json()},
                     {"dim", dim_}, {"rows", rows_}, {"genuine", genuine_}};
    if (spec_.kind == ClassifierKind::Ensemble) {
      auto arr = nlohmann::json::array();
      for (const auto& m : members_) arr.push_back(m.to_json());
      j["members"] = arr;
      return j;
    }
    j["scaler"] = scaler_.to_json();
    std::visit(
        [&](const auto& f) {
          if constexpr (!std::is_same_v<std::decay_t<decltype(f)>, std::monostate>) j["fitted"] = f.to_json();
        },
        fitted_);
    if (is_one_class(spec_.kind)) j["bounds"] = {bounds_.lo, bounds_.hi};
    return j;
  }

  static TrainedModel from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "touchauth-model") throw Error(ErrorKind::Config, "not a model file");
    TrainedModel m;
    m.spec_ = ClassifierSpec::from_json(j.at("spec"));
    m.dim_ = j.at("dim").get<std::size_t>();
    m.rows_ = j.at("rows").get<std::size_t>();
    m.genuine_ = j.at("genuine").get<std::size_t>();
    if (m.spec_.kind == ClassifierKind::Ensemble) {
      for (const auto& mj : j.at("members")) m.members_.push_back(from_json(mj));
      return m;
    }
    m.scaler_ = Standardizer::from_json(j.at("scaler"));
    const auto& f = j.at("fitted");
    switch (m.spec_.kind) {
      case ClassifierKind::SvmRbf: m.fitted_ = BinarySvm::from_json(f); break;
      case ClassifierKind::RandomForest: m.fitted_ = RandomForest::from_json(f); break;
      case ClassifierKind::NeuralNet: m.fitted_ = Mlp::from_json(f); break;
      case ClassifierKind::GaussianNb: m.fitted_ = GaussianNb::from_json(f); break;
      case ClassifierKind::Knn: m.fitted_ = Knn::from_json(f); break;
      case ClassifierKind::DecisionTree: m.fitted_ = DecisionTree::from_json(f); break;
      case ClassifierKind::LogisticRegression: m.fitted_ = LogisticRegression::from_json(f); break;
      case ClassifierKind::OcSvmRbf: m.fitted_ = OneClassSvm::from_json(f); break;
      case ClassifierKind::IsolationForest: m.fitted_ = IsolationForest::from_json(f); break;
      case ClassifierKind::Ensemble: break;
    }
    if (j.contains("bounds")) {
      m.bounds_.lo = j.at("bounds").at(0).get<double>();
      m.bounds_.hi = j.at("bounds").at(1).get<double>();
    }
    return m;
  }

 private:
  double raw_one_class(std::span<const double> z) const {
    if (const auto* oc = std::get_if<OneClassSvm>(&fitted_)) return oc->decision(z);
    return -std::get<IsolationForest>(fitted_).anomaly(z);
  }

  double score_row(std::span<const double> z) const {
    switch (spec_.kind) {
      case ClassifierKind::SvmRbf: return std::get<BinarySvm>(fitted_).score(z);
      case ClassifierKind::RandomForest: return std::get<RandomForest>(fitted_).score(z);
      case ClassifierKind::GaussianNb: return std::get<GaussianNb>(fitted_).score(z);
      case ClassifierKind::Knn: return std::get<Knn>(fitted_).score(z);
      case ClassifierKind::DecisionTree: return std::get<DecisionTree>(fitted_).predict(z);
      case ClassifierKind::LogisticRegression: return std::get<LogisticRegression>(fitted_).score(z);
      case ClassifierKind::OcSvmRbf:
      case ClassifierKind::IsolationForest: {
        const double raw = raw_one_class(z);
        if (!(bounds_.hi > bounds_.lo)) return raw >= bounds_.lo ? 1.0 : 0.0;
        return std::clamp((raw - bounds_.lo) / (bounds_.hi - bounds_.lo), 0.0, 1.0);
      }
      default: return 0.0;
    }
  }

  ClassifierSpec spec_;
  std::size_t dim_ = 0, rows_ = 0, genuine_ = 0;
  Standardizer scaler_;
  Fitted fitted_;
  detail::OneClassState bounds_;
  std::vector<TrainedModel> members_;
};

}  // namespace touchauth
