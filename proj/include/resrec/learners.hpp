#pragma once

#include <atomic>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "resrec/adaboost.hpp"
#include "resrec/data.hpp"
#include "resrec/error.hpp"
#include "resrec/knn.hpp"
#include "resrec/logreg.hpp"
#include "resrec/tree.hpp"

namespace resrec {

enum class LearnerKind { DecisionTree, KNN, LogRegL1, AdaBoostClassifier, AdaBoostRegressor };

/// Learner kind plus hyperparameters. Fields not used by a kind are ignored.
struct LearnerSpec {
  LearnerKind kind = LearnerKind::DecisionTree;
  int max_depth = -1;
  std::size_t min_leaf = 5;
  int k = 5;
  double l1_strength = 0.01;
  int max_iter = 500;
  double tol = 1e-6;
  int n_estimators = 10;
  double learning_rate = 1.0;
  int base_max_depth = 3;
  std::size_t base_min_leaf = 1;

  static LearnerSpec decision_tree() { return {}; }
  static LearnerSpec knn(int k = 5) {
    LearnerSpec s;
    s.kind = LearnerKind::KNN;
    s.k = k;
    return s;
  }
  static LearnerSpec logreg_l1(double l1 = 0.01) {
    LearnerSpec s;
    s.kind = LearnerKind::LogRegL1;
    s.l1_strength = l1;
    return s;
  }
  static LearnerSpec adaboost(int n_estimators = 10) {
    LearnerSpec s;
    s.kind = LearnerKind::AdaBoostClassifier;
    s.n_estimators = n_estimators;
    return s;
  }
  static LearnerSpec adaboost_regressor(int n_estimators = 10) {
    LearnerSpec s;
    s.kind = LearnerKind::AdaBoostRegressor;
    s.n_estimators = n_estimators;
    return s;
  }

  void validate() const {
    require(k >= 1, ErrorCode::InvalidArgument, "k must be >= 1");
    require(n_estimators >= 1, ErrorCode::InvalidArgument, "n_estimators must be >= 1");
    require(l1_strength >= 0.0, ErrorCode::InvalidArgument, "l1_strength must be >= 0");
    require(min_leaf >= 1 && base_min_leaf >= 1, ErrorCode::InvalidArgument,
            "min_leaf must be >= 1");
    require(max_iter >= 1 && tol >= 0.0 && learning_rate > 0.0, ErrorCode::InvalidArgument,
            "bad optimizer settings");
  }

  TreeParams tree_params() const { return {max_depth, min_leaf}; }
  BoostParams boost_params() const {
    return {n_estimators, learning_rate, {base_max_depth, base_min_leaf}};
  }
  LogisticParams logistic_params() const { return {l1_strength, max_iter, tol}; }

  friend bool operator==(const LearnerSpec&, const LearnerSpec&) = default;
};

inline std::string to_string(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::DecisionTree: return "dtree";
    case LearnerKind::KNN: return "knn";
    case LearnerKind::LogRegL1: return "logreg";
    case LearnerKind::AdaBoostClassifier: return "adaboost";
    case LearnerKind::AdaBoostRegressor: return "adaboost_reg";
  }
  return "dtree";
}

inline LearnerKind parse_learner_kind(std::string_view name) {
  if (name == "dtree") return LearnerKind::DecisionTree;
  if (name == "knn") return LearnerKind::KNN;
  if (name == "logreg") return LearnerKind::LogRegL1;
  if (name == "adaboost") return LearnerKind::AdaBoostClassifier;
  if (name == "adaboost_reg") return LearnerKind::AdaBoostRegressor;
  fail(ErrorCode::Parse, "unknown learner '" + std::string(name) + "'");
}

inline void to_json(nlohmann::json& j, const LearnerSpec& s) {
  j = {{"kind", to_string(s.kind)},
       {"max_depth", s.max_depth},
       {"min_leaf", s.min_leaf},
       {"k", s.k},
       {"l1_strength", s.l1_strength},
       {"max_iter", s.max_iter},
       {"tol", s.tol},
       {"n_estimators", s.n_estimators},
       {"learning_rate", s.learning_rate},
       {"base_max_depth", s.base_max_depth},
       {"base_min_leaf", s.base_min_leaf}};
}

inline void from_json(const nlohmann::json& j, LearnerSpec& s) {
  s.kind = parse_learner_kind(j.at("kind").get<std::string>());
  s.max_depth = j.at("max_depth").get<int>();
  s.min_leaf = j.at("min_leaf").get<std::size_t>();
  s.k = j.at("k").get<int>();
  s.l1_strength = j.at("l1_strength").get<double>();
  s.max_iter = j.at("max_iter").get<int>();
  s.tol = j.at("tol").get<double>();
  s.n_estimators = j.at("n_estimators").get<int>();
  s.learning_rate = j.at("learning_rate").get<double>();
  s.base_max_depth = j.at("base_max_depth").get<int>();
  s.base_min_leaf = j.at("base_min_leaf").get<std::size_t>();
}

/// Model that always returns the same score.
struct ConstantModel {
  double score = 0.5;
};

/// A fitted learner. Immutable; safe to share across threads.
class Model {
 public:
  using Impl = std::variant<DecisionTree, KnnClassifier, LogisticRegression, AdaBoostClassifier,
                            AdaBoostRegressor, ConstantModel>;

  Model() : impl_(ConstantModel{}) {}
  template <typename T>
  Model(T impl, std::size_t dim) : impl_(std::move(impl)), dim_(dim) {}

  const Impl& impl() const { return impl_; }
  std::size_t dim() const { return dim_; }

  /// Score in [0, 1] for classifiers; the regression value for regressors.
  double predict_score(std::span<const double> x) const {
    require(x.size() == dim_, ErrorCode::InvalidArgument, "predict: dimension mismatch");
    return std::visit(
        [&](const auto& m) -> double {
          if constexpr (std::is_same_v<std::decay_t<decltype(m)>, ConstantModel>) {
            return m.score;
          } else {
            return m.predict(x);
          }
        },
        impl_);
  }

  /// 1 iff the score reaches 0.5.
  int predict_label(std::span<const double> x) const { return predict_score(x) >= 0.5 ? 1 : 0; }

 private:
  Impl impl_;
  std::size_t dim_ = 0;
};

/// Counts fits of base classifiers on datasets. Recommendation must not move it.
inline std::atomic<std::uint64_t>& dataset_fit_counter() {
  static std::atomic<std::uint64_t> counter{0};
  return counter;
}

/// Fits on a generic matrix. `y` holds 0/1 for classifiers and real targets
/// for the regressor.
inline Model fit_matrix(const LearnerSpec& spec, MatrixView x, std::span<const double> y) {
  spec.validate();
  require(x.rows >= 1, ErrorCode::InvalidArgument, "cannot fit on an empty dataset");
  switch (spec.kind) {
    case LearnerKind::DecisionTree:
      return {DecisionTree::fit(x, y, TreeTask::Classification, spec.tree_params()), x.cols};
    case LearnerKind::KNN: {
      std::vector<std::uint8_t> labels(y.size());
      for (std::size_t i = 0; i < y.size(); ++i) labels[i] = y[i] >= 0.5 ? 1 : 0;
      return {KnnClassifier::fit(x, labels, spec.k), x.cols};
    }
    case LearnerKind::LogRegL1:
      return {LogisticRegression::fit(x, y, spec.logistic_params()), x.cols};
    case LearnerKind::AdaBoostClassifier:
      return {AdaBoostClassifier::fit(x, y, spec.boost_params()), x.cols};
    case LearnerKind::AdaBoostRegressor:
      return {AdaBoostRegressor::fit(x, y, spec.boost_params()), x.cols};
  }
  fail(ErrorCode::InvalidArgument, "unknown learner kind");
}

inline Model fit(const LearnerSpec& spec, const Dataset& s) {
  dataset_fit_counter().fetch_add(1, std::memory_order_relaxed);
  std::vector<double> y(s.labels().begin(), s.labels().end());
  return fit_matrix(spec, {s.features(), s.size(), s.dim()}, y);
}

inline Model fit_adaboost_classifier(const LearnerSpec& base, int n_estimators, MatrixView x,
                                     std::span<const double> y) {
  LearnerSpec spec = base;
  spec.kind = LearnerKind::AdaBoostClassifier;
  spec.n_estimators = n_estimators;
  return fit_matrix(spec, x, y);
}

inline Model fit_adaboost_regressor(const LearnerSpec& base, int n_estimators, MatrixView x,
                                    std::span<const double> y) {
  LearnerSpec spec = base;
  spec.kind = LearnerKind::AdaBoostRegressor;
  spec.n_estimators = n_estimators;
  return fit_matrix(spec, x, y);
}

// ---------------------------------------------------------------------------
// JSON: trees as nested nodes, ensembles as weighted lists, logistic as arrays.

namespace detail {

inline nlohmann::json tree_node_json(const DecisionTree& t, int n) {
  const auto& node = t.nodes()[static_cast<std::size_t>(n)];
  if (node.is_leaf()) return {{"value", node.value}};
  return {{"feature", node.feature},
          {"threshold", node.threshold},
          {"left", tree_node_json(t, node.left)},
          {"right", tree_node_json(t, node.right)}};
}

inline int tree_node_from_json(const nlohmann::json& j, std::vector<TreeNode>& nodes) {
  const int id = static_cast<int>(nodes.size());
  nodes.emplace_back();
  if (j.contains("value")) {
    nodes.back().value = j.at("value").get<double>();
    return id;
  }
  const int left = tree_node_from_json(j.at("left"), nodes);
  const int right = tree_node_from_json(j.at("right"), nodes);
  auto& node = nodes[static_cast<std::size_t>(id)];
  node.feature = j.at("feature").get<int>();
  node.threshold = j.at("threshold").get<double>();
  node.left = left;
  node.right = right;
  return id;
}

inline nlohmann::json tree_json(const DecisionTree& t) {
  return {{"task", t.task() == TreeTask::Classification ? "classification" : "regression"},
          {"dim", t.dim()},
          {"root", tree_node_json(t, 0)}};
}

inline DecisionTree tree_from_json(const nlohmann::json& j) {
  std::vector<TreeNode> nodes;
  tree_node_from_json(j.at("root"), nodes);
  const auto task = j.at("task").get<std::string>() == "classification" ? TreeTask::Classification
                                                                        : TreeTask::Regression;
  return DecisionTree(task, j.at("dim").get<std::size_t>(), std::move(nodes));
}

template <typename Members>
nlohmann::json members_json(const Members& members) {
  auto arr = nlohmann::json::array();
  for (const auto& [tree, weight] : members) {
    arr.push_back({{"weight", weight}, {"tree", tree_json(tree)}});
  }
  return arr;
}

inline std::vector<std::pair<DecisionTree, double>> members_from_json(const nlohmann::json& j) {
  std::vector<std::pair<DecisionTree, double>> out;
  for (const auto& m : j) out.emplace_back(tree_from_json(m.at("tree")), m.at("weight").get<double>());
  return out;
}

}  // namespace detail

inline constexpr int kModelFormatVersion = 1;

inline nlohmann::json model_to_json(const Model& model) {
  nlohmann::json j{{"format", "resrec-model"}, {"version", kModelFormatVersion}, {"dim", model.dim()}};
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, DecisionTree>) {
          j["kind"] = "decision_tree";
          j["tree"] = detail::tree_json(m);
        } else if constexpr (std::is_same_v<T, KnnClassifier>) {
          j["kind"] = "knn";
          j["k"] = m.k();
          j["rows"] = m.rows();
          j["labels"] = m.labels();
        } else if constexpr (std::is_same_v<T, LogisticRegression>) {
          j["kind"] = "logreg_l1";
          j["coef"] = m.coef();
          j["intercept"] = m.intercept();
        } else if constexpr (std::is_same_v<T, AdaBoostClassifier>) {
          j["kind"] = "adaboost_classifier";
          j["members"] = detail::members_json(m.members());
        } else if constexpr (std::is_same_v<T, AdaBoostRegressor>) {
          j["kind"] = "adaboost_regressor";
          j["members"] = detail::members_json(m.members());
        } else {
          j["kind"] = "constant";
          j["score"] = m.score;
        }
      },
      model.impl());
  return j;
}

inline Model model_from_json(const nlohmann::json& j) {
  require(j.value("format", "") == "resrec-model", ErrorCode::Parse, "not a model document");
  require(j.value("version", 0) == kModelFormatVersion, ErrorCode::Parse,
          "unsupported model version");
  const auto dim = j.at("dim").get<std::size_t>();
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "decision_tree") return {detail::tree_from_json(j.at("tree")), dim};
  if (kind == "knn") {
    return {KnnClassifier(j.at("k").get<int>(), dim, j.at("rows").get<std::vector<double>>(),
                          j.at("labels").get<std::vector<std::uint8_t>>()),
            dim};
  }
  if (kind == "logreg_l1") {
    return {LogisticRegression(j.at("coef").get<std::vector<double>>(),
                               j.at("intercept").get<double>()),
            dim};
  }
  if (kind == "adaboost_classifier") {
    return {AdaBoostClassifier(detail::members_from_json(j.at("members"))), dim};
  }
  if (kind == "adaboost_regressor") {
    return {AdaBoostRegressor(detail::members_from_json(j.at("members"))), dim};
  }
  if (kind == "constant") return {ConstantModel{j.at("score").get<double>()}, dim};
  fail(ErrorCode::Parse, "unknown model kind '" + kind + "'");
}

}  // namespace resrec
