#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "resrec/error.hpp"
#include "resrec/tree.hpp"

namespace resrec {

struct BoostParams {
  int n_estimators = 10;
  double learning_rate = 1.0;
  TreeParams base{3, 1};
};

/// Estimator weight used when a round fits the training set perfectly.
inline constexpr double kMaxEstimatorWeight = 23.025850929940457;  // ln((1 - 1e-10) / 1e-10)

/// Two-class discrete AdaBoost (SAMME) over classification trees.
/// Score = sum of weights of members voting 1 / total weight.
class AdaBoostClassifier {
 public:
  using Member = std::pair<DecisionTree, double>;

  AdaBoostClassifier() = default;
  explicit AdaBoostClassifier(std::vector<Member> members) : members_(std::move(members)) {}

  static AdaBoostClassifier fit(MatrixView x, std::span<const double> y, const BoostParams& params) {
    require(x.rows >= 1 && y.size() == x.rows, ErrorCode::InvalidArgument,
            "AdaBoost fit: empty input or size mismatch");
    require(params.n_estimators >= 1, ErrorCode::InvalidArgument, "n_estimators must be >= 1");
    const std::size_t n = x.rows;
    const std::vector<double> uniform(n, 1.0 / static_cast<double>(n));
    std::vector<double> w = uniform;
    std::vector<Member> members;
    std::vector<std::uint8_t> miss(n);
    bool restarted = false;
    DecisionTree first_discarded;
    bool have_discarded = false;

    for (int round = 0; round < params.n_estimators; ++round) {
      auto tree = DecisionTree::fit(x, y, w, TreeTask::Classification, params.base);
      double err = 0.0, total = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double pred = tree.predict(x.row(i)) >= 0.5 ? 1.0 : 0.0;
        miss[i] = pred != y[i];
        total += w[i];
        if (miss[i]) err += w[i];
      }
      err /= total;

      if (err <= 0.0) {
        members.emplace_back(std::move(tree), kMaxEstimatorWeight * params.learning_rate);
        break;
      }
      if (err >= 0.5) {
        if (!have_discarded) {
          first_discarded = std::move(tree);
          have_discarded = true;
        }
        if (restarted) break;
        restarted = true;
        w = uniform;
        continue;
      }
      const double alpha = params.learning_rate * std::log((1.0 - err) / err);
      members.emplace_back(std::move(tree), alpha);
      double sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (miss[i]) w[i] *= std::exp(alpha);
        sum += w[i];
      }
      for (auto& wi : w) wi /= sum;
    }
    if (members.empty()) members.emplace_back(std::move(first_discarded), 1.0);
    return AdaBoostClassifier(std::move(members));
  }

  double predict(std::span<const double> row) const {
    double vote = 0.0, total = 0.0;
    for (const auto& [tree, alpha] : members_) {
      if (tree.predict(row) >= 0.5) vote += alpha;
      total += alpha;
    }
    return total > 0.0 ? vote / total : 0.0;
  }

  const std::vector<Member>& members() const { return members_; }

 private:
  std::vector<Member> members_;
};

/// AdaBoost.R2 (linear loss) over regression trees fit on sample weights.
/// Prediction is the weighted median of member predictions.
class AdaBoostRegressor {
 public:
  using Member = std::pair<DecisionTree, double>;

  AdaBoostRegressor() = default;
  explicit AdaBoostRegressor(std::vector<Member> members) : members_(std::move(members)) {}

  static AdaBoostRegressor fit(MatrixView x, std::span<const double> y, const BoostParams& params) {
    require(x.rows >= 1 && y.size() == x.rows, ErrorCode::InvalidArgument,
            "AdaBoost.R2 fit: empty input or size mismatch");
    require(params.n_estimators >= 1, ErrorCode::InvalidArgument, "n_estimators must be >= 1");
    const std::size_t n = x.rows;
    std::vector<double> w(n, 1.0 / static_cast<double>(n));
    std::vector<double> err(n);
    std::vector<Member> members;

    for (int round = 0; round < params.n_estimators; ++round) {
      auto tree = DecisionTree::fit(x, y, w, TreeTask::Regression, params.base);
      double max_err = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        err[i] = std::abs(tree.predict(x.row(i)) - y[i]);
        max_err = std::max(max_err, err[i]);
      }
      if (max_err <= 0.0) {
        members.emplace_back(std::move(tree), 1.0);
        break;
      }
      double avg_loss = 0.0, total = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        avg_loss += w[i] * err[i] / max_err;
        total += w[i];
      }
      avg_loss /= total;
      if (avg_loss >= 0.5) {
        if (members.empty()) members.emplace_back(std::move(tree), 1.0);
        break;
      }
      const double beta = avg_loss / (1.0 - avg_loss);
      members.emplace_back(std::move(tree), params.learning_rate * std::log(1.0 / beta));
      double sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        w[i] *= std::pow(beta, params.learning_rate * (1.0 - err[i] / max_err));
        sum += w[i];
      }
      if (!(sum > 0.0)) break;
      for (auto& wi : w) wi /= sum;
    }
    return AdaBoostRegressor(std::move(members));
  }

  double predict(std::span<const double> row) const {
    std::vector<std::pair<double, double>> preds;
    preds.reserve(members_.size());
    double total = 0.0;
    for (const auto& [tree, weight] : members_) {
      preds.emplace_back(tree.predict(row), weight);
      total += weight;
    }
    std::sort(preds.begin(), preds.end());
    double cum = 0.0;
    for (const auto& [value, weight] : preds) {
      cum += weight;
      if (cum >= 0.5 * total) return value;
    }
    return preds.back().first;
  }

  const std::vector<Member>& members() const { return members_; }

 private:
  std::vector<Member> members_;
};

}  // namespace resrec
