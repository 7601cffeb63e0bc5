#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "resrec/error.hpp"
#include "resrec/tree.hpp"

namespace resrec {

struct LogisticParams {
  double l1_strength = 0.01;
  int max_iter = 500;
  double tol = 1e-6;
};

inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// log(1 + exp(z)) without overflow.
inline double softplus(double z) {
  return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

/// Logistic regression minimizing mean log-loss + l1 * ||coef||_1 (intercept
/// unpenalized) by proximal gradient descent with backtracking. Each accepted
/// step satisfies the sufficient-decrease bound, so the objective never rises.
class LogisticRegression {
 public:
  LogisticRegression() = default;
  LogisticRegression(std::vector<double> coef, double intercept)
      : coef_(std::move(coef)), intercept_(intercept) {}

  /// Mean log-loss of (coef, intercept) on (x, y).
  static double smooth_loss(MatrixView x, std::span<const double> y,
                            std::span<const double> coef, double intercept) {
    double loss = 0.0;
    for (std::size_t i = 0; i < x.rows; ++i) {
      const double z = linear(x.row(i), coef, intercept);
      loss += softplus(z) - y[i] * z;
    }
    return loss / static_cast<double>(x.rows);
  }

  /// Gradient of smooth_loss; the last entry is d/d intercept.
  static std::vector<double> smooth_gradient(MatrixView x, std::span<const double> y,
                                             std::span<const double> coef, double intercept) {
    std::vector<double> g(x.cols + 1, 0.0);
    for (std::size_t i = 0; i < x.rows; ++i) {
      auto r = x.row(i);
      const double resid = sigmoid(linear(r, coef, intercept)) - y[i];
      for (std::size_t j = 0; j < x.cols; ++j) g[j] += resid * r[j];
      g[x.cols] += resid;
    }
    for (auto& v : g) v /= static_cast<double>(x.rows);
    return g;
  }

  static double objective(MatrixView x, std::span<const double> y, std::span<const double> coef,
                          double intercept, double l1) {
    double norm = 0.0;
    for (double c : coef) norm += std::abs(c);
    return smooth_loss(x, y, coef, intercept) + l1 * norm;
  }

  /// `history`, if given, receives the objective after every accepted step
  /// (first entry: the starting point).
  static LogisticRegression fit(MatrixView x, std::span<const double> y,
                                const LogisticParams& params,
                                std::vector<double>* history = nullptr) {
    require(x.rows >= 1 && y.size() == x.rows, ErrorCode::InvalidArgument,
            "logistic fit: empty input or size mismatch");
    require(params.l1_strength >= 0.0, ErrorCode::InvalidArgument, "l1 strength must be >= 0");
    const std::size_t d = x.cols;
    std::vector<double> coef(d, 0.0), next(d);
    double intercept = 0.0;
    double f = smooth_loss(x, y, coef, intercept);
    double obj = f;
    if (history) history->push_back(obj);
    double step = 1.0;

    for (int it = 0; it < params.max_iter; ++it) {
      const auto g = smooth_gradient(x, y, coef, intercept);
      double f_next = 0.0, next_intercept = 0.0;
      bool accepted = false;
      for (int bt = 0; bt < 60; ++bt) {
        const double shrink = step * params.l1_strength;
        for (std::size_t j = 0; j < d; ++j) {
          const double v = coef[j] - step * g[j];
          next[j] = v > shrink ? v - shrink : (v < -shrink ? v + shrink : 0.0);
        }
        next_intercept = intercept - step * g[d];
        f_next = smooth_loss(x, y, next, next_intercept);
        double lin = (next_intercept - intercept) * g[d];
        double quad = (next_intercept - intercept) * (next_intercept - intercept);
        for (std::size_t j = 0; j < d; ++j) {
          const double delta = next[j] - coef[j];
          lin += delta * g[j];
          quad += delta * delta;
        }
        if (f_next <= f + lin + quad / (2.0 * step) + 1e-15 * std::abs(f)) {
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      if (!accepted) break;

      double norm = 0.0;
      for (double c : next) norm += std::abs(c);
      const double obj_next = f_next + params.l1_strength * norm;
      if (obj_next > obj) break;  // only reachable through rounding
      coef.swap(next);
      intercept = next_intercept;
      f = f_next;
      const double change = obj - obj_next;
      obj = obj_next;
      if (history) history->push_back(obj);
      if (change <= params.tol * std::max(1.0, std::abs(obj))) break;
      step *= 2.0;
    }
    return LogisticRegression(std::move(coef), intercept);
  }

  double predict(std::span<const double> row) const {
    require(row.size() == coef_.size(), ErrorCode::InvalidArgument,
            "logistic predict: dimension mismatch");
    return sigmoid(linear(row, coef_, intercept_));
  }

  const std::vector<double>& coef() const { return coef_; }
  double intercept() const { return intercept_; }

 private:
  static double linear(std::span<const double> r, std::span<const double> coef, double b) {
    double z = b;
    for (std::size_t j = 0; j < coef.size(); ++j) z += coef[j] * r[j];
    return z;
  }

  std::vector<double> coef_;
  double intercept_ = 0.0;
};

}  // namespace resrec
