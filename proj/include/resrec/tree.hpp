#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "resrec/error.hpp"

namespace resrec {

/// Non-owning row-major matrix view.
struct MatrixView {
  std::span<const double> data;
  std::size_t rows = 0;
  std::size_t cols = 0;

  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
  std::span<const double> row(std::size_t i) const { return data.subspan(i * cols, cols); }
};

enum class TreeTask { Classification, Regression };

struct TreeParams {
  int max_depth = -1;  // < 0: unlimited
  std::size_t min_leaf = 5;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  /// Leaf prediction: weighted class-1 fraction, or weighted mean target.
  double value = 0.0;
  /// Weighted Gini (classification) or weighted variance (regression).
  double impurity = 0.0;
  double weight = 0.0;
  std::size_t samples = 0;

  bool is_leaf() const { return feature < 0; }
};

/// CART tree grown on sample weights. Splits maximize the weighted impurity
/// decrease; x[feature] <= threshold goes left. Equal-gain candidates resolve to
/// the lowest feature index, then the lowest threshold.
class DecisionTree {
 public:
  DecisionTree() = default;
  DecisionTree(TreeTask task, std::size_t dim, std::vector<TreeNode> nodes)
      : task_(task), dim_(dim), nodes_(std::move(nodes)) {}

  static DecisionTree fit(MatrixView x, std::span<const double> y, std::span<const double> w,
                          TreeTask task, const TreeParams& params) {
    require(x.rows >= 1 && y.size() == x.rows && w.size() == x.rows, ErrorCode::InvalidArgument,
            "tree fit: empty input or size mismatch");
    Builder b{x, y, w, task, params, {}, {}, {}};
    b.presort();
    b.grow(0, x.rows, 0);
    return DecisionTree(task, x.cols, std::move(b.nodes));
  }

  static DecisionTree fit(MatrixView x, std::span<const double> y, TreeTask task,
                          const TreeParams& params) {
    std::vector<double> w(x.rows, 1.0);
    return fit(x, y, w, task, params);
  }

  double predict(std::span<const double> row) const {
    require(row.size() == dim_, ErrorCode::InvalidArgument, "tree predict: dimension mismatch");
    int n = 0;
    while (!nodes_[static_cast<std::size_t>(n)].is_leaf()) {
      const auto& node = nodes_[static_cast<std::size_t>(n)];
      n = row[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right;
    }
    return nodes_[static_cast<std::size_t>(n)].value;
  }

  TreeTask task() const { return task_; }
  std::size_t dim() const { return dim_; }
  const std::vector<TreeNode>& nodes() const { return nodes_; }

  int depth() const { return depth_from(0); }

 private:
  struct Builder {
    MatrixView x;
    std::span<const double> y;
    std::span<const double> w;
    TreeTask task;
    TreeParams params;
    std::vector<TreeNode> nodes;
    // sorted[j] holds sample ids; each node owns the same [lo, hi) slice of
    // every feature's array, sorted by that feature.
    std::vector<std::vector<std::uint32_t>> sorted;
    std::vector<std::uint8_t> goes_left;

    void presort() {
      sorted.assign(x.cols, std::vector<std::uint32_t>(x.rows));
      for (std::size_t j = 0; j < x.cols; ++j) {
        auto& s = sorted[j];
        std::iota(s.begin(), s.end(), 0u);
        std::stable_sort(s.begin(), s.end(),
                         [&](std::uint32_t a, std::uint32_t b) { return x(a, j) < x(b, j); });
      }
      goes_left.assign(x.rows, 0);
    }

    // Sufficient statistics: total weight, sum w*y, sum w*y^2.
    struct Stats {
      double w = 0, wy = 0, wyy = 0;
      void add(double wi, double yi) {
        w += wi;
        wy += wi * yi;
        wyy += wi * yi * yi;
      }
    };

    // Weight times impurity. Classification uses Gini with y in {0,1}.
    double weighted_impurity(const Stats& s) const {
      if (s.w <= 0) return 0.0;
      if (task == TreeTask::Classification) {
        const double w1 = s.wy, w0 = s.w - s.wy;
        return s.w - (w1 * w1 + w0 * w0) / s.w;
      }
      return std::max(0.0, s.wyy - s.wy * s.wy / s.w);
    }

    int grow(std::size_t lo, std::size_t hi, int depth) {
      const int id = static_cast<int>(nodes.size());
      nodes.emplace_back();
      Stats total;
      const auto& any = sorted[0];
      for (std::size_t p = lo; p < hi; ++p) total.add(w[any[p]], y[any[p]]);
      {
        auto& node = nodes.back();
        node.samples = hi - lo;
        node.weight = total.w;
        node.value = total.w > 0 ? total.wy / total.w : 0.0;
        node.impurity = total.w > 0 ? weighted_impurity(total) / total.w : 0.0;
      }

      const std::size_t n = hi - lo;
      const double parent = weighted_impurity(total);
      const bool depth_ok = params.max_depth < 0 || depth < params.max_depth;
      const std::size_t min_leaf = std::max<std::size_t>(1, params.min_leaf);
      if (!depth_ok || n < 2 * min_leaf || parent <= 1e-12 * std::max(1.0, total.w)) return id;

      int best_feature = -1;
      std::size_t best_pos = 0;
      double best_children = parent;
      for (std::size_t j = 0; j < x.cols; ++j) {
        const auto& s = sorted[j];
        Stats left;
        for (std::size_t p = lo; p + 1 < hi; ++p) {
          left.add(w[s[p]], y[s[p]]);
          const std::size_t n_left = p + 1 - lo;
          if (n_left < min_leaf) continue;
          if (n - n_left < min_leaf) break;
          if (!(x(s[p], j) < x(s[p + 1], j))) continue;
          Stats right{total.w - left.w, total.wy - left.wy, total.wyy - left.wyy};
          const double children = weighted_impurity(left) + weighted_impurity(right);
          if (children < best_children - 1e-12 * std::max(1.0, total.w)) {
            best_children = children;
            best_feature = static_cast<int>(j);
            best_pos = p;
          }
        }
      }
      if (best_feature < 0) return id;

      const auto& s = sorted[static_cast<std::size_t>(best_feature)];
      const double a = x(s[best_pos], static_cast<std::size_t>(best_feature));
      const double b = x(s[best_pos + 1], static_cast<std::size_t>(best_feature));
      double threshold = a + (b - a) / 2.0;
      if (!(threshold < b)) threshold = a;

      for (std::size_t p = lo; p < hi; ++p) goes_left[s[p]] = p <= best_pos ? 1 : 0;
      const std::size_t mid = best_pos + 1;
      std::vector<std::uint32_t> scratch;
      scratch.reserve(hi - mid);
      for (auto& arr : sorted) {
        scratch.clear();
        std::size_t out = lo;
        for (std::size_t p = lo; p < hi; ++p) {
          if (goes_left[arr[p]]) {
            arr[out++] = arr[p];
          } else {
            scratch.push_back(arr[p]);
          }
        }
        std::copy(scratch.begin(), scratch.end(), arr.begin() + static_cast<std::ptrdiff_t>(mid));
      }

      const int left = grow(lo, mid, depth + 1);
      const int right = grow(mid, hi, depth + 1);
      auto& node = nodes[static_cast<std::size_t>(id)];
      node.feature = best_feature;
      node.threshold = threshold;
      node.left = left;
      node.right = right;
      return id;
    }
  };

  int depth_from(int n) const {
    const auto& node = nodes_[static_cast<std::size_t>(n)];
    if (node.is_leaf()) return 0;
    return 1 + std::max(depth_from(node.left), depth_from(node.right));
  }

  TreeTask task_ = TreeTask::Classification;
  std::size_t dim_ = 0;
  std::vector<TreeNode> nodes_;
};

}  // namespace resrec
