#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "resrec/error.hpp"
#include "resrec/tree.hpp"

namespace resrec {

/// Brute-force k-nearest-neighbour classifier. Score is the share of label-1
/// rows among the k nearest (Euclidean, distance ties to the lower index).
class KnnClassifier {
 public:
  KnnClassifier() = default;
  KnnClassifier(int k, std::size_t dim, std::vector<double> rows, std::vector<std::uint8_t> labels)
      : k_(k), dim_(dim), rows_(std::move(rows)), labels_(std::move(labels)) {}

  static KnnClassifier fit(MatrixView x, std::span<const std::uint8_t> labels, int k) {
    require(k >= 1, ErrorCode::InvalidArgument, "kNN needs k >= 1");
    require(x.rows >= 1 && labels.size() == x.rows, ErrorCode::InvalidArgument,
            "kNN fit: empty input or size mismatch");
    return KnnClassifier(k, x.cols, {x.data.begin(), x.data.end()},
                         {labels.begin(), labels.end()});
  }

  double predict(std::span<const double> q) const {
    require(q.size() == dim_, ErrorCode::InvalidArgument, "kNN predict: dimension mismatch");
    const std::size_t n = labels_.size();
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(k_), n);
    std::vector<std::pair<double, std::size_t>> dist(n);
    for (std::size_t i = 0; i < n; ++i) {
      double d = 0.0;
      const double* r = rows_.data() + i * dim_;
      for (std::size_t j = 0; j < dim_; ++j) {
        const double t = r[j] - q[j];
        d += t * t;
      }
      dist[i] = {d, i};
    }
    std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k - 1), dist.end());
    std::size_t positives = 0;
    for (std::size_t t = 0; t < k; ++t) positives += labels_[dist[t].second];
    return static_cast<double>(positives) / static_cast<double>(k);
  }

  int k() const { return k_; }
  std::size_t dim() const { return dim_; }
  const std::vector<double>& rows() const { return rows_; }
  const std::vector<std::uint8_t>& labels() const { return labels_; }

 private:
  int k_ = 5;
  std::size_t dim_ = 0;
  std::vector<double> rows_;
  std::vector<std::uint8_t> labels_;
};

}  // namespace resrec
