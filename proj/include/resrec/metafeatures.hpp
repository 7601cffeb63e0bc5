#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "resrec/data.hpp"
#include "resrec/error.hpp"
#include "resrec/stats.hpp"

namespace resrec {

/// sign(x) * ln(1 + |x|): a log scale defined for every real.
inline double slog(double x) { return std::copysign(std::log1p(std::abs(x)), x); }

inline constexpr std::size_t kBaseMetaFeatures = 25;
inline constexpr std::size_t kMetaFeatures = 2 * kBaseMetaFeatures;

namespace detail {

inline constexpr std::array<std::string_view, kBaseMetaFeatures> kBaseNames = {
    "n_objects",
    "n_features",
    "objects_features_ratio",
    "reversed_ir",
    "center_distance",
    "min_abs_cov_eig_major",
    "max_abs_cov_eig_major",
    "min_abs_cov_eig_minor",
    "max_abs_cov_eig_minor",
    "min_skewness_major",
    "max_skewness_major",
    "min_skewness_minor",
    "max_skewness_minor",
    "min_skew_test_pval_major",
    "max_skew_test_pval_major",
    "min_skew_test_pval_minor",
    "max_skew_test_pval_minor",
    "min_kurtosis_major",
    "max_kurtosis_major",
    "min_kurtosis_minor",
    "max_kurtosis_minor",
    "min_kurt_test_pval_major",
    "max_kurt_test_pval_major",
    "min_kurt_test_pval_minor",
    "max_kurt_test_pval_minor",
};

inline std::array<std::string, kMetaFeatures> make_names() {
  std::array<std::string, kMetaFeatures> out;
  for (std::size_t i = 0; i < kBaseMetaFeatures; ++i) {
    out[i] = std::string(kBaseNames[i]);
    out[i + kBaseMetaFeatures] = "log_" + std::string(kBaseNames[i]);
  }
  return out;
}

}  // namespace detail

/// Names of the meta-feature vector, in registry order: 25 base values, then
/// their slog companions prefixed with `log_`.
inline const std::array<std::string, kMetaFeatures>& meta_feature_names() {
  static const auto names = detail::make_names();
  return names;
}

inline std::size_t meta_feature_index(std::string_view name) {
  const auto& names = meta_feature_names();
  auto it = std::find(names.begin(), names.end(), name);
  require(it != names.end(), ErrorCode::InvalidArgument,
          "unknown meta-feature '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - names.begin());
}

struct MetaFeatures {
  std::array<double, kMetaFeatures> values{};

  double operator[](std::string_view name) const { return values[meta_feature_index(name)]; }

  std::vector<double> select(std::span<const std::size_t> indices) const {
    std::vector<double> out;
    out.reserve(indices.size());
    for (auto i : indices) out.push_back(values[i]);
    return out;
  }
};

namespace detail {

struct ClassSummary {
  std::vector<double> mean;
  double min_abs_eig = 0, max_abs_eig = 0;
  double min_skew = 0, max_skew = 0;
  double min_skew_p = 0, max_skew_p = 0;
  double min_kurt = 0, max_kurt = 0;
  double min_kurt_p = 0, max_kurt_p = 0;
};

// Rows are visited in lexicographic order so the result does not depend on
// the dataset's row order, bit for bit.
inline ClassSummary summarize_class(const Dataset& s, std::uint8_t label) {
  auto rows = s.indices_of(label);
  const std::size_t n = rows.size();
  const std::size_t d = s.dim();
  require(n >= 2, ErrorCode::InvalidData, "meta-features need at least two rows per class");
  std::sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) {
    auto ra = s.row(a), rb = s.row(b);
    return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
  });

  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = s.at(rows[i], j);
    }
  }
  const Eigen::RowVectorXd mu = x.colwise().mean();
  const Eigen::MatrixXd centered = x.rowwise() - mu;
  const Eigen::MatrixXd cov = (centered.adjoint() * centered) / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd abs_eig = eig.eigenvalues().cwiseAbs();

  ClassSummary out;
  out.mean.assign(mu.data(), mu.data() + d);
  out.min_abs_eig = abs_eig.minCoeff();
  out.max_abs_eig = abs_eig.maxCoeff();

  std::vector<double> skew(d), skew_p(d), kurt(d), kurt_p(d), column(n);
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      column[i] = x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
    skew[j] = stats::skewness(column);
    skew_p[j] = stats::skew_test_pvalue(column);
    kurt[j] = stats::excess_kurtosis(column);
    kurt_p[j] = stats::kurt_test_pvalue(column);
  }
  auto range = [](const std::vector<double>& v) {
    auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return std::pair{*lo, *hi};
  };
  std::tie(out.min_skew, out.max_skew) = range(skew);
  std::tie(out.min_skew_p, out.max_skew_p) = range(skew_p);
  std::tie(out.min_kurt, out.max_kurt) = range(kurt);
  std::tie(out.min_kurt_p, out.max_kurt_p) = range(kurt_p);
  return out;
}

}  // namespace detail

/// f(S): general, class-geometry and per-class distribution-shape statistics,
/// plus the slog of each.
inline MetaFeatures compute_meta_features(const Dataset& s) {
  const auto major = detail::summarize_class(s, 0);
  const auto minor = detail::summarize_class(s, 1);

  double dist2 = 0.0;
  for (std::size_t j = 0; j < s.dim(); ++j) {
    const double t = major.mean[j] - minor.mean[j];
    dist2 += t * t;
  }

  const std::array<double, kBaseMetaFeatures> base = {
      static_cast<double>(s.size()),
      static_cast<double>(s.dim()),
      static_cast<double>(s.size()) / static_cast<double>(s.dim()),
      1.0 / imbalance_ratio(s),
      std::sqrt(dist2),
      major.min_abs_eig, major.max_abs_eig,
      minor.min_abs_eig, minor.max_abs_eig,
      major.min_skew, major.max_skew,
      minor.min_skew, minor.max_skew,
      major.min_skew_p, major.max_skew_p,
      minor.min_skew_p, minor.max_skew_p,
      major.min_kurt, major.max_kurt,
      minor.min_kurt, minor.max_kurt,
      major.min_kurt_p, major.max_kurt_p,
      minor.min_kurt_p, minor.max_kurt_p,
  };

  MetaFeatures f;
  for (std::size_t i = 0; i < kBaseMetaFeatures; ++i) {
    f.values[i] = base[i];
    f.values[i + kBaseMetaFeatures] = slog(base[i]);
  }
  return f;
}

}  // namespace resrec
