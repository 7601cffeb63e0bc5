#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include "resrec/resrec.hpp"

namespace testing_support {

using resrec::Dataset;

/// Rows given as {features..., label}.
inline Dataset make_dataset(const std::vector<std::vector<double>>& rows, std::string id = "t",
                            resrec::ClassRoles roles = resrec::ClassRoles::Strict) {
  std::vector<double> f;
  std::vector<std::uint8_t> y;
  const std::size_t d = rows.front().size() - 1;
  for (const auto& r : rows) {
    f.insert(f.end(), r.begin(), r.end() - 1);
    y.push_back(static_cast<std::uint8_t>(r.back()));
  }
  return Dataset(std::move(id), std::move(f), d, std::move(y), roles);
}

/// n0 majors and n1 minors with uniform features in [0, 1)^d.
inline Dataset random_dataset(resrec::Rng& rng, std::size_t n0, std::size_t n1, std::size_t d,
                              std::string id = "rand") {
  std::vector<double> f;
  std::vector<std::uint8_t> y;
  for (std::size_t i = 0; i < n0 + n1; ++i) {
    for (std::size_t j = 0; j < d; ++j) f.push_back(rng.uniform() + (i >= n0 ? 0.3 : 0.0));
    y.push_back(i >= n0 ? 1 : 0);
  }
  return Dataset(std::move(id), std::move(f), d, std::move(y));
}

/// Small synthetic dataset drawn from the library's generator.
inline Dataset small_mixture(std::uint64_t seed, std::size_t index = 0, std::size_t min_size = 200,
                             std::size_t max_size = 300) {
  resrec::MixtureConfig cfg;
  cfg.seed = seed;
  cfg.min_dim = 3;
  cfg.max_dim = 6;
  cfg.min_size = min_size;
  cfg.max_size = max_size;
  cfg.min_minor_fraction = 0.15;
  cfg.max_minor_fraction = 0.35;
  return resrec::generate_mixture(cfg, index);
}

/// Rows as sorted multiset of (features, label) tuples.
inline std::multiset<std::vector<double>> row_multiset(const Dataset& s) {
  std::multiset<std::vector<double>> out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    auto r = s.row(i);
    std::vector<double> v(r.begin(), r.end());
    v.push_back(s.label(i));
    out.insert(std::move(v));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Oracles

/// Step-wise area under the precision-recall curve from an explicit sweep over
/// every distinct threshold: sum of (recall gain) * precision at that threshold.
inline double pr_auc_oracle(const std::vector<std::uint8_t>& labels, const std::vector<double>& scores) {
  std::vector<double> thresholds(scores);
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  double n_pos = 0;
  for (auto y : labels) n_pos += y;
  double area = 0.0, prev_recall = 0.0;
  for (double tau : thresholds) {
    double tp = 0, predicted = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (scores[i] >= tau) {
        ++predicted;
        tp += labels[i];
      }
    }
    const double recall = tp / n_pos;
    area += (recall - prev_recall) * (tp / predicted);
    prev_recall = recall;
  }
  return area;
}

inline double t_density(double x, double nu) {
  const double c = std::exp(std::lgamma((nu + 1) / 2) - std::lgamma(nu / 2)) /
                   std::sqrt(nu * std::numbers::pi);
  return c * std::pow(1 + x * x / nu, -(nu + 1) / 2);
}

inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double fa, double fm, double fb, double whole, double tol, int depth) {
  const double m = (a + b) / 2, lm = (a + m) / 2, rm = (m + b) / 2;
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6 * (fa + 4 * flm + fm);
  const double right = (b - m) / 6 * (fm + 4 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15 * tol) {
    return left + right + (left + right - whole) / 15;
  }
  return adaptive_simpson(f, a, m, fa, flm, fm, left, tol / 2, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, tol / 2, depth - 1);
}

inline double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
  const double fa = f(a), fb = f(b), fm = f((a + b) / 2);
  return adaptive_simpson(f, a, b, fa, fm, fb, (b - a) / 6 * (fa + 4 * fm + fb), tol, 50);
}

/// P(T > t) for Student's t by numerical integration of the density.
inline double t_sf_oracle(double t, double nu) {
  auto f = [nu](double x) { return t_density(x, nu); };
  const double inner = integrate(f, 0.0, std::abs(t), 1e-14);
  return t >= 0 ? 0.5 - inner : 0.5 + inner;
}

/// Paired one-sided t-test p-value computed from first principles.
inline double paired_p_oracle(const std::vector<double>& a, const std::vector<double>& b) {
  const double k = static_cast<double>(a.size());
  double md = 0;
  for (std::size_t i = 0; i < a.size(); ++i) md += a[i] - b[i];
  md /= k;
  double ss = 0;
  for (std::size_t i = 0; i < a.size(); ++i) ss += (a[i] - b[i] - md) * (a[i] - b[i] - md);
  const double t = md / std::sqrt(ss / (k - 1) / k);
  return t_sf_oracle(t, k - 1);
}

/// Scratch directory unique to the calling test, emptied on creation.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("resrec-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace testing_support
