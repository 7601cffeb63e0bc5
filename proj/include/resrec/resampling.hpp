#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "resrec/data.hpp"
#include "resrec/error.hpp"
#include "resrec/random.hpp"

namespace resrec {

enum class Method { None, ROS, RUS, SMOTE };

/// A resampling method plus its multiplier m. IR(resample(S)) = IR(S) / m.
struct ResamplingSpec {
  Method method = Method::None;
  int k_neighbors = 5;  // SMOTE only
  double multiplier = 1.0;

  static ResamplingSpec none() { return {}; }
  static ResamplingSpec ros(double m) { return {Method::ROS, 0, m}; }
  static ResamplingSpec rus(double m) { return {Method::RUS, 0, m}; }
  static ResamplingSpec smote(int k, double m) { return {Method::SMOTE, k, m}; }

  /// Multiplier with None normalized to 1.0.
  double effective_multiplier() const { return method == Method::None ? 1.0 : multiplier; }

  ResamplingSpec with_multiplier(double m) const {
    ResamplingSpec s = *this;
    s.multiplier = m;
    return s;
  }

  friend bool operator==(const ResamplingSpec& a, const ResamplingSpec& b) {
    if (a.method != b.method) return false;
    if (a.method == Method::None) return true;
    if (a.method == Method::SMOTE && a.k_neighbors != b.k_neighbors) return false;
    return a.multiplier == b.multiplier;
  }
};

/// `none`, `ros`, `rus` or `smote<k>`.
inline std::string method_name(const ResamplingSpec& spec) {
  switch (spec.method) {
    case Method::None: return "none";
    case Method::ROS: return "ros";
    case Method::RUS: return "rus";
    case Method::SMOTE: return "smote" + std::to_string(spec.k_neighbors);
  }
  return "none";
}

/// `method,multiplier`, e.g. `smote5,2.75`.
inline std::string to_string(const ResamplingSpec& spec) {
  return method_name(spec) + "," + csv::format_double(spec.effective_multiplier());
}

/// Parses a method name; the multiplier is left at 1.0.
inline ResamplingSpec parse_method(std::string_view name) {
  if (name == "none") return ResamplingSpec::none();
  if (name == "ros") return ResamplingSpec::ros(1.0);
  if (name == "rus") return ResamplingSpec::rus(1.0);
  if (name.starts_with("smote")) {
    auto digits = name.substr(5);
    int k = 0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), k);
    require(ec == std::errc() && ptr == digits.data() + digits.size() && k >= 1,
            ErrorCode::Parse, "bad SMOTE method name '" + std::string(name) + "'");
    return ResamplingSpec::smote(k, 1.0);
  }
  fail(ErrorCode::Parse, "unknown resampling method '" + std::string(name) + "'");
}

/// Parses `method,multiplier` (or a bare method name, multiplier 1.0).
inline ResamplingSpec parse_spec(std::string_view text) {
  auto comma = text.find(',');
  auto spec = parse_method(text.substr(0, comma));
  if (comma != std::string_view::npos) {
    double m;
    require(csv::parse_double(text.substr(comma + 1), m), ErrorCode::Parse,
            "bad multiplier in '" + std::string(text) + "'");
    spec.multiplier = m;
  }
  return spec;
}

/// Why `spec` cannot be applied to `s`, or nullopt if it can.
inline std::optional<std::string> infeasibility(const Dataset& s, const ResamplingSpec& spec) {
  if (spec.method == Method::None) return std::nullopt;
  if (!(spec.multiplier >= 1.0)) return "multiplier below 1";
  if (spec.method == Method::RUS && spec.multiplier > imbalance_ratio(s)) {
    return "RUS multiplier exceeds imbalance ratio";
  }
  if (spec.method == Method::SMOTE) {
    if (spec.k_neighbors < 1) return "SMOTE needs k >= 1";
    if (s.minor_count() < static_cast<std::size_t>(spec.k_neighbors) + 1) {
      return "not enough minor points for k neighbors";
    }
  }
  return std::nullopt;
}

namespace detail {

inline std::size_t oversample_count(const Dataset& s, double m) {
  return static_cast<std::size_t>(round_half_up((m - 1.0) * static_cast<double>(s.minor_count())));
}

inline Dataset append_rows(const Dataset& s, const std::vector<double>& extra, std::size_t n_extra) {
  std::vector<double> f(s.features().begin(), s.features().end());
  f.insert(f.end(), extra.begin(), extra.end());
  std::vector<std::uint8_t> y(s.labels().begin(), s.labels().end());
  y.insert(y.end(), n_extra, std::uint8_t{1});
  return Dataset(s.id(), std::move(f), s.dim(), std::move(y), ClassRoles::Relaxed);
}

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double t = a[i] - b[i];
    d += t * t;
  }
  return d;
}

}  // namespace detail

/// Appends round((m-1)|C1|) copies of minor rows drawn uniformly with
/// replacement.
inline Dataset random_oversample(const Dataset& s, double m, std::uint64_t seed) {
  require(m >= 1.0, ErrorCode::InvalidArgument, "multiplier must be >= 1");
  const std::size_t n_add = detail::oversample_count(s, m);
  if (n_add == 0) return s;
  const auto minors = s.indices_of(1);
  Rng rng(seed);
  std::vector<double> extra;
  extra.reserve(n_add * s.dim());
  for (std::size_t i = 0; i < n_add; ++i) {
    auto r = s.row(minors[rng.index(minors.size())]);
    extra.insert(extra.end(), r.begin(), r.end());
  }
  return detail::append_rows(s, extra, n_add);
}

/// Drops a uniformly chosen subset of round(((m-1)/m)|C0|) major rows. Row
/// order of the survivors is preserved.
inline Dataset random_undersample(const Dataset& s, double m, std::uint64_t seed) {
  require(m >= 1.0, ErrorCode::InvalidArgument, "multiplier must be >= 1");
  require(m <= imbalance_ratio(s), ErrorCode::Infeasible,
          "RUS multiplier exceeds imbalance ratio");
  const auto majors = s.indices_of(0);
  const auto n_drop = static_cast<std::size_t>(
      round_half_up((m - 1.0) / m * static_cast<double>(majors.size())));
  require(n_drop < majors.size(), ErrorCode::Infeasible, "RUS would remove every major row");
  if (n_drop == 0) return s;

  Rng rng(seed);
  std::vector<bool> dropped(s.size(), false);
  for (std::size_t p : rng.sample_without_replacement(majors.size(), n_drop)) {
    dropped[majors[p]] = true;
  }
  std::vector<std::size_t> keep;
  keep.reserve(s.size() - n_drop);
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!dropped[i]) keep.push_back(i);
  }
  return s.subset(keep, s.id());
}

/// k nearest minor-class neighbours of every minor row, as positions into
/// `minors`. Self is excluded by position; distance ties go to the lower index.
inline std::vector<std::vector<std::size_t>> minor_neighbors(const Dataset& s,
                                                             const std::vector<std::size_t>& minors,
                                                             int k) {
  const std::size_t n = minors.size();
  const auto kk = static_cast<std::size_t>(k);
  std::vector<std::vector<std::size_t>> out(n);
  std::vector<std::pair<double, std::size_t>> dist;
  dist.reserve(n);
  for (std::size_t a = 0; a < n; ++a) {
    dist.clear();
    for (std::size_t b = 0; b < n; ++b) {
      if (b == a) continue;
      dist.emplace_back(detail::squared_distance(s.row(minors[a]), s.row(minors[b])), b);
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(kk), dist.end());
    out[a].reserve(kk);
    for (std::size_t t = 0; t < kk; ++t) out[a].push_back(dist[t].second);
  }
  return out;
}

/// Appends round((m-1)|C1|) synthetic minors X_i + u (X_j - X_i), X_i uniform
/// over C1, X_j uniform over its k minor neighbours, u uniform on [0, 1].
inline Dataset smote(const Dataset& s, double m, int k, std::uint64_t seed) {
  require(m >= 1.0, ErrorCode::InvalidArgument, "multiplier must be >= 1");
  require(k >= 1, ErrorCode::InvalidArgument, "SMOTE needs k >= 1");
  require(s.minor_count() >= static_cast<std::size_t>(k) + 1, ErrorCode::Infeasible,
          "not enough minor points for k neighbors");
  const std::size_t n_add = detail::oversample_count(s, m);
  if (n_add == 0) return s;

  const auto minors = s.indices_of(1);
  const auto neighbors = minor_neighbors(s, minors, k);
  Rng rng(seed);
  std::vector<double> extra;
  extra.reserve(n_add * s.dim());
  for (std::size_t t = 0; t < n_add; ++t) {
    const std::size_t a = rng.index(minors.size());
    const std::size_t b = neighbors[a][rng.index(neighbors[a].size())];
    const double u = rng.uniform_closed();
    auto xa = s.row(minors[a]);
    auto xb = s.row(minors[b]);
    for (std::size_t j = 0; j < s.dim(); ++j) extra.push_back(xa[j] + u * (xb[j] - xa[j]));
  }
  return detail::append_rows(s, extra, n_add);
}

/// r_m(S). None returns the input unchanged.
inline Dataset resample(const Dataset& s, const ResamplingSpec& spec, std::uint64_t seed) {
  if (auto why = infeasibility(s, spec)) fail(ErrorCode::Infeasible, *why);
  switch (spec.method) {
    case Method::None: return s;
    case Method::ROS: return random_oversample(s, spec.multiplier, seed);
    case Method::RUS: return random_undersample(s, spec.multiplier, seed);
    case Method::SMOTE: return smote(s, spec.multiplier, spec.k_neighbors, seed);
  }
  return s;
}

}  // namespace resrec
