#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "resrec/error.hpp"
#include "resrec/random.hpp"

namespace resrec {

/// Whether construction enforces |C0| >= |C1|. Source datasets are strict;
/// training splits and oversampled sets may legitimately flip the ratio.
enum class ClassRoles { Strict, Relaxed };

/// Binary-labelled dataset. Label 1 is the minor class. Features are stored
/// row-major. Immutable after construction.
class Dataset {
 public:
  Dataset(std::string id, std::vector<double> features, std::size_t dim,
          std::vector<std::uint8_t> labels, ClassRoles roles = ClassRoles::Strict)
      : id_(std::move(id)), features_(std::move(features)), labels_(std::move(labels)), dim_(dim) {
    require(dim_ >= 1, ErrorCode::InvalidData, "dataset needs at least one feature");
    require(labels_.size() >= 2, ErrorCode::InvalidData, "dataset needs at least two rows");
    require(features_.size() == labels_.size() * dim_, ErrorCode::InvalidData,
            "feature matrix size does not match labels");
    for (double v : features_) {
      require(std::isfinite(v), ErrorCode::InvalidData, "non-finite feature value");
    }
    for (auto y : labels_) {
      require(y <= 1, ErrorCode::InvalidData, "labels must be 0 or 1");
      ++counts_[y];
    }
    require(counts_[0] > 0 && counts_[1] > 0, ErrorCode::InvalidData,
            "both classes must be non-empty");
    if (roles == ClassRoles::Strict) {
      require(counts_[0] >= counts_[1], ErrorCode::InvalidData,
              "label 1 must be the minor class");
    }
  }

  const std::string& id() const noexcept { return id_; }
  std::size_t size() const noexcept { return labels_.size(); }
  std::size_t dim() const noexcept { return dim_; }

  std::span<const double> row(std::size_t i) const {
    return {features_.data() + i * dim_, dim_};
  }
  double at(std::size_t i, std::size_t j) const { return features_[i * dim_ + j]; }
  std::uint8_t label(std::size_t i) const { return labels_[i]; }

  std::span<const double> features() const noexcept { return features_; }
  std::span<const std::uint8_t> labels() const noexcept { return labels_; }

  std::size_t major_count() const noexcept { return counts_[0]; }
  std::size_t minor_count() const noexcept { return counts_[1]; }
  std::size_t count(std::uint8_t label) const { return counts_[label]; }

  std::vector<std::size_t> indices_of(std::uint8_t label) const {
    std::vector<std::size_t> out;
    out.reserve(counts_[label]);
    for (std::size_t i = 0; i < labels_.size(); ++i) {
      if (labels_[i] == label) out.push_back(i);
    }
    return out;
  }

  /// Rows in the given order, with relaxed class roles.
  Dataset subset(std::span<const std::size_t> rows, std::string id) const {
    std::vector<double> f;
    std::vector<std::uint8_t> y;
    f.reserve(rows.size() * dim_);
    y.reserve(rows.size());
    for (std::size_t r : rows) {
      auto x = row(r);
      f.insert(f.end(), x.begin(), x.end());
      y.push_back(labels_[r]);
    }
    return Dataset(std::move(id), std::move(f), dim_, std::move(y), ClassRoles::Relaxed);
  }

  /// Hash of dimensions, labels and the exact feature bits.
  std::uint64_t content_hash() const {
    std::uint64_t h = fnv1a(id_);
    h = derive_seed(h, dim_, labels_.size());
    h = fnv1a(std::string_view(reinterpret_cast<const char*>(features_.data()),
                               features_.size() * sizeof(double)),
              h);
    h = fnv1a(std::string_view(reinterpret_cast<const char*>(labels_.data()), labels_.size()), h);
    return h;
  }

  friend bool operator==(const Dataset& a, const Dataset& b) {
    return a.dim_ == b.dim_ && a.labels_ == b.labels_ && a.features_ == b.features_;
  }

 private:
  std::string id_;
  std::vector<double> features_;
  std::vector<std::uint8_t> labels_;
  std::size_t dim_;
  std::size_t counts_[2] = {0, 0};
};

/// IR(S) = |C0| / |C1|.
inline double imbalance_ratio(const Dataset& s) {
  return static_cast<double>(s.major_count()) / static_cast<double>(s.minor_count());
}

// ---------------------------------------------------------------------------
// CSV

namespace csv {

inline std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    auto comma = line.find(',', start);
    auto cell = line.substr(start, comma == std::string_view::npos ? line.npos : comma - start);
    while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
    while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t' || cell.back() == '\r')) {
      cell.remove_suffix(1);
    }
    if (cell.size() >= 2 && cell.front() == '"' && cell.back() == '"') {
      cell = cell.substr(1, cell.size() - 2);
    }
    cells.emplace_back(cell);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

inline bool parse_double(std::string_view text, double& out) {
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size() && !text.empty();
}

/// Shortest text that parses back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace csv

/// Reads a headed CSV. The label column must hold exactly two distinct values;
/// the less frequent one becomes label 1 (ties: lexicographically larger).
inline Dataset ingest_csv(const std::filesystem::path& path,
                          const std::string& label_column = "label") {
  std::ifstream in(path);
  require(in.good(), ErrorCode::Io, "cannot open " + path.string());

  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorCode::Parse,
          "missing header row in " + path.string());
  const auto header = csv::split_line(line);
  auto label_it = std::find(header.begin(), header.end(), label_column);
  require(label_it != header.end(), ErrorCode::Parse,
          "label column '" + label_column + "' not found in " + path.string());
  const std::size_t label_col = static_cast<std::size_t>(label_it - header.begin());
  const std::size_t dim = header.size() - 1;
  require(dim >= 1, ErrorCode::Parse, "no feature columns in " + path.string());

  std::vector<double> features;
  std::vector<std::string> raw_labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto cells = csv::split_line(line);
    require(cells.size() == header.size(), ErrorCode::Parse,
            path.string() + ":" + std::to_string(line_no) + ": expected " +
                std::to_string(header.size()) + " cells");
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c == label_col) {
        raw_labels.push_back(cells[c]);
        continue;
      }
      double v;
      require(csv::parse_double(cells[c], v), ErrorCode::Parse,
              path.string() + ":" + std::to_string(line_no) + ": non-numeric feature '" +
                  cells[c] + "'");
      features.push_back(v);
    }
  }

  std::map<std::string, std::size_t> freq;
  for (const auto& l : raw_labels) ++freq[l];
  require(freq.size() <= 2, ErrorCode::InvalidData, "labels are not binary in " + path.string());
  require(freq.size() == 2, ErrorCode::InvalidData,
          "a class has no elements in " + path.string());

  // std::map iterates in lexicographic order, so `second` is the larger label.
  auto first = freq.begin();
  auto second = std::next(first);
  const std::string& minor =
      first->second < second->second ? first->first : second->first;

  std::vector<std::uint8_t> labels;
  labels.reserve(raw_labels.size());
  for (const auto& l : raw_labels) labels.push_back(l == minor ? 1 : 0);

  return Dataset(path.stem().string(), std::move(features), dim, std::move(labels));
}

/// Writes features as f0..f{d-1} followed by a `label` column of 0/1.
inline void write_csv(const Dataset& s, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorCode::Io, "cannot write " + path.string());
  for (std::size_t j = 0; j < s.dim(); ++j) out << 'f' << j << ',';
  out << "label\n";
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (double v : s.row(i)) out << csv::format_double(v) << ',';
    out << static_cast<int>(s.label(i)) << '\n';
  }
  require(out.good(), ErrorCode::Io, "failed writing " + path.string());
}

// ---------------------------------------------------------------------------
// Synthetic Gaussian mixtures

struct MixtureConfig {
  std::size_t min_dim = 6, max_dim = 40;
  std::size_t min_size = 200, max_size = 1000;
  /// Range of |C1| / |C0| (i.e. 1 / IR).
  double min_minor_fraction = 0.05, max_minor_fraction = 0.35;
  std::size_t min_components = 1, max_components = 3;
  /// Component means are uniform in the box [-r/sqrt(d), r/sqrt(d)]^d, which
  /// keeps the expected distance between means independent of d.
  double mean_radius = 2.0;
  /// Covariance = L L^T with diag(L) uniform in this range.
  double min_diag_scale = 0.5, max_diag_scale = 1.5;
  /// Off-diagonal entries of L are normal with this sd divided by sqrt(d).
  double offdiag_scale = 0.5;
  std::uint64_t seed = 0;

  void validate() const {
    require(min_dim >= 1 && min_dim <= max_dim, ErrorCode::InvalidArgument, "bad dim range");
    require(min_size >= 2 && min_size <= max_size, ErrorCode::InvalidArgument,
            "bad size range");
    require(min_minor_fraction > 0.0 && min_minor_fraction <= max_minor_fraction &&
                max_minor_fraction <= 0.5,
            ErrorCode::InvalidArgument, "minor fraction range must lie in (0, 0.5]");
    require(min_components >= 1 && min_components <= max_components && max_components <= 3,
            ErrorCode::InvalidArgument, "components per class must lie in 1..3");
    require(min_diag_scale > 0.0 && min_diag_scale <= max_diag_scale && offdiag_scale >= 0.0 &&
                mean_radius >= 0.0,
            ErrorCode::InvalidArgument, "bad covariance/mean ranges");
    const double smallest = static_cast<double>(min_size) * min_minor_fraction /
                            (1.0 + min_minor_fraction);
    require(round_half_up(smallest) >= 2, ErrorCode::Infeasible,
            "size range too small for the requested minor fraction");
  }
};

/// |C1| for a dataset of `size` rows with |C1|/|C0| = fraction.
inline std::size_t minor_count_for(std::size_t size, double fraction) {
  return static_cast<std::size_t>(
      round_half_up(static_cast<double>(size) * fraction / (1.0 + fraction)));
}

namespace detail {

struct Component {
  std::vector<double> mean;
  std::vector<double> chol;  // lower-triangular, row-major d x d
};

inline Component random_component(Rng& rng, std::size_t d, const MixtureConfig& cfg) {
  Component c;
  const double half = cfg.mean_radius / std::sqrt(static_cast<double>(d));
  c.mean.resize(d);
  for (auto& m : c.mean) m = rng.uniform(-half, half);
  c.chol.assign(d * d, 0.0);
  const double off_sd = cfg.offdiag_scale / std::sqrt(static_cast<double>(d));
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < i; ++j) c.chol[i * d + j] = off_sd * rng.normal();
    c.chol[i * d + i] = rng.uniform(cfg.min_diag_scale, cfg.max_diag_scale);
  }
  return c;
}

inline void sample_class(Rng& rng, std::size_t d, std::size_t n, const MixtureConfig& cfg,
                         std::vector<double>& out) {
  const auto n_comp = static_cast<std::size_t>(
      rng.integer(static_cast<long long>(cfg.min_components),
                  static_cast<long long>(cfg.max_components)));
  std::vector<Component> comps;
  std::vector<double> cum_weight;
  double total = 0.0;
  for (std::size_t c = 0; c < n_comp; ++c) {
    comps.push_back(random_component(rng, d, cfg));
    total += 0.2 + rng.uniform();
    cum_weight.push_back(total);
  }
  std::vector<double> z(d);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.uniform() * total;
    std::size_t c = 0;
    while (c + 1 < n_comp && u >= cum_weight[c]) ++c;
    for (auto& v : z) v = rng.normal();
    const auto& comp = comps[c];
    for (std::size_t r = 0; r < d; ++r) {
      double x = comp.mean[r];
      for (std::size_t k = 0; k <= r; ++k) x += comp.chol[r * d + k] * z[k];
      out.push_back(x);
    }
  }
}

}  // namespace detail

/// Draws dataset number `index` of the family defined by `cfg`. Both classes
/// are Gaussian mixtures; rows are shuffled. Id is `synth-<seed>-<index>`.
inline Dataset generate_mixture(const MixtureConfig& cfg, std::size_t index = 0) {
  cfg.validate();
  Rng rng(derive_seed(cfg.seed, "mixture", index));
  const auto d = static_cast<std::size_t>(rng.integer(static_cast<long long>(cfg.min_dim),
                                                      static_cast<long long>(cfg.max_dim)));
  const auto size = static_cast<std::size_t>(
      rng.integer(static_cast<long long>(cfg.min_size), static_cast<long long>(cfg.max_size)));
  const double fraction = rng.uniform(cfg.min_minor_fraction, cfg.max_minor_fraction);
  const std::size_t n1 = minor_count_for(size, fraction);
  const std::size_t n0 = size - n1;
  require(n1 >= 2 && n0 >= n1, ErrorCode::Infeasible, "infeasible class sizes");

  std::vector<double> grouped;
  grouped.reserve(size * d);
  detail::sample_class(rng, d, n0, cfg, grouped);
  detail::sample_class(rng, d, n1, cfg, grouped);

  std::vector<std::size_t> order(size);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(std::span(order));

  std::vector<double> features;
  std::vector<std::uint8_t> labels;
  features.reserve(size * d);
  labels.reserve(size);
  for (std::size_t r : order) {
    features.insert(features.end(), grouped.begin() + static_cast<std::ptrdiff_t>(r * d),
                    grouped.begin() + static_cast<std::ptrdiff_t>((r + 1) * d));
    labels.push_back(r < n0 ? 0 : 1);
  }
  return Dataset("synth-" + std::to_string(cfg.seed) + "-" + std::to_string(index),
                 std::move(features), d, std::move(labels));
}

// ---------------------------------------------------------------------------
// Stratified folds

struct FoldAssignment {
  std::vector<int> fold_of;
  int k = 0;

  std::vector<std::size_t> test_indices(int fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold_of.size(); ++i) {
      if (fold_of[i] == fold) out.push_back(i);
    }
    return out;
  }

  std::vector<std::size_t> train_indices(int fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold_of.size(); ++i) {
      if (fold_of[i] != fold) out.push_back(i);
    }
    return out;
  }

  friend bool operator==(const FoldAssignment&, const FoldAssignment&) = default;
};

/// Each class is shuffled and dealt round-robin into k folds; class 1 starts
/// where class 0 left off so total fold sizes also stay within one.
inline FoldAssignment stratified_folds(const Dataset& s, int k, std::uint64_t seed) {
  require(k >= 2, ErrorCode::InvalidArgument, "k must be at least 2");
  require(s.minor_count() >= static_cast<std::size_t>(k), ErrorCode::Infeasible,
          "minor class too small for k folds");
  require(s.major_count() >= static_cast<std::size_t>(k), ErrorCode::Infeasible,
          "major class too small for k folds");
  FoldAssignment folds{std::vector<int>(s.size(), -1), k};
  std::size_t offset = 0;
  for (std::uint8_t cls : {std::uint8_t{0}, std::uint8_t{1}}) {
    auto idx = s.indices_of(cls);
    Rng rng(derive_seed(seed, "folds", cls));
    rng.shuffle(std::span(idx));
    for (std::size_t p = 0; p < idx.size(); ++p) {
      folds.fold_of[idx[p]] = static_cast<int>((p + offset) % static_cast<std::size_t>(k));
    }
    offset = idx.size() % static_cast<std::size_t>(k);
  }
  return folds;
}

}  // namespace resrec
