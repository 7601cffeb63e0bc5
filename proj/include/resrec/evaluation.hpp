#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "resrec/data.hpp"
#include "resrec/error.hpp"
#include "resrec/learners.hpp"
#include "resrec/parallel.hpp"
#include "resrec/resampling.hpp"

namespace resrec {

/// Average precision: the step-wise area under the precision-recall curve.
/// Tied scores form one threshold; every positive in a tie group gets the
/// precision measured at the end of the group.
inline double pr_auc(std::span<const std::uint8_t> labels, std::span<const double> scores) {
  require(labels.size() == scores.size(), ErrorCode::InvalidArgument,
          "pr_auc: labels and scores differ in length");
  const auto n_pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  require(n_pos > 0, ErrorCode::InvalidArgument, "PR-AUC undefined: no positive labels");

  std::vector<std::size_t> order(labels.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  double ap = 0.0;
  std::size_t seen = 0, tp = 0;
  for (std::size_t g = 0; g < order.size();) {
    std::size_t end = g, group_pos = 0;
    while (end < order.size() && scores[order[end]] == scores[order[g]]) {
      group_pos += labels[order[end]];
      ++end;
    }
    seen += end - g;
    tp += group_pos;
    if (group_pos > 0) {
      ap += static_cast<double>(group_pos) * static_cast<double>(tp) / static_cast<double>(seen);
    }
    g = end;
  }
  return ap / static_cast<double>(n_pos);
}

using QualityVector = std::vector<double>;

/// Why `spec` cannot be cross-validated on `s` with k stratified folds, or
/// nullopt. RUS is judged against the full dataset (inside a split the
/// multiplier is capped at the split's own IR); SMOTE needs k_neighbors + 1
/// minors in the smallest training split.
inline std::optional<std::string> cv_infeasibility(const Dataset& s, const ResamplingSpec& spec,
                                                   int k) {
  if (auto why = infeasibility(s, spec)) return why;
  if (spec.method == Method::SMOTE) {
    const std::size_t n1 = s.minor_count();
    const std::size_t largest_fold = (n1 + static_cast<std::size_t>(k) - 1) / static_cast<std::size_t>(k);
    if (n1 - largest_fold < static_cast<std::size_t>(spec.k_neighbors) + 1) {
      return "not enough minor points for k neighbors in a training split";
    }
  }
  return std::nullopt;
}

/// RNG stream for one (dataset, cell, fold).
inline std::uint64_t cell_fold_seed(std::uint64_t seed, const std::string& dataset_id,
                                    const ResamplingSpec& spec, int fold) {
  return derive_seed(seed, dataset_id, "cell", method_name(spec),
                     std::bit_cast<std::uint64_t>(spec.effective_multiplier()),
                     static_cast<std::uint64_t>(fold));
}

/// Called once per fold with the (resampled) training set and the untouched
/// test set that was scored.
using FoldObserver = std::function<void(int fold, const Dataset& train, const Dataset& test)>;

/// Q^kCV: per fold, resample only the training split, fit, and score PR-AUC on
/// the held-out fold.
inline QualityVector cv_quality(const Dataset& s, const LearnerSpec& learner,
                                const ResamplingSpec& spec, const FoldAssignment& folds,
                                std::uint64_t seed, const FoldObserver& observer = {}) {
  require(folds.fold_of.size() == s.size(), ErrorCode::InvalidArgument,
          "fold assignment does not match dataset");
  if (auto why = cv_infeasibility(s, spec, folds.k)) fail(ErrorCode::Infeasible, *why);

  QualityVector scores(static_cast<std::size_t>(folds.k));
  for (int j = 0; j < folds.k; ++j) {
    const auto train_idx = folds.train_indices(j);
    const auto test_idx = folds.test_indices(j);
    const Dataset train = s.subset(train_idx, s.id());
    const Dataset test = s.subset(test_idx, s.id());

    ResamplingSpec split_spec = spec;
    if (spec.method == Method::RUS) {
      split_spec.multiplier = std::min(spec.multiplier, imbalance_ratio(train));
      split_spec.multiplier = std::max(split_spec.multiplier, 1.0);
    }
    const Dataset resampled = resample(train, split_spec, cell_fold_seed(seed, s.id(), spec, j));
    const Model model = fit(learner, resampled);

    std::vector<double> predicted(test.size());
    for (std::size_t i = 0; i < test.size(); ++i) predicted[i] = model.predict_score(test.row(i));
    scores[static_cast<std::size_t>(j)] = pr_auc(test.labels(), predicted);
    if (observer) observer(j, resampled, test);
  }
  return scores;
}

// ---------------------------------------------------------------------------
// Quality grid

struct GridCell {
  ResamplingSpec spec;
  QualityVector scores;  // empty when skipped
  std::string skip_reason;

  bool skipped() const { return scores.empty(); }
  double mean() const {
    return std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(scores.size());
  }
};

/// Q^kCV for every (method, multiplier) cell of one dataset and learner. The
/// no-resampling cell comes first; the rest follow method-major order. All
/// cells share one fold assignment.
struct QualityGrid {
  std::string dataset_id;
  std::string learner;
  int k = 0;
  std::uint64_t seed = 0;
  std::uint64_t dataset_hash = 0;
  FoldAssignment folds;
  std::vector<ResamplingSpec> methods;  // multiplier unused
  std::vector<double> multipliers;
  std::vector<GridCell> cells;

  const GridCell& baseline() const { return cells.front(); }

  const GridCell* find(const ResamplingSpec& spec) const {
    for (const auto& c : cells) {
      if (c.spec == spec) return &c;
    }
    return nullptr;
  }
};

/// Seed used for the fold assignment of a dataset's grid.
inline std::uint64_t grid_fold_seed(std::uint64_t seed, const std::string& dataset_id) {
  return derive_seed(seed, dataset_id, "cv-folds");
}

/// Content key of one cell's inputs; equal keys imply equal quality vectors.
inline std::uint64_t cell_key(std::uint64_t dataset_hash, const LearnerSpec& learner,
                              const ResamplingSpec& spec, int k, std::uint64_t seed) {
  return derive_seed(seed, dataset_hash, nlohmann::json(learner).dump(), to_string(spec),
                     static_cast<std::uint64_t>(k));
}

struct GridOptions {
  unsigned workers = 1;
  /// Previously computed vectors keyed by cell_key; hits are not recomputed.
  const std::map<std::uint64_t, QualityVector>* cache = nullptr;
};

struct GridRun {
  QualityGrid grid;
  std::vector<std::uint64_t> cell_keys;  // parallel to grid.cells
  std::size_t cache_hits = 0;
  std::size_t computed = 0;
};

inline GridRun quality_grid_run(const Dataset& s, const LearnerSpec& learner,
                                const std::vector<ResamplingSpec>& methods,
                                const std::vector<double>& multipliers, int k, std::uint64_t seed,
                                const GridOptions& options = {}) {
  require(!methods.empty() && !multipliers.empty(), ErrorCode::InvalidArgument,
          "grid needs at least one method and one multiplier");
  GridRun run;
  auto& grid = run.grid;
  grid.dataset_id = s.id();
  grid.learner = to_string(learner.kind);
  grid.k = k;
  grid.seed = seed;
  grid.dataset_hash = s.content_hash();
  grid.folds = stratified_folds(s, k, grid_fold_seed(seed, s.id()));
  grid.methods = methods;
  grid.multipliers = multipliers;

  grid.cells.push_back({ResamplingSpec::none(), {}, {}});
  for (const auto& m : methods) {
    require(m.method != Method::None, ErrorCode::InvalidArgument,
            "'none' is always included and must not be listed as a method");
    for (double mult : multipliers) grid.cells.push_back({m.with_multiplier(mult), {}, {}});
  }
  run.cell_keys.resize(grid.cells.size());
  std::vector<std::uint8_t> hit(grid.cells.size(), 0);

  parallel_for(grid.cells.size(), options.workers, [&](std::size_t c) {
    auto& cell = grid.cells[c];
    run.cell_keys[c] = cell_key(grid.dataset_hash, learner, cell.spec, k, seed);
    if (auto why = cv_infeasibility(s, cell.spec, k)) {
      cell.skip_reason = *why;
      return;
    }
    if (options.cache) {
      auto it = options.cache->find(run.cell_keys[c]);
      if (it != options.cache->end() && it->second.size() == static_cast<std::size_t>(k)) {
        cell.scores = it->second;
        hit[c] = 1;
        return;
      }
    }
    cell.scores = cv_quality(s, learner, cell.spec, grid.folds, seed);
  });
  for (std::size_t c = 0; c < grid.cells.size(); ++c) {
    if (grid.cells[c].skipped()) continue;
    if (hit[c]) {
      ++run.cache_hits;
    } else {
      ++run.computed;
    }
  }
  return run;
}

inline QualityGrid quality_grid(const Dataset& s, const LearnerSpec& learner,
                                const std::vector<ResamplingSpec>& methods,
                                const std::vector<double>& multipliers, int k, std::uint64_t seed,
                                unsigned workers = 1) {
  return quality_grid_run(s, learner, methods, multipliers, k, seed, {workers, nullptr}).grid;
}

/// min, min + step, ... up to max (inclusive, with a small tolerance).
inline std::vector<double> multiplier_range(double min, double max, double step) {
  require(step > 0 && min >= 1.0 && max >= min, ErrorCode::InvalidArgument,
          "bad multiplier range");
  std::vector<double> out;
  const auto count = static_cast<std::size_t>(std::floor((max - min) / step + 1e-9)) + 1;
  for (std::size_t i = 0; i < count; ++i) out.push_back(min + static_cast<double>(i) * step);
  return out;
}

// ---------------------------------------------------------------------------
// Persistence: long-format scores CSV, skip-list sidecar, JSON header.

namespace grid_io {

inline std::filesystem::path skip_path(const std::filesystem::path& p) {
  auto q = p;
  q.replace_extension(".skip.csv");
  return q;
}

inline std::filesystem::path header_path(const std::filesystem::path& p) {
  auto q = p;
  q.replace_extension(".json");
  return q;
}

}  // namespace grid_io

/// Writes `<stem>.csv` (dataset_id,learner,method,multiplier,fold,score),
/// `<stem>.skip.csv` and `<stem>.json` (k, seed, grid axes, folds, cell keys).
inline void write_grid(const QualityGrid& grid, const std::filesystem::path& path,
                       const std::vector<std::uint64_t>& cell_keys = {}) {
  {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), ErrorCode::Io, "cannot write " + path.string());
    out << "dataset_id,learner,method,multiplier,fold,score\n";
    for (const auto& cell : grid.cells) {
      for (std::size_t j = 0; j < cell.scores.size(); ++j) {
        out << grid.dataset_id << ',' << grid.learner << ',' << method_name(cell.spec) << ','
            << csv::format_double(cell.spec.effective_multiplier()) << ',' << j << ','
            << csv::format_double(cell.scores[j]) << '\n';
      }
    }
  }
  {
    std::ofstream out(grid_io::skip_path(path), std::ios::binary);
    require(out.good(), ErrorCode::Io, "cannot write skip list for " + path.string());
    out << "dataset_id,learner,method,multiplier,reason\n";
    for (const auto& cell : grid.cells) {
      if (!cell.skipped()) continue;
      out << grid.dataset_id << ',' << grid.learner << ',' << method_name(cell.spec) << ','
          << csv::format_double(cell.spec.effective_multiplier()) << ',' << cell.skip_reason
          << '\n';
    }
  }
  nlohmann::json header{{"dataset_id", grid.dataset_id},
                        {"learner", grid.learner},
                        {"k", grid.k},
                        {"seed", grid.seed},
                        {"dataset_hash", grid.dataset_hash},
                        {"multipliers", grid.multipliers},
                        {"folds", grid.folds.fold_of}};
  auto methods = nlohmann::json::array();
  for (const auto& m : grid.methods) methods.push_back(method_name(m));
  header["methods"] = methods;
  if (!cell_keys.empty()) {
    auto keys = nlohmann::json::object();
    for (std::size_t c = 0; c < grid.cells.size(); ++c) {
      if (!grid.cells[c].skipped()) keys[to_string(grid.cells[c].spec)] = cell_keys[c];
    }
    header["cell_keys"] = keys;
  }
  std::ofstream out(grid_io::header_path(path), std::ios::binary);
  require(out.good(), ErrorCode::Io, "cannot write grid header for " + path.string());
  out << header.dump(1) << '\n';
}

inline nlohmann::json read_json_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  require(in.good(), ErrorCode::MissingArtifact, "missing " + p.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Parse, p.string() + ": " + e.what());
  }
}

/// Reloads a grid written by write_grid; scores are bit-exact.
inline QualityGrid read_grid(const std::filesystem::path& path,
                             std::map<std::uint64_t, QualityVector>* cache_out = nullptr) {
  const auto header = read_json_file(grid_io::header_path(path));
  QualityGrid grid;
  grid.dataset_id = header.at("dataset_id").get<std::string>();
  grid.learner = header.at("learner").get<std::string>();
  grid.k = header.at("k").get<int>();
  grid.seed = header.at("seed").get<std::uint64_t>();
  grid.dataset_hash = header.at("dataset_hash").get<std::uint64_t>();
  grid.multipliers = header.at("multipliers").get<std::vector<double>>();
  grid.folds = {header.at("folds").get<std::vector<int>>(), grid.k};
  for (const auto& m : header.at("methods")) grid.methods.push_back(parse_method(m.get<std::string>()));

  grid.cells.push_back({ResamplingSpec::none(), {}, {}});
  for (const auto& m : grid.methods) {
    for (double mult : grid.multipliers) grid.cells.push_back({m.with_multiplier(mult), {}, {}});
  }
  std::map<std::string, std::size_t> index;
  for (std::size_t c = 0; c < grid.cells.size(); ++c) {
    grid.cells[c].scores.assign(static_cast<std::size_t>(grid.k), std::nan(""));
    index[to_string(grid.cells[c].spec)] = c;
  }

  std::ifstream in(path);
  require(in.good(), ErrorCode::MissingArtifact, "missing " + path.string());
  std::string line;
  std::getline(in, line);
  std::vector<std::uint8_t> seen(grid.cells.size(), 0);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = csv::split_line(line);
    require(cells.size() == 6, ErrorCode::Parse, "bad grid row in " + path.string());
    const auto it = index.find(cells[2] + "," + cells[3]);
    require(it != index.end(), ErrorCode::Parse, "grid row for unknown cell in " + path.string());
    const auto fold = std::stoul(cells[4]);
    double v;
    require(fold < static_cast<std::size_t>(grid.k) && csv::parse_double(cells[5], v),
            ErrorCode::Parse, "bad grid row in " + path.string());
    grid.cells[it->second].scores[fold] = v;
    seen[it->second] = 1;
  }
  for (std::size_t c = 0; c < grid.cells.size(); ++c) {
    if (!seen[c]) {
      grid.cells[c].scores.clear();
      continue;
    }
    for (double v : grid.cells[c].scores) {
      require(!std::isnan(v), ErrorCode::Parse, "incomplete cell in " + path.string());
    }
  }

  std::ifstream skips(grid_io::skip_path(path));
  if (skips.good()) {
    std::getline(skips, line);
    while (std::getline(skips, line)) {
      if (line.empty()) continue;
      auto cells = csv::split_line(line);
      if (cells.size() < 5) continue;
      const auto it = index.find(cells[2] + "," + cells[3]);
      if (it != index.end()) grid.cells[it->second].skip_reason = cells[4];
    }
  }
  require(!grid.baseline().skipped(), ErrorCode::Parse,
          "grid has no no-resampling cell: " + path.string());

  if (cache_out && header.contains("cell_keys")) {
    for (const auto& [name, key] : header.at("cell_keys").items()) {
      const auto it = index.find(name);
      if (it != index.end() && !grid.cells[it->second].skipped()) {
        (*cache_out)[key.get<std::uint64_t>()] = grid.cells[it->second].scores;
      }
    }
  }
  return grid;
}

}  // namespace resrec
