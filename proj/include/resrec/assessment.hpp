#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "resrec/data.hpp"
#include "resrec/error.hpp"
#include "resrec/evaluation.hpp"
#include "resrec/metafeatures.hpp"
#include "resrec/parallel.hpp"
#include "resrec/qualityvars.hpp"
#include "resrec/random.hpp"
#include "resrec/recommender.hpp"

namespace resrec {

// ---------------------------------------------------------------------------
// RA metric

/// Min and max of Q^mean over a pool of evaluated cells.
struct RaPool {
  double min = 0.0;
  double max = 0.0;
};

inline RaPool grid_pool(const QualityGrid& grid, std::span<const GridCell> extra = {}) {
  RaPool p{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  auto add = [&](const GridCell& c) {
    if (c.skipped()) return;
    p.min = std::min(p.min, c.mean());
    p.max = std::max(p.max, c.mean());
  };
  for (const auto& c : grid.cells) add(c);
  for (const auto& c : extra) add(c);
  require(p.min <= p.max, ErrorCode::InvalidArgument, "no evaluated cells in grid");
  return p;
}

/// (q - min) / (max - min); 1.0 when the pool is flat.
inline double normalized_accuracy(double q, const RaPool& pool) {
  if (pool.max == pool.min) return 1.0;
  return std::clamp((q - pool.min) / (pool.max - pool.min), 0.0, 1.0);
}

/// Off-grid cells are evaluated with the grid's folds and join the pool.
inline double recommendation_accuracy(const QualityGrid& grid, const Dataset& s,
                                      const LearnerSpec& learner, const Recommendation& rec) {
  require(s.id() == grid.dataset_id, ErrorCode::InvalidArgument, "grid belongs to another dataset");
  const GridCell* cell = grid.find(rec.spec);
  if (cell && !cell->skipped()) return normalized_accuracy(cell->mean(), grid_pool(grid));
  if (auto why = cv_infeasibility(s, rec.spec, grid.k)) fail(ErrorCode::Infeasible, *why);
  GridCell extra{rec.spec, cv_quality(s, learner, rec.spec, grid.folds, grid.seed), {}};
  const std::vector<GridCell> pool_extra{extra};
  return normalized_accuracy(extra.mean(), grid_pool(grid, pool_extra));
}

/// Grid-only form: the recommended cell must be evaluated in `grid`.
inline double recommendation_accuracy(const QualityGrid& grid, const Recommendation& rec) {
  const GridCell* cell = grid.find(rec.spec);
  require(cell && !cell->skipped(), ErrorCode::Infeasible,
          "recommended cell " + to_string(rec.spec) + " is not evaluated in the grid");
  return normalized_accuracy(cell->mean(), grid_pool(grid));
}

// ---------------------------------------------------------------------------
// Static strategies

enum class StaticStrategy { NoResample, ROS_EqS, RUS_EqS, SMOTE5_EqS };

inline std::vector<StaticStrategy> all_static_strategies() {
  return {StaticStrategy::NoResample, StaticStrategy::ROS_EqS, StaticStrategy::RUS_EqS,
          StaticStrategy::SMOTE5_EqS};
}

inline std::string strategy_id(StaticStrategy s) {
  switch (s) {
    case StaticStrategy::NoResample: return "no_resample";
    case StaticStrategy::ROS_EqS: return "ros_eqs";
    case StaticStrategy::RUS_EqS: return "rus_eqs";
    case StaticStrategy::SMOTE5_EqS: return "smote_eqs";
  }
  return "?";
}

inline std::string strategy_label(StaticStrategy s) {
  switch (s) {
    case StaticStrategy::NoResample: return "No resample";
    case StaticStrategy::ROS_EqS: return "ROS, EqS";
    case StaticStrategy::RUS_EqS: return "RUS, EqS";
    case StaticStrategy::SMOTE5_EqS: return "SMOTE, EqS";
  }
  return "?";
}

/// EqS strategies balance the classes: m = IR(S), unsnapped.
inline Recommendation apply_static(StaticStrategy strategy, const Dataset& s) {
  const double ir = imbalance_ratio(s);
  switch (strategy) {
    case StaticStrategy::NoResample: return {ResamplingSpec::none(), strategy_id(strategy)};
    case StaticStrategy::ROS_EqS: return {ResamplingSpec::ros(ir), strategy_id(strategy)};
    case StaticStrategy::RUS_EqS: return {ResamplingSpec::rus(ir), strategy_id(strategy)};
    case StaticStrategy::SMOTE5_EqS: return {ResamplingSpec::smote(5, ir), strategy_id(strategy)};
  }
  fail(ErrorCode::InvalidArgument, "unknown static strategy");
}

// ---------------------------------------------------------------------------
// ECDF

struct EcdfPoint {
  double x = 0.0;
  double y = 0.0;
};

/// y(x) = |{v < x}| / n.
inline double ecdf_value(std::span<const double> values, double x) {
  require(!values.empty(), ErrorCode::InvalidArgument, "ecdf of an empty sample");
  const auto below = std::count_if(values.begin(), values.end(), [&](double v) { return v < x; });
  return static_cast<double>(below) / static_cast<double>(values.size());
}

/// Points at x = 0, every distinct value, and x = 1, followed by (1, 1) when
/// y(1) < 1 so that the curve always ends at 1.
inline std::vector<EcdfPoint> ecdf(std::span<const double> values) {
  require(!values.empty(), ErrorCode::InvalidArgument, "ecdf of an empty sample");
  std::vector<double> xs(values.begin(), values.end());
  xs.push_back(0.0);
  xs.push_back(1.0);
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  std::vector<EcdfPoint> out;
  for (double x : xs) out.push_back({x, ecdf_value(values, x)});
  if (out.back().y < 1.0) out.push_back({out.back().x, 1.0});
  return out;
}

// ---------------------------------------------------------------------------
// Meta-level cross-validation

struct StrategyResult {
  std::string id;
  std::string label;
  std::vector<double> ra;                    // one per dataset, bank order
  std::vector<ResamplingSpec> choices;       // empty for the random-cell baseline
  double ara = 0.0;
  std::vector<EcdfPoint> curve;
};

struct AssessmentReport {
  int k_prime = 0;
  std::uint64_t seed = 0;
  std::string learner;
  std::vector<std::string> dataset_ids;
  std::vector<int> meta_fold;  // meta-level fold of each dataset
  /// Dataset ids whose meta-records trained the models of each meta fold.
  std::vector<std::vector<std::string>> training_ids;
  std::vector<StrategyResult> strategies;

  const StrategyResult& strategy(const std::string& id) const {
    for (const auto& s : strategies) {
      if (s.id == id) return s;
    }
    fail(ErrorCode::InvalidArgument, "no strategy '" + id + "' in report");
  }
};

/// Recomputes ARA and ECDF of every strategy from its RA values.
inline void finalize_report(AssessmentReport& report) {
  for (auto& s : report.strategies) {
    require(s.ra.size() == report.dataset_ids.size(), ErrorCode::InvalidArgument,
            "strategy " + s.id + " has a wrong number of RA values");
    s.ara = std::accumulate(s.ra.begin(), s.ra.end(), 0.0) / static_cast<double>(s.ra.size());
    s.curve = ecdf(s.ra);
  }
}

struct AssessOptions {
  unsigned workers = 1;
  bool random_cell_baseline = true;
};

inline std::string recommender_strategy_id(const RecommenderConfig& cfg) {
  return "rec_system_" + std::to_string(static_cast<int>(cfg.approach));
}

inline std::string recommender_strategy_label(const RecommenderConfig& cfg) {
  return "Rec. System " + std::to_string(static_cast<int>(cfg.approach));
}

/// Positions of a seeded permutation taken mod k'.
inline std::vector<int> meta_folds(std::size_t n, int k_prime, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(seed, "meta-cv"));
  rng.shuffle(std::span<std::size_t>(order));
  std::vector<int> fold(n);
  for (std::size_t p = 0; p < n; ++p) fold[order[p]] = static_cast<int>(p % static_cast<std::size_t>(k_prime));
  return fold;
}

/// Recommenders are trained per meta fold on the other folds' records and
/// applied out of fold; static strategies are applied to every dataset. RA for
/// one dataset uses a shared pool: every evaluated grid cell plus every
/// off-grid cell any strategy picked.
inline AssessmentReport assess_bank(std::span<const BankEntry> bank, const LearnerSpec& learner,
                                    const std::vector<RecommenderConfig>& recommender_cfgs,
                                    const std::vector<StaticStrategy>& strategies, int k_prime,
                                    std::uint64_t seed, const AssessOptions& options = {}) {
  require(k_prime >= 2, ErrorCode::InvalidArgument, "k' must be at least 2");
  require(bank.size() >= static_cast<std::size_t>(k_prime), ErrorCode::InvalidArgument,
          "bank has fewer datasets than k'");
  check_consistent_grids(bank);
  {
    std::set<std::string> ids;
    for (const auto& r : recommender_cfgs) {
      require(ids.insert(recommender_strategy_id(r)).second, ErrorCode::InvalidArgument,
              "two recommenders with the same approach");
    }
  }
  const std::size_t n = bank.size();
  const auto& ref = bank.front().grid;

  AssessmentReport report;
  report.k_prime = k_prime;
  report.seed = seed;
  report.learner = to_string(learner.kind);
  for (const auto& e : bank) report.dataset_ids.push_back(e.dataset.id());
  report.meta_fold = meta_folds(n, k_prime, seed);

  std::vector<MetaFeatures> features(n);
  parallel_for(n, options.workers,
               [&](std::size_t i) { features[i] = compute_meta_features(bank[i].dataset); });

  // choices[strategy][dataset]
  const std::size_t n_rec = recommender_cfgs.size();
  std::vector<std::vector<ResamplingSpec>> choices(n_rec + strategies.size(),
                                                   std::vector<ResamplingSpec>(n));

  report.training_ids.assign(static_cast<std::size_t>(k_prime), {});
  for (int j = 0; j < k_prime; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      if (report.meta_fold[i] != j) report.training_ids[static_cast<std::size_t>(j)].push_back(report.dataset_ids[i]);
    }
  }

  const std::size_t n_jobs = n_rec * static_cast<std::size_t>(k_prime);
  parallel_for(n_jobs, options.workers, [&](std::size_t job) {
    const auto& cfg = recommender_cfgs[job / static_cast<std::size_t>(k_prime)];
    const int j = static_cast<int>(job % static_cast<std::size_t>(k_prime));
    std::vector<MetaRecord> train;
    for (std::size_t i = 0; i < n; ++i) {
      if (report.meta_fold[i] == j) continue;
      MetaRecord rec;
      rec.dataset_id = bank[i].dataset.id();
      rec.features = features[i];
      rec.quality = compute_quality_variables(bank[i].grid, cfg.epsilon);
      rec.targets = binarize_targets(rec.quality, cfg.alpha, cfg.use_windowed_pval_for_targets);
      train.push_back(std::move(rec));
    }
    const auto model = train_recommender(train, ref.methods, ref.multipliers, ref.k, cfg);
    for (std::size_t i = 0; i < n; ++i) {
      if (report.meta_fold[i] != j) continue;
      choices[job / static_cast<std::size_t>(k_prime)][i] = recommend(model, bank[i].dataset).spec;
    }
  });
  for (std::size_t s = 0; s < strategies.size(); ++s) {
    for (std::size_t i = 0; i < n; ++i) {
      choices[n_rec + s][i] = apply_static(strategies[s], bank[i].dataset).spec;
    }
  }

  // ra[strategy][dataset]; the random-cell baseline is last when enabled.
  const std::size_t n_strat = choices.size() + (options.random_cell_baseline ? 1 : 0);
  std::vector<std::vector<double>> ra(n_strat, std::vector<double>(n));
  parallel_for(n, options.workers, [&](std::size_t i) {
    const auto& s = bank[i].dataset;
    const auto& grid = bank[i].grid;
    std::vector<GridCell> extra;
    auto quality_of = [&](const ResamplingSpec& spec) -> const GridCell* {
      if (const GridCell* c = grid.find(spec); c && !c->skipped()) return c;
      for (const auto& c : extra) {
        if (c.spec == spec) return &c;
      }
      return nullptr;
    };
    std::vector<ResamplingSpec> resolved(choices.size());
    for (std::size_t a = 0; a < choices.size(); ++a) {
      ResamplingSpec spec = choices[a][i];
      // A static pick that cannot be cross-validated here falls back to no-resampling.
      if (cv_infeasibility(s, spec, grid.k)) spec = ResamplingSpec::none();
      resolved[a] = spec;
      if (quality_of(spec)) continue;
      extra.push_back({spec, cv_quality(s, learner, spec, grid.folds, grid.seed), {}});
    }
    const auto pool = grid_pool(grid, extra);
    for (std::size_t a = 0; a < choices.size(); ++a) {
      ra[a][i] = normalized_accuracy(quality_of(resolved[a])->mean(), pool);
      choices[a][i] = resolved[a];
    }
    if (options.random_cell_baseline) {
      double sum = 0.0;
      std::size_t count = 0;
      for (const auto& c : grid.cells) {
        if (c.skipped()) continue;
        sum += normalized_accuracy(c.mean(), pool);
        ++count;
      }
      ra.back()[i] = sum / static_cast<double>(count);
    }
  });

  for (std::size_t a = 0; a < n_strat; ++a) {
    StrategyResult r;
    if (a < n_rec) {
      r.id = recommender_strategy_id(recommender_cfgs[a]);
      r.label = recommender_strategy_label(recommender_cfgs[a]);
    } else if (a < choices.size()) {
      r.id = strategy_id(strategies[a - n_rec]);
      r.label = strategy_label(strategies[a - n_rec]);
    } else {
      r.id = "random_cell";
      r.label = "Random cell";
    }
    if (a < choices.size()) r.choices = choices[a];
    r.ra = ra[a];
    report.strategies.push_back(std::move(r));
  }
  finalize_report(report);
  return report;
}

// ---------------------------------------------------------------------------
// Report files

inline nlohmann::json summary_json(const AssessmentReport& report) {
  auto table = nlohmann::json::array();
  for (const auto& s : report.strategies) {
    table.push_back({{"strategy", s.label}, {"id", s.id}, {"ara", s.ara}});
  }
  auto folds = nlohmann::json::object();
  for (std::size_t i = 0; i < report.dataset_ids.size(); ++i) {
    folds[report.dataset_ids[i]] = report.meta_fold[i];
  }
  return {{"k_prime", report.k_prime},
          {"meta_folds", folds},
          {"seed", report.seed},
          {"learner", report.learner},
          {"n_datasets", report.dataset_ids.size()},
          {"mean_ra", table}};
}

inline std::string ecdf_svg(const AssessmentReport& report) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                 "#9467bd", "#8c564b", "#7f7f7f", "#17becf"};
  constexpr double size = 400.0, margin = 40.0;
  auto px = [&](double x) { return csv::format_double(margin + x * size); };
  auto py = [&](double y) { return csv::format_double(margin + (1.0 - y) * size); };
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size + 2 * margin + 160
      << "\" height=\"" << size + 2 * margin << "\">\n";
  out << "<rect x=\"" << margin << "\" y=\"" << margin << "\" width=\"" << size << "\" height=\""
      << size << "\" fill=\"none\" stroke=\"black\"/>\n";
  out << "<text x=\"" << margin + size / 2 << "\" y=\"" << size + 1.75 * margin
      << "\" text-anchor=\"middle\" font-size=\"12\">RA</text>\n";
  for (std::size_t a = 0; a < report.strategies.size(); ++a) {
    const auto& s = report.strategies[a];
    const char* color = colors[a % std::size(colors)];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    double prev_y = 0.0;
    for (std::size_t p = 0; p < s.curve.size(); ++p) {
      const auto& pt = s.curve[p];
      if (p > 0) out << ' ' << px(pt.x) << ',' << py(prev_y);
      out << (p > 0 ? " " : "") << px(pt.x) << ',' << py(pt.y);
      prev_y = pt.y;
    }
    out << "\"/>\n";
    const double ly = margin + 14.0 * static_cast<double>(a + 1);
    out << "<text x=\"" << size + margin + 10 << "\" y=\"" << ly << "\" font-size=\"11\" fill=\""
        << color << "\">" << s.label << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

/// Writes ra.csv, choices.csv, ecdf_<id>.csv, summary.json and ecdf.svg into `dir`.
inline void write_report(const AssessmentReport& report, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  require(!ec, ErrorCode::Io, "cannot create " + dir.string());
  auto open = [&](const std::string& name) {
    std::ofstream out(dir / name, std::ios::binary);
    require(out.good(), ErrorCode::Io, "cannot write " + (dir / name).string());
    return out;
  };
  {
    auto out = open("ra.csv");
    out << "dataset_id,strategy,ra\n";
    for (std::size_t i = 0; i < report.dataset_ids.size(); ++i) {
      for (const auto& s : report.strategies) {
        out << report.dataset_ids[i] << ',' << s.id << ',' << csv::format_double(s.ra[i]) << '\n';
      }
    }
  }
  {
    auto out = open("choices.csv");
    out << "dataset_id,strategy,method,multiplier\n";
    for (std::size_t i = 0; i < report.dataset_ids.size(); ++i) {
      for (const auto& s : report.strategies) {
        if (s.choices.empty()) continue;
        out << report.dataset_ids[i] << ',' << s.id << ',' << method_name(s.choices[i]) << ','
            << csv::format_double(s.choices[i].effective_multiplier()) << '\n';
      }
    }
  }
  for (const auto& s : report.strategies) {
    auto out = open("ecdf_" + s.id + ".csv");
    out << "x,y\n";
    for (const auto& p : s.curve) {
      out << csv::format_double(p.x) << ',' << csv::format_double(p.y) << '\n';
    }
  }
  {
    auto out = open("summary.json");
    out << summary_json(report).dump(1) << '\n';
  }
  {
    auto out = open("ecdf.svg");
    out << ecdf_svg(report);
  }
}

/// Reloads ra.csv and summary.json; ARA and ECDF are recomputed.
inline AssessmentReport read_report(const std::filesystem::path& dir) {
  const auto summary = read_json_file(dir / "summary.json");
  AssessmentReport report;
  report.k_prime = summary.at("k_prime").get<int>();
  report.seed = summary.at("seed").get<std::uint64_t>();
  report.learner = summary.at("learner").get<std::string>();
  std::map<std::string, std::size_t> strategy_index;
  for (const auto& row : summary.at("mean_ra")) {
    StrategyResult r;
    r.id = row.at("id").get<std::string>();
    r.label = row.at("strategy").get<std::string>();
    strategy_index[r.id] = report.strategies.size();
    report.strategies.push_back(std::move(r));
  }
  std::ifstream in(dir / "ra.csv");
  require(in.good(), ErrorCode::MissingArtifact, "missing " + (dir / "ra.csv").string());
  std::string line;
  std::getline(in, line);
  std::map<std::string, std::size_t> dataset_index;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = csv::split_line(line);
    double v = 0.0;
    require(cells.size() == 3 && csv::parse_double(cells[2], v), ErrorCode::Parse,
            "bad row in ra.csv: " + line);
    const auto st = strategy_index.find(cells[1]);
    require(st != strategy_index.end(), ErrorCode::Parse, "unknown strategy in ra.csv: " + cells[1]);
    auto [it, inserted] = dataset_index.try_emplace(cells[0], report.dataset_ids.size());
    if (inserted) report.dataset_ids.push_back(cells[0]);
    auto& ra = report.strategies[st->second].ra;
    require(ra.size() == it->second, ErrorCode::Parse, "ra.csv rows are out of order");
    ra.push_back(v);
  }
  std::ifstream choices(dir / "choices.csv");
  if (choices.good()) {
    std::getline(choices, line);
    while (std::getline(choices, line)) {
      if (line.empty()) continue;
      const auto cells = csv::split_line(line);
      require(cells.size() == 4, ErrorCode::Parse, "bad row in choices.csv: " + line);
      const auto st = strategy_index.find(cells[1]);
      require(st != strategy_index.end(), ErrorCode::Parse,
              "unknown strategy in choices.csv: " + cells[1]);
      report.strategies[st->second].choices.push_back(parse_spec(cells[2] + "," + cells[3]));
    }
  }
  const auto& folds = summary.at("meta_folds");
  for (const auto& id : report.dataset_ids) report.meta_fold.push_back(folds.at(id).get<int>());
  finalize_report(report);
  return report;
}

}  // namespace resrec
