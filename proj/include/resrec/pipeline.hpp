#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "resrec/assessment.hpp"
#include "resrec/data.hpp"
#include "resrec/error.hpp"
#include "resrec/evaluation.hpp"
#include "resrec/metafeatures.hpp"
#include "resrec/parallel.hpp"
#include "resrec/qualityvars.hpp"
#include "resrec/recommender.hpp"

// Artifact plumbing shared by the command-line tool and the end-to-end tests.
namespace resrec::pipeline {

namespace fs = std::filesystem;

/// Experiment settings. Defaults are the desk-scale setup; the full-scale
/// setup is k = 20, k' = 10, multipliers 1.25..10 step 0.25.
struct RunConfig {
  LearnerSpec learner = LearnerSpec::decision_tree();
  std::vector<ResamplingSpec> methods = {ResamplingSpec::ros(1.0), ResamplingSpec::rus(1.0),
                                         ResamplingSpec::smote(5, 1.0)};
  double mult_min = 1.5, mult_max = 4.0, mult_step = 0.5;
  int k = 10;
  int k_prime = 5;
  double alpha = 0.05;
  double epsilon = 0.75;
  std::uint64_t seed = 7;
  std::size_t count = 60;
  MixtureConfig mixture;
  std::vector<std::string> recommenders;  // preset names; empty = <learner>-1, <learner>-2
  unsigned workers = 1;
  fs::path out = "out";

  std::vector<double> multipliers() const { return multiplier_range(mult_min, mult_max, mult_step); }

  std::vector<RecommenderConfig> recommender_configs() const {
    std::vector<std::string> names = recommenders;
    if (names.empty()) {
      const auto base = to_string(learner.kind);
      names = {base + "-1", base + "-2"};
    }
    std::vector<RecommenderConfig> configs;
    for (const auto& n : names) {
      auto cfg = recommender_preset(n);
      cfg.epsilon = epsilon;
      if (cfg.approach == Approach::PerMethod || cfg.classifier.kind != LearnerKind::LogRegL1) {
        cfg.alpha = alpha;
      }
      configs.push_back(cfg);
    }
    return configs;
  }

  void validate() const {
    learner.validate();
    require(!methods.empty(), ErrorCode::InvalidArgument, "method list is empty");
    require(alpha > 0.0 && alpha < 1.0, ErrorCode::InvalidArgument, "alpha must lie in (0, 1)");
    require(epsilon > 0.0, ErrorCode::InvalidArgument, "epsilon must be positive");
    require(k >= 2 && k_prime >= 2, ErrorCode::InvalidArgument, "k and k' must be at least 2");
    (void)multipliers();
  }

  fs::path datasets_dir() const { return out / "datasets"; }
  fs::path grids_dir() const { return out / "grids"; }
  fs::path meta_dir() const { return out / "meta"; }
  fs::path models_dir() const { return out / "models"; }
  fs::path report_dir() const { return out / "report"; }
};

inline void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec, ErrorCode::Io, "cannot create " + dir.string());
}

inline void write_json(const nlohmann::json& j, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorCode::Io, "cannot write " + path.string());
  out << j.dump(1) << '\n';
}

// ---------------------------------------------------------------------------
// Datasets

inline std::vector<Dataset> generate_bank(const MixtureConfig& cfg, std::size_t count,
                                          unsigned workers = 1) {
  std::vector<std::optional<Dataset>> slots(count);
  parallel_for(count, workers, [&](std::size_t i) { slots[i].emplace(generate_mixture(cfg, i)); });
  std::vector<Dataset> out;
  out.reserve(count);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

/// `<dir>/<id>.csv` per dataset plus manifest.json listing ids, files and hashes.
inline void write_datasets(const std::vector<Dataset>& data, const fs::path& dir,
                           const nlohmann::json& provenance = nlohmann::json::object()) {
  ensure_dir(dir);
  auto entries = nlohmann::json::array();
  for (const auto& s : data) {
    const auto file = s.id() + ".csv";
    write_csv(s, dir / file);
    entries.push_back({{"id", s.id()},
                       {"file", file},
                       {"hash", ingest_csv(dir / file).content_hash()},
                       {"rows", s.size()},
                       {"features", s.dim()},
                       {"imbalance_ratio", imbalance_ratio(s)}});
  }
  write_json({{"generator", provenance}, {"datasets", entries}}, dir / "manifest.json");
}

/// Datasets listed in manifest.json, or every *.csv sorted by name.
inline std::vector<Dataset> load_datasets(const fs::path& dir) {
  require(fs::is_directory(dir), ErrorCode::MissingArtifact, "missing dataset directory " + dir.string());
  std::vector<fs::path> files;
  if (fs::exists(dir / "manifest.json")) {
    const auto manifest = read_json_file(dir / "manifest.json");
    for (const auto& e : manifest.at("datasets")) {
      files.push_back(dir / e.at("file").get<std::string>());
    }
  } else {
    for (const auto& e : fs::directory_iterator(dir)) {
      if (e.path().extension() == ".csv") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
  }
  require(!files.empty(), ErrorCode::MissingArtifact, "no datasets in " + dir.string());
  std::vector<Dataset> out;
  for (const auto& f : files) out.push_back(ingest_csv(f));
  return out;
}

// ---------------------------------------------------------------------------
// Grids

struct GridStats {
  std::size_t cache_hits = 0;
  std::size_t computed = 0;
  std::size_t skipped = 0;
};

inline fs::path grid_path(const fs::path& dir, const std::string& id) { return dir / (id + ".csv"); }

/// Computes (or resumes) the grid of every dataset. Cells whose content key
/// is already on disk are reused.
inline std::vector<QualityGrid> run_grids(const std::vector<Dataset>& data, const RunConfig& cfg,
                                          const fs::path& dir, GridStats* stats = nullptr) {
  ensure_dir(dir);
  const auto multipliers = cfg.multipliers();
  std::vector<QualityGrid> grids;
  GridStats total;
  for (const auto& s : data) {
    std::map<std::uint64_t, QualityVector> cache;
    const auto path = grid_path(dir, s.id());
    if (fs::exists(grid_io::header_path(path))) {
      try {
        (void)read_grid(path, &cache);
      } catch (const Error&) {
        cache.clear();
      }
    }
    auto run = quality_grid_run(s, cfg.learner, cfg.methods, multipliers, cfg.k, cfg.seed,
                                {cfg.workers, &cache});
    write_grid(run.grid, path, run.cell_keys);
    total.cache_hits += run.cache_hits;
    total.computed += run.computed;
    for (const auto& c : run.grid.cells) total.skipped += c.skipped() ? 1 : 0;
    grids.push_back(std::move(run.grid));
  }
  if (stats) *stats = total;
  return grids;
}

/// Loads each dataset's grid and refuses when the dataset changed since.
inline std::vector<BankEntry> load_bank(const std::vector<Dataset>& data, const fs::path& dir) {
  std::vector<BankEntry> bank;
  for (const auto& s : data) {
    auto grid = read_grid(grid_path(dir, s.id()));
    require(grid.dataset_hash == s.content_hash(), ErrorCode::HashMismatch,
            "grid for " + s.id() + " was computed on different data");
    bank.push_back({s, std::move(grid)});
  }
  return bank;
}

// ---------------------------------------------------------------------------
// Meta-dataset

inline nlohmann::json quality_to_json(const QualityVariables& qv) {
  auto methods = nlohmann::json::array();
  for (const auto& mq : qv.methods) {
    auto cells = nlohmann::json::array();
    for (const auto& c : mq.cells) {
      cells.push_back({{"multiplier", c.multiplier},
                       {"feasible", c.feasible},
                       {"q_mean", c.q_mean},
                       {"q_pval", c.q_pval},
                       {"q_pvalw", c.q_pvalw}});
    }
    nlohmann::json m{{"method", method_name(mq.method)}, {"present", mq.present}, {"cells", cells}};
    if (mq.present) {
      m["m_star"] = mq.m_star;
      m["q_mean_at_star"] = mq.q_mean_at_star;
      m["q_pval_at_star"] = mq.q_pval_at_star;
    }
    methods.push_back(m);
  }
  return {{"q0_mean", qv.q0_mean},
          {"epsilon", qv.epsilon},
          {"multipliers", qv.multipliers},
          {"methods", methods}};
}

inline QualityVariables quality_from_json(const nlohmann::json& j) {
  QualityVariables qv;
  qv.q0_mean = j.at("q0_mean").get<double>();
  qv.epsilon = j.at("epsilon").get<double>();
  qv.multipliers = j.at("multipliers").get<std::vector<double>>();
  for (const auto& m : j.at("methods")) {
    MethodQuality mq;
    mq.method = parse_method(m.at("method").get<std::string>());
    mq.present = m.at("present").get<bool>();
    for (const auto& c : m.at("cells")) {
      mq.cells.push_back({c.at("multiplier").get<double>(), c.at("feasible").get<bool>(),
                          c.at("q_mean").get<double>(), c.at("q_pval").get<double>(),
                          c.at("q_pvalw").get<double>()});
    }
    if (mq.present) {
      mq.m_star = m.at("m_star").get<double>();
      mq.q_mean_at_star = m.at("q_mean_at_star").get<double>();
      mq.q_pval_at_star = m.at("q_pval_at_star").get<double>();
    }
    qv.methods.push_back(std::move(mq));
  }
  return qv;
}

/// meta.json holds features and quality-variables per dataset plus the grid
/// axes; meta.csv is the flat view (features, then quality columns).
inline void write_meta(const std::vector<MetaRecord>& meta, const std::vector<BankEntry>& bank,
                       const fs::path& dir) {
  ensure_dir(dir);
  const auto& ref = bank.front().grid;
  auto records = nlohmann::json::array();
  for (std::size_t i = 0; i < meta.size(); ++i) {
    records.push_back({{"dataset_id", meta[i].dataset_id},
                       {"dataset_hash", bank[i].grid.dataset_hash},
                       {"features", meta[i].features.values},
                       {"quality", quality_to_json(meta[i].quality)}});
  }
  auto methods = nlohmann::json::array();
  for (const auto& m : ref.methods) methods.push_back(method_name(m));
  write_json({{"format", "resrec-meta"},
              {"version", 1},
              {"learner", ref.learner},
              {"k", ref.k},
              {"alpha", meta.front().targets.alpha},
              {"methods", methods},
              {"multipliers", ref.multipliers},
              {"feature_names", meta_feature_names()},
              {"records", records}},
             dir / "meta.json");

  std::ofstream out(dir / "meta.csv", std::ios::binary);
  require(out.good(), ErrorCode::Io, "cannot write " + (dir / "meta.csv").string());
  for (std::size_t i = 0; i < meta.size(); ++i) {
    const auto [header, row] = quality_row(meta[i].quality, meta[i].targets);
    if (i == 0) {
      out << "dataset_id";
      for (const auto& n : meta_feature_names()) out << ',' << n;
      for (const auto& h : header) out << ',' << h;
      out << '\n';
    }
    out << meta[i].dataset_id;
    for (double v : meta[i].features.values) out << ',' << csv::format_double(v);
    for (const auto& v : row) out << ',' << v;
    out << '\n';
  }
}

struct MetaDataset {
  std::string learner;
  int k = 0;
  std::vector<ResamplingSpec> methods;
  std::vector<double> multipliers;
  std::vector<MetaRecord> records;
};

inline MetaDataset read_meta(const fs::path& dir) {
  const auto j = read_json_file(dir / "meta.json");
  require(j.value("format", "") == "resrec-meta", ErrorCode::Parse, "not a meta-dataset document");
  MetaDataset m;
  m.learner = j.at("learner").get<std::string>();
  m.k = j.at("k").get<int>();
  m.multipliers = j.at("multipliers").get<std::vector<double>>();
  for (const auto& name : j.at("methods")) m.methods.push_back(parse_method(name.get<std::string>()));
  const auto names = j.at("feature_names").get<std::vector<std::string>>();
  require(std::equal(names.begin(), names.end(), meta_feature_names().begin(),
                     meta_feature_names().end()),
          ErrorCode::Parse, "meta-feature registry changed since meta.json was written");
  const double alpha = j.at("alpha").get<double>();
  for (const auto& r : j.at("records")) {
    MetaRecord rec;
    rec.dataset_id = r.at("dataset_id").get<std::string>();
    const auto values = r.at("features").get<std::vector<double>>();
    require(values.size() == kMetaFeatures, ErrorCode::Parse, "bad meta-feature vector");
    std::copy(values.begin(), values.end(), rec.features.values.begin());
    rec.quality = quality_from_json(r.at("quality"));
    rec.targets = binarize_targets(rec.quality, alpha);
    m.records.push_back(std::move(rec));
  }
  require(!m.records.empty(), ErrorCode::Parse, "meta-dataset has no records");
  return m;
}

// ---------------------------------------------------------------------------
// Models

inline fs::path model_path(const fs::path& dir, const std::string& name) {
  return dir / (name + ".json");
}

inline std::vector<RecommenderModel> train_models(const MetaDataset& meta, const RunConfig& cfg) {
  std::vector<RecommenderModel> out;
  for (const auto& rc : cfg.recommender_configs()) {
    out.push_back(train_recommender(meta.records, meta.methods, meta.multipliers, meta.k, rc,
                                    cfg.workers));
  }
  return out;
}

inline RecommenderModel load_model(const fs::path& path) {
  return recommender_from_json(read_json_file(path));
}

}  // namespace resrec::pipeline
