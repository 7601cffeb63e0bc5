#include <cmath>
#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "resrec/resrec.hpp"

namespace {

using namespace resrec;
using resrec::pipeline::RunConfig;
namespace fs = std::filesystem;

struct Options {
  RunConfig run;
  std::string learner = "dtree";
  std::vector<std::string> methods = {"ros", "rus", "smote5"};
  std::string import_dir;
  std::string model_path;
  std::string data_path;
};

void progress(const std::string& line) { std::cerr << line << '\n'; }

int report_error(std::string_view code, std::string message) {
  for (auto& c : message) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  std::cerr << "error: " << code << ": " << message << '\n';
  return 1;
}

RunConfig resolve(const Options& o) {
  RunConfig cfg = o.run;
  cfg.learner.kind = parse_learner_kind(o.learner);
  require(cfg.learner.kind == LearnerKind::DecisionTree || cfg.learner.kind == LearnerKind::KNN ||
              cfg.learner.kind == LearnerKind::LogRegL1,
          ErrorCode::InvalidArgument, "base learner must be dtree, knn or logreg");
  cfg.methods.clear();
  for (const auto& m : o.methods) {
    auto spec = parse_method(m);
    require(spec.method != Method::None, ErrorCode::InvalidArgument,
            "'none' is always evaluated and cannot be listed");
    cfg.methods.push_back(spec);
  }
  cfg.mixture.seed = cfg.seed;
  cfg.validate();
  cfg.mixture.validate();
  return cfg;
}

void print_table(const AssessmentReport& report) {
  std::printf("%-16s %s\n", "strategy", "mean RA");
  for (const auto& s : report.strategies) std::printf("%-16s %.4f\n", s.label.c_str(), s.ara);
}

void cmd_gen(const Options& o) {
  const auto cfg = resolve(o);
  std::vector<Dataset> data = pipeline::generate_bank(cfg.mixture, cfg.count, cfg.workers);
  if (!o.import_dir.empty()) {
    for (auto& s : pipeline::load_datasets(o.import_dir)) data.push_back(std::move(s));
  }
  const auto& m = cfg.mixture;
  nlohmann::json provenance{{"seed", cfg.seed},
                            {"count", cfg.count},
                            {"dim", {m.min_dim, m.max_dim}},
                            {"size", {m.min_size, m.max_size}},
                            {"minor_fraction", {m.min_minor_fraction, m.max_minor_fraction}},
                            {"components", {m.min_components, m.max_components}},
                            {"mean_radius", m.mean_radius},
                            {"diag_scale", {m.min_diag_scale, m.max_diag_scale}},
                            {"offdiag_scale", m.offdiag_scale},
                            {"imported_from", o.import_dir}};
  pipeline::write_datasets(data, cfg.datasets_dir(), provenance);
  std::printf("gen: %zu datasets in %s\n", data.size(), cfg.datasets_dir().string().c_str());
}

void cmd_grid(const Options& o) {
  const auto cfg = resolve(o);
  const auto data = pipeline::load_datasets(cfg.datasets_dir());
  pipeline::GridStats stats;
  progress("grid: " + std::to_string(data.size()) + " datasets, " +
           std::to_string(1 + cfg.methods.size() * cfg.multipliers().size()) + " cells each");
  pipeline::run_grids(data, cfg, cfg.grids_dir(), &stats);
  const auto total = stats.cache_hits + stats.computed;
  std::printf("grid: %zu cells evaluated, %zu computed, %zu cache hits (%.1f%%), %zu skipped\n",
              total, stats.computed, stats.cache_hits,
              total ? 100.0 * static_cast<double>(stats.cache_hits) / static_cast<double>(total) : 100.0,
              stats.skipped);
}

void cmd_meta(const Options& o) {
  const auto cfg = resolve(o);
  const auto data = pipeline::load_datasets(cfg.datasets_dir());
  const auto bank = pipeline::load_bank(data, cfg.grids_dir());
  const auto meta = build_meta_dataset(bank, cfg.epsilon, cfg.alpha, cfg.workers);
  pipeline::write_meta(meta, bank, cfg.meta_dir());
  std::printf("meta: %zu records in %s\n", meta.size(), cfg.meta_dir().string().c_str());
}

void cmd_train(const Options& o) {
  const auto cfg = resolve(o);
  const auto meta = pipeline::read_meta(cfg.meta_dir());
  pipeline::ensure_dir(cfg.models_dir());
  for (const auto& model : pipeline::train_models(meta, cfg)) {
    const auto path = pipeline::model_path(cfg.models_dir(), model.config.name);
    pipeline::write_json(recommender_to_json(model), path);
    std::printf("train: %s -> %s\n", model.config.name.c_str(), path.string().c_str());
  }
}

void cmd_recommend(const Options& o) {
  require(!o.model_path.empty() && !o.data_path.empty(), ErrorCode::InvalidArgument,
          "recommend needs --model and --data");
  const auto model = pipeline::load_model(o.model_path);
  const auto s = ingest_csv(o.data_path);
  const auto detail = recommend_detail(model, s);
  auto candidates = nlohmann::json::array();
  for (const auto& c : detail.candidates) {
    nlohmann::json j{{"cell", to_string(c.spec)}, {"p", c.probability}, {"label", c.label}};
    if (std::isfinite(c.predicted_multiplier)) j["predicted_multiplier"] = c.predicted_multiplier;
    candidates.push_back(j);
  }
  std::printf("%s\n", to_string(detail.recommendation.spec).c_str());
  std::fflush(stdout);
  const nlohmann::json record{{"dataset", s.id()},
                              {"model", model.config.name},
                              {"approach", detail.recommendation.approach},
                              {"recommendation", to_string(detail.recommendation.spec)},
                              {"candidates", candidates}};
  std::cerr << record.dump() << '\n';
}

void cmd_assess(const Options& o) {
  const auto cfg = resolve(o);
  const auto data = pipeline::load_datasets(cfg.datasets_dir());
  const auto bank = pipeline::load_bank(data, cfg.grids_dir());
  const auto report = assess_bank(bank, cfg.learner, cfg.recommender_configs(),
                                  all_static_strategies(), cfg.k_prime, cfg.seed,
                                  {cfg.workers, true});
  write_report(report, cfg.report_dir());
  print_table(report);
}

void cmd_report(const Options& o) {
  const auto cfg = resolve(o);
  const auto report = read_report(cfg.report_dir());
  write_report(report, cfg.report_dir());
  print_table(report);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Resampling recommendation for imbalanced binary classification"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "Key-value config file; command-line flags override it");
  Options o;
  auto& r = o.run;
  auto& m = r.mixture;

  app.add_option("--seed", r.seed, "Master seed")->capture_default_str();
  app.add_option("--workers", r.workers, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--out", r.out, "Output directory")->capture_default_str();
  app.add_option("--learner", o.learner, "Base learner: dtree, knn, logreg")->capture_default_str();
  app.add_option("--max-depth", r.learner.max_depth, "Tree depth limit, -1 for none")->capture_default_str();
  app.add_option("--min-leaf", r.learner.min_leaf, "Minimum rows per tree leaf")->capture_default_str();
  app.add_option("--knn-k", r.learner.k, "Neighbors of the kNN learner")->capture_default_str();
  app.add_option("--l1-strength", r.learner.l1_strength, "L1 penalty of the logistic learner")
      ->capture_default_str();
  app.add_option("--methods", o.methods, "Resampling methods, e.g. ros rus smote5")
      ->delimiter(',')
      ->capture_default_str();
  app.add_option("--mult-min", r.mult_min, "Smallest multiplier")->capture_default_str();
  app.add_option("--mult-max", r.mult_max, "Largest multiplier")->capture_default_str();
  app.add_option("--mult-step", r.mult_step, "Multiplier step")->capture_default_str();
  app.add_option("--k", r.k, "Cross-validation folds")->capture_default_str();
  app.add_option("--k-prime", r.k_prime, "Meta-level cross-validation folds")->capture_default_str();
  app.add_option("--alpha", r.alpha, "Significance level of the targets")->capture_default_str();
  app.add_option("--epsilon", r.epsilon, "Multiplier window half-width")->capture_default_str();
  app.add_option("--recommenders", r.recommenders, "Recommender presets, e.g. dtree-1 dtree-2")
      ->delimiter(',');
  app.add_option("--count", r.count, "Number of synthetic datasets")->capture_default_str();
  app.add_option("--min-dim", m.min_dim, "Smallest feature count")->capture_default_str();
  app.add_option("--max-dim", m.max_dim, "Largest feature count")->capture_default_str();
  app.add_option("--min-size", m.min_size, "Smallest row count")->capture_default_str();
  app.add_option("--max-size", m.max_size, "Largest row count")->capture_default_str();
  app.add_option("--min-minor-fraction", m.min_minor_fraction, "Smallest minor/major size ratio")->capture_default_str();
  app.add_option("--max-minor-fraction", m.max_minor_fraction, "Largest minor/major size ratio")->capture_default_str();
  app.add_option("--min-components", m.min_components, "Fewest mixture components per class")->capture_default_str();
  app.add_option("--max-components", m.max_components, "Most mixture components per class")->capture_default_str();
  app.add_option("--mean-radius", m.mean_radius, "Spread of component means")->capture_default_str();
  app.add_option("--min-diag-scale", m.min_diag_scale, "Smallest covariance diagonal scale")->capture_default_str();
  app.add_option("--max-diag-scale", m.max_diag_scale, "Largest covariance diagonal scale")->capture_default_str();
  app.add_option("--offdiag-scale", m.offdiag_scale, "Covariance off-diagonal scale")->capture_default_str();

  auto* gen = app.add_subcommand("gen", "Write synthetic (and imported) datasets");
  gen->add_option("--import", o.import_dir, "Also ingest every CSV in this directory");
  auto* grid = app.add_subcommand("grid", "Compute quality grids (resumable)");
  auto* meta = app.add_subcommand("meta", "Build the meta-dataset from the grids");
  auto* train = app.add_subcommand("train", "Train the recommenders on the meta-dataset");
  auto* rec = app.add_subcommand("recommend", "Recommend a resampling cell for one dataset");
  rec->add_option("--model", o.model_path, "Trained recommender JSON");
  rec->add_option("--data", o.data_path, "Dataset CSV");
  auto* assess = app.add_subcommand("assess", "Meta-level cross-validation of all strategies");
  auto* report = app.add_subcommand("report", "Rebuild report files from ra.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error(to_string(ErrorCode::InvalidArgument), e.what()) + 1;
  }

  try {
    if (*gen) cmd_gen(o);
    if (*grid) cmd_grid(o);
    if (*meta) cmd_meta(o);
    if (*train) cmd_train(o);
    if (*rec) cmd_recommend(o);
    if (*assess) cmd_assess(o);
    if (*report) cmd_report(o);
  } catch (const Error& e) {
    return report_error(to_string(e.code()), e.what());
  } catch (const std::exception& e) {
    return report_error("E_INTERNAL", e.what());
  }
  return 0;
}
