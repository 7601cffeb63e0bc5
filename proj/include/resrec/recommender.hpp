#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "resrec/data.hpp"
#include "resrec/error.hpp"
#include "resrec/evaluation.hpp"
#include "resrec/learners.hpp"
#include "resrec/metafeatures.hpp"
#include "resrec/parallel.hpp"
#include "resrec/qualityvars.hpp"

namespace resrec {

/// One meta-example: f(S) with the quality-variables and targets of S.
struct MetaRecord {
  std::string dataset_id;
  MetaFeatures features;
  QualityVariables quality;
  MetaTargets targets;
};

struct BankEntry {
  Dataset dataset;
  QualityGrid grid;
};

/// Checks that all grids share methods, multipliers and k.
inline void check_consistent_grids(std::span<const BankEntry> bank) {
  require(!bank.empty(), ErrorCode::InvalidArgument, "empty dataset bank");
  const auto& ref = bank.front().grid;
  for (const auto& e : bank) {
    require(e.grid.k == ref.k && e.grid.multipliers == ref.multipliers &&
                e.grid.methods.size() == ref.methods.size(),
            ErrorCode::InvalidArgument, "inconsistent grid shapes across the bank");
    for (std::size_t r = 0; r < ref.methods.size(); ++r) {
      require(e.grid.methods[r] == ref.methods[r], ErrorCode::InvalidArgument,
              "inconsistent grid methods across the bank");
    }
    require(e.grid.dataset_id == e.dataset.id(), ErrorCode::InvalidArgument,
            "grid does not belong to dataset " + e.dataset.id());
  }
}

inline MetaRecord make_meta_record(const Dataset& s, const QualityGrid& grid, double epsilon,
                                   double alpha) {
  MetaRecord rec;
  rec.dataset_id = s.id();
  rec.features = compute_meta_features(s);
  rec.quality = compute_quality_variables(grid, epsilon);
  rec.targets = binarize_targets(rec.quality, alpha);
  return rec;
}

inline std::vector<MetaRecord> build_meta_dataset(std::span<const BankEntry> bank, double epsilon,
                                                  double alpha, unsigned workers = 1) {
  check_consistent_grids(bank);
  std::vector<MetaRecord> out(bank.size());
  parallel_for(bank.size(), workers, [&](std::size_t i) {
    out[i] = make_meta_record(bank[i].dataset, bank[i].grid, epsilon, alpha);
  });
  return out;
}

// ---------------------------------------------------------------------------
// Configuration

enum class Approach { PerCell = 1, PerMethod = 2 };

struct RecommenderConfig {
  std::string name;
  Approach approach = Approach::PerCell;
  double alpha = 0.05;
  double epsilon = 0.75;
  LearnerSpec classifier = LearnerSpec::adaboost(10);
  LearnerSpec regressor = LearnerSpec::adaboost_regressor(10);
  std::vector<std::string> features;
  bool use_windowed_pval_for_targets = false;
};

namespace presets {

inline const std::vector<std::string>& cell_features() {
  static const std::vector<std::string> f = {"reversed_ir", "center_distance", "n_objects",
                                             "min_abs_cov_eig_major", "max_kurt_test_pval_minor"};
  return f;
}

inline const std::vector<std::string>& cell_features_logreg() {
  static const std::vector<std::string> f = {
      "reversed_ir",              "center_distance",          "n_objects",
      "min_abs_cov_eig_major",    "min_kurt_test_pval_minor", "max_kurt_test_pval_minor",
      "min_skew_test_pval_minor", "max_skew_test_pval_minor"};
  return f;
}

inline const std::vector<std::string>& method_features() {
  static const std::vector<std::string> f = {"reversed_ir", "center_distance"};
  return f;
}

}  // namespace presets

/// Named configurations, one pair per base learner: `<learner>-1` (per-cell
/// classifiers) and `<learner>-2` (per-method classifier + multiplier regressor).
inline RecommenderConfig recommender_preset(const std::string& name) {
  RecommenderConfig cfg;
  cfg.name = name;
  if (name == "dtree-1" || name == "knn-1") {
    cfg.approach = Approach::PerCell;
    cfg.features = presets::cell_features();
    return cfg;
  }
  if (name == "logreg-1") {
    cfg.approach = Approach::PerCell;
    cfg.alpha = 0.3;
    cfg.classifier = LearnerSpec::logreg_l1();
    cfg.features = presets::cell_features_logreg();
    return cfg;
  }
  if (name == "dtree-2" || name == "knn-2" || name == "logreg-2") {
    cfg.approach = Approach::PerMethod;
    cfg.features = presets::method_features();
    return cfg;
  }
  fail(ErrorCode::InvalidArgument, "unknown recommender preset '" + name + "'");
}

inline std::vector<std::string> recommender_preset_names() {
  return {"dtree-1", "dtree-2", "knn-1", "knn-2", "logreg-1", "logreg-2"};
}

// ---------------------------------------------------------------------------
// Trained model

struct RecommenderModel {
  RecommenderConfig config;
  std::vector<std::size_t> feature_indices;
  std::vector<ResamplingSpec> methods;
  std::vector<double> multipliers;
  int cv_k = 0;
  /// Approach 1: classifiers[r * |M| + i] for (methods[r], multipliers[i]).
  /// Approach 2: classifiers[r] and regressors[r].
  std::vector<Model> classifiers;
  std::vector<Model> regressors;
};

namespace detail {

inline Model fit_binary(const LearnerSpec& spec, MatrixView x, std::span<const double> y) {
  const double n1 = std::accumulate(y.begin(), y.end(), 0.0);
  const double n = static_cast<double>(y.size());
  if (n1 == 0.0 || n1 == n) {
    // Single-class targets: Laplace-smoothed prior.
    return {ConstantModel{(n1 + 1.0) / (n + 2.0)}, x.cols};
  }
  return fit_matrix(spec, x, y);
}

inline std::vector<double> design_matrix(std::span<const MetaRecord> meta,
                                         const std::vector<std::size_t>& features) {
  std::vector<double> x;
  x.reserve(meta.size() * features.size());
  for (const auto& rec : meta) {
    for (auto f : features) x.push_back(rec.features.values[f]);
  }
  return x;
}

}  // namespace detail

/// Trains either approach on meta-records. Targets are re-derived from the
/// stored quality-variables at the configuration's alpha.
inline RecommenderModel train_recommender(std::span<const MetaRecord> meta,
                                          const std::vector<ResamplingSpec>& methods,
                                          const std::vector<double>& multipliers, int cv_k,
                                          const RecommenderConfig& cfg, unsigned workers = 1) {
  require(meta.size() >= 2, ErrorCode::InvalidArgument, "need at least two meta-records");
  RecommenderModel model;
  model.config = cfg;
  model.methods = methods;
  model.multipliers = multipliers;
  model.cv_k = cv_k;
  for (const auto& name : cfg.features) model.feature_indices.push_back(meta_feature_index(name));
  require(!model.feature_indices.empty(), ErrorCode::InvalidArgument,
          "recommender needs at least one meta-feature");

  std::vector<MetaTargets> targets;
  for (const auto& rec : meta) {
    require(rec.quality.methods.size() == methods.size() &&
                rec.quality.multipliers == multipliers,
            ErrorCode::InvalidArgument, "meta-record " + rec.dataset_id + " has a different grid");
    targets.push_back(
        binarize_targets(rec.quality, cfg.alpha, cfg.use_windowed_pval_for_targets));
  }
  const auto xs = detail::design_matrix(meta, model.feature_indices);
  const MatrixView x{xs, meta.size(), model.feature_indices.size()};
  const std::size_t n_r = methods.size(), n_m = multipliers.size();

  if (cfg.approach == Approach::PerCell) {
    model.classifiers.resize(n_r * n_m);
    parallel_for(n_r * n_m, workers, [&](std::size_t c) {
      std::vector<double> y;
      for (const auto& t : targets) y.push_back(t.methods[c / n_m].y[c % n_m]);
      model.classifiers[c] = detail::fit_binary(cfg.classifier, x, y);
    });
    return model;
  }

  model.classifiers.resize(n_r);
  model.regressors.resize(n_r);
  const double midpoint = (*std::min_element(multipliers.begin(), multipliers.end()) +
                           *std::max_element(multipliers.begin(), multipliers.end())) /
                          2.0;
  parallel_for(n_r, workers, [&](std::size_t r) {
    std::vector<double> y, z_rows, z;
    for (std::size_t i = 0; i < meta.size(); ++i) {
      const auto& t = targets[i].methods[r];
      y.push_back(t.y_r);
      if (t.y_r == 1 && std::isfinite(t.z_r)) {
        auto row = x.row(i);
        z_rows.insert(z_rows.end(), row.begin(), row.end());
        z.push_back(t.z_r);
      }
    }
    model.classifiers[r] = detail::fit_binary(cfg.classifier, x, y);
    if (z.empty()) {
      model.regressors[r] = Model(ConstantModel{midpoint}, x.cols);
    } else {
      model.regressors[r] = fit_matrix(cfg.regressor, {z_rows, z.size(), x.cols}, z);
    }
  });
  return model;
}

// ---------------------------------------------------------------------------
// Recommendation

struct Recommendation {
  ResamplingSpec spec;
  std::string approach;
};

struct CandidateScore {
  ResamplingSpec spec;  // multiplier filled (predicted and snapped for approach 2)
  double probability = 0.0;
  int label = 0;
  double predicted_multiplier = std::numeric_limits<double>::quiet_NaN();
};

struct RecommendationDetail {
  Recommendation recommendation;
  std::vector<CandidateScore> candidates;
};

/// Nearest grid multiplier after clipping to the grid range; ties go down.
inline double snap_to_grid(double z, const std::vector<double>& grid) {
  require(!grid.empty(), ErrorCode::InvalidArgument, "empty multiplier grid");
  auto sorted = grid;
  std::sort(sorted.begin(), sorted.end());
  z = std::clamp(z, sorted.front(), sorted.back());
  double best = sorted.front();
  for (double m : sorted) {
    if (std::abs(m - z) < std::abs(best - z)) best = m;
  }
  return best;
}

inline std::string approach_name(Approach a) { return a == Approach::PerCell ? "A1" : "A2"; }

/// Meta-features and meta-model predictions only; never fits a base learner.
/// Candidates with label 1 are tried by descending probability (then method
/// order, then smaller multiplier); the first one feasible on `s` wins,
/// otherwise no-resampling.
inline RecommendationDetail recommend_detail(const RecommenderModel& model, const Dataset& s) {
  const auto f = compute_meta_features(s);
  const auto x = f.select(model.feature_indices);
  const std::size_t n_m = model.multipliers.size();

  RecommendationDetail out;
  out.recommendation = {ResamplingSpec::none(), approach_name(model.config.approach)};
  std::vector<std::tuple<double, std::size_t, double, std::size_t>> order;

  for (std::size_t r = 0; r < model.methods.size(); ++r) {
    if (model.config.approach == Approach::PerCell) {
      for (std::size_t i = 0; i < n_m; ++i) {
        CandidateScore c;
        c.spec = model.methods[r].with_multiplier(model.multipliers[i]);
        c.probability = model.classifiers[r * n_m + i].predict_score(x);
        c.label = c.probability >= 0.5 ? 1 : 0;
        if (c.label) order.emplace_back(-c.probability, r, c.spec.multiplier, out.candidates.size());
        out.candidates.push_back(c);
      }
    } else {
      CandidateScore c;
      c.probability = model.classifiers[r].predict_score(x);
      c.label = c.probability >= 0.5 ? 1 : 0;
      c.predicted_multiplier = model.regressors[r].predict_score(x);
      c.spec = model.methods[r].with_multiplier(snap_to_grid(c.predicted_multiplier, model.multipliers));
      if (c.label) order.emplace_back(-c.probability, r, 0.0, out.candidates.size());
      out.candidates.push_back(c);
    }
  }

  std::sort(order.begin(), order.end());
  for (const auto& entry : order) {
    const auto& c = out.candidates[std::get<3>(entry)];
    if (!cv_infeasibility(s, c.spec, model.cv_k)) {
      out.recommendation.spec = c.spec;
      break;
    }
  }
  return out;
}

inline Recommendation recommend(const RecommenderModel& model, const Dataset& s) {
  return recommend_detail(model, s).recommendation;
}

// ---------------------------------------------------------------------------
// Serialization

inline constexpr int kRecommenderFormatVersion = 1;

inline nlohmann::json recommender_to_json(const RecommenderModel& m) {
  nlohmann::json j{{"format", "resrec-recommender"},
                   {"version", kRecommenderFormatVersion},
                   {"name", m.config.name},
                   {"approach", static_cast<int>(m.config.approach)},
                   {"alpha", m.config.alpha},
                   {"epsilon", m.config.epsilon},
                   {"classifier", m.config.classifier},
                   {"regressor", m.config.regressor},
                   {"features", m.config.features},
                   {"use_windowed_pval_for_targets", m.config.use_windowed_pval_for_targets},
                   {"multipliers", m.multipliers},
                   {"cv_k", m.cv_k}};
  auto methods = nlohmann::json::array();
  for (const auto& r : m.methods) methods.push_back(method_name(r));
  j["methods"] = methods;
  auto cls = nlohmann::json::array();
  for (const auto& c : m.classifiers) cls.push_back(model_to_json(c));
  j["classifiers"] = cls;
  auto reg = nlohmann::json::array();
  for (const auto& c : m.regressors) reg.push_back(model_to_json(c));
  j["regressors"] = reg;
  return j;
}

inline RecommenderModel recommender_from_json(const nlohmann::json& j) {
  require(j.value("format", "") == "resrec-recommender", ErrorCode::Parse,
          "not a recommender document");
  require(j.value("version", 0) == kRecommenderFormatVersion, ErrorCode::Parse,
          "unsupported recommender version");
  RecommenderModel m;
  m.config.name = j.at("name").get<std::string>();
  m.config.approach = static_cast<Approach>(j.at("approach").get<int>());
  m.config.alpha = j.at("alpha").get<double>();
  m.config.epsilon = j.at("epsilon").get<double>();
  m.config.classifier = j.at("classifier").get<LearnerSpec>();
  m.config.regressor = j.at("regressor").get<LearnerSpec>();
  m.config.features = j.at("features").get<std::vector<std::string>>();
  m.config.use_windowed_pval_for_targets = j.at("use_windowed_pval_for_targets").get<bool>();
  m.multipliers = j.at("multipliers").get<std::vector<double>>();
  m.cv_k = j.at("cv_k").get<int>();
  for (const auto& name : j.at("methods")) m.methods.push_back(parse_method(name.get<std::string>()));
  for (const auto& name : m.config.features) m.feature_indices.push_back(meta_feature_index(name));
  for (const auto& c : j.at("classifiers")) m.classifiers.push_back(model_from_json(c));
  for (const auto& c : j.at("regressors")) m.regressors.push_back(model_from_json(c));
  const std::size_t expected =
      m.config.approach == Approach::PerCell ? m.methods.size() * m.multipliers.size() : m.methods.size();
  require(m.classifiers.size() == expected, ErrorCode::Parse, "recommender classifier count mismatch");
  return m;
}

}  // namespace resrec
