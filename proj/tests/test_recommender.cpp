#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace resrec;

namespace {

// Meta-records with random meta-features. A cell is significant when
// reversed_ir exceeds a per-cell threshold, so the targets are learnable.
std::vector<MetaRecord> synthetic_records(Rng& rng, std::size_t n, const std::vector<ResamplingSpec>& methods,
                                          const std::vector<double>& mults) {
  std::vector<MetaRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    MetaRecord rec;
    rec.dataset_id = "d" + std::to_string(i);
    for (auto& v : rec.features.values) v = rng.uniform();
    rec.quality.q0_mean = 0.5;
    rec.quality.epsilon = 0.75;
    rec.quality.multipliers = mults;
    const double ir_feature = rec.features.values[meta_feature_index("reversed_ir")];
    for (std::size_t r = 0; r < methods.size(); ++r) {
      MethodQuality mq;
      mq.method = methods[r];
      mq.present = true;
      for (std::size_t j = 0; j < mults.size(); ++j) {
        CellQuality c;
        c.feasible = true;
        c.multiplier = mults[j];
        const double threshold = 0.3 + 0.4 * static_cast<double>((r + j) % 3) / 2.0;
        c.q_pval = ir_feature > threshold ? 0.01 * rng.uniform() : 0.2 + 0.8 * rng.uniform();
        c.q_pvalw = c.q_pval;
        mq.cells.push_back(c);
      }
      mq.m_star = mults.front();
      rec.quality.methods.push_back(mq);
    }
    rec.targets = binarize_targets(rec.quality, 0.05);
    out.push_back(std::move(rec));
  }
  return out;
}

// Model whose meta-models are constants: probabilities[r * |M| + i].
RecommenderModel constant_a1(const std::vector<ResamplingSpec>& methods, const std::vector<double>& mults,
                             const std::vector<double>& probabilities) {
  RecommenderModel m;
  m.config.name = "const";
  m.config.approach = Approach::PerCell;
  m.config.features = {"reversed_ir"};
  m.feature_indices = {meta_feature_index("reversed_ir")};
  m.methods = methods;
  m.multipliers = mults;
  m.cv_k = 5;
  for (double p : probabilities) m.classifiers.emplace_back(ConstantModel{p}, 1);
  return m;
}

RecommenderModel constant_a2(const std::vector<ResamplingSpec>& methods, const std::vector<double>& mults,
                             const std::vector<double>& probabilities, const std::vector<double>& z) {
  auto m = constant_a1(methods, mults, probabilities);
  m.config.approach = Approach::PerMethod;
  for (double v : z) m.regressors.emplace_back(ConstantModel{v}, 1);
  return m;
}

const std::vector<ResamplingSpec> kTwo = {ResamplingSpec::ros(1), ResamplingSpec::smote(5, 1)};

}  // namespace

TEST(SnapToGrid, NearestWithTiesDown) {
  const auto quarter = multiplier_range(1.25, 10.0, 0.25);
  EXPECT_EQ(snap_to_grid(3.13, quarter), 3.25);
  EXPECT_EQ(snap_to_grid(3.12, quarter), 3.0);
  EXPECT_EQ(snap_to_grid(3.125, quarter), 3.0);
  EXPECT_EQ(snap_to_grid(3.13, multiplier_range(1.5, 4.0, 0.5)), 3.0);
  EXPECT_EQ(snap_to_grid(3.25, multiplier_range(1.5, 4.0, 0.5)), 3.0);
  EXPECT_EQ(snap_to_grid(0.2, quarter), 1.25);
  EXPECT_EQ(snap_to_grid(42.0, quarter), 10.0);
  EXPECT_THROW(snap_to_grid(1.0, {}), Error);
}

TEST(Recommend, AllNegativeGivesNoResampling) {
  const auto s = testing_support::small_mixture(1);
  const auto a1 = constant_a1(kTwo, {1.5, 2.0}, {0.1, 0.2, 0.49, 0.3});
  EXPECT_EQ(recommend(a1, s).spec, ResamplingSpec::none());
  EXPECT_EQ(recommend(a1, s).approach, "A1");
  const auto a2 = constant_a2(kTwo, {1.5, 2.0}, {0.1, 0.4}, {2.0, 2.0});
  EXPECT_EQ(recommend(a2, s).spec, ResamplingSpec::none());
  EXPECT_EQ(recommend(a2, s).approach, "A2");
  EXPECT_EQ(recommend(a2, s).spec.effective_multiplier(), 1.0);
}

TEST(Recommend, SinglePositiveCellWins) {
  const auto s = testing_support::small_mixture(1);
  const auto a1 = constant_a1(kTwo, {1.5, 2.0}, {0.1, 0.2, 0.3, 0.8});
  EXPECT_EQ(recommend(a1, s).spec, ResamplingSpec::smote(5, 2.0));
}

TEST(Recommend, PerCellArgmaxMatchesExhaustiveScan) {
  const auto s = testing_support::small_mixture(2);
  const std::vector<double> mults = {1.5, 2.0, 2.5};
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> p(kTwo.size() * mults.size());
    // Coarse values force ties between cells.
    for (auto& v : p) v = static_cast<double>(rng.integer(0, 8)) / 8.0;
    const auto model = constant_a1(kTwo, mults, p);
    ResamplingSpec expect = ResamplingSpec::none();
    double best = -1;
    for (std::size_t r = 0; r < kTwo.size(); ++r) {
      for (std::size_t i = 0; i < mults.size(); ++i) {
        const double v = p[r * mults.size() + i];
        if (v >= 0.5 && v > best) {
          best = v;
          expect = kTwo[r].with_multiplier(mults[i]);
        }
      }
    }
    EXPECT_EQ(recommend(model, s).spec, expect);
  }
}

TEST(Recommend, PerMethodPicksBestMethodAndSnapsMultiplier) {
  const auto s = testing_support::small_mixture(4);
  const auto mults = multiplier_range(1.25, 10.0, 0.25);
  const auto model = constant_a2(kTwo, mults, {0.6, 0.9}, {7.7, 3.13});
  const auto detail = recommend_detail(model, s);
  EXPECT_EQ(detail.recommendation.spec, ResamplingSpec::smote(5, 3.25));
  ASSERT_EQ(detail.candidates.size(), 2u);
  EXPECT_DOUBLE_EQ(detail.candidates[1].predicted_multiplier, 3.13);
  EXPECT_EQ(detail.candidates[0].spec, ResamplingSpec::ros(7.75));
  const auto clipped = constant_a2(kTwo, mults, {0.6, 0.1}, {0.3, 3.0});
  EXPECT_EQ(recommend(clipped, s).spec, ResamplingSpec::ros(1.25));
}

TEST(Recommend, InfeasibleWinnerFallsThrough) {
  const auto s = testing_support::small_mixture(5);
  ASSERT_LT(imbalance_ratio(s), 8.0);
  const std::vector<ResamplingSpec> methods = {ResamplingSpec::rus(1), ResamplingSpec::ros(1)};
  const auto model = constant_a1(methods, {2.0, 8.0}, {0.3, 0.95, 0.7, 0.6});
  EXPECT_EQ(recommend(model, s).spec, ResamplingSpec::ros(2.0));
  const auto only_bad = constant_a1(methods, {2.0, 8.0}, {0.3, 0.95, 0.2, 0.2});
  EXPECT_EQ(recommend(only_bad, s).spec, ResamplingSpec::none());
}

TEST(Recommend, ExecutesNoBaseLearnerFits) {
  Rng rng(6);
  const auto mults = std::vector<double>{1.5, 2.0};
  const auto meta = synthetic_records(rng, 30, kTwo, mults);
  const auto s = testing_support::small_mixture(6);
  for (const auto& name : {"dtree-1", "dtree-2"}) {
    const auto model = train_recommender(meta, kTwo, mults, 5, recommender_preset(name));
    const auto before = dataset_fit_counter().load();
    for (int i = 0; i < 5; ++i) recommend(model, s);
    EXPECT_EQ(dataset_fit_counter().load(), before);
  }
}

TEST(Train, FullGridHas216CellClassifiers) {
  std::vector<ResamplingSpec> methods = {ResamplingSpec::ros(1), ResamplingSpec::rus(1)};
  for (int k : {1, 3, 5, 7}) methods.push_back(ResamplingSpec::smote(k, 1));
  const auto mults = multiplier_range(1.25, 10.0, 0.25);
  Rng rng(7);
  const auto meta = synthetic_records(rng, 24, methods, mults);
  const auto a1 = train_recommender(meta, methods, mults, 20, recommender_preset("dtree-1"));
  EXPECT_EQ(a1.classifiers.size(), 216u);
  EXPECT_TRUE(a1.regressors.empty());
  const auto a2 = train_recommender(meta, methods, mults, 20, recommender_preset("dtree-2"));
  EXPECT_EQ(a2.classifiers.size(), 6u);
  EXPECT_EQ(a2.regressors.size(), 6u);
  EXPECT_TRUE(std::holds_alternative<AdaBoostClassifier>(a1.classifiers[0].impl()));
}

TEST(Train, SingleClassTargetsUseLaplacePrior) {
  Rng rng(8);
  const std::vector<double> mults = {1.5, 2.0};
  auto meta = synthetic_records(rng, 10, kTwo, mults);
  for (auto& rec : meta) {
    for (auto& mq : rec.quality.methods) {
      for (auto& c : mq.cells) c.q_pval = c.q_pvalw = 0.9;
    }
  }
  const auto model = train_recommender(meta, kTwo, mults, 5, recommender_preset("dtree-1"));
  for (const auto& c : model.classifiers) {
    ASSERT_TRUE(std::holds_alternative<ConstantModel>(c.impl()));
    EXPECT_DOUBLE_EQ(std::get<ConstantModel>(c.impl()).score, 1.0 / 12.0);
  }
  EXPECT_EQ(recommend(model, testing_support::small_mixture(8)).spec, ResamplingSpec::none());

  for (auto& rec : meta) {
    for (auto& mq : rec.quality.methods) {
      for (auto& c : mq.cells) c.q_pval = c.q_pvalw = 0.001;
    }
  }
  const auto positive = train_recommender(meta, kTwo, mults, 5, recommender_preset("dtree-2"));
  EXPECT_DOUBLE_EQ(std::get<ConstantModel>(positive.classifiers[0].impl()).score, 11.0 / 12.0);
}

TEST(Train, RegressorFallsBackToGridMidpoint) {
  Rng rng(9);
  const std::vector<double> mults = {1.5, 2.0, 4.0};
  auto meta = synthetic_records(rng, 10, kTwo, mults);
  for (auto& rec : meta) {
    for (auto& c : rec.quality.methods[0].cells) c.q_pval = 0.9;
  }
  const auto model = train_recommender(meta, kTwo, mults, 5, recommender_preset("dtree-2"));
  const std::vector<double> x(model.feature_indices.size(), 0.5);
  EXPECT_DOUBLE_EQ(model.regressors[0].predict_score(x), 2.75);
}

TEST(Train, RecordsWithDifferentGridsRejected) {
  Rng rng(10);
  auto meta = synthetic_records(rng, 5, kTwo, {1.5, 2.0});
  EXPECT_THROW(train_recommender(meta, kTwo, {1.5, 3.0}, 5, recommender_preset("dtree-1")), Error);
  EXPECT_THROW(train_recommender(std::span(meta).first(1), kTwo, {1.5, 2.0}, 5, recommender_preset("dtree-1")),
               Error);
}

TEST(Presets, MatchDocumentedSettings) {
  for (const auto& name : recommender_preset_names()) {
    const auto cfg = recommender_preset(name);
    EXPECT_EQ(cfg.approach, name.back() == '1' ? Approach::PerCell : Approach::PerMethod) << name;
    EXPECT_DOUBLE_EQ(cfg.alpha, name == "logreg-1" ? 0.3 : 0.05) << name;
    for (const auto& f : cfg.features) EXPECT_NO_THROW(meta_feature_index(f));
  }
  EXPECT_EQ(recommender_preset("logreg-1").features.size(), 8u);
  EXPECT_EQ(recommender_preset("dtree-1").classifier.n_estimators, 10);
  EXPECT_THROW(recommender_preset("svm-1"), Error);
}

TEST(Train, TrainingRecoversLearnableSignal) {
  Rng rng(11);
  const std::vector<double> mults = {1.5, 2.0, 2.5};
  const auto meta = synthetic_records(rng, 60, kTwo, mults);
  RecommenderConfig cfg = recommender_preset("dtree-1");
  cfg.features = {"reversed_ir"};
  const auto model = train_recommender(meta, kTwo, mults, 5, cfg);
  // Cell (ros, 1.5) is significant iff reversed_ir > 0.3.
  EXPECT_LT(model.classifiers[0].predict_score(std::vector<double>{0.1}), 0.5);
  EXPECT_GE(model.classifiers[0].predict_score(std::vector<double>{0.9}), 0.5);
}

TEST(Recommender, SerializationRoundTrip) {
  Rng rng(12);
  const std::vector<double> mults = {1.5, 2.0, 2.5};
  const auto meta = synthetic_records(rng, 40, kTwo, mults);
  const auto s = testing_support::small_mixture(12);
  for (const auto& name : {"dtree-1", "dtree-2", "logreg-1"}) {
    const auto model = train_recommender(meta, kTwo, mults, 5, recommender_preset(name));
    const auto back = recommender_from_json(nlohmann::json::parse(recommender_to_json(model).dump()));
    EXPECT_EQ(back.config.name, model.config.name);
    EXPECT_EQ(back.config.alpha, model.config.alpha);
    EXPECT_EQ(back.feature_indices, model.feature_indices);
    const auto a = recommend_detail(model, s), b = recommend_detail(back, s);
    EXPECT_EQ(a.recommendation.spec, b.recommendation.spec);
    ASSERT_EQ(a.candidates.size(), b.candidates.size());
    for (std::size_t i = 0; i < a.candidates.size(); ++i) {
      EXPECT_EQ(a.candidates[i].probability, b.candidates[i].probability);
    }
    EXPECT_EQ(recommend(model, s).spec, recommend(model, s).spec);
  }
  EXPECT_THROW(recommender_from_json({{"format", "x"}}), Error);
}

TEST(MetaDataset, BuiltFromBank) {
  std::vector<BankEntry> bank;
  const std::vector<ResamplingSpec> methods = {ResamplingSpec::ros(1), ResamplingSpec::rus(1)};
  for (std::size_t i = 0; i < 3; ++i) {
    auto s = testing_support::small_mixture(13, i);
    auto g = quality_grid(s, LearnerSpec::decision_tree(), methods, {1.5, 2.0}, 5, 1);
    bank.push_back({std::move(s), std::move(g)});
  }
  const auto meta = build_meta_dataset(bank, 0.75, 0.05);
  ASSERT_EQ(meta.size(), 3u);
  const auto again = build_meta_dataset(bank, 0.75, 0.05, 3);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(meta[i].dataset_id, bank[i].dataset.id());
    EXPECT_EQ(meta[i].features.values, again[i].features.values);
    EXPECT_EQ(meta[i].targets.methods[0].y, again[i].targets.methods[0].y);
  }
  auto broken = bank;
  broken[1].grid.multipliers = {1.5};
  EXPECT_THROW(build_meta_dataset(broken, 0.75, 0.05), Error);
}
