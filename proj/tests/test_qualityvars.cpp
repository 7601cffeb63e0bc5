#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace resrec;

namespace {

// Grid with the given methods and multipliers and random scores. Cells listed
// in `skip` are marked infeasible.
QualityGrid random_grid(Rng& rng, const std::vector<ResamplingSpec>& methods,
                        const std::vector<double>& multipliers, int k,
                        const std::set<std::string>& skip = {}) {
  QualityGrid g;
  g.dataset_id = "g";
  g.learner = "dtree";
  g.k = k;
  g.methods = methods;
  g.multipliers = multipliers;
  auto vec = [&](double shift) {
    QualityVector v(static_cast<std::size_t>(k));
    for (auto& x : v) x = std::clamp(0.5 + shift + 0.1 * rng.normal(), 0.0, 1.0);
    return v;
  };
  g.cells.push_back({ResamplingSpec::none(), vec(0.0), {}});
  for (const auto& m : methods) {
    for (double mult : multipliers) {
      const auto spec = m.with_multiplier(mult);
      if (skip.count(to_string(spec))) {
        g.cells.push_back({spec, {}, "infeasible"});
      } else {
        g.cells.push_back({spec, vec(0.08 * rng.normal()), {}});
      }
    }
  }
  return g;
}

std::vector<double> quarter_grid() { return multiplier_range(1.25, 4.0, 0.25); }

}  // namespace

TEST(QualityVariables, WindowIsStrict) {
  // With step 0.25 and epsilon 0.75 the window is m-0.5 .. m+0.5.
  Rng rng(1);
  const auto mults = quarter_grid();
  const auto g = random_grid(rng, {ResamplingSpec::ros(1)}, mults, 10);
  const auto qv = compute_quality_variables(g, 0.75);
  const auto& cells = qv.methods[0].cells;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    double expect = 0;
    for (std::size_t j = 0; j < cells.size(); ++j) {
      const auto di = static_cast<long>(i) - static_cast<long>(j);
      if (di >= -2 && di <= 2) expect = std::max(expect, cells[j].q_pval);
    }
    EXPECT_EQ(cells[i].q_pvalw, expect) << "m=" << cells[i].multiplier;
  }
}

TEST(QualityVariables, Baseline) {
  Rng rng(2);
  const auto g = random_grid(rng, {ResamplingSpec::ros(1)}, {1.5, 2.0}, 5);
  const auto qv = compute_quality_variables(g, 0.75);
  EXPECT_DOUBLE_EQ(qv.q0_mean, g.baseline().mean());
  EXPECT_EQ(qv.methods[0].cells[0].q_pval,
            stats::paired_ttest_pvalue(g.find(ResamplingSpec::ros(1.5))->scores, g.baseline().scores));
}

TEST(QualityVariables, SingleFeasibleMultiplier) {
  Rng rng(3);
  const auto g = random_grid(rng, {ResamplingSpec::rus(1)}, {1.5, 2.0, 2.5}, 8, {"rus,2", "rus,2.5"});
  const auto qv = compute_quality_variables(g, 0.75);
  const auto& mq = qv.methods[0];
  EXPECT_TRUE(mq.present);
  EXPECT_EQ(mq.cells[0].q_pvalw, mq.cells[0].q_pval);
  EXPECT_EQ(mq.m_star, 1.5);
  EXPECT_FALSE(mq.cells[1].feasible);
}

TEST(QualityVariables, AllSkippedMethodIsAbsent) {
  Rng rng(4);
  const auto g = random_grid(rng, {ResamplingSpec::rus(1), ResamplingSpec::ros(1)}, {5.0, 6.0}, 8,
                             {"rus,5", "rus,6"});
  const auto qv = compute_quality_variables(g, 0.75);
  EXPECT_FALSE(qv.methods[0].present);
  EXPECT_TRUE(std::isnan(qv.methods[0].m_star));
  const auto t = binarize_targets(qv, 0.05);
  EXPECT_EQ(t.methods[0].y_r, 0);
  EXPECT_TRUE(std::isnan(t.methods[0].z_r));
  EXPECT_TRUE(qv.methods[1].present);
}

TEST(QualityVariables, PropertiesOnRandomGrids) {
  Rng rng(5);
  const std::vector<ResamplingSpec> methods = {ResamplingSpec::ros(1), ResamplingSpec::rus(1),
                                               ResamplingSpec::smote(5, 1)};
  for (int trial = 0; trial < 50; ++trial) {
    std::set<std::string> skip;
    for (double m : quarter_grid()) {
      if (rng.uniform() < 0.3) skip.insert(to_string(ResamplingSpec::rus(m)));
    }
    const auto g = random_grid(rng, methods, quarter_grid(), 10, skip);
    const double eps = 0.25 + rng.uniform();
    const double alpha = 0.01 + 0.2 * rng.uniform();
    const auto qv = compute_quality_variables(g, eps);
    const auto t = binarize_targets(qv, alpha);
    for (std::size_t r = 0; r < qv.methods.size(); ++r) {
      const auto& mq = qv.methods[r];
      double min_pvalw = 2, min_pval = 2;
      double arg_w = 0, arg_p = 0;
      std::uint8_t max_y = 0;
      for (std::size_t i = 0; i < mq.cells.size(); ++i) {
        const auto& c = mq.cells[i];
        max_y = std::max(max_y, t.methods[r].y[i]);
        if (!c.feasible) {
          EXPECT_EQ(t.methods[r].y[i], 0);
          continue;
        }
        EXPECT_GE(c.q_pvalw, c.q_pval);
        EXPECT_GE(c.q_pval, 0.0);
        EXPECT_LE(c.q_pval, 1.0);
        EXPECT_EQ(t.methods[r].y[i], c.q_pval < alpha ? 1 : 0);
        if (c.q_pvalw < min_pvalw) {
          min_pvalw = c.q_pvalw;
          arg_w = c.multiplier;
        }
        if (c.q_pval < min_pval) {
          min_pval = c.q_pval;
          arg_p = c.multiplier;
        }
      }
      EXPECT_EQ(t.methods[r].y_r, max_y);
      EXPECT_EQ(t.methods[r].y_r, min_pval < alpha ? 1 : 0);
      if (mq.present) {
        EXPECT_EQ(mq.m_star, arg_w);
        EXPECT_EQ(t.methods[r].z_r, arg_p);
        const auto* star = g.find(mq.method.with_multiplier(mq.m_star));
        EXPECT_DOUBLE_EQ(mq.q_mean_at_star, star->mean());
      }
    }
    // Pure function: recomputation is bit-identical.
    const auto again = compute_quality_variables(g, eps);
    for (std::size_t r = 0; r < qv.methods.size(); ++r) {
      for (std::size_t i = 0; i < qv.methods[r].cells.size(); ++i) {
        EXPECT_EQ(again.methods[r].cells[i].q_pval, qv.methods[r].cells[i].q_pval);
      }
    }
  }
}

TEST(QualityVariables, TiesResolveToSmallestMultiplier) {
  QualityGrid g;
  g.k = 4;
  g.methods = {ResamplingSpec::ros(1)};
  g.multipliers = {1.5, 2.0, 2.5};
  const QualityVector base{0.5, 0.6, 0.7, 0.8};
  g.cells.push_back({ResamplingSpec::none(), base, {}});
  for (double m : g.multipliers) g.cells.push_back({ResamplingSpec::ros(m), {0.6, 0.7, 0.8, 0.9}, {}});
  const auto qv = compute_quality_variables(g, 0.75);
  EXPECT_EQ(qv.methods[0].m_star, 1.5);
  const auto t = binarize_targets(qv, 0.05);
  EXPECT_EQ(t.methods[0].z_r, 1.5);
  EXPECT_EQ(t.methods[0].y_r, 1);  // constant positive differences
}

TEST(Targets, Examples) {
  QualityVariables qv;
  MethodQuality mq;
  mq.method = ResamplingSpec::ros(1);
  for (double p : {0.04, 0.5, 0.05}) {
    CellQuality c;
    c.feasible = true;
    c.multiplier = 1.0 + p;
    c.q_pval = c.q_pvalw = p;
    mq.cells.push_back(c);
  }
  mq.present = true;
  qv.methods.push_back(mq);
  auto t = binarize_targets(qv, 0.05);
  EXPECT_EQ(t.methods[0].y, (std::vector<std::uint8_t>{1, 0, 0}));
  EXPECT_EQ(t.methods[0].y_r, 1);
  for (auto& c : qv.methods[0].cells) c.q_pval = c.q_pvalw = 0.5;
  t = binarize_targets(qv, 0.05);
  EXPECT_EQ(t.methods[0].y, (std::vector<std::uint8_t>{0, 0, 0}));
  EXPECT_EQ(t.methods[0].y_r, 0);
  EXPECT_THROW(binarize_targets(qv, 1.0), Error);
}

TEST(Targets, WindowedSwitchReadsPvalw) {
  QualityVariables qv;
  MethodQuality mq;
  CellQuality c;
  c.feasible = true;
  c.q_pval = 0.01;
  c.q_pvalw = 0.2;
  mq.cells.push_back(c);
  qv.methods.push_back(mq);
  EXPECT_EQ(binarize_targets(qv, 0.05, false).methods[0].y[0], 1);
  EXPECT_EQ(binarize_targets(qv, 0.05, true).methods[0].y[0], 0);
}

TEST(PairedTTest, ShiftingResampledScoresLowersPValue) {
  Rng rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> a(20), b(20);
    for (std::size_t j = 0; j < 20; ++j) {
      a[j] = rng.uniform();
      b[j] = rng.uniform();
    }
    double prev = stats::paired_ttest_pvalue(a, b);
    for (double c : {0.01, 0.02, 0.05, 0.1}) {
      auto shifted = a;
      for (auto& v : shifted) v += c;
      const double p = stats::paired_ttest_pvalue(shifted, b);
      EXPECT_LT(p, prev);
      prev = p;
    }
  }
}

TEST(QualityRow, ColumnNames) {
  Rng rng(7);
  const auto g = random_grid(rng, {ResamplingSpec::smote(5, 1)}, {1.5, 2.0}, 5);
  const auto qv = compute_quality_variables(g, 0.75);
  const auto [header, row] = quality_row(qv, binarize_targets(qv, 0.05));
  ASSERT_EQ(header.size(), row.size());
  EXPECT_EQ(header[0], "q0mean");
  EXPECT_EQ(header[1], "qmean[smote5][1.5]");
  EXPECT_EQ(header[2], "qpval[smote5][1.5]");
  EXPECT_EQ(header[4], "y[smote5][1.5]");
  EXPECT_EQ(header.back(), "zr[smote5]");
}

TEST(QualityVariables, Errors) {
  QualityGrid g;
  EXPECT_THROW(compute_quality_variables(g, 0.75), Error);
  Rng rng(8);
  const auto ok = random_grid(rng, {ResamplingSpec::ros(1)}, {1.5}, 5);
  EXPECT_THROW(compute_quality_variables(ok, 0.0), Error);
}
