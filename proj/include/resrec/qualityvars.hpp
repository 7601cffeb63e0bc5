#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "resrec/error.hpp"
#include "resrec/evaluation.hpp"
#include "resrec/resampling.hpp"
#include "resrec/stats.hpp"

namespace resrec {

struct CellQuality {
  double multiplier = 1.0;
  bool feasible = false;
  double q_mean = 0.0;
  double q_pval = 1.0;
  double q_pvalw = 1.0;
};

/// Quality-variables of one resampling method: per-multiplier means, paired
/// t-test p-values against no-resampling and their windowed maxima, plus the
/// multiplier minimizing the windowed p-value.
struct MethodQuality {
  ResamplingSpec method;
  std::vector<CellQuality> cells;  // one per grid multiplier, grid order
  bool present = false;            // false when every cell was skipped
  double m_star = std::numeric_limits<double>::quiet_NaN();
  double q_mean_at_star = std::numeric_limits<double>::quiet_NaN();
  double q_pval_at_star = std::numeric_limits<double>::quiet_NaN();
};

struct QualityVariables {
  double q0_mean = 0.0;
  double epsilon = 0.0;
  std::vector<double> multipliers;
  std::vector<MethodQuality> methods;  // grid method order
};

/// Binarized meta-learning targets for one dataset.
struct MethodTargets {
  std::vector<std::uint8_t> y;  // y_{r,m}, one per grid multiplier
  std::uint8_t y_r = 0;
  double z_r = std::numeric_limits<double>::quiet_NaN();  // NaN when the method is absent
};

struct MetaTargets {
  double alpha = 0.05;
  std::vector<MethodTargets> methods;
};

inline QualityVariables compute_quality_variables(const QualityGrid& grid, double epsilon) {
  require(epsilon > 0.0, ErrorCode::InvalidArgument, "epsilon must be positive");
  require(!grid.cells.empty() && grid.cells.front().spec.method == Method::None &&
              !grid.baseline().skipped(),
          ErrorCode::InvalidArgument, "grid lacks the no-resampling cell");
  const auto& base = grid.baseline().scores;

  QualityVariables qv;
  qv.q0_mean = grid.baseline().mean();
  qv.epsilon = epsilon;
  qv.multipliers = grid.multipliers;

  for (const auto& method : grid.methods) {
    MethodQuality mq;
    mq.method = method;
    for (double m : grid.multipliers) {
      CellQuality cq;
      cq.multiplier = m;
      const GridCell* cell = grid.find(method.with_multiplier(m));
      if (cell && !cell->skipped()) {
        cq.feasible = true;
        cq.q_mean = cell->mean();
        cq.q_pval = stats::paired_ttest_pvalue(cell->scores, base);
        mq.present = true;
      }
      mq.cells.push_back(cq);
    }
    for (auto& cq : mq.cells) {
      if (!cq.feasible) continue;
      cq.q_pvalw = cq.q_pval;
      for (const auto& other : mq.cells) {
        if (other.feasible && std::abs(other.multiplier - cq.multiplier) < epsilon) {
          cq.q_pvalw = std::max(cq.q_pvalw, other.q_pval);
        }
      }
    }
    const CellQuality* star = nullptr;
    for (const auto& cq : mq.cells) {
      if (!cq.feasible) continue;
      if (!star || cq.q_pvalw < star->q_pvalw ||
          (cq.q_pvalw == star->q_pvalw && cq.multiplier < star->multiplier)) {
        star = &cq;
      }
    }
    if (star) {
      mq.m_star = star->multiplier;
      mq.q_mean_at_star = star->q_mean;
      mq.q_pval_at_star = star->q_pval;
    }
    qv.methods.push_back(std::move(mq));
  }
  return qv;
}

/// y_{r,m} = [q_pval < alpha], y_r = [min_m q_pval < alpha],
/// z_r = argmin_m q_pval (ties to the smaller m). With `use_windowed` the
/// per-cell targets read q_pvalw instead.
inline MetaTargets binarize_targets(const QualityVariables& qv, double alpha,
                                    bool use_windowed = false) {
  require(alpha > 0.0 && alpha < 1.0, ErrorCode::InvalidArgument, "alpha must lie in (0, 1)");
  MetaTargets t;
  t.alpha = alpha;
  for (const auto& mq : qv.methods) {
    MethodTargets mt;
    const CellQuality* best = nullptr;
    for (const auto& cq : mq.cells) {
      const double p = use_windowed ? cq.q_pvalw : cq.q_pval;
      mt.y.push_back(cq.feasible && p < alpha ? 1 : 0);
      if (!cq.feasible) continue;
      if (!best || cq.q_pval < best->q_pval ||
          (cq.q_pval == best->q_pval && cq.multiplier < best->multiplier)) {
        best = &cq;
      }
    }
    if (best) {
      mt.y_r = best->q_pval < alpha ? 1 : 0;
      mt.z_r = best->multiplier;
    }
    t.methods.push_back(std::move(mt));
  }
  return t;
}

/// Header and values of the wide per-dataset CSV row. Skipped cells are empty.
inline std::pair<std::vector<std::string>, std::vector<std::string>> quality_row(
    const QualityVariables& qv, const MetaTargets& targets) {
  std::vector<std::string> header{"q0mean"}, row{csv::format_double(qv.q0_mean)};
  auto cell_text = [](bool ok, double v) { return ok ? csv::format_double(v) : std::string(); };
  for (std::size_t r = 0; r < qv.methods.size(); ++r) {
    const auto& mq = qv.methods[r];
    const auto name = method_name(mq.method);
    for (std::size_t i = 0; i < mq.cells.size(); ++i) {
      const auto& cq = mq.cells[i];
      const auto tag = "[" + name + "][" + csv::format_double(cq.multiplier) + "]";
      header.push_back("qmean" + tag);
      row.push_back(cell_text(cq.feasible, cq.q_mean));
      header.push_back("qpval" + tag);
      row.push_back(cell_text(cq.feasible, cq.q_pval));
      header.push_back("qpvalw" + tag);
      row.push_back(cell_text(cq.feasible, cq.q_pvalw));
      header.push_back("y" + tag);
      row.push_back(std::to_string(targets.methods[r].y[i]));
    }
    header.push_back("mstar[" + name + "]");
    row.push_back(cell_text(mq.present, mq.m_star));
    header.push_back("yr[" + name + "]");
    row.push_back(std::to_string(targets.methods[r].y_r));
    header.push_back("zr[" + name + "]");
    row.push_back(cell_text(mq.present, targets.methods[r].z_r));
  }
  return {header, row};
}

}  // namespace resrec
