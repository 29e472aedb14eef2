#pragma once

// Human-readable rendering of evaluation reports and plot-ready CSV series.

#include <cstddef>
#include <string>

#include "twostage/evaluation.hpp"

namespace twostage {

/// Per-cascade comparison of model `a` against model `b` in a benchmark report.
struct HeadToHead {
  std::size_t cascades = 0;     // cascades where `a` has a row
  std::size_t ae_wins = 0;      // a.mean_ae < b.mean_ae, or b failed while a succeeded
  std::size_t aic_compared = 0; // both fits succeeded with a finite AIC
  std::size_t aic_wins = 0;     // a.aic < b.aic

  double ae_fraction() const { return cascades ? static_cast<double>(ae_wins) / static_cast<double>(cascades) : 0.0; }
  double aic_fraction() const {
    return cascades ? static_cast<double>(aic_wins) / static_cast<double>(cascades) : 0.0;
  }
};

HeadToHead head_to_head(const EvalReport& report, ModelId a, ModelId b);

/// Aggregate table, head-to-head lines against the first model, skipped
/// cascades and recovery medians. An empty report renders the header only.
std::string render_summary(const EvalReport& report);

/// model,n_ok,n_failed,mean_mean_ae,mean_median_ae,win_fraction_mean,win_fraction_median
std::string aggregate_csv(const EvalReport& report);

/// group,t_obs,parameter,median,q25,q75 (relative errors) plus an intensity_l1 line per group.
std::string recovery_csv(const EvalReport& report);

/// cascade,model,t_end,predicted,actual for every successful benchmark row.
std::string overlay_csv(const EvalReport& report);

}  // namespace twostage
