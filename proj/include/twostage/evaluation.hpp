#pragma once

// Binned error metrics, the train/forecast benchmark over a dataset manifest,
// and Monte-Carlo parameter recovery on synthetic suites.

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "twostage/dataset.hpp"
#include "twostage/forecast.hpp"
#include "twostage/inference.hpp"

namespace twostage {

/// N_k = number of reaction events in (0, t_obs + k * width], k = 1..n_b.
std::vector<double> bin_counts(const Cascade& cascade, double t_obs, double t_max, double width);

struct ErrorSummary {
  double mean = 0.0;
  double median = 0.0;
};

ErrorSummary absolute_errors(std::span<const double> predicted, std::span<const double> actual);
ErrorSummary absolute_errors(const ForecastSeries& predicted, std::span<const double> actual);

/// Median with the midpoint convention for even sizes. Throws on empty input.
double median(std::vector<double> values);

struct BenchmarkRow {
  std::string cascade_id;
  ModelId model = ModelId::proposed;
  bool ok = false;
  std::string message;  // failure reason when !ok
  double t_obs = 0.0;
  double t_max = 0.0;
  double mean_ae = 0.0;
  double median_ae = 0.0;
  double aic = 0.0;     // nan for lr
  double loglik = 0.0;  // nan for lr
  bool win_mean = false;
  bool win_median = false;
  std::vector<double> predicted;  // cumulative counts per bin

  friend bool operator==(const BenchmarkRow&, const BenchmarkRow&) = default;
};

/// Observed cumulative counts on the forecast bins of one cascade.
struct ActualSeries {
  std::string cascade_id;
  double t_obs = 0.0;
  double bin_width = 1.0;
  std::vector<double> counts;

  friend bool operator==(const ActualSeries&, const ActualSeries&) = default;
};

struct AggregateRow {
  ModelId model = ModelId::proposed;
  std::size_t n_ok = 0;
  std::size_t n_failed = 0;
  double mean_mean_ae = 0.0;    // over successful rows
  double mean_median_ae = 0.0;  // over successful rows
  double win_fraction_mean = 0.0;
  double win_fraction_median = 0.0;

  friend bool operator==(const AggregateRow&, const AggregateRow&) = default;
};

struct SkippedCascade {
  std::string cascade_id;
  std::string reason;

  friend bool operator==(const SkippedCascade&, const SkippedCascade&) = default;
};

struct RecoveryRow {
  std::string group;
  std::string cascade_id;
  double t_obs = 0.0;
  bool ok = false;
  std::string message;
  TwoStageParams truth;
  TwoStageParams estimate;
  double loglik = 0.0;
  double intensity_l1 = 0.0;  // relative time-averaged L1 distance to the truth on [0, t_obs]

  friend bool operator==(const RecoveryRow&, const RecoveryRow&) = default;
};

struct EvalReport {
  double split = 0.5;
  std::vector<ModelId> models;
  std::vector<BenchmarkRow> rows;  // cascade-major, models in `models` order
  std::vector<ActualSeries> actual;
  std::vector<AggregateRow> aggregates;
  std::vector<SkippedCascade> skipped;
  std::vector<RecoveryRow> recovery;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

/// Sets win flags (lowest error wins; ties go to the earlier model in the
/// fixed order proposed, tideh, rpp, lr; failed rows never win).
void assign_wins(std::vector<BenchmarkRow>& rows_of_one_cascade);

/// Recomputes the aggregate rows from the per-cascade rows.
std::vector<AggregateRow> aggregate(const std::vector<BenchmarkRow>& rows, const std::vector<ModelId>& models);

struct BenchmarkOptions {
  std::vector<ModelId> models{ModelId::proposed, ModelId::tideh, ModelId::rpp, ModelId::lr};
  double split = 0.5;
  std::size_t min_posts = 300;
  double min_t_max = 36.0;
  double bin_width = 1.0;
  FitConfig fit;  // t_obs and the t_obs-scaled bounds are set per cascade
  VolterraOptions volterra;
  double rpp_epsilon = 0.1;
  int jobs = 1;
};

/// Fits every model on [0, split * t_max] of each cascade, forecasts to t_max,
/// and scores the bins. Per-cascade failures are recorded, not thrown.
EvalReport run_benchmark(const Manifest& manifest, const BenchmarkOptions& opts = {});
EvalReport run_benchmark(const std::vector<Cascade>& cascades, const BenchmarkOptions& opts = {});

/// Relative L1 distance between two intensities on the observed history,
/// integral |l_fit - l_true| / integral l_true over [0, t_obs] on a uniform grid.
double intensity_l1(const Cascade& cascade, const TwoStageParams& fitted, const TwoStageParams& truth,
                    const KernelParams& kernel, double t_obs, double step = 1e-2);

struct RecoveryOptions {
  ModelId model = ModelId::proposed;
  FitConfig fit;  // t_obs and bounds are set per grid point
  double l1_step = 1e-2;
  int jobs = 1;
};

/// Fits every cascade of every group at every t_obs of the manifest grid.
EvalReport run_recovery(const Manifest& manifest, const RecoveryOptions& opts = {});

inline constexpr std::array<const char*, 5> kRecoveredNames{"a1", "tau1", "a2", "tau2", "tc"};

/// Median absolute relative errors of (a1, tau1, a2, tau2, tc) and the median
/// intensity L1, per (group, t_obs).
struct RecoverySummary {
  std::string group;
  double t_obs = 0.0;
  std::size_t n_ok = 0;
  std::size_t n_failed = 0;
  std::array<double, 5> median_rel_error{};
  std::array<double, 5> q25_rel_error{};
  std::array<double, 5> q75_rel_error{};
  double median_l1 = 0.0;
  double max_l1 = 0.0;
};

std::vector<RecoverySummary> summarize_recovery(const std::vector<RecoveryRow>& rows);

/// Runs fn(i) for i in [0, n) on up to `jobs` threads.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

}  // namespace twostage
