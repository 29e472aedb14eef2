#pragma once

// Forecasts of the intensity and the cumulative post count beyond the
// observation window. Observed memories are evaluated exactly; the feedback of
// future posts is a Volterra equation of the second kind solved by forward
// trapezoidal time stepping.

#include <string>
#include <vector>

#include "twostage/inference.hpp"
#include "twostage/model.hpp"

namespace twostage {

/// How future (unobserved) posts feed back into the forecast intensity.
enum class FeedbackMode {
  full,         // future posts of both stages join the stage-2 memory
  stage2_only,  // only the stage-2 forecast is convolved with the kernel
};

struct VolterraOptions {
  double step = 0.05;  // hours
  FeedbackMode feedback = FeedbackMode::full;
  bool check_refinement = false;  // re-solve at step/2 and compare
  double refinement_tol = 5e-3;   // relative time-averaged L1
  bool dp_includes_seed = true;
};

struct ForecastBin {
  double t_end = 0.0;
  double cumulative = 0.0;

  friend bool operator==(const ForecastBin&, const ForecastBin&) = default;
};

struct ForecastSeries {
  std::string model_id;
  double t_obs = 0.0;
  double bin_width = 1.0;
  double d_p = 0.0;
  std::vector<ForecastBin> bins;

  friend bool operator==(const ForecastSeries&, const ForecastSeries&) = default;
};

/// Forecast intensities on the uniform grid t_obs + k * step, k = 0..n.
struct IntensityPath {
  double t_obs = 0.0;
  double step = 0.0;
  std::vector<double> stage1;
  std::vector<double> stage2;

  double time(std::size_t k) const { return t_obs + step * static_cast<double>(k); }
  double total(std::size_t k) const { return stage1[k] + stage2[k]; }
};

/// Mean follower count of the posts observed in [0, t_obs].
double average_followers(const Cascade& cascade, double t_obs, bool include_seed = true);

/// p1(t) times the observed stage-1 memory (events before tc).
double forecast_intensity_stage1(double t, const Cascade& cascade, const FitResult& fit);

/// Solves for both forecast intensities on [t_obs, t_end]. A TiDeH fit is
/// handled as a single stage carried entirely by `stage2`.
IntensityPath solve_forecast_intensity(const Cascade& cascade, const FitResult& fit, double t_end,
                                       double d_p, const VolterraOptions& opts = {});

/// Stage-2 forecast intensity at `t` (linear interpolation on the solver grid).
double forecast_intensity_stage2(double t, const Cascade& cascade, const FitResult& fit, double d_p,
                                 const VolterraOptions& opts = {});

/// N(t_obs) plus the integrated forecast intensity at t_obs + k * bin_width.
ForecastSeries forecast_cumulative(const Cascade& cascade, const FitResult& fit, double t_max,
                                   const VolterraOptions& opts = {}, double bin_width = 1.0);

/// Single-stage forecast with every observed post feeding the memory.
ForecastSeries forecast_tideh(const Cascade& cascade, const FitResult& fit, double t_max,
                              const VolterraOptions& opts = {}, double bin_width = 1.0);

/// Closed-form RPP trajectory on the same bin grid.
ForecastSeries forecast_rpp(const Cascade& cascade, const FitResult& fit, double t_max,
                            double bin_width = 1.0);

/// Dispatch on fit.model.
ForecastSeries forecast(const Cascade& cascade, const FitResult& fit, double t_max,
                        const VolterraOptions& opts = {}, double bin_width = 1.0);

/// Bin end times t_obs + k * width for k = 1..floor((t_max - t_obs) / width).
std::vector<double> bin_grid(double t_obs, double t_max, double width);

}  // namespace twostage
