#include "twostage/forecast.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "twostage/baselines.hpp"
#include "twostage/error.hpp"

namespace twostage {
namespace {

// Deterministic parts of the forecast on the solver grid.
struct Drive {
  std::vector<double> f1;  // stage-1 forecast (no feedback)
  std::vector<double> f2;  // observed part of the stage-2 forecast
  std::vector<double> p2;  // infection rate multiplying the feedback integral
};

Drive build_drive(const Cascade& cascade, const FitResult& fit, bool single, double t_obs, double h,
                  std::size_t n) {
  const auto& p = fit.params;
  const KernelParams& k = fit.kernel;
  Drive d;
  d.f1.assign(n + 1, 0.0);
  d.f2.assign(n + 1, 0.0);
  d.p2.assign(n + 1, 0.0);
  for (std::size_t j = 0; j <= n; ++j) {
    const double t = t_obs + h * static_cast<double>(j);
    double h1 = 0.0, h2 = 0.0;
    for (const auto& e : cascade.events) {
      if (e.time > t_obs) break;
      const double w = static_cast<double>(e.followers) * kernel_phi(t - e.time, k);
      if (single || e.time > p.tc) {
        h2 += w;
      } else if (e.time < p.tc) {
        h1 += w;
      }
    }
    if (single) {
      d.p2[j] = infection_rate(t, p.a1, p.tau1, 0.0, p.circadian);
    } else {
      d.f1[j] = stage1_rate(t, p) * h1;
      d.p2[j] = stage2_rate(t, p);
    }
    d.f2[j] = d.p2[j] * h2;
  }
  return d;
}

// Integrals of phi(u) and u phi(u) over [a, b].
std::pair<double, double> kernel_moments(double a, double b, const KernelParams& k) {
  double m0 = 0.0, m1 = 0.0;
  const double lo = std::min(a, k.s0), hi = std::min(b, k.s0);
  if (hi > lo) {
    m0 += k.c0 * (hi - lo);
    m1 += 0.5 * k.c0 * (hi * hi - lo * lo);
  }
  const double pa = std::max(a, k.s0), pb = std::max(b, k.s0);
  if (pb > pa) {
    const double scale = k.c0 * std::pow(k.s0, 1.0 + k.gamma);
    m0 += scale * (std::pow(pa, -k.gamma) - std::pow(pb, -k.gamma)) / k.gamma;
    m1 += k.gamma == 1.0 ? scale * std::log(pb / pa)
                         : scale * (std::pow(pb, 1.0 - k.gamma) - std::pow(pa, 1.0 - k.gamma)) / (1.0 - k.gamma);
  }
  return {m0, m1};
}

IntensityPath solve_grid(const Cascade& cascade, const FitResult& fit, bool single, double t_end,
                         double d_p, double step, FeedbackMode mode) {
  const double t_obs = fit.t_obs;
  require(t_end > t_obs, ErrorKind::precondition, "forecast: t_max must exceed t_obs");
  require(step > 0.0, ErrorKind::precondition, "forecast: step must be positive");
  require(d_p >= 0.0, ErrorKind::precondition, "forecast: d_p must be non-negative");
  if (!single) {
    require(fit.params.tc < t_obs, ErrorKind::precondition, "forecast: fitted tc must lie before t_obs");
  }
  const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil((t_end - t_obs) / step - 1e-9)));
  const double h = (t_end - t_obs) / static_cast<double>(n);
  const Drive d = build_drive(cascade, fit, single, t_obs, h, n);

  // Product-integration weights for piecewise-linear feedback: cell m covers
  // lags [m h, (m + 1) h]; `near` weights its left node, `far` its right node.
  std::vector<double> near(n), far(n);
  for (std::size_t m = 0; m < n; ++m) {
    const double a = h * static_cast<double>(m);
    const auto [m0, m1] = kernel_moments(a, a + h, fit.kernel);
    far[m] = (m1 - a * m0) / h;
    near[m] = m0 - far[m];
  }

  IntensityPath path;
  path.t_obs = t_obs;
  path.step = h;
  path.stage1 = d.f1;
  path.stage2.assign(n + 1, 0.0);
  path.stage2[0] = d.f2[0];
  const bool full = mode == FeedbackMode::full && !single;
  auto fed = [&](std::size_t j) { return full ? path.stage1[j] + path.stage2[j] : path.stage2[j]; };
  for (std::size_t k = 1; k <= n; ++k) {
    double conv = fed(0) * far[k - 1];
    for (std::size_t j = 1; j < k; ++j) conv += fed(j) * (near[k - j] + far[k - j - 1]);
    const double diag = near[0];
    if (full) conv += diag * path.stage1[k];
    const double g = d_p * d.p2[k];
    const double denom = 1.0 - g * diag;
    if (!(denom > 0.0)) {
      std::ostringstream os;
      os << "forecast: Volterra step " << h << " h too coarse for feedback gain " << g;
      fail(ErrorKind::numerical, os.str());
    }
    path.stage2[k] = (d.f2[k] + g * conv) / denom;
  }
  return path;
}

IntensityPath solve_checked(const Cascade& cascade, const FitResult& fit, bool single, double t_end,
                            double d_p, const VolterraOptions& opts) {
  IntensityPath path = solve_grid(cascade, fit, single, t_end, d_p, opts.step, opts.feedback);
  if (opts.check_refinement) {
    const IntensityPath fine = solve_grid(cascade, fit, single, t_end, d_p, path.step / 2.0, opts.feedback);
    double diff = 0.0, norm = 0.0;
    for (std::size_t k = 0; k < path.stage1.size(); ++k) {
      diff += std::abs(path.total(k) - fine.total(2 * k));
      norm += std::abs(fine.total(2 * k));
    }
    if (norm > 0.0 && diff / norm > opts.refinement_tol) {
      std::ostringstream os;
      os << "forecast: discretization not converged (relative change " << diff / norm << " between step "
         << path.step << " and " << fine.step << ")";
      fail(ErrorKind::numerical, os.str());
    }
  }
  return path;
}

ForecastSeries integrate_bins(const Cascade& cascade, const IntensityPath& path, double t_max,
                              double width) {
  ForecastSeries s;
  s.t_obs = path.t_obs;
  s.bin_width = width;
  const std::size_t n = path.stage1.size() - 1;
  std::vector<double> cum(n + 1, 0.0);
  for (std::size_t k = 1; k <= n; ++k) cum[k] = cum[k - 1] + 0.5 * path.step * (path.total(k - 1) + path.total(k));
  const double base = static_cast<double>(cascade.count_until(path.t_obs));
  for (double t : bin_grid(path.t_obs, t_max, width)) {
    const double x = (t - path.t_obs) / path.step;
    const auto j = std::min(n - 1, static_cast<std::size_t>(std::max(0.0, std::floor(x))));
    const double frac = std::clamp(x - static_cast<double>(j), 0.0, 1.0);
    const double l0 = path.total(j), l1 = path.total(j + 1);
    const double partial = path.step * frac * (l0 + 0.5 * frac * (l1 - l0));
    s.bins.push_back({t, base + cum[j] + partial});
  }
  for (std::size_t k = 1; k < s.bins.size(); ++k)
    s.bins[k].cumulative = std::max(s.bins[k].cumulative, s.bins[k - 1].cumulative);
  return s;
}

}  // namespace

std::vector<double> bin_grid(double t_obs, double t_max, double width) {
  require(width > 0.0, ErrorKind::precondition, "bin width must be positive");
  require(t_max > t_obs, ErrorKind::precondition, "t_max must exceed t_obs");
  const auto n = static_cast<std::size_t>(std::floor((t_max - t_obs) / width + 1e-9));
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) out[k] = t_obs + width * static_cast<double>(k + 1);
  return out;
}

double average_followers(const Cascade& cascade, double t_obs, bool include_seed) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& e : cascade.events) {
    if (e.time > t_obs) break;
    if (!include_seed && e.time <= 0.0) continue;
    sum += static_cast<double>(e.followers);
    ++n;
  }
  return n ? sum / static_cast<double>(n) : 0.0;
}

double forecast_intensity_stage1(double t, const Cascade& cascade, const FitResult& fit) {
  double h1 = 0.0;
  for (const auto& e : cascade.events) {
    if (e.time >= fit.params.tc || e.time > fit.t_obs) break;
    h1 += static_cast<double>(e.followers) * kernel_phi(t - e.time, fit.kernel);
  }
  return stage1_rate(t, fit.params) * h1;
}

IntensityPath solve_forecast_intensity(const Cascade& cascade, const FitResult& fit, double t_end,
                                       double d_p, const VolterraOptions& opts) {
  return solve_checked(cascade, fit, fit.model == ModelId::tideh, t_end, d_p, opts);
}

double forecast_intensity_stage2(double t, const Cascade& cascade, const FitResult& fit, double d_p,
                                 const VolterraOptions& opts) {
  if (t <= fit.t_obs) {
    require(t == fit.t_obs, ErrorKind::precondition, "forecast: t must be >= t_obs");
    return solve_grid(cascade, fit, fit.model == ModelId::tideh, t + opts.step, d_p, opts.step,
                      opts.feedback).stage2[0];
  }
  const IntensityPath path = solve_forecast_intensity(cascade, fit, t, d_p, opts);
  return path.stage2.back();
}

ForecastSeries forecast_cumulative(const Cascade& cascade, const FitResult& fit, double t_max,
                                   const VolterraOptions& opts, double bin_width) {
  if (fit.model == ModelId::tideh) return forecast_tideh(cascade, fit, t_max, opts, bin_width);
  require(fit.model == ModelId::proposed, ErrorKind::precondition,
          "forecast_cumulative needs a proposed or tideh fit");
  const double d_p = average_followers(cascade, fit.t_obs, opts.dp_includes_seed);
  const IntensityPath path = solve_checked(cascade, fit, false, t_max, d_p, opts);
  ForecastSeries s = integrate_bins(cascade, path, t_max, bin_width);
  s.model_id = to_string(ModelId::proposed);
  s.d_p = d_p;
  return s;
}

ForecastSeries forecast_tideh(const Cascade& cascade, const FitResult& fit, double t_max,
                              const VolterraOptions& opts, double bin_width) {
  FitResult single = fit;
  single.model = ModelId::tideh;
  const double d_p = average_followers(cascade, fit.t_obs, opts.dp_includes_seed);
  const IntensityPath path = solve_checked(cascade, single, true, t_max, d_p, opts);
  ForecastSeries s = integrate_bins(cascade, path, t_max, bin_width);
  s.model_id = to_string(ModelId::tideh);
  s.d_p = d_p;
  return s;
}

ForecastSeries forecast_rpp(const Cascade& cascade, const FitResult& fit, double t_max, double bin_width) {
  ForecastSeries s;
  s.model_id = to_string(ModelId::rpp);
  s.t_obs = fit.t_obs;
  s.bin_width = bin_width;
  const auto grid = bin_grid(fit.t_obs, t_max, bin_width);
  const double r_obs = static_cast<double>(cascade.count_until(fit.t_obs));
  const auto values = rpp_predict(fit.rpp, r_obs, fit.t_obs, grid);
  for (std::size_t k = 0; k < grid.size(); ++k) s.bins.push_back({grid[k], values[k]});
  return s;
}

ForecastSeries forecast(const Cascade& cascade, const FitResult& fit, double t_max,
                        const VolterraOptions& opts, double bin_width) {
  switch (fit.model) {
    case ModelId::proposed: return forecast_cumulative(cascade, fit, t_max, opts, bin_width);
    case ModelId::tideh: return forecast_tideh(cascade, fit, t_max, opts, bin_width);
    case ModelId::rpp: return forecast_rpp(cascade, fit, t_max, bin_width);
    case ModelId::lr: break;
  }
  fail(ErrorKind::precondition, "forecast: lr predictions come from a corpus model (lr_predict)");
}

}  // namespace twostage
