#include <cmath>
#include <random>

#include "doctest.h"
#include "twostage/error.hpp"
#include "twostage/evaluation.hpp"
#include "twostage/forecast.hpp"
#include "twostage/simulator.hpp"

using namespace twostage;

namespace {

const TwoStageParams kTruth{0.0006, 12, 0.0018, 16, {}, 16};

SimConfig config(double t_end) {
  SimConfig cfg;
  cfg.params = kTruth;
  cfg.seed_followers = 1000000;
  cfg.mark_model = ConstantMarks{300};
  cfg.t_end = t_end;
  return cfg;
}

FitResult fit_of(const TwoStageParams& p, double t_obs, ModelId model = ModelId::proposed) {
  FitResult f;
  f.model = model;
  f.params = p;
  f.t_obs = t_obs;
  return f;
}

Cascade prefix(const Cascade& c, double t_obs) {
  Cascade out = c;
  out.events.clear();
  for (const auto& e : c.events)
    if (e.time <= t_obs) out.events.push_back(e);
  return out;
}

// Continues `history` from t_obs to t_end by thinning (valid bound: with r = 0
// the intensity only decreases between events).
std::vector<double> continue_counts(const Cascade& history, const TwoStageParams& p, const KernelParams& k,
                                    double t_obs, double t_end, std::int64_t mark, const std::vector<double>& grid,
                                    std::mt19937_64& rng) {
  std::vector<Event> ev = history.events;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double t = t_obs;
  while (true) {
    const double bound = intensity_two_stage(std::nextafter(t, INFINITY), std::span<const Event>(ev), p, k) +
                         (ev.back().time == t ? p.a2 * mark * k.c0 : 0.0);
    if (!(bound > 0)) break;
    t += -std::log(1.0 - u(rng)) / bound;
    if (t > t_end) break;
    if (u(rng) * bound <= intensity_two_stage(t, std::span<const Event>(ev), p, k)) ev.push_back({t, mark});
  }
  std::vector<double> out;
  for (double g : grid) {
    double n = 0;
    for (const auto& e : ev)
      if (e.time > 0 && e.time <= g) ++n;
    out.push_back(n);
  }
  return out;
}

}  // namespace

TEST_CASE("bin grid") {
  CHECK(bin_grid(10, 13, 1) == std::vector<double>{11, 12, 13});
  CHECK(bin_grid(10, 13.5, 1).size() == 3);
  CHECK(bin_grid(36, 72, 36) == std::vector<double>{72});
  CHECK_THROWS_AS(bin_grid(10, 9, 1), Error);
}

TEST_CASE("stage-1 forecast intensity") {
  const KernelParams k;
  Cascade c;
  c.t_max = 40;
  c.events = {{0.0, 50}, {20.0, 7}};
  const FitResult f = fit_of(kTruth, 30);
  CHECK(forecast_intensity_stage1(31.0, c, f) == doctest::Approx(stage1_rate(31.0, kTruth) * 50 * kernel_phi(31.0, k)));
  Cascade late = c;
  late.events = {{17.0, 5}};
  CHECK(forecast_intensity_stage1(31.0, late, f) == 0.0);
}

TEST_CASE("no post-tc history and no stage-1 memory gives a flat forecast") {
  Cascade c;
  c.t_max = 40;
  c.events = {{0.0, 0}, {17.0, 0}};
  const FitResult f = fit_of(kTruth, 20);
  const IntensityPath path = solve_forecast_intensity(c, f, 40, 100.0);
  for (std::size_t i = 0; i < path.stage2.size(); ++i) CHECK(path.stage2[i] == 0.0);
  const ForecastSeries s = forecast_cumulative(c, f, 40);
  for (const auto& b : s.bins) CHECK(b.cumulative == 1.0);

  Cascade empty;
  empty.t_max = 40;
  empty.events = {{0.0, 0}};
  for (const auto& b : forecast_tideh(empty, fit_of(kTruth, 20, ModelId::tideh), 40).bins) CHECK(b.cumulative == 0.0);
}

TEST_CASE("bins are monotone and start at N(t_obs)") {
  const Cascade c = simulate(run_config(config(72), 2));
  const ForecastSeries s = forecast_cumulative(c, fit_of(kTruth, 36), 72);
  REQUIRE(s.bins.size() == 36);
  CHECK(s.bins.front().t_end == 37);
  CHECK(s.bins.front().cumulative >= static_cast<double>(c.count_until(36)));
  for (std::size_t i = 1; i < s.bins.size(); ++i) CHECK(s.bins[i].cumulative >= s.bins[i - 1].cumulative);
  CHECK(s.d_p == doctest::Approx(average_followers(c, 36)));
}

TEST_CASE("step refinement and back substitution") {
  const Cascade c = simulate(run_config(config(72), 5));
  for (FeedbackMode mode : {FeedbackMode::full, FeedbackMode::stage2_only}) {
    VolterraOptions coarse;
    coarse.feedback = mode;
    VolterraOptions fine = coarse;
    fine.step = coarse.step / 4;
    const FitResult f = fit_of(kTruth, 30);
    const double d_p = average_followers(c, 30);
    const IntensityPath a = solve_forecast_intensity(c, f, 60, d_p, coarse);
    const IntensityPath b = solve_forecast_intensity(c, f, 60, d_p, fine);
    double diff = 0, norm = 0;
    for (std::size_t i = 0; i < a.stage2.size(); ++i) {
      diff += std::abs(a.total(i) - b.total(4 * i));
      norm += b.total(4 * i);
    }
    CHECK(diff / norm < 0.005);

    // Residual of the continuous equation evaluated with an independent
    // fine quadrature of the solved path.
    const KernelParams& k = f.kernel;
    auto lam = [&](double t) {
      const double x = (t - b.t_obs) / b.step;
      const auto j = std::min(b.stage2.size() - 2, static_cast<std::size_t>(x));
      const double w = x - static_cast<double>(j);
      auto fed = [&](std::size_t i) { return mode == FeedbackMode::full ? b.total(i) : b.stage2[i]; };
      return (1 - w) * fed(j) + w * fed(j + 1);
    };
    double worst = 0;
    for (double t : {31.0, 35.5, 42.0, 50.0, 59.0}) {
      double h2 = 0;
      for (const auto& e : c.events)
        if (e.time > f.params.tc && e.time <= 30) h2 += e.followers * kernel_phi(t - e.time, k);
      const int m = 20000;
      const double dt = (t - 30) / m;
      double integral = 0;
      for (int i = 0; i < m; ++i) {
        const double s = 30 + (i + 0.5) * dt;
        integral += lam(s) * kernel_phi(t - s, k) * dt;
      }
      const double rhs = stage2_rate(t, f.params) * (h2 + d_p * integral);
      const double x = (t - b.t_obs) / b.step;
      const auto j = static_cast<std::size_t>(std::llround(x));
      worst = std::max(worst, std::abs(b.stage2[j] - rhs) / rhs);
    }
    CHECK(worst < 1e-3);
  }
}

TEST_CASE("refinement check flags a coarse grid") {
  const Cascade c = simulate(run_config(config(72), 5));
  VolterraOptions opts;
  opts.check_refinement = true;
  CHECK_NOTHROW(forecast_cumulative(c, fit_of(kTruth, 36), 72, opts));
  opts.step = 2.0;
  opts.refinement_tol = 1e-4;
  CHECK_THROWS_AS(forecast_cumulative(c, fit_of(kTruth, 36), 72, opts), Error);
}

TEST_CASE("embedding forecast equals the TiDeH forecast") {
  const Cascade c = simulate(run_config(config(72), 8));
  const TiDeHParams q{0.0009, 14, {0.3, 5, 24}};
  FitResult single = fit_of(single_stage(q, 36), 36, ModelId::tideh);
  const ForecastSeries a = forecast_tideh(c, single, 72);
  const ForecastSeries b = forecast_cumulative(c, fit_of(tideh_embedding(q, 20), 36), 72);
  REQUIRE(a.bins.size() == b.bins.size());
  for (std::size_t i = 0; i < a.bins.size(); ++i)
    CHECK(std::abs(a.bins[i].cumulative - b.bins[i].cumulative) <= 0.005 * a.bins[i].cumulative);
}

TEST_CASE("linearity in the observed stage-2 drive") {
  const Cascade c = simulate(run_config(config(40), 9));
  Cascade scaled = c;
  for (auto& e : scaled.events)
    if (e.time > kTruth.tc) e.followers *= 3;
  Cascade pre = c;
  for (auto& e : pre.events)
    if (e.time > kTruth.tc) e.followers = 0;
  const FitResult f = fit_of(kTruth, 30);
  for (FeedbackMode mode : {FeedbackMode::full, FeedbackMode::stage2_only}) {
    VolterraOptions o;
    o.feedback = mode;
    const IntensityPath base = solve_forecast_intensity(pre, f, 40, 300, o);
    const IntensityPath one = solve_forecast_intensity(c, f, 40, 300, o);
    const IntensityPath three = solve_forecast_intensity(scaled, f, 40, 300, o);
    for (std::size_t i = 0; i < one.stage2.size(); i += 17) {
      const double d1 = one.stage2[i] - base.stage2[i];
      const double d3 = three.stage2[i] - base.stage2[i];
      CHECK(d3 == doctest::Approx(3 * d1).epsilon(1e-9));
    }
  }
}

TEST_CASE("true-parameter forecast tracks the mean of fresh suffix simulations") {
  const KernelParams k;
  SimConfig cfg = config(48);
  cfg.seed_followers = 3000000;
  cfg.mark_model = ConstantMarks{900};
  const Cascade full = simulate(run_config(cfg, 21));
  const double t_obs = 30, t_end = 48;
  const Cascade hist = prefix(full, t_obs);
  VolterraOptions opts;
  opts.dp_includes_seed = false;
  const ForecastSeries fc = forecast_cumulative(hist, fit_of(kTruth, t_obs), t_end, opts);
  const auto grid = bin_grid(t_obs, t_end, 1.0);
  std::vector<double> mean(grid.size(), 0.0);
  std::mt19937_64 rng(77);
  const int runs = 500;
  for (int r = 0; r < runs; ++r) {
    const auto counts = continue_counts(hist, kTruth, k, t_obs, t_end, 900, grid, rng);
    for (std::size_t i = 0; i < grid.size(); ++i) mean[i] += counts[i] / runs;
  }
  const double base = static_cast<double>(hist.count_until(t_obs));
  double mae = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) mae += std::abs(fc.bins[i].cumulative - mean[i]) / grid.size();
  const double growth = mean.back() - base;
  MESSAGE("growth " << growth << ", mean abs deviation " << mae);
  REQUIRE(growth > 5);
  CHECK(mae <= 0.1 * growth);
}
