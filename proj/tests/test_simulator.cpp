#include <algorithm>
#include <cmath>
#include <filesystem>
#include <vector>

#include "doctest.h"
#include "twostage/error.hpp"
#include "twostage/io.hpp"
#include "twostage/simulator.hpp"

using namespace twostage;

namespace {

// Integral of phi over [0, x].
double kernel_cdf(double x, const KernelParams& k) {
  if (x <= 0) return 0.0;
  if (x <= k.s0) return k.c0 * x;
  return k.c0 * k.s0 + k.c0 * k.s0 / k.gamma * (1.0 - std::pow(x / k.s0, -k.gamma));
}

// Expected number of reactions on [0, t_end] from the mean-intensity renewal
// equation, with marks replaced by their mean, solved cell by cell.
double expected_count(const TwoStageParams& p, const KernelParams& k, double d0, double mark_mean, double t_end,
                      double step) {
  const auto n = static_cast<std::size_t>(std::llround(t_end / step));
  std::vector<double> lam(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = (static_cast<double>(i) + 0.5) * step;
    double s1 = d0 * (kernel_cdf(t + 0.5 * step, k) - kernel_cdf(t - 0.5 * step, k)) / step;
    double s2 = 0.0;
    for (std::size_t j = 0; j < i; ++j) {
      const double lo = t - (static_cast<double>(j) + 1.0) * step;
      const double w = mark_mean * lam[j] * (kernel_cdf(lo + step, k) - kernel_cdf(lo, k));
      ((static_cast<double>(j) + 0.5) * step < p.tc ? s1 : s2) += w;
    }
    const double r1 = stage1_rate(t, p), r2 = stage2_rate(t, p);
    const double self = mark_mean * kernel_cdf(0.5 * step, k);
    const double own = t < p.tc ? r1 : r2;
    lam[i] = (r1 * s1 + r2 * s2) / (1.0 - own * self);
    total += lam[i] * step;
  }
  return total;
}

double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  return d;
}

// Asymptotic Kolmogorov tail probability.
double ks_pvalue(double d, std::size_t n, std::size_t m) {
  const double ne = static_cast<double>(n * m) / static_cast<double>(n + m);
  const double lam = (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * d;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) sum += 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lam * lam);
  return std::clamp(sum, 0.0, 1.0);
}

}  // namespace

TEST_CASE("zero amplitudes give only the seed") {
  SimConfig cfg;
  cfg.params = {0.0, 12, 0.0, 16, {}, 16};
  const Cascade c = simulate(cfg);
  REQUIRE(c.events.size() == 1);
  CHECK(c.events[0] == Event{0.0, 1000});
}

TEST_CASE("same seed gives identical cascades") {
  SimConfig cfg;
  cfg.params = {0.0006, 12, 0.0018, 16, {0.3, 5, 24}, 16};
  cfg.seed_followers = 100000;
  cfg.mark_model = LogNormalMarks{5.0, 1.0};
  cfg.rng_seed = 42;
  const Cascade a = simulate(cfg), b = simulate(cfg);
  CHECK(a == b);
  CHECK(a.events.size() > 5);
  cfg.rng_seed = 43;
  CHECK_FALSE(simulate(cfg) == a);
}

TEST_CASE("events increase and respect t_end; thinning bound holds") {
  SimConfig cfg;
  cfg.params = {0.0006, 12, 0.0018, 16, {0.8, 7, 24}, 16};
  cfg.seed_followers = 300000;
  cfg.mark_model = ConstantMarks{300};
  for (std::uint64_t i = 0; i < 20; ++i) {
    SimStats st;
    const Cascade c = simulate(run_config(cfg, i), &st);
    CHECK(st.bound_violations == 0);
    for (std::size_t e = 1; e < c.events.size(); ++e) {
      CHECK(c.events[e].time > c.events[e - 1].time);
      CHECK(c.events[e].time <= cfg.t_end);
    }
  }
}

TEST_CASE("runaway is reported") {
  SimConfig cfg;
  cfg.params = {0.5, 100, 0.5, 100, {}, 1};
  cfg.mark_model = ConstantMarks{10};
  cfg.max_events = 500;
  CHECK_THROWS_AS(simulate(cfg), Error);
  try {
    simulate(cfg);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::runaway);
  }
}

TEST_CASE("mean event count matches the renewal-equation expectation") {
  SimConfig cfg;
  cfg.params = {0.0006, 12, 0.0018, 16, {}, 16};
  cfg.seed_followers = 100000;
  cfg.mark_model = ConstantMarks{300};
  cfg.t_end = 48;
  double mean = 0.0;
  const int runs = 1000;
  for (int i = 0; i < runs; ++i) mean += static_cast<double>(simulate(run_config(cfg, i)).count_until(cfg.t_end));
  mean /= runs;
  const double expected = expected_count(cfg.params, cfg.kernel, 100000, 300, cfg.t_end, 0.005);
  MESSAGE("simulated mean " << mean << ", expected " << expected);
  CHECK(std::abs(mean - expected) / expected < 0.05);
}

TEST_CASE("embedding and single-stage simulations have the same count distribution") {
  const TiDeHParams q{0.0008, 14, {}};
  SimConfig two, one;
  two.params = tideh_embedding(q, 10);
  one.params = single_stage(q, 100);
  for (SimConfig* c : {&two, &one}) {
    c->seed_followers = 100000;
    c->mark_model = ConstantMarks{300};
    c->t_end = 48;
  }
  one.rng_seed = 1;
  std::vector<double> a, b;
  for (int i = 0; i < 200; ++i) {
    a.push_back(static_cast<double>(simulate(run_config(two, i)).count_until(48)));
    b.push_back(static_cast<double>(simulate(run_config(one, i)).count_until(48)));
  }
  const double p = ks_pvalue(ks_statistic(a, b), a.size(), b.size());
  MESSAGE("KS p-value " << p);
  CHECK(p > 0.01);
}

TEST_CASE("recovery and sweep suites") {
  const auto dir = std::filesystem::temp_directory_path() / "twostage_sim_suite";
  std::filesystem::remove_all(dir);
  SimConfig cfg;
  cfg.seed_followers = 20000;
  cfg.mark_model = ConstantMarks{100};
  const TwoStageParams truth{0.0006, 12, 0.0018, 16, {}, 16};
  const Manifest m = generate_recovery_suite(truth, 3, {24, 36, 48, 72}, cfg, dir / "fig2");
  CHECK(m.cascade_count() == 3);
  const Manifest back = load_manifest(dir / "fig2" / "manifest.txt");
  CHECK(back.groups == m.groups);
  CHECK(back.t_obs_grid == std::vector<double>{24, 36, 48, 72});

  const Manifest one = generate_recovery_suite(truth, 1, {36}, cfg, dir / "one");
  CHECK(one.cascade_count() == 1);

  const TwoStageParams base{0.0024, 16, 0.0, 16, {}, 16};
  const Manifest sweep = generate_sweep_suite(base, {2.2e-4, 8.8e-4, 3.5e-3}, 2, {36}, cfg, dir / "sweep");
  REQUIRE(sweep.groups.size() == 3);
  CHECK(sweep.groups[2].truth.a2 == 3.5e-3);
  CHECK(sweep.cascade_count() == 6);
  std::filesystem::remove_all(dir);
}
