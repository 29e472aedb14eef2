#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "twostage/likelihood.hpp"
#include "twostage/simulator.hpp"

using namespace twostage;

namespace {

// Midpoint sum on a grid of spacing <= step whose cells also break at event
// times and at tc, where the intensity jumps.
double riemann_compensator(const Cascade& c, const TwoStageParams& p, const KernelParams& k, double t_obs,
                           double step) {
  std::vector<double> cuts{p.tc, t_obs};
  for (double t = 0.0; t < t_obs; t += step) cuts.push_back(t);
  for (const auto& e : c.events)
    if (e.time > 0.0 && e.time < t_obs) cuts.push_back(e.time);
  std::sort(cuts.begin(), cuts.end());
  std::size_t end = 0;
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size() && cuts[i + 1] <= t_obs; ++i) {
    const double t = 0.5 * (cuts[i] + cuts[i + 1]);
    while (end < c.events.size() && c.events[end].time < t) ++end;
    sum += intensity_two_stage(t, std::span<const Event>(c.events.data(), end), p, k) * (cuts[i + 1] - cuts[i]);
  }
  return sum;
}

double direct_loglik(const Cascade& c, const TwoStageParams& p, const KernelParams& k, double t_obs) {
  double s = 0.0;
  for (const auto& e : c.events)
    if (e.time > 0.0 && e.time <= t_obs) s += std::log(intensity_two_stage(e.time, c, p, k));
  return s - riemann_compensator(c, p, k, t_obs, 1e-3);
}

Cascade sample(std::uint64_t seed, double t_end) {
  SimConfig cfg;
  cfg.params = {0.0006, 12, 0.0018, 16, {0.3, 4, 24}, 16};
  cfg.seed_followers = 200000;
  cfg.mark_model = LogNormalMarks{5.0, 0.8};
  cfg.t_end = t_end;
  cfg.rng_seed = seed;
  return simulate(cfg);
}

}  // namespace

TEST_CASE("compensator and log-likelihood match a Riemann sum") {
  const KernelParams k;
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 4; ++trial) {
    const Cascade c = sample(100 + trial, 36);
    REQUIRE(c.count_until(36) > 20);
    TwoStageParams p{4e-4 + 8e-4 * u(rng), 12 + 20 * u(rng), 5e-4 + 2e-3 * u(rng), 12 + 30 * u(rng),
                     {u(rng) * 2 - 1, 24 * u(rng), 24}, 4 + 28 * u(rng)};
    const LikelihoodWorkspace ws(c, 36.0, k);
    LikelihoodWorkspace w = ws;
    w.set_cutoff(p.tc);
    const double comp = w.compensator(to_vector(p));
    const double ref = riemann_compensator(c, p, k, 36.0, 1e-3);
    CHECK(std::abs(comp - ref) / ref < 1e-5);
    const double ll = log_likelihood(c, p, k, 36.0);
    const double ref_ll = direct_loglik(c, p, k, 36.0);
    CHECK(std::abs(ll - ref_ll) / std::abs(ref_ll) < 1e-5);
  }
}

TEST_CASE("single-stage likelihood equals the embedded two-stage likelihood") {
  const KernelParams k;
  const Cascade c = sample(7, 30);
  const TiDeHParams q{9e-4, 15, {0.2, 3, 24}};
  const double a = log_likelihood_tideh(c, q, k, 30.0);
  const double b = log_likelihood(c, tideh_embedding(q, 11.3), k, 30.0);
  CHECK(a == doctest::Approx(b).epsilon(1e-9));
}

TEST_CASE("analytic gradient matches finite differences") {
  const KernelParams k;
  const Cascade c = sample(3, 36);
  LikelihoodWorkspace ws(c, 36.0, k);
  ws.set_cutoff(14.0);
  const TwoStageParams p{7e-4, 13, 1.5e-3, 20, {0.25, 5, 24}, 14};
  const StageVector x = to_vector(p);
  StageVector g{};
  ws.evaluate(x, g);
  for (std::size_t i = 0; i < kTwoStageDim; ++i) {
    const double h = 1e-6 * std::max(std::abs(x[i]), 1e-3);
    StageVector xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    const double fd = (ws.evaluate(xp) - ws.evaluate(xm)) / (2 * h);
    CHECK(g[i] == doctest::Approx(fd).epsilon(1e-5).scale(1.0));
  }
}

TEST_CASE("zero intensity at an event gives -inf") {
  Cascade c;
  c.t_max = 5;
  c.events = {{0.0, 0}, {1.0, 1}};
  CHECK(std::isinf(log_likelihood(c, {1e-3, 12, 1e-3, 12, {}, 2}, KernelParams{}, 5.0)));
}

TEST_CASE("vector layout round trip") {
  const TwoStageParams p{1e-3, 12, 2e-3, 30, {0.5, 6, 24}, 9};
  CHECK(from_vector(to_vector(p), 9) == p);
}
