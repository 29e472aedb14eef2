#include <cmath>
#include <random>

#include "doctest.h"
#include "twostage/baselines.hpp"
#include "twostage/error.hpp"
#include "twostage/evaluation.hpp"

using namespace twostage;

namespace {

Cascade counts_cascade(const std::string& id, const std::vector<std::pair<double, int>>& bursts, double t_max) {
  Cascade c;
  c.id = id;
  c.t_max = t_max;
  c.events.push_back({0.0, 1});
  for (const auto& [t, n] : bursts)
    for (int i = 0; i < n; ++i) c.events.push_back({t + 1e-3 * i, 1});
  return c;
}

// Mean-field trajectory dR/dt = c t^-g r(R) by classical RK4.
double rk4_trajectory(const RPPModel& m, double r0, double t0, double t1) {
  auto f = [&](double t, double r) { return m.c * std::pow(t, -m.gamma) * rpp_reinforcement(r, m.alpha, m.epsilon); };
  const int n = 20000;
  const double h = (t1 - t0) / n;
  double r = r0, t = t0;
  for (int i = 0; i < n; ++i) {
    const double k1 = f(t, r), k2 = f(t + h / 2, r + h / 2 * k1), k3 = f(t + h / 2, r + h / 2 * k2),
                 k4 = f(t + h, r + h * k3);
    r += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    t += h;
  }
  return r;
}

}  // namespace

TEST_CASE("log-linear regression examples") {
  // ratios x2 and x4 at the single horizon
  const std::vector<Cascade> corpus{counts_cascade("a", {{1, 10}, {15, 10}}, 20),
                                    counts_cascade("b", {{1, 10}, {15, 30}}, 20)};
  const LRModel m = lr_fit(corpus, 10, {20});
  CHECK(m.alpha[0] == doctest::Approx(1.5 * std::log(2.0)));
  CHECK(m.sigma2[0] == doctest::Approx(0.25 * std::log(2.0) * std::log(2.0)));
  CHECK(lr_predict(m, 10)[0] == doctest::Approx(10 * std::exp(m.alpha[0] + m.sigma2[0] / 2)));

  LRModel fixed;
  fixed.alpha = {0.0};
  fixed.sigma2 = {2.0};
  CHECK(lr_predict(fixed, 10)[0] == doctest::Approx(10 * std::exp(1.0)));

  std::vector<Cascade> doubled = corpus;
  doubled.insert(doubled.end(), corpus.begin(), corpus.end());
  const LRModel d = lr_fit(doubled, 10, {20});
  CHECK(d.alpha[0] == doctest::Approx(m.alpha[0]));
  CHECK(d.sigma2[0] == doctest::Approx(m.sigma2[0]));

  CHECK_THROWS_AS(lr_fit({corpus[0]}, 10, {20}), Error);
  CHECK_THROWS_AS(lr_fit(corpus, 10, {30}), Error);
}

TEST_CASE("rpp reinforcement") {
  for (double eps : {0.0, 0.1, 2.0})
    for (double a : {1e-3, 0.5, 4.0}) CHECK(rpp_reinforcement(0, a, eps) == doctest::Approx(eps + 1));
  CHECK(rpp_reinforcement(1e6, 0.5, 0.1) == doctest::Approx(0.1 + 1 / (1 - std::exp(-0.5))));
  CHECK(rpp_reinforcement(5, 1e-8, 0.0) == doctest::Approx(6.0).epsilon(1e-6));
}

TEST_CASE("rpp closed-form trajectory matches the ODE") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 20; ++i) {
    RPPModel m{0.2 + 3 * u(rng), 0.05 + 0.9 * u(rng), 0.01 + 0.3 * u(rng), 0.02 + 0.3 * u(rng)};
    if (i % 5 == 4) m.gamma = 1.1 + u(rng);
    const double t_obs = 2 + 30 * u(rng), r_obs = std::floor(200 * u(rng));
    const std::vector<double> hz{t_obs, t_obs + 1, t_obs + 10, 2 * t_obs};
    const auto pred = rpp_predict(m, r_obs, t_obs, hz);
    CHECK(pred[0] == r_obs);
    for (std::size_t h = 1; h < hz.size(); ++h) {
      const double ode = rk4_trajectory(m, r_obs, t_obs, hz[h]);
      CHECK(std::abs(pred[h] - ode) <= 1e-6 * std::max(1.0, ode));
    }
  }
}

TEST_CASE("rpp large-alpha limit is linear in the aging integral") {
  const RPPModel m{1.5, 0.4, 60.0, 0.2};
  const double t_obs = 10, r_obs = 40;
  const auto pred = rpp_predict(m, r_obs, t_obs, {20, 50});
  for (std::size_t i = 0; i < 2; ++i) {
    const double t = i ? 50 : 20;
    const double lin = r_obs + m.c * 1.2 * (std::pow(t, 0.6) - std::pow(t_obs, 0.6)) / 0.6;
    CHECK(pred[i] == doctest::Approx(lin).epsilon(1e-9));
  }
}

TEST_CASE("rpp gamma = 1 is a domain error") {
  try {
    rpp_predict(RPPModel{1, 1.0, 0.1, 0.1}, 5, 10, {20});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::domain);
  }
}

TEST_CASE("rpp intensity counts reactions strictly before t") {
  const RPPModel m{2.0, 0.5, 0.3, 0.1};
  Cascade c = counts_cascade("x", {{1.0, 1}, {2.0, 1}}, 5);
  CHECK(rpp_intensity(2.0, c, m) == doctest::Approx(2.0 / std::sqrt(2.0) * rpp_reinforcement(1, 0.3, 0.1)));
  CHECK(rpp_intensity(2.5, c, m) == doctest::Approx(2.0 / std::sqrt(2.5) * rpp_reinforcement(2, 0.3, 0.1)));
}

TEST_CASE("rpp parameter recovery") {
  const RPPModel truth{2.0, 0.4, 0.02, 0.1};
  std::vector<double> ec, eg, ea;
  double worse_c = 0;
  for (int i = 0; i < 100; ++i) {
    const Cascade c = simulate_rpp(truth, 0.05, 36, 1000 + i);
    const RPPFit f = rpp_fit(c, 36);
    ec.push_back(std::abs(f.model.c - truth.c) / truth.c);
    eg.push_back(std::abs(f.model.gamma - truth.gamma) / truth.gamma);
    ea.push_back(std::abs(f.model.alpha - truth.alpha) / truth.alpha);
    RPPModel doubled = f.model;
    doubled.c *= 2;
    if (rpp_log_likelihood(c, doubled, 36) < f.loglik) ++worse_c;
  }
  MESSAGE("median relative errors c " << median(ec) << ", gamma " << median(eg) << ", alpha " << median(ea));
  CHECK(median(ec) <= 0.25);
  CHECK(median(eg) <= 0.25);
  CHECK(median(ea) <= 0.25);
  CHECK(worse_c == 100);
}
