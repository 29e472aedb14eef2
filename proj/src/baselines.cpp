#include "twostage/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "twostage/error.hpp"
#include "twostage/optimize.hpp"

namespace twostage {

LRModel lr_fit(const std::vector<Cascade>& corpus, double t_obs, const std::vector<double>& horizons) {
  require(corpus.size() >= 2, ErrorKind::precondition, "lr_fit: need at least two cascades");
  require(!horizons.empty(), ErrorKind::precondition, "lr_fit: no horizons");
  require(std::is_sorted(horizons.begin(), horizons.end()) && horizons.front() > t_obs,
          ErrorKind::precondition, "lr_fit: horizons must be sorted and beyond t_obs");
  LRModel m;
  m.t_obs = t_obs;
  m.horizons = horizons;
  const double n = static_cast<double>(corpus.size());
  std::vector<std::vector<double>> ratios(horizons.size());
  for (const auto& c : corpus) {
    const auto r_obs = c.count_until(t_obs);
    require(r_obs >= 1, ErrorKind::precondition, "lr_fit: cascade '" + c.id + "' has no posts by t_obs");
    require(c.t_max >= horizons.back(), ErrorKind::precondition,
            "lr_fit: cascade '" + c.id + "' is not observed up to the last horizon");
    for (std::size_t h = 0; h < horizons.size(); ++h)
      ratios[h].push_back(std::log(static_cast<double>(c.count_until(horizons[h])) / static_cast<double>(r_obs)));
  }
  for (const auto& v : ratios) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= n;
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    m.alpha.push_back(mean);
    m.sigma2.push_back(var / n);
  }
  return m;
}

std::vector<double> lr_predict(const LRModel& model, double r_obs) {
  require(r_obs >= 1.0, ErrorKind::precondition, "lr_predict: r_obs must be >= 1");
  std::vector<double> out;
  for (std::size_t h = 0; h < model.alpha.size(); ++h)
    out.push_back(r_obs * std::exp(model.alpha[h] + model.sigma2[h] / 2.0));
  return out;
}

double rpp_reinforcement(double count, double alpha, double epsilon) {
  return epsilon + (-std::expm1(-alpha * (count + 1.0))) / (-std::expm1(-alpha));
}

double rpp_intensity(double t, const Cascade& cascade, const RPPModel& m) {
  std::size_t before = 0;
  for (const auto& e : cascade.events) {
    if (e.time >= t) break;
    if (e.time > 0.0) ++before;
  }
  return m.c * std::pow(t, -m.gamma) * rpp_reinforcement(static_cast<double>(before), m.alpha, m.epsilon);
}

namespace {

// Integral of t^-gamma over [a, b], 0 < a <= b.
double aging_integral(double a, double b, double gamma) {
  const double g = 1.0 - gamma;
  const double lr = std::log(b / a);
  if (std::abs(g * lr) < 1e-12) return std::pow(a, g) * lr * (1.0 + 0.5 * g * lr);
  return std::pow(a, g) * std::expm1(g * lr) / g;
}

std::vector<double> reaction_times(const Cascade& cascade, double t_obs) {
  std::vector<double> out;
  for (const auto& e : cascade.events) {
    if (e.time > t_obs) break;
    if (e.time > 0.0) out.push_back(e.time);
  }
  return out;
}

double rpp_loglik_times(const std::vector<double>& times, const RPPModel& m, double t_obs) {
  if (times.empty()) return 0.0;
  double ll = 0.0;
  const double log_c = std::log(m.c);
  for (std::size_t j = 0; j < times.size(); ++j) {
    if (j > 0) {
      ll += log_c - m.gamma * std::log(times[j]) +
            std::log(rpp_reinforcement(static_cast<double>(j), m.alpha, m.epsilon));
    }
    const double right = j + 1 < times.size() ? times[j + 1] : t_obs;
    if (right > times[j]) {
      ll -= m.c * rpp_reinforcement(static_cast<double>(j + 1), m.alpha, m.epsilon) *
            aging_integral(times[j], right, m.gamma);
    }
  }
  return ll;
}

}  // namespace

double rpp_log_likelihood(const Cascade& cascade, const RPPModel& m, double t_obs) {
  return rpp_loglik_times(reaction_times(cascade, t_obs), m, t_obs);
}

RPPFit rpp_fit(const Cascade& cascade, double t_obs, const RPPFitOptions& opts) {
  require(opts.epsilon > 0.0, ErrorKind::precondition, "rpp_fit: epsilon must be positive");
  const auto times = reaction_times(cascade, t_obs);
  if (times.size() < opts.min_events) {
    std::ostringstream os;
    os << "rpp_fit: cascade '" << cascade.id << "' has " << times.size() << " events in (0, " << t_obs
       << "], fewer than the required " << opts.min_events;
    fail(ErrorKind::precondition, os.str());
  }
  const double scale = static_cast<double>(times.size());
  auto model_of = [&](std::span<const double> y) {
    return RPPModel{std::exp(y[0]), y[1], std::exp(y[2]), opts.epsilon};
  };
  auto value = [&](std::span<const double> y) {
    const double ll = rpp_loglik_times(times, model_of(y), t_obs);
    return std::isfinite(ll) ? -ll / scale : std::numeric_limits<double>::infinity();
  };
  auto objective = [&](std::span<const double> y, std::span<double> g) {
    const double f = value(y);
    if (std::isfinite(f)) numeric_gradient(value, y, g);
    return f;
  };
  BoxBounds box{{-30.0, 0.0, std::log(1e-5)}, {15.0, 3.0, std::log(20.0)}};
  MinimizeOptions mo;
  mo.gradient_tol = opts.convergence_tol;

  static constexpr double kGamma[] = {0.5, 0.2, 0.9};
  static constexpr double kAlpha[] = {0.02, 0.2, 0.002};
  RPPFit best;
  best.loglik = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < std::max(1, opts.restarts); ++k) {
    RPPModel start{1.0, kGamma[k % 3], kAlpha[k % 3], opts.epsilon};
    double comp = 0.0;
    for (std::size_t j = 0; j < times.size(); ++j) {
      const double right = j + 1 < times.size() ? times[j + 1] : t_obs;
      if (right > times[j])
        comp += rpp_reinforcement(static_cast<double>(j + 1), start.alpha, opts.epsilon) *
                aging_integral(times[j], right, start.gamma);
    }
    start.c = comp > 0.0 ? static_cast<double>(times.size() - 1) / comp : 1.0;
    const auto res = minimize_box(objective, {std::log(std::max(start.c, 1e-13)), start.gamma, std::log(start.alpha)},
                                  box, mo);
    if (!std::isfinite(res.f)) continue;
    const double ll = -res.f * scale;
    if (ll > best.loglik) {
      best.model = model_of(res.x);
      best.loglik = ll;
      best.converged = res.converged;
    }
  }
  if (!std::isfinite(best.loglik)) fail(ErrorKind::fit_failure, "rpp_fit: every restart diverged");
  best.n_events_used = times.size();
  return best;
}

std::vector<double> rpp_predict(const RPPModel& m, double r_obs, double t_obs, const std::vector<double>& horizons) {
  if (m.gamma == 1.0) fail(ErrorKind::domain, "rpp_predict: gamma = 1 has no closed-form trajectory");
  require(t_obs > 0.0, ErrorKind::precondition, "rpp_predict: t_obs must be positive");
  const double one_minus = -std::expm1(-m.alpha);
  const double eps_t = 1.0 + m.epsilon * one_minus;
  const double k = eps_t * m.c * m.alpha / ((1.0 - m.gamma) * one_minus);
  const double x0 = -(r_obs + 1.0) * m.alpha - std::log(eps_t - std::exp(-m.alpha * (r_obs + 1.0)));
  const double tg = std::pow(t_obs, 1.0 - m.gamma);
  std::vector<double> out;
  for (double t : horizons) {
    require(t >= t_obs, ErrorKind::precondition, "rpp_predict: horizons must be >= t_obs");
    if (t == t_obs) {
      out.push_back(r_obs);
      continue;
    }
    // T^{1-g} - t^{1-g}, without cancellation for t close to T
    const double dt = -tg * std::expm1((1.0 - m.gamma) * std::log(t / t_obs));
    const double x = k * dt + x0;
    const double softplus_neg = x > 0.0 ? std::log1p(std::exp(-x)) : -x + std::log1p(std::exp(x));
    out.push_back((softplus_neg - std::log(eps_t) - m.alpha) / m.alpha);
  }
  return out;
}

Cascade simulate_rpp(const RPPModel& m, double t_start, double t_end, std::uint64_t seed, std::size_t max_events) {
  require(t_start > 0.0 && t_end > t_start, ErrorKind::precondition, "simulate_rpp: need 0 < t_start < t_end");
  require(m.c > 0.0 && m.gamma >= 0.0 && m.alpha > 0.0 && m.epsilon > 0.0, ErrorKind::domain,
          "simulate_rpp: need c > 0, gamma >= 0, alpha > 0, epsilon > 0");
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> gap(1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Cascade c;
  c.id = "rpp-" + std::to_string(seed);
  c.t_max = t_end;
  c.origin_followers = 1;
  c.events.push_back({0.0, 1});
  double t = t_start;
  std::size_t count = 0;
  while (true) {
    const double reinf = rpp_reinforcement(static_cast<double>(count), m.alpha, m.epsilon);
    const double bound = m.c * std::pow(t, -m.gamma) * reinf;
    t += gap(rng) / bound;
    if (t > t_end) break;
    if (unit(rng) * bound <= m.c * std::pow(t, -m.gamma) * reinf) {
      c.events.push_back({t, 1});
      if (++count >= max_events) fail(ErrorKind::runaway, "simulate_rpp: event cap reached");
    }
  }
  return c;
}

}  // namespace twostage
