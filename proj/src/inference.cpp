#include "twostage/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <sstream>

#include "twostage/error.hpp"
#include "twostage/optimize.hpp"

namespace twostage {

const char* to_string(ModelId id) noexcept {
  switch (id) {
    case ModelId::proposed: return "proposed";
    case ModelId::tideh: return "tideh";
    case ModelId::rpp: return "rpp";
    case ModelId::lr: return "lr";
  }
  return "unknown";
}

ModelId parse_model_id(const std::string& name) {
  if (name == "proposed") return ModelId::proposed;
  if (name == "tideh") return ModelId::tideh;
  if (name == "rpp") return ModelId::rpp;
  if (name == "lr") return ModelId::lr;
  fail(ErrorKind::precondition, "unknown model id '" + name + "' (expected proposed, tideh, rpp or lr)");
}

int parameter_count(ModelId id) {
  switch (id) {
    case ModelId::proposed: return 7;
    case ModelId::tideh: return 4;
    case ModelId::rpp: return 3;
    case ModelId::lr: return 0;
  }
  return 0;
}

double aic(double loglik, int k) { return 2.0 * k - 2.0 * loglik; }

FitConfig FitConfig::for_observation(double t_obs) {
  FitConfig cfg;
  cfg.t_obs = t_obs;
  cfg.tau_low = 12.0;
  cfg.tau_high = 2.0 * t_obs;
  cfg.tc_low = 0.1 * t_obs;
  cfg.tc_high = 0.9 * t_obs;
  return cfg;
}

void validate(const FitConfig& cfg) {
  require(cfg.t_obs > 0.0, ErrorKind::precondition, "fit: t_obs must be positive");
  require(cfg.tau_low > 0.0 && cfg.tau_low < cfg.tau_high, ErrorKind::precondition,
          "fit: need 0 < tau_low < tau_high (t_obs too short for the default tau range?)");
  require(cfg.tc_low > 0.0 && cfg.tc_low < cfg.tc_high && cfg.tc_high < cfg.t_obs, ErrorKind::precondition,
          "fit: need 0 < tc_low < tc_high < t_obs");
  require(cfg.tc_grid_points >= 2, ErrorKind::precondition, "fit: tc_grid_points must be >= 2");
  require(cfg.restarts >= 1, ErrorKind::precondition, "fit: restarts must be >= 1");
  validate(cfg.kernel);
}

namespace {

constexpr double kLogAmplitudeLow = -32.0;  // ~1e-14
constexpr double kLogAmplitudeHigh = 9.2;   // ~1e4

struct Candidate {
  StageVector theta{};
  double loglik = -std::numeric_limits<double>::infinity();
  bool converged = false;
};

double clamp_tau(double tau, const FitConfig& cfg) { return std::clamp(tau, cfg.tau_low, cfg.tau_high); }

double clamp_amplitude(double a) {
  return std::clamp(a, std::exp(kLogAmplitudeLow), std::exp(kLogAmplitudeHigh));
}

// Decay time guess from the half-life of the hourly event rate after its peak.
double initial_tau(const Cascade& cascade, const FitConfig& cfg) {
  const auto bins = static_cast<std::size_t>(std::ceil(cfg.t_obs));
  std::vector<double> counts(std::max<std::size_t>(bins, 1), 0.0);
  for (const auto& e : cascade.events) {
    if (e.time <= 0.0) continue;
    if (e.time > cfg.t_obs) break;
    counts[std::min(bins - 1, static_cast<std::size_t>(e.time))] += 1.0;
  }
  const auto peak = static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
  double half_life = cfg.t_obs;
  for (std::size_t b = peak + 1; b < counts.size(); ++b) {
    if (counts[b] <= 0.5 * counts[peak]) {
      half_life = static_cast<double>(b - peak);
      break;
    }
  }
  return clamp_tau(half_life / std::log(2.0), cfg);
}

struct Problem {
  const LikelihoodWorkspace& ws;
  const FitConfig& cfg;
  double scale;  // objective is -loglik / scale
  int evaluations = 0;
};

// Optimizer coordinates (log a, log tau, r, theta0) for the single-stage model.
Candidate run_tideh(Problem& pb, const StageVector& start) {
  auto objective = [&](std::span<const double> y, std::span<double> g) {
    const double a = std::exp(y[0]), tau = std::exp(y[1]);
    StageVector th{a, tau, 0.0, tau, y[2], y[3]};
    double grad[kTwoStageDim];
    const double ll = pb.ws.evaluate(th, grad);
    ++pb.evaluations;
    if (!std::isfinite(ll)) return std::numeric_limits<double>::infinity();
    g[0] = -a * grad[0] / pb.scale;
    g[1] = -tau * grad[1] / pb.scale;
    g[2] = -grad[4] / pb.scale;
    g[3] = -grad[5] / pb.scale;
    return -ll / pb.scale;
  };
  constexpr double inf = std::numeric_limits<double>::infinity();
  BoxBounds box{{kLogAmplitudeLow, std::log(pb.cfg.tau_low), -1.0, -inf},
                {kLogAmplitudeHigh, std::log(pb.cfg.tau_high), 1.0, inf}};
  MinimizeOptions mo;
  mo.gradient_tol = pb.cfg.convergence_tol;
  const auto res = minimize_box(objective,
                                {std::log(clamp_amplitude(start[0])), std::log(clamp_tau(start[1], pb.cfg)),
                                 start[4], start[5]},
                                box, mo);
  Candidate c;
  const double a = std::exp(res.x[0]), tau = std::exp(res.x[1]);
  c.theta = {a, tau, 0.0, tau, res.x[2], res.x[3]};
  c.loglik = std::isfinite(res.f) ? -res.f * pb.scale : -inf;
  c.converged = res.converged;
  return c;
}

Candidate run_two_stage(Problem& pb, const StageVector& start) {
  auto objective = [&](std::span<const double> y, std::span<double> g) {
    StageVector th{std::exp(y[0]), std::exp(y[1]), std::exp(y[2]), std::exp(y[3]), y[4], y[5]};
    double grad[kTwoStageDim];
    const double ll = pb.ws.evaluate(th, grad);
    ++pb.evaluations;
    if (!std::isfinite(ll)) return std::numeric_limits<double>::infinity();
    for (int i = 0; i < 4; ++i) g[i] = -th[i] * grad[i] / pb.scale;
    g[4] = -grad[4] / pb.scale;
    g[5] = -grad[5] / pb.scale;
    return -ll / pb.scale;
  };
  constexpr double inf = std::numeric_limits<double>::infinity();
  const double lt = std::log(pb.cfg.tau_low), ht = std::log(pb.cfg.tau_high);
  BoxBounds box{{kLogAmplitudeLow, lt, kLogAmplitudeLow, lt, -1.0, -inf},
                {kLogAmplitudeHigh, ht, kLogAmplitudeHigh, ht, 1.0, inf}};
  MinimizeOptions mo;
  mo.gradient_tol = pb.cfg.convergence_tol;
  const auto res = minimize_box(objective,
                                {std::log(clamp_amplitude(start[0])), std::log(clamp_tau(start[1], pb.cfg)),
                                 std::log(clamp_amplitude(start[2])), std::log(clamp_tau(start[3], pb.cfg)),
                                 start[4], start[5]},
                                box, mo);
  Candidate c;
  c.theta = {std::exp(res.x[0]), std::exp(res.x[1]), std::exp(res.x[2]), std::exp(res.x[3]), res.x[4], res.x[5]};
  c.loglik = std::isfinite(res.f) ? -res.f * pb.scale : -inf;
  c.converged = res.converged;
  return c;
}

void check_events(const LikelihoodWorkspace& ws, const FitConfig& cfg, const Cascade& cascade) {
  if (ws.counted_events() < cfg.min_events) {
    std::ostringstream os;
    os << "cascade '" << cascade.id << "' has " << ws.counted_events() << " events in (0, " << cfg.t_obs
       << "], fewer than the required " << cfg.min_events;
    fail(ErrorKind::precondition, os.str());
  }
}

Candidate best_tideh(Problem& pb, const Cascade& cascade) {
  const FitConfig& cfg = pb.cfg;
  const double tau0 = initial_tau(cascade, cfg);
  const double unit = pb.ws.compensator({1.0, tau0, 0.0, tau0, 0.0, 0.0});
  const double a0 = unit > 0.0 ? static_cast<double>(pb.ws.counted_events()) / unit : 1e-3;
  static constexpr double kAmp[] = {1.0, 0.7, 1.4};
  static constexpr double kTau[] = {1.0, 1.5, 0.67};
  Candidate best;
  for (int k = 0; k < cfg.restarts; ++k) {
    const int m = k % 3;
    const StageVector start{a0 * kAmp[m], clamp_tau(tau0 * kTau[m], cfg), 0.0, tau0, 0.2, 8.0 * k};
    const Candidate c = run_tideh(pb, start);
    if (c.loglik > best.loglik) best = c;
  }
  return best;
}

CircadianParams circadian_of(const StageVector& th) {
  CircadianParams c;
  c.r = th[4];
  c.theta0 = th[5];
  return c.normalized();
}

}  // namespace

namespace {

FitResult tideh_result(const Candidate& best, const FitConfig& cfg, const LikelihoodWorkspace& ws, int evals) {
  if (!std::isfinite(best.loglik)) fail(ErrorKind::fit_failure, "TiDeH fit: every restart diverged");
  FitResult out;
  out.model = ModelId::tideh;
  out.kernel = cfg.kernel;
  out.t_obs = cfg.t_obs;
  out.params.a1 = best.theta[0];
  out.params.tau1 = best.theta[1];
  out.params.a2 = 0.0;
  out.params.tau2 = best.theta[1];
  out.params.circadian = circadian_of(best.theta);
  out.params.tc = cfg.t_obs;
  out.loglik = best.loglik;
  out.n_events_used = ws.counted_events();
  out.aic = aic(out.loglik, parameter_count(ModelId::tideh));
  out.diagnostics.converged = best.converged;
  out.diagnostics.restarts_used = cfg.restarts;
  out.diagnostics.evaluations = evals;
  return out;
}

}  // namespace

FitResult fit_tideh(const Cascade& cascade, const FitConfig& cfg) {
  validate(cfg);
  LikelihoodWorkspace ws(cascade, cfg.t_obs, cfg.kernel, cfg.quad_tol);
  check_events(ws, cfg, cascade);
  ws.set_cutoff(std::numeric_limits<double>::infinity());
  Problem pb{ws, cfg, static_cast<double>(std::max<std::size_t>(1, ws.counted_events()))};
  const Candidate best = best_tideh(pb, cascade);
  return tideh_result(best, cfg, ws, pb.evaluations);
}

FitResult fit_two_stage(const Cascade& cascade, const FitConfig& cfg) {
  validate(cfg);
  LikelihoodWorkspace ws(cascade, cfg.t_obs, cfg.kernel, cfg.quad_tol);
  check_events(ws, cfg, cascade);
  Problem pb{ws, cfg, static_cast<double>(std::max<std::size_t>(1, ws.counted_events()))};

  // The single-stage optimum, embedded at each tc, seeds every inner fit; the
  // profile therefore never drops below the TiDeH likelihood.
  ws.set_cutoff(std::numeric_limits<double>::infinity());
  const Candidate single = best_tideh(pb, cascade);
  if (!std::isfinite(single.loglik)) fail(ErrorKind::fit_failure, "two-stage fit: single-stage seed diverged");
  const double a = single.theta[0], tau = single.theta[1], r = single.theta[4], th0 = single.theta[5];

  std::map<double, Candidate> evaluated;
  int restarts = cfg.restarts;
  auto inner = [&](double tc) -> const Candidate& {
    if (auto it = evaluated.find(tc); it != evaluated.end()) return it->second;
    ws.set_cutoff(tc);
    std::vector<StageVector> starts;
    starts.push_back({a, tau, a * std::exp(-tc / tau), tau, r, th0});
    if (!evaluated.empty()) {
      auto near = evaluated.lower_bound(tc);
      if (near == evaluated.end() || (near != evaluated.begin() && tc - std::prev(near)->first < near->first - tc))
        near = std::prev(near);
      starts.push_back(near->second.theta);
    }
    const double tau_mid = std::sqrt(cfg.tau_low * cfg.tau_high);
    starts.push_back({a, tau, 4.0 * a * std::exp(-tc / tau), tau_mid, r, th0});
    starts.push_back({a, tau, 0.25 * a * std::exp(-tc / tau), cfg.tau_low, r, th0});
    starts.resize(std::min<std::size_t>(starts.size(), static_cast<std::size_t>(restarts)));

    Candidate best;
    for (const auto& s : starts) {
      const Candidate c = run_two_stage(pb, s);
      if (c.loglik > best.loglik) best = c;
    }
    return evaluated.emplace(tc, best).first->second;
  };

  const int n = cfg.tc_grid_points;
  std::vector<double> grid(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) grid[static_cast<std::size_t>(k)] = cfg.tc_low + (cfg.tc_high - cfg.tc_low) * k / (n - 1);
  std::size_t best_k = 0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (inner(grid[k]).loglik > inner(grid[best_k]).loglik) best_k = k;
  }
  // Refinement steps are short moves from a fitted neighbour: the embedding
  // and the warm start suffice there.
  restarts = std::min(restarts, 2);
  const double lo = grid[best_k == 0 ? 0 : best_k - 1];
  const double hi = grid[std::min(best_k + 1, grid.size() - 1)];
  brent_minimize([&](double tc) {
    const double ll = inner(tc).loglik;
    return std::isfinite(ll) ? -ll : std::numeric_limits<double>::max();
  }, lo, hi, 12, 16);

  auto best_it = evaluated.begin();
  for (auto it = evaluated.begin(); it != evaluated.end(); ++it)
    if (it->second.loglik > best_it->second.loglik) best_it = it;
  const Candidate& best = best_it->second;
  if (!std::isfinite(best.loglik)) fail(ErrorKind::fit_failure, "two-stage fit: every restart diverged");

  FitResult out;
  out.model = ModelId::proposed;
  out.kernel = cfg.kernel;
  out.t_obs = cfg.t_obs;
  out.params = from_vector(best.theta, best_it->first);
  out.params.circadian = circadian_of(best.theta);
  out.loglik = best.loglik;
  out.n_events_used = ws.counted_events();
  out.aic = aic(out.loglik, parameter_count(ModelId::proposed));
  out.diagnostics.converged = best.converged;
  out.diagnostics.restarts_used = cfg.restarts;
  out.diagnostics.evaluations = pb.evaluations;
  for (const auto& [tc, c] : evaluated) out.diagnostics.profile.push_back({tc, c.loglik});
  return out;
}

FitResult fit_model(const Cascade& cascade, ModelId model, const FitConfig& cfg, double rpp_epsilon) {
  switch (model) {
    case ModelId::proposed: return fit_two_stage(cascade, cfg);
    case ModelId::tideh: return fit_tideh(cascade, cfg);
    case ModelId::rpp: {
      RPPFitOptions opts;
      opts.epsilon = rpp_epsilon;
      opts.restarts = cfg.restarts;
      const RPPFit fit = rpp_fit(cascade, cfg.t_obs, opts);
      FitResult out;
      out.model = ModelId::rpp;
      out.rpp = fit.model;
      out.kernel = cfg.kernel;
      out.t_obs = cfg.t_obs;
      out.loglik = fit.loglik;
      out.n_events_used = fit.n_events_used;
      out.aic = aic(fit.loglik, parameter_count(ModelId::rpp));
      out.diagnostics.converged = fit.converged;
      out.diagnostics.restarts_used = opts.restarts;
      return out;
    }
    case ModelId::lr: break;
  }
  fail(ErrorKind::precondition, "model 'lr' is fitted on a corpus, not on a single cascade");
}

}  // namespace twostage
