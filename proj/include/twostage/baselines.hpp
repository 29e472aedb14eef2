#pragma once

// Comparison baselines: log-linear regression on cumulative counts (LR) and the
// reinforced Poisson process (RPP). Counts R(t) are numbers of reaction events
// in (0, t]; the seed post is not counted.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "twostage/model.hpp"

namespace twostage {

struct LRModel {
  double t_obs = 0.0;
  std::vector<double> horizons;
  std::vector<double> alpha;
  std::vector<double> sigma2;
};

/// Gaussian maximum likelihood per horizon on log(R(t) / R(t_obs)). Needs at
/// least two cascades, each observed up to max(horizons) with R(t_obs) >= 1.
LRModel lr_fit(const std::vector<Cascade>& corpus, double t_obs, const std::vector<double>& horizons);

/// R(t_obs) exp(alpha_t + sigma2_t / 2) per horizon.
std::vector<double> lr_predict(const LRModel& model, double r_obs);

struct RPPModel {
  double c = 1.0;
  double gamma = 0.5;  // aging exponent of t^-gamma (not the kernel exponent)
  double alpha = 1.0;
  double epsilon = 0.1;

  friend bool operator==(const RPPModel&, const RPPModel&) = default;
};

/// Reinforcement r_alpha(R) = eps + (1 - e^{-alpha (R+1)}) / (1 - e^{-alpha}).
double rpp_reinforcement(double count, double alpha, double epsilon);

/// c t^-gamma r_alpha(R(t)) with R(t) the number of reactions strictly before t.
double rpp_intensity(double t, const Cascade& cascade, const RPPModel& m);

/// Log-likelihood on (t_first, t_obs], where t_first is the first reaction.
double rpp_log_likelihood(const Cascade& cascade, const RPPModel& m, double t_obs);

struct RPPFitOptions {
  double epsilon = 0.1;
  std::size_t min_events = 10;
  int restarts = 3;
  double convergence_tol = 1e-7;
};

struct RPPFit {
  RPPModel model;
  double loglik = 0.0;
  std::size_t n_events_used = 0;
  bool converged = false;
};

RPPFit rpp_fit(const Cascade& cascade, double t_obs, const RPPFitOptions& opts = {});

/// Closed-form mean trajectory R(t) from (t_obs, r_obs), for each horizon.
/// Throws Error(domain) when gamma == 1 (no closed form given for that branch).
std::vector<double> rpp_predict(const RPPModel& m, double r_obs, double t_obs,
                                const std::vector<double>& horizons);

/// Thinning simulation of the RPP from `t_start` (> 0) with R(t_start) = 0.
Cascade simulate_rpp(const RPPModel& m, double t_start, double t_end, std::uint64_t seed,
                     std::size_t max_events = 1'000'000);

}  // namespace twostage
