#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "twostage/baselines.hpp"
#include "twostage/likelihood.hpp"
#include "twostage/model.hpp"

namespace twostage {

enum class ModelId { proposed, tideh, rpp, lr };

const char* to_string(ModelId id) noexcept;
/// Parses "proposed", "tideh", "rpp" or "lr"; throws Error(precondition) otherwise.
ModelId parse_model_id(const std::string& name);

/// Number of free parameters entering the AIC.
int parameter_count(ModelId id);

struct FitConfig {
  double t_obs = 36.0;
  double tau_low = 12.0;
  double tau_high = 72.0;
  double tc_low = 3.6;
  double tc_high = 32.4;
  int tc_grid_points = 9;
  int restarts = 3;
  double quad_tol = 1e-10;
  double convergence_tol = 1e-6;  // projected-gradient norm of the per-event objective
  std::size_t min_events = 30;
  KernelParams kernel;

  /// Bounds scaled to the observation window: tau in (12, 2 t_obs), tc in (0.1, 0.9) t_obs.
  static FitConfig for_observation(double t_obs);
};

void validate(const FitConfig& cfg);

struct ProfilePoint {
  double tc = 0.0;
  double loglik = 0.0;
};

struct FitDiagnostics {
  bool converged = false;
  int restarts_used = 0;
  int evaluations = 0;
  std::vector<ProfilePoint> profile;  // sorted by tc; empty for single-stage fits
};

struct FitResult {
  ModelId model = ModelId::proposed;
  TwoStageParams params;  // TiDeH fits: a2 = 0, tau2 = tau1, tc = t_obs
  RPPModel rpp;           // meaningful only for ModelId::rpp
  KernelParams kernel;
  double t_obs = 0.0;
  double loglik = 0.0;
  std::size_t n_events_used = 0;
  double aic = 0.0;
  FitDiagnostics diagnostics;

  TiDeHParams tideh() const { return {params.a1, params.tau1, params.circadian}; }
};

double aic(double loglik, int k);

/// Maximum-likelihood fit of the two-stage model on [0, cfg.t_obs]: the six
/// rate parameters by bounded quasi-Newton at fixed tc, tc by grid scan plus
/// Brent refinement of the profile likelihood.
FitResult fit_two_stage(const Cascade& cascade, const FitConfig& cfg);

/// Maximum-likelihood fit of the single-stage model (a, tau, r, theta0).
FitResult fit_tideh(const Cascade& cascade, const FitConfig& cfg);

/// Dispatch on model id (lr has no likelihood fit and is rejected).
FitResult fit_model(const Cascade& cascade, ModelId model, const FitConfig& cfg,
                    double rpp_epsilon = 0.1);

}  // namespace twostage
