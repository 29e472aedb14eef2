#pragma once

// Point-process log-likelihood of the two-stage model on an observation window
// [0, t_obs], with an analytic gradient.
//
// The compensator splits into one term per history event i,
//   d_i a e^{(onset - t_i)/tau} [E0 + r (cos psi_i ES + sin psi_i EC)](tau, t_obs - t_i),
// where E0/ES/EC are integrals of phi(u) e^{-u/tau} {1, sin wu, cos wu} over
// [0, L]. Those integrals are accumulated in one sweep over a fixed panel grid
// (Gauss-Legendre panels split at s0, at every L_i and geometrically away from
// u = 0), so an evaluation costs O(events + panels) after setup.

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "twostage/model.hpp"

namespace twostage {

/// Natural parameter layout used by the workspace: a1, tau1, a2, tau2, r, theta0.
inline constexpr std::size_t kTwoStageDim = 6;
using StageVector = std::array<double, kTwoStageDim>;

StageVector to_vector(const TwoStageParams& p);
TwoStageParams from_vector(const StageVector& v, double tc);

class LikelihoodWorkspace {
 public:
  /// History = events with time <= t_obs. Counted events (the log-sum) are the
  /// history events with time > 0. Throws Error(numerical) if the panel grid
  /// cannot reach `quad_tol`.
  LikelihoodWorkspace(const Cascade& cascade, double t_obs, const KernelParams& kernel,
                      double quad_tol = 1e-10);

  double t_obs() const { return t_obs_; }
  const KernelParams& kernel() const { return kernel_; }
  std::size_t counted_events() const { return counted_.size(); }
  std::size_t history_events() const { return times_.size(); }
  std::size_t panel_count() const { return panel_ends_.size(); }
  double cutoff() const { return cutoff_; }

  /// Recomputes per-event stage memories for correction time `tc`. Use +inf for
  /// the single-stage (TiDeH) model.
  void set_cutoff(double tc);

  /// Log-likelihood at the current cutoff; -inf if some counted event has zero
  /// intensity. When `grad` is non-empty it receives d loglik / d theta.
  /// Const and free of shared mutable state, so concurrent calls are safe.
  double evaluate(const StageVector& theta, std::span<double> grad = {}) const;

  /// Integral of the intensity over [0, t_obs] (the compensator).
  double compensator(const StageVector& theta) const;

 private:
  struct Moments {
    double e0 = 0, es = 0, ec = 0;     // integrals of phi e^{-u/tau} {1, sin, cos}
    double e0u = 0, esu = 0, ecu = 0;  // same with an extra factor u
  };
  struct StageTerms {
    double value = 0.0;
    double d_a = 0.0, d_tau = 0.0, d_r = 0.0, d_theta = 0.0;
  };

  void build_panels(double quad_tol);
  std::vector<Moments> sweep(double tau) const;
  StageTerms stage_compensator(double a, double tau, double onset, double r, double theta0,
                               bool second, bool want_grad) const;
  double prefix(std::size_t row, std::size_t k) const;

  double t_obs_;
  KernelParams kernel_;
  double cutoff_ = 0.0;

  // History events (time <= t_obs), sorted.
  std::vector<double> times_;
  std::vector<double> marks_;
  std::vector<std::size_t> breakpoint_of_;  // history index -> cumulative moment slot

  // Counted events: indices into the history, with precomputed trig factors.
  std::vector<std::size_t> counted_;
  std::vector<std::size_t> strictly_before_;  // # history events with time < t_j
  std::vector<double> sin_t_, cos_t_;  // of omega * t, per history event

  // Prefix sums of d_i phi(t_j - t_i) over i for each counted event j.
  bool use_prefix_ = false;
  std::vector<std::size_t> prefix_offset_;
  std::vector<double> prefix_;

  // Per-event memories at the current cutoff.
  std::vector<double> h1_, h2_;
  std::vector<char> stage_of_;  // 1, 2, or 0 (event exactly at tc) per history event

  // Quadrature nodes and the panel index at which each node's panel ends.
  std::vector<double> node_u_, node_wphi_, node_sin_, node_cos_;
  std::vector<std::size_t> panel_ends_;  // one past the last node of each panel
  std::vector<double> panel_right_;      // right edge of each panel
};

/// Convenience wrapper: builds a workspace and evaluates the two-stage log-likelihood.
double log_likelihood(const Cascade& cascade, const TwoStageParams& params, const KernelParams& kernel,
                      double t_obs);

/// Single-stage (TiDeH) log-likelihood.
double log_likelihood_tideh(const Cascade& cascade, const TiDeHParams& params,
                            const KernelParams& kernel, double t_obs);

}  // namespace twostage
