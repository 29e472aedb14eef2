#pragma once

// Small numerical optimizers used by the fitting code.

#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace twostage {

/// Objective returning f(x) and writing the gradient into `grad`.
/// Returning +inf (or NaN) marks x as infeasible; the line search backs off.
using GradientObjective = std::function<double(std::span<const double> x, std::span<double> grad)>;

struct BoxBounds {
  std::vector<double> lower;
  std::vector<double> upper;

  static BoxBounds unbounded(std::size_t n);
};

struct MinimizeOptions {
  int max_iterations = 200;
  double gradient_tol = 1e-5;        // on the projected gradient, infinity norm
  double relative_f_tol = 1e-12;     // stop after several iterations of negligible progress
  int stall_iterations = 5;
};

struct MinimizeResult {
  std::vector<double> x;
  double f = std::numeric_limits<double>::infinity();
  double projected_gradient_norm = std::numeric_limits<double>::infinity();
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
};

/// Projected quasi-Newton (BFGS on the free variables, Armijo search along the
/// projection arc) for min f over a box. Never returns a point worse than x0.
MinimizeResult minimize_box(const GradientObjective& f, std::vector<double> x0,
                            const BoxBounds& bounds, const MinimizeOptions& opts = {});

/// Central-difference gradient of a scalar function; used where analytic
/// derivatives are not worth writing.
void numeric_gradient(const std::function<double(std::span<const double>)>& f,
                      std::span<const double> x, std::span<double> grad, double rel_step = 1e-6);

struct ScalarMinimum {
  double x = 0.0;
  double f = 0.0;
  int evaluations = 0;
};

/// Brent's method on [lo, hi] (golden section + parabolic steps).
ScalarMinimum brent_minimize(const std::function<double(double)>& f, double lo, double hi,
                             int bits = 20, int max_iterations = 60);

}  // namespace twostage
