#include "twostage/optimize.hpp"

#include <algorithm>
#include <boost/math/tools/minima.hpp>
#include <cmath>
#include <cstdint>

namespace twostage {

BoxBounds BoxBounds::unbounded(std::size_t n) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  return {std::vector<double>(n, -inf), std::vector<double>(n, inf)};
}

namespace {

constexpr double kArmijo = 1e-4;
constexpr double kMaxCoordinateStep = 4.0;
constexpr int kMaxBacktracks = 40;

using Matrix = std::vector<double>;  // row-major n x n

void set_identity(Matrix& h, std::size_t n, double scale = 1.0) {
  std::fill(h.begin(), h.end(), 0.0);
  for (std::size_t i = 0; i < n; ++i) h[i * n + i] = scale;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

MinimizeResult minimize_box(const GradientObjective& f, std::vector<double> x0,
                            const BoxBounds& bounds, const MinimizeOptions& opts) {
  const std::size_t n = x0.size();
  auto project = [&](std::vector<double>& x) {
    for (std::size_t i = 0; i < n; ++i) x[i] = std::clamp(x[i], bounds.lower[i], bounds.upper[i]);
  };

  MinimizeResult res;
  project(x0);
  std::vector<double> x = std::move(x0);
  std::vector<double> g(n), gn(n), d(n), xn(n), s(n), y(n), hy(n);
  double fx = f(x, g);
  res.evaluations = 1;
  if (!std::isfinite(fx)) {
    res.x = x;
    return res;
  }

  Matrix h(n * n);
  set_identity(h, n);
  bool fresh = true;
  int stall = 0;
  std::vector<char> free_var(n);

  for (res.iterations = 0; res.iterations < opts.max_iterations; ++res.iterations) {
    double pg = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const bool pinned = (x[i] <= bounds.lower[i] && g[i] > 0.0) || (x[i] >= bounds.upper[i] && g[i] < 0.0);
      free_var[i] = !pinned;
      if (!pinned) pg = std::max(pg, std::abs(g[i]));
    }
    res.projected_gradient_norm = pg;
    if (pg < opts.gradient_tol) {
      res.converged = true;
      break;
    }

    bool accepted = false;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      for (std::size_t i = 0; i < n; ++i) {
        d[i] = 0.0;
        if (!free_var[i]) continue;
        for (std::size_t j = 0; j < n; ++j)
          if (free_var[j]) d[i] -= h[i * n + j] * g[j];
      }
      double slope = dot(g, d);
      if (!(slope < 0.0)) {
        set_identity(h, n);
        fresh = true;
        for (std::size_t i = 0; i < n; ++i) d[i] = free_var[i] ? -g[i] : 0.0;
        slope = dot(g, d);
      }
      double max_step = 0.0;
      for (double di : d) max_step = std::max(max_step, std::abs(di));
      double alpha = max_step > kMaxCoordinateStep ? kMaxCoordinateStep / max_step : 1.0;

      for (int bt = 0; bt < kMaxBacktracks; ++bt, alpha *= 0.5) {
        for (std::size_t i = 0; i < n; ++i) xn[i] = x[i] + alpha * d[i];
        project(xn);
        double decrease = 0.0;
        for (std::size_t i = 0; i < n; ++i) decrease += g[i] * (xn[i] - x[i]);
        if (decrease >= 0.0) continue;
        const double fn = f(xn, gn);
        ++res.evaluations;
        if (std::isfinite(fn) && fn <= fx + kArmijo * decrease) {
          for (std::size_t i = 0; i < n; ++i) {
            s[i] = xn[i] - x[i];
            y[i] = gn[i] - g[i];
          }
          const double sy = dot(s, y);
          const double yy = dot(y, y);
          if (sy > 1e-12 * std::sqrt(dot(s, s) * yy)) {
            if (fresh) {
              set_identity(h, n, sy / yy);
              fresh = false;
            }
            // H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T
            const double rho = 1.0 / sy;
            for (std::size_t i = 0; i < n; ++i) {
              hy[i] = 0.0;
              for (std::size_t j = 0; j < n; ++j) hy[i] += h[i * n + j] * y[j];
            }
            const double yhy = dot(y, hy);
            for (std::size_t i = 0; i < n; ++i)
              for (std::size_t j = 0; j < n; ++j)
                h[i * n + j] += -rho * (s[i] * hy[j] + hy[i] * s[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
          }
          const double gain = fx - fn;
          stall = gain <= opts.relative_f_tol * std::max(1.0, std::abs(fx)) ? stall + 1 : 0;
          x.swap(xn);
          g.swap(gn);
          fx = fn;
          accepted = true;
          break;
        }
      }
      if (!accepted) {
        if (fresh) break;
        set_identity(h, n);
        fresh = true;
      }
    }
    if (!accepted) {
      // No descent along the steepest direction either: numerically stationary.
      res.converged = res.projected_gradient_norm < 1e3 * opts.gradient_tol;
      break;
    }
    if (stall >= opts.stall_iterations) {
      res.converged = true;
      break;
    }
  }

  res.x = std::move(x);
  res.f = fx;
  return res;
}

void numeric_gradient(const std::function<double(std::span<const double>)>& f,
                      std::span<const double> x, std::span<double> grad, double rel_step) {
  std::vector<double> probe(x.begin(), x.end());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double h = rel_step * std::max(1.0, std::abs(x[i]));
    probe[i] = x[i] + h;
    const double up = f(probe);
    probe[i] = x[i] - h;
    const double down = f(probe);
    probe[i] = x[i];
    grad[i] = (up - down) / (2.0 * h);
  }
}

ScalarMinimum brent_minimize(const std::function<double(double)>& f, double lo, double hi, int bits,
                             int max_iterations) {
  ScalarMinimum out;
  std::uintmax_t iters = static_cast<std::uintmax_t>(max_iterations);
  auto counted = [&](double x) {
    ++out.evaluations;
    return f(x);
  };
  const auto [x, fx] = boost::math::tools::brent_find_minima(counted, lo, hi, bits, iters);
  out.x = x;
  out.f = fx;
  return out;
}

}  // namespace twostage
