#include <cmath>

#include "doctest.h"
#include "twostage/optimize.hpp"

using namespace twostage;

TEST_CASE("box BFGS on Rosenbrock") {
  auto f = [](std::span<const double> x, std::span<double> g) {
    const double a = 1 - x[0], b = x[1] - x[0] * x[0];
    g[0] = -2 * a - 400 * x[0] * b;
    g[1] = 200 * b;
    return a * a + 100 * b * b;
  };
  const auto r = minimize_box(f, {-1.2, 1.0}, BoxBounds::unbounded(2), {.max_iterations = 500, .gradient_tol = 1e-8});
  CHECK(r.converged);
  CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(r.x[1] == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("active bounds are respected") {
  auto f = [](std::span<const double> x, std::span<double> g) {
    g[0] = 2 * (x[0] - 3);
    g[1] = 2 * (x[1] + 2);
    return (x[0] - 3) * (x[0] - 3) + (x[1] + 2) * (x[1] + 2);
  };
  const auto r = minimize_box(f, {0.5, 0.5}, BoxBounds{{0, 0}, {1, 1}});
  CHECK(r.x[0] == 1.0);
  CHECK(r.x[1] == 0.0);
  CHECK(r.projected_gradient_norm < 1e-8);
}

TEST_CASE("never worse than the start") {
  auto f = [](std::span<const double> x, std::span<double> g) {
    g[0] = std::cos(x[0]);
    return std::sin(x[0]);
  };
  const auto r = minimize_box(f, {0.3}, BoxBounds::unbounded(1));
  CHECK(r.f <= std::sin(0.3));
}

TEST_CASE("numeric gradient") {
  double g[2];
  const double x[2] = {0.7, -1.3};
  numeric_gradient([](std::span<const double> v) { return v[0] * v[0] * v[1] + std::exp(v[1]); }, x, g);
  CHECK(g[0] == doctest::Approx(2 * 0.7 * -1.3).epsilon(1e-7));
  CHECK(g[1] == doctest::Approx(0.49 + std::exp(-1.3)).epsilon(1e-7));
}

TEST_CASE("Brent") {
  const auto m = brent_minimize([](double x) { return (x - 2.5) * (x - 2.5) + 1; }, 0, 10, 30);
  CHECK(m.x == doctest::Approx(2.5).epsilon(1e-6));
  CHECK(m.f == doctest::Approx(1.0));
  const auto edge = brent_minimize([](double x) { return x; }, 1, 4);
  CHECK(edge.x == doctest::Approx(1.0).epsilon(1e-4));
}
