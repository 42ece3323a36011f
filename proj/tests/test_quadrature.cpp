#include <doctest.h>

#include <cmath>

#include "gfnoma/config.hpp"
#include "gfnoma/errors.hpp"
#include "gfnoma/quadrature.hpp"

using namespace gfnoma;

TEST_SUITE("quadrature") {
  TEST_CASE("polynomial and density integrals") {
    CHECK(std::abs(integrate([](double x) { return x * x; }, 0, 1).value - 1.0 / 3.0) <= 1e-12);
    const double r = 50;
    CHECK(std::abs(integrate([&](double x) { return 2 * x / (r * r); }, 0, r).value - 1.0) <= 1e-12);
    CHECK(integrate([](double) { return 7.0; }, 2, 2).value == 0.0);
    CHECK_THROWS_AS(integrate([](double x) { return x; }, 1, 0), DomainError);
  }

  TEST_CASE("interference integrand against a dense trapezoid") {
    SystemConfig cfg;
    const double s = 1.0 / (packet_power(cfg) * path_gain(cfg, 25.0));
    const double sp = s * packet_power(cfg);
    const auto f = [&](double r) {
      const double x = sp * path_gain(cfg, r);
      return x / (1 + x) * r;
    };
    const double a = 25, b = 50;
    const int n = 1000000;
    const double h = (b - a) / n;
    double trap = 0.5 * (f(a) + f(b));
    for (int i = 1; i < n; ++i) trap += f(a + i * h);
    trap *= h;
    const auto q = integrate(f, a, b);
    CHECK(std::abs(q.value - trap) <= 1e-8);
    CHECK(q.error_estimate <= 1e-8);
  }

  TEST_CASE("exhausted depth reports the best estimate") {
    try {
      integrate([](double x) { return std::sin(1.0 / x); }, 1e-9, 1, QuadratureOptions{.tol = 1e-14, .max_depth = 8});
      FAIL("expected non-convergence");
    } catch (const QuadratureError& e) {
      CHECK(std::isfinite(e.best_estimate()));
      CHECK(e.error_estimate() > 0);
    }
  }
}
