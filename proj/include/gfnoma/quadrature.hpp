#pragma once

#include <functional>

namespace gfnoma {

struct QuadratureResult {
  double value = 0;
  double error_estimate = 0;
};

struct QuadratureOptions {
  double tol = 1e-8;   // absolute, shared across [a,b] in proportion to width
  int max_depth = 40;
  int min_depth = 4;   // forced refinement before the error test is trusted
};

/// Adaptive composite Simpson with Richardson correction. Throws QuadratureError
/// carrying the best estimate when any branch exhausts `max_depth`.
QuadratureResult integrate(const std::function<double(double)>& f, double a, double b,
                           const QuadratureOptions& opts = {});

inline QuadratureResult integrate(const std::function<double(double)>& f, double a, double b, double tol) {
  return integrate(f, a, b, QuadratureOptions{.tol = tol});
}

}  // namespace gfnoma
