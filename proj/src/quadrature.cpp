#include "gfnoma/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gfnoma/errors.hpp"

namespace gfnoma {

namespace {

struct Simpson {
  const std::function<double(double)>& f;
  const QuadratureOptions& opts;
  double error = 0;
  bool exhausted = false;

  double recurse(double a, double fa, double m, double fm, double b, double fb, double whole, double tol,
                 int depth) {
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;

    // The floor stops refinement once delta is rounding noise of the panel sum.
    const double floor = 1e-15 * std::abs(left + right);
    if (depth >= opts.min_depth && std::abs(delta) <= 15.0 * std::max(tol, floor)) {
      error += std::abs(delta) / 15.0;
      return left + right + delta / 15.0;
    }
    if (depth >= opts.max_depth) {
      exhausted = true;
      error += std::abs(delta) / 15.0;
      return left + right + delta / 15.0;
    }
    return recurse(a, fa, lm, flm, m, fm, left, 0.5 * tol, depth + 1) +
           recurse(m, fm, rm, frm, b, fb, right, 0.5 * tol, depth + 1);
  }
};

}  // namespace

QuadratureResult integrate(const std::function<double(double)>& f, double a, double b,
                           const QuadratureOptions& opts) {
  if (!(a <= b)) throw DomainError("integrate: requires a <= b");
  if (a == b) return {};

  Simpson s{f, opts};
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  const double value = s.recurse(a, fa, m, fm, b, fb, whole, opts.tol, 0);

  if (!std::isfinite(value)) throw QuadratureError("integrate: non-finite integrand", value, s.error);
  if (s.exhausted) {
    std::ostringstream os;
    os << "integrate: max depth " << opts.max_depth << " exceeded on [" << a << ", " << b
       << "], error estimate " << s.error;
    throw QuadratureError(os.str(), value, s.error);
  }
  return {value, s.error};
}

}  // namespace gfnoma
