#include "gfnoma/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "gfnoma/errors.hpp"
#include "gfnoma/quadrature.hpp"

namespace gfnoma::analytic {

namespace {

constexpr double kProbSlack = 1e-9;

// n * log(x) with the convention 0 * log(0) = 0.
double xlogy(double n, double x) {
  if (n == 0) return 0.0;
  return n * std::log(x);
}

double log_poisson_pmf(double lambda, int l) { return -lambda + l * std::log(lambda) - std::lgamma(l + 1.0); }

double checked_probability(double p, const char* what) {
  if (!(p >= -kProbSlack && p <= 1.0 + kProbSlack))
    throw DomainError(std::string(what) + ": probability out of range: " + std::to_string(p));
  return std::clamp(p, 0.0, 1.0);
}

// Integral over [lo, hi] of (1 - 1/(1 + s P g(r))) r dr with g the large-scale gain.
QuadratureResult interference_integral(double s, double lo, double hi, const SystemConfig& cfg) {
  const double sp = s * packet_power(cfg);
  if (sp == 0 || lo >= hi) return {};
  return integrate(
      [&](double r) {
        const double x = sp * path_gain(cfg, r);
        return x / (1.0 + x) * r;
      },
      lo, hi, QuadratureOptions{});
}

struct Transform {
  double value;
  double error;  // absolute, first order in the quadrature error of the exponent
};

Transform singleton_transform(double s, double r_hat, const SystemConfig& cfg, const IntensitySet& in) {
  const auto q = interference_integral(s, r_hat, cfg.geometry.cell_radius, cfg);
  const double k = 2.0 * std::numbers::pi * in.omega_s;
  const double v = std::exp(-k * q.value);
  return {v, v * k * q.error_estimate};
}

Transform collided_transform(double s, const SystemConfig& cfg, const IntensitySet& in) {
  if (in.omega_c == 0) return {1.0, 0.0};
  const auto q = interference_integral(s, 0.0, cfg.geometry.cell_radius, cfg);
  const double k = 2.0 * std::numbers::pi * in.omega_c;
  const double v = std::exp(-k * q.value);
  return {v, v * k * q.error_estimate};
}

QuadratureResult conditional_coverage_impl(int k, const SystemConfig& cfg, const SlotStatistics& d) {
  const double n = d.n_singleton;
  if (k < 1 || k > static_cast<int>(std::ceil(n)))
    throw DomainError("conditional_coverage: rank " + std::to_string(k) + " outside [1, ceil(N_s)]");

  const double radius = cfg.geometry.cell_radius;
  const double noise = cfg.channel.noise_power;
  double inner_error = 0;

  // exp(-s sigma^2) L_Is(s) L_Ic(s) at the conditioning distance r_hat.
  const auto coverage_given = [&](double r_hat) {
    const double s = laplace_argument(cfg, r_hat);
    const auto ls = singleton_transform(s, r_hat, cfg, d.intensities);
    const auto lc = collided_transform(s, cfg, d.intensities);
    const double noise_term = std::exp(-s * noise);
    inner_error = std::max(inner_error, noise_term * (ls.error * lc.value + lc.error * ls.value));
    return noise_term * ls.value * lc.value;
  };

  // In u = 1 - r_hat^2/R^2 the rank-k density is Beta(a, k) with a = N_s - k + 1,
  // whose u^(a-1) factor is not smooth at u = 0 for fractional a. With u = t^p the
  // integrand carries t^(pa-1) instead, and p = ceil(5/a) makes that at least C^4.
  // The coverage factor depends on r_hat^2 only, so it stays smooth in t.
  const double a = n - k + 1.0;
  const int p = std::max(1, static_cast<int>(std::ceil(5.0 / a)));
  const double log_c = std::lgamma(n + 1.0) - std::lgamma(static_cast<double>(k)) - std::lgamma(a) + std::log(p);
  QuadratureResult r = integrate(
      [&](double t) {
        if (t == 0) return 0.0;
        const double u = std::pow(t, p);
        const double r_hat = radius * std::sqrt(std::max(0.0, 1.0 - u));
        const double log_w = log_c + (p * a - 1.0) * std::log(t) + xlogy(k - 1.0, 1.0 - u);
        return std::exp(log_w) * coverage_given(r_hat);
      },
      0.0, 1.0, QuadratureOptions{});
  r.error_estimate += inner_error;
  return r;
}

}  // namespace

IntensitySet make_intensities(double omega_o, double p_cf) {
  return {omega_o, omega_o * p_cf, omega_o - omega_o * p_cf};
}

double slot_occupancy_prob(double lambda, int n_slots, int l_lim) {
  if (!(lambda >= 0)) throw DomainError("slot_occupancy_prob: lambda must be >= 0");
  if (n_slots < 1) throw DomainError("slot_occupancy_prob: n_slots must be >= 1");
  if (l_lim < 0) throw DomainError("slot_occupancy_prob: l_lim must be >= 0");
  if (lambda == 0) return 0.0;

  double p = 0;
  for (int l = 1; l <= n_slots; ++l) p += std::exp(log_poisson_pmf(lambda, l)) * l / n_slots;
  const int top = static_cast<int>(std::ceil(lambda)) + l_lim;
  for (int l = n_slots + 1; l <= top; ++l) p += std::exp(log_poisson_pmf(lambda, l));
  return checked_probability(p, "slot_occupancy_prob");
}

double collision_free_prob(double p_lambda, int n_active, int n_mu) {
  if (n_active < 1) throw DomainError("collision_free_prob: n_active must be >= 1");
  if (n_mu < 1) throw DomainError("collision_free_prob: n_mu must be >= 1");
  if (!(p_lambda >= 0 && p_lambda <= 1)) throw DomainError("collision_free_prob: p_lambda must lie in [0,1]");

  const int others = n_active - 1;
  const double keep = (n_mu - 1.0) / n_mu;
  double p = 0;
  for (int n = 0; n <= others; ++n) {
    const double log_binom = std::lgamma(others + 1.0) - std::lgamma(n + 1.0) - std::lgamma(others - n + 1.0);
    const double log_term = log_binom + xlogy(n, p_lambda) + xlogy(others - n, 1.0 - p_lambda) + xlogy(n, keep);
    p += std::exp(log_term);
  }
  return checked_probability(p, "collision_free_prob");
}

double singleton_count(int n_active, double p_lambda, double p_cf) { return n_active * p_lambda * p_cf; }

double ordered_distance_pdf(int k, double n_singleton, double radius, double x) {
  if (!(n_singleton > 0)) throw DomainError("ordered_distance_pdf: n_singleton must be > 0");
  if (k < 1 || k > static_cast<int>(std::ceil(n_singleton)))
    throw DomainError("ordered_distance_pdf: k outside [1, ceil(n_singleton)]");
  if (!(radius > 0)) throw DomainError("ordered_distance_pdf: radius must be > 0");
  if (!(x >= 0 && x <= radius)) throw DomainError("ordered_distance_pdf: x outside [0, radius]");

  const double log_c = std::lgamma(n_singleton + 1.0) - std::lgamma(static_cast<double>(k)) -
                       std::lgamma(n_singleton - k + 1.0);
  const double u = x / radius;
  return std::exp(log_c) * (2.0 / radius) * std::pow(u, 2 * k - 1) * std::pow(1.0 - u * u, n_singleton - k);
}

double laplace_argument(const SystemConfig& cfg, double r_hat) {
  return cfg.reliability.sinr_threshold / (packet_power(cfg) * path_gain(cfg, r_hat));
}

double laplace_singleton(double s, double r_hat, const SystemConfig& cfg, const IntensitySet& intensities) {
  if (!(s >= 0)) throw DomainError("laplace_singleton: s must be >= 0");
  if (!(r_hat >= 0 && r_hat <= cfg.geometry.cell_radius))
    throw DomainError("laplace_singleton: r_hat outside [0, R]");
  return singleton_transform(s, r_hat, cfg, intensities).value;
}

double laplace_collided(double s, const SystemConfig& cfg, const IntensitySet& intensities) {
  if (!(s >= 0)) throw DomainError("laplace_collided: s must be >= 0");
  return collided_transform(s, cfg, intensities).value;
}

double conditional_coverage(int k, const SystemConfig& cfg, const SlotStatistics& derived) {
  return checked_probability(conditional_coverage_impl(k, cfg, derived).value, "conditional_coverage");
}

SlotStatistics slot_statistics(const SystemConfig& cfg) {
  SlotStatistics d;
  const int n_slots = cfg.frame.n_slots;
  if (cfg.traffic.scenario == Scenario::Emergency) {
    d.p_lambda = slot_occupancy_prob(cfg.traffic.lambda, n_slots, effective_tail_truncation(cfg));
  } else {
    d.p_lambda = 1.0 / n_slots;
  }
  d.p_cf = collision_free_prob(d.p_lambda, cfg.traffic.n_active, cfg.frame.code_pool_size);
  d.n_singleton = singleton_count(cfg.traffic.n_active, d.p_lambda, d.p_cf);
  d.intensities = make_intensities(active_intensity(cfg), d.p_cf);
  return d;
}

CoverageReport frame_coverage_prob(const SystemConfig& cfg) {
  if (const auto report = validate_config(cfg); !report.ok()) throw ConfigError(report.summary());

  const auto d = slot_statistics(cfg);
  CoverageReport out;
  out.p_lambda = d.p_lambda;
  out.p_cf = d.p_cf;
  out.n_singleton = d.n_singleton;

  const double lambda = effective_lambda(cfg);
  if (lambda == 0 || d.n_singleton == 0) return out;

  const double scale = cfg.frame.n_slots / (cfg.traffic.n_active * lambda);
  const int ranks = static_cast<int>(std::ceil(d.n_singleton));
  const double last_weight = d.n_singleton - (ranks - 1);

  double product = 1.0;
  double sum = 0.0;
  for (int k = 1; k <= ranks; ++k) {
    QuadratureResult term;
    try {
      term = conditional_coverage_impl(k, cfg, d);
    } catch (const QuadratureError& e) {
      throw QuadratureError("rank " + std::to_string(k) + ": " + e.what(), e.best_estimate(), e.error_estimate());
    }
    const double p_cond = checked_probability(term.value, "conditional_coverage");
    out.conditional_terms.push_back(p_cond);
    out.quadrature_error_estimate += term.error_estimate;
    product *= p_cond;
    sum += (k == ranks ? last_weight : 1.0) * product;
  }
  out.p_succ = checked_probability(scale * sum, "frame_coverage_prob");
  out.quadrature_error_estimate *= scale;
  return out;
}

}  // namespace gfnoma::analytic
