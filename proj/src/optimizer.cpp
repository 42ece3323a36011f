#include "gfnoma/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gfnoma/analytic.hpp"
#include "gfnoma/errors.hpp"
#include "gfnoma/shortpacket.hpp"

namespace gfnoma::optimizer {

std::string to_string(Constraint c) { return c == Constraint::C1 ? "C1" : "C3"; }

double solve_n_epsilon(double gamma, double epsilon_max, double bandwidth, double frame_duration, int packet_bits,
                       double tol) {
  if (!(gamma > 0)) throw DomainError("solve_n_epsilon: gamma must be > 0");
  if (!(epsilon_max > 0 && epsilon_max <= 0.5)) throw DomainError("solve_n_epsilon: epsilon_max must lie in (0, 0.5]");

  const auto excess = [&](double n) {
    return shortpacket::error_prob_ln_form(gamma, n, bandwidth, frame_duration, packet_bits) - epsilon_max;
  };
  const double n_up = bandwidth * frame_duration * std::log2(1.0 + gamma) / packet_bits;
  if (excess(1.0) > 0 || n_up < 1.0)
    throw InfeasibleError("C3", "epsilon_max unreachable even with one slot at SNR " + std::to_string(gamma));

  // excess(1) <= 0 <= excess(n_up) = 0.5 - epsilon_max, increasing in n.
  double lo = 1.0, hi = n_up;
  while (hi - lo > 0) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double f = excess(mid);
    if (std::abs(f) <= tol * 1e-3) return mid;
    (f > 0 ? hi : lo) = mid;
  }
  return std::abs(excess(lo)) <= std::abs(excess(hi)) ? lo : hi;
}

OptimizerOutput combine_slot_bounds(double n_lambda, double n_epsilon, double lambda) {
  OptimizerOutput out;
  out.n_lambda_bound = n_lambda;
  out.n_epsilon_bound = n_epsilon;
  out.binding = n_lambda <= n_epsilon ? Constraint::C1 : Constraint::C3;
  out.n_star = std::min(n_lambda, n_epsilon);
  out.n_practical = static_cast<int>(std::floor(out.n_star));
  const int need = std::max(1, static_cast<int>(std::ceil(lambda)));
  if (out.n_practical < need)
    throw InfeasibleError("C2", "slot count " + std::to_string(out.n_practical) + " below ceil(lambda) = " +
                                    std::to_string(need) + " (" + to_string(out.binding) + " binds)");
  return out;
}

OptimizerOutput adaptive_slots(const SystemConfig& cfg) {
  if (const auto report = validate_config(cfg); !report.ok()) throw ConfigError(report.summary());
  if (cfg.traffic.scenario != Scenario::Emergency) throw ConfigError("adaptive_slots: requires the emergency scenario");

  const double gamma = shortpacket::max_snr_proxy(cfg);
  const double bw = cfg.channel.bandwidth;
  const double tf = cfg.frame.frame_duration;
  const int bits = cfg.frame.packet_bits;
  const double n_eps = solve_n_epsilon(gamma, cfg.reliability.epsilon_max, bw, tf, bits);
  const double n_lambda = cfg.traffic.n_active * cfg.traffic.lambda + cfg.delta_slack;

  auto out = combine_slot_bounds(n_lambda, n_eps, cfg.traffic.lambda);
  out.gamma = gamma;
  out.residual = std::abs(shortpacket::error_prob_ln_form(gamma, n_eps, bw, tf, bits) - cfg.reliability.epsilon_max);
  out.epsilon_at_practical = shortpacket::error_prob_ln_form(gamma, out.n_practical, bw, tf, bits);
  return out;
}

SlotRange feasible_slot_range(const SystemConfig& cfg) {
  try {
    const auto opt = adaptive_slots(cfg);
    return {std::max(1, static_cast<int>(std::ceil(cfg.traffic.lambda))), opt.n_practical};
  } catch (const InfeasibleError&) {
    return {};
  }
}

BruteForceResult brute_force_slots(const SystemConfig& cfg, SlotRange range) {
  if (range.empty() || range.lo < 1) throw InfeasibleError("C2", "empty feasible slot range");
  BruteForceResult out;
  SystemConfig c = cfg;
  for (int n = range.lo; n <= range.hi; ++n) {
    c.frame.n_slots = n;
    const double p = analytic::frame_coverage_prob(c).p_succ;
    out.curve.push_back({n, p});
    if (out.curve.size() == 1 || p >= out.best_p) {
      out.best_n = n;
      out.best_p = p;
    }
  }
  return out;
}

int estimate_lambda_hat(double x, int m_max) {
  if (!(x > 1)) throw DomainError("estimate_lambda_hat: requires x > 1");
  if (m_max < 2) throw DomainError("estimate_lambda_hat: requires m_max >= 2");
  // Keep H_i while e (i/(i+1))^x >= 1, i.e. 1 + x ln(i/(i+1)) >= 0.
  int i = 2;
  while (i < m_max && 1.0 + x * std::log(static_cast<double>(i) / (i + 1)) < 0) ++i;
  return i;
}

EoIDecision detect_eoi(long rho_total, int n_active, int m_max) {
  if (n_active < 1) throw DomainError("detect_eoi: n_active must be >= 1");
  if (rho_total < 0) throw DomainError("detect_eoi: rho_total must be >= 0");
  EoIDecision d;
  d.lambda_bar = static_cast<double>(rho_total) / n_active;
  d.emergency = d.lambda_bar > 1.0;
  d.lambda_hat = d.emergency ? estimate_lambda_hat(d.lambda_bar, m_max) : 1;
  return d;
}

FramePlan plan_next_frame(const SystemConfig& current, long rho_total) {
  const int m_max = std::max(2, static_cast<int>(std::floor(current.traffic.lambda_max)));
  FramePlan plan{detect_eoi(rho_total, current.traffic.n_active, m_max), current};
  if (!plan.decision.emergency) {
    plan.next.traffic.scenario = Scenario::NonEmergency;
    return plan;
  }
  auto& t = plan.next.traffic;
  t.scenario = Scenario::Emergency;
  t.lambda = std::clamp(static_cast<double>(plan.decision.lambda_hat), t.lambda_min, t.lambda_max);
  plan.next.frame.n_slots = adaptive_slots(plan.next).n_practical;
  return plan;
}

}  // namespace gfnoma::optimizer
