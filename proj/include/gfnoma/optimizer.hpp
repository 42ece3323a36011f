#pragma once

#include <vector>

#include "gfnoma/config.hpp"

namespace gfnoma::optimizer {

enum class Constraint { C1, C3 };

std::string to_string(Constraint c);

struct OptimizerOutput {
  int n_practical = 0;
  double n_star = 0;           // min of the two bounds
  double n_lambda_bound = 0;   // N_A lambda + delta
  double n_epsilon_bound = 0;  // root of the reliability equation
  Constraint binding = Constraint::C1;
  double residual = 0;         // |eps(n_epsilon) - eps_max|
  double gamma = 0;            // SNR used for the reliability bound
  double epsilon_at_practical = 0;
};

/// Root in n of error_prob_ln_form(gamma, n, ...) = epsilon_max on [1, B T_f log2(1+gamma) / D].
/// Throws InfeasibleError("C3") when even a single slot misses the target.
double solve_n_epsilon(double gamma, double epsilon_max, double bandwidth, double frame_duration, int packet_bits,
                       double tol = 1e-12);

/// floor(min(n_lambda, n_epsilon)) with the binding constraint; throws InfeasibleError("C2") below ceil(lambda).
OptimizerOutput combine_slot_bounds(double n_lambda, double n_epsilon, double lambda);

/// Slot count for the next emergency frame. Requires a valid emergency config.
OptimizerOutput adaptive_slots(const SystemConfig& cfg);

struct SlotRange {
  int lo = 0;
  int hi = -1;
  bool empty() const { return hi < lo; }
};

/// Integer n satisfying C1, C2 and C3 simultaneously.
SlotRange feasible_slot_range(const SystemConfig& cfg);

struct CurvePoint {
  int n_slots = 0;
  double p_succ = 0;
};

struct BruteForceResult {
  int best_n = 0;
  double best_p = 0;
  std::vector<CurvePoint> curve;
};

/// Analytic coverage at every n in `range`; ties resolve to the larger n.
BruteForceResult brute_force_slots(const SystemConfig& cfg, SlotRange range);

struct EoIDecision {
  double lambda_bar = 0;
  int lambda_hat = 1;
  bool emergency = false;
};

/// Sequential likelihood-ratio test between Pois(i) and Pois(i+1), i = 2..m_max-1.
int estimate_lambda_hat(double x, int m_max);

EoIDecision detect_eoi(long rho_total, int n_active, int m_max = 10);

struct FramePlan {
  EoIDecision decision;
  SystemConfig next;  // configuration the following frame runs with
};

/// Reaction to the packet total observed in one frame. An emergency switches
/// traffic to lambda_hat (clamped to [lambda_min, lambda_max]) and re-optimizes
/// the slot count; the change takes effect from the next frame.
FramePlan plan_next_frame(const SystemConfig& current, long rho_total);

}  // namespace gfnoma::optimizer
