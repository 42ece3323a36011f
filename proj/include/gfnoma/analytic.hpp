#pragma once

#include <vector>

#include "gfnoma/config.hpp"

namespace gfnoma::analytic {

/// Thinned intensities of the active process, devices per m^2.
struct IntensitySet {
  double omega_o = 0;  // active
  double omega_s = 0;  // singleton, omega_o * P_cf
  double omega_c = 0;  // collided, omega_o * (1 - P_cf)
};

IntensitySet make_intensities(double omega_o, double p_cf);

/// Per-slot quantities shared by every rank of the coverage sum.
struct SlotStatistics {
  double p_lambda = 0;
  double p_cf = 0;
  double n_singleton = 0;
  IntensitySet intensities;
};

struct CoverageReport {
  double p_succ = 0;
  double n_singleton = 0;
  double p_lambda = 0;
  double p_cf = 0;
  std::vector<double> conditional_terms;  // P_COND^k, k = 1..ceil(n_singleton)
  double quadrature_error_estimate = 0;
};

/// Probability that a given slot carries one of a device's packets. The
/// second (saturated) sum runs up to ceil(lambda) + l_lim.
double slot_occupancy_prob(double lambda, int n_slots, int l_lim);

/// Probability that a device transmitting in a slot shares its code with no one.
/// Evaluates the binomial sum term by term in log space.
double collision_free_prob(double p_lambda, int n_active, int n_mu);

double singleton_count(int n_active, double p_lambda, double p_cf);

/// Density of the distance of the k-th closest of `n_singleton` devices that are
/// uniform in a disk. Non-integer counts use Gamma functions in place of factorials.
double ordered_distance_pdf(int k, double n_singleton, double radius, double x);

/// Laplace transform of the interference from singletons beyond r_hat.
double laplace_singleton(double s, double r_hat, const SystemConfig& cfg, const IntensitySet& intensities);

/// Laplace transform of the interference from collided devices over the whole disk.
double laplace_collided(double s, const SystemConfig& cfg, const IntensitySet& intensities);

/// Argument of both transforms for a device at r_hat: theta (r_hat^2 + h^2)^(alpha/2) / (P beta).
double laplace_argument(const SystemConfig& cfg, double r_hat);

/// P_COND^k: probability that the k-th closest singleton clears the threshold.
double conditional_coverage(int k, const SystemConfig& cfg, const SlotStatistics& derived);

SlotStatistics slot_statistics(const SystemConfig& cfg);

/// Frame SINR coverage probability with every intermediate term.
CoverageReport frame_coverage_prob(const SystemConfig& cfg);

}  // namespace gfnoma::analytic
