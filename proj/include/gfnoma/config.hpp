#pragma once

#include <cmath>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gfnoma {

// Defaults throughout are the reference scenario: R = 50 m, h = 125 m,
// theta = 0 dB, T_f = 1 ms, D = 200 bits, alpha = 2.2, B = 5 MHz,
// sigma^2 = -100 dBm, 64 codes, P_max = 10 dBm.

struct GeometryParams {
  double cell_radius = 50.0;    // m
  double uav_altitude = 125.0;  // m
  double min_radius = 10.0;     // m, lower bound on the serving radius

  bool operator==(const GeometryParams&) const = default;
};

struct ChannelParams {
  double pathloss_coeff = 1.0;  // linear gain
  double pathloss_exp = 2.2;
  double noise_power = 1e-13;  // W
  double bandwidth = 5e6;      // Hz

  bool operator==(const ChannelParams&) const = default;
};

enum class Scenario { NonEmergency, Emergency };

struct TrafficParams {
  int n_active = 20;
  double lambda = 4.0;  // mean packets per active device
  double lambda_min = 2.0;
  double lambda_max = 10.0;
  Scenario scenario = Scenario::Emergency;
  /// Poisson tail truncation for the occupancy sum; empty selects the automatic value.
  std::optional<int> tail_truncation;

  bool operator==(const TrafficParams&) const = default;
};

struct FrameParams {
  double frame_duration = 1e-3;  // s, also the latency bound
  int n_slots = 20;
  int packet_bits = 200;
  int n_subcarriers = 3;  // spreading length J
  int code_pool_size = 64;

  double slot_duration() const { return frame_duration / n_slots; }

  bool operator==(const FrameParams&) const = default;
};

enum class PowerMode {
  EqualSplitByMax,  // every packet at P_max / rho_max
  PerDeviceSplit,   // device i spreads P_max over its own L_i packets
  Fixed,            // every packet at P_max
};

struct PowerPolicy {
  double p_max = 0.01;  // W
  PowerMode mode = PowerMode::EqualSplitByMax;
  /// Quantile of Pois(lambda) used as the deterministic stand-in for rho_max.
  double rho_max_proxy_quantile = 0.99;
  /// Simulator only: use the realized per-frame maximum instead of the proxy.
  bool exact_rho_max = false;

  bool operator==(const PowerPolicy&) const = default;
};

struct ReliabilityParams {
  double sinr_threshold = 1.0;  // linear
  double epsilon_max = 1e-5;
  double dispersion = std::log2(std::exp(1.0)) * std::log2(std::exp(1.0));

  bool operator==(const ReliabilityParams&) const = default;
};

enum class SinrForm {
  Standard,  // interference |w_k^H g_i|^2 over every other undecoded device
  Literal,   // interference |w_i^H g_i|^2 over weaker devices, noise sigma^2 ||w_k||
};

struct ReceiverParams {
  SinrForm sinr_form = SinrForm::Standard;

  bool operator==(const ReceiverParams&) const = default;
};

struct SystemConfig {
  GeometryParams geometry;
  ChannelParams channel;
  TrafficParams traffic;
  FrameParams frame;
  PowerPolicy power;
  ReliabilityParams reliability;
  ReceiverParams receiver;
  double delta_slack = 0.0;  // additive slack on the traffic bound of the slot count

  bool operator==(const SystemConfig&) const = default;
};

struct Violation {
  std::string constraint;  // "C4", "C5", "C6" or the offending key
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  bool contains(std::string_view constraint) const;
  /// First violation formatted as "<constraint>: <message>", or empty.
  std::string summary() const;
};

ValidationReport validate_config(const SystemConfig& cfg);

/// Parses the flat `section.key = value [unit]` format, applies defaults for
/// omitted keys and validates. Throws ConfigError on parse or validation failure.
SystemConfig load_config(std::istream& source);
SystemConfig load_config_file(const std::string& path);
SystemConfig parse_config(std::string_view text);

/// Canonical form: every key, SI units, 17 significant digits.
std::string serialize_config(const SystemConfig& cfg);

std::string to_string(Scenario s);
std::string to_string(PowerMode m);
std::string to_string(SinrForm f);

// Derived quantities shared by the analytic model, the optimizer and the simulator.

/// Active-device intensity N_A / (pi R^2), devices per m^2.
double active_intensity(const SystemConfig& cfg);

/// Large-scale gain beta (r^2 + h^2)^(-alpha/2) at horizontal distance r.
double path_gain(const SystemConfig& cfg, double r);

/// Smallest k with P(Pois(lambda) <= k) >= q, floored at 1.
int poisson_quantile(double lambda, double q);

/// Deterministic rho_max proxy used wherever a fixed per-packet power is needed.
int rho_max_proxy(const SystemConfig& cfg);

/// Per-packet transmit power assumed by the analytic model and the optimizer.
double packet_power(const SystemConfig& cfg);

/// Smallest L_lim with P(L > ceil(lambda) + L_lim) < 1e-12, L ~ Pois(lambda).
int default_tail_truncation(double lambda);
int effective_tail_truncation(const SystemConfig& cfg);

/// Number of packets each active device contributes on average (1 outside emergencies).
double effective_lambda(const SystemConfig& cfg);

}  // namespace gfnoma
