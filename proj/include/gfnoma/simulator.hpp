#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "gfnoma/config.hpp"

namespace gfnoma::sim {

using Rng = std::mt19937_64;
using cd = std::complex<double>;

/// Independent sub-streams of one frame. Fixing a stream across schemes gives
/// them common deployments, traffic and fading.
enum class Stream : std::uint64_t { Deployment = 1, Traffic = 2, Access = 3, Fading = 4 };

/// Counter-based derivation: the stream depends only on (seed, frame, stream).
Rng make_stream(std::uint64_t seed, std::uint64_t frame, Stream stream);

enum class Scheme {
  Proposed,   // adaptive n_s, every packet at P_max / rho_max
  TPDS,       // configured n_s, device i's packets at P_max / L_i
  NAS,        // configured n_s, every packet at P_max
  Reference,  // configured n_s and power policy; the analytic model's setting
};

std::string to_string(Scheme s);
/// Throws std::invalid_argument on unknown names.
Scheme parse_scheme(std::string_view name);

/// Horizontal distances of devices uniform in the disk.
std::vector<double> sample_deployment(int n_active, double radius, Rng& rng);

/// Packets generated per active device: 1 each outside emergencies, Pois(lambda) otherwise.
std::vector<int> generate_traffic(const SystemConfig& cfg, Rng& rng);

/// Per-packet power of each device under the scheme's power rule. Devices with
/// no packets keep P_max as a placeholder; they never transmit.
std::vector<double> device_powers(const SystemConfig& cfg, Scheme scheme, const std::vector<int>& counts);

struct PacketAssignment {
  int device = 0;
  int slot = 0;
  int code = 0;
};

struct AccessPlan {
  std::vector<PacketAssignment> packets;  // grouped by device, in device order
  long dropped = 0;                       // packets beyond n_s per device
};

/// Each device sends min(rho, n_s) packets in distinct uniform slots with i.i.d. uniform codes.
AccessPlan assign_slots_codes(const std::vector<int>& counts, int n_slots, int pool_size, Rng& rng);

/// Unit-norm length-J codes with elements (+-1 +-i)/sqrt(2J). All 4^J are
/// enumerated; smaller pools take evenly spaced members of that list.
std::vector<Eigen::VectorXcd> make_code_pool(int n_subcarriers, int pool_size);

struct SlotRealization {
  std::vector<int> device_ids;
  std::vector<double> radii;
  std::vector<double> gains;   // large-scale gain per device
  Eigen::MatrixXcd fading;     // J x K small-scale gains
  std::vector<int> code_index;
  Eigen::MatrixXcd codes;      // J x K, column i is s_i
  std::vector<double> powers;  // W

  int size() const { return static_cast<int>(device_ids.size()); }
  /// Column i is sqrt(gain_i) h_i .* s_i.
  Eigen::MatrixXcd equivalent_channel() const;
};

/// Rows are w_k^H = [(P^1/2 G^H G P^1/2 + sigma^2 I)^-1 P^1/2 G^H]_k, a K x J matrix.
Eigen::MatrixXcd mmse_weights(const Eigen::MatrixXcd& g, const Eigen::VectorXd& powers, double noise);

enum class FailureCause { Decoded, Collision, BelowThreshold, BlockedByStronger };

struct TraceStep {
  int device = 0;  // position in the slot, not the global id
  double sinr = 0;
};

struct DecodingOutcome {
  std::vector<bool> decoded;
  std::vector<FailureCause> cause;
  std::vector<TraceStep> sinr_trace;
};

/// SIC in distance order over the collision-free devices. Each step recomputes
/// MMSE weights over every undecoded device (collided ones included) and stops at
/// the first SINR below theta. Cancellation is ideal, so removing a decoded device
/// from the undecoded set is equivalent to subtracting its reconstruction.
DecodingOutcome sic_decode(const SlotRealization& slot, double theta, double noise,
                           SinrForm form = SinrForm::Standard);

struct FrameStats {
  long generated = 0;
  long transmitted = 0;
  long dropped = 0;
  long decoded = 0;
  long collided = 0;
  long below_threshold = 0;
  long blocked = 0;

  long failed() const { return collided + below_threshold + blocked; }
};

/// Slot count and power rule a scheme runs with under `cfg`.
struct SchemePlan {
  Scheme scheme = Scheme::Reference;
  int n_slots = 1;
};

/// Proposed takes adaptive_slots in emergencies (propagating infeasibility).
SchemePlan resolve_plan(const SystemConfig& cfg, Scheme scheme);

FrameStats run_frame(const SystemConfig& cfg, const SchemePlan& plan, const std::vector<Eigen::VectorXcd>& pool,
                     std::uint64_t seed, std::uint64_t frame);

struct CoverageEstimate {
  double p_hat = 0;
  double ci_halfwidth = 0;  // 95 %, ratio estimator over frames
  long n_frames = 0;
  int n_slots = 0;
  long packets_generated = 0;
  long packets_transmitted = 0;
  long packets_decoded = 0;
  long packets_dropped = 0;
  long packets_collided = 0;
};

/// Frames are split across `threads` workers (0 = hardware concurrency). The
/// result depends only on (cfg, scheme, n_frames, seed).
CoverageEstimate estimate_coverage(const SystemConfig& cfg, Scheme scheme, long n_frames, std::uint64_t seed,
                                   int threads = 0);

}  // namespace gfnoma::sim
