#pragma once

#include "gfnoma/config.hpp"

namespace gfnoma::shortpacket {

struct BlocklengthPoint {
  double sinr = 1.0;            // linear
  double n_slots = 1.0;         // relaxed to real
  double channel_uses = 5000;   // B * T_f
  int packet_bits = 200;
  double dispersion = 0;        // V
};

/// Upper-tail standard normal probability, via erfc.
double q_function(double x);

/// Normal-approximation error for D bits in channel_uses / n_slots channel uses.
double packet_error_prob(const BlocklengthPoint& pt);

/// Same quantity with natural logs, valid for V = (log2 e)^2 only.
double error_prob_ln_form(double gamma, double n, double bandwidth, double frame_duration, int packet_bits);

/// Noise-only SNR of a lone device directly below the UAV at the packet power.
double max_snr_proxy(const SystemConfig& cfg);

}  // namespace gfnoma::shortpacket
