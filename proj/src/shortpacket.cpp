#include "gfnoma/shortpacket.hpp"

#include <cmath>
#include <numbers>

#include "gfnoma/errors.hpp"

namespace gfnoma::shortpacket {

double q_function(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

double packet_error_prob(const BlocklengthPoint& pt) {
  if (!(pt.sinr > 0)) throw DomainError("packet_error_prob: sinr must be > 0");
  if (!(pt.n_slots > 0)) throw DomainError("packet_error_prob: n_slots must be > 0");
  if (!(pt.dispersion > 0)) throw DomainError("packet_error_prob: dispersion must be > 0");
  if (!(pt.channel_uses / pt.n_slots >= 1)) throw DomainError("packet_error_prob: fewer than one channel use per slot");
  const double rate_gap = std::log2(1.0 + pt.sinr) - pt.packet_bits * pt.n_slots / pt.channel_uses;
  return q_function(std::sqrt(pt.channel_uses / (pt.dispersion * pt.n_slots)) * rate_gap);
}

double error_prob_ln_form(double gamma, double n, double bandwidth, double frame_duration, int packet_bits) {
  if (!(gamma > 0)) throw DomainError("error_prob_ln_form: gamma must be > 0");
  if (!(n > 0)) throw DomainError("error_prob_ln_form: n must be > 0");
  const double uses = bandwidth * frame_duration;
  const double rate_gap = std::log1p(gamma) - packet_bits / uses * std::numbers::ln2 * n;
  return q_function(std::sqrt(uses / n) * rate_gap);
}

double max_snr_proxy(const SystemConfig& cfg) {
  return packet_power(cfg) * path_gain(cfg, 0.0) / cfg.channel.noise_power;
}

}  // namespace gfnoma::shortpacket
