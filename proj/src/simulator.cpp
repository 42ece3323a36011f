#include "gfnoma/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "gfnoma/errors.hpp"
#include "gfnoma/optimizer.hpp"

namespace gfnoma::sim {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

PowerMode power_rule(const SystemConfig& cfg, Scheme s) {
  switch (s) {
    case Scheme::Proposed: return PowerMode::EqualSplitByMax;
    case Scheme::TPDS: return PowerMode::PerDeviceSplit;
    case Scheme::NAS: return PowerMode::Fixed;
    case Scheme::Reference: break;
  }
  return cfg.power.mode;
}

struct Accumulator {
  FrameStats totals;
  unsigned long long sum_dd = 0, sum_gg = 0, sum_dg = 0;

  void add(const FrameStats& f) {
    totals.generated += f.generated;
    totals.transmitted += f.transmitted;
    totals.dropped += f.dropped;
    totals.decoded += f.decoded;
    totals.collided += f.collided;
    totals.below_threshold += f.below_threshold;
    totals.blocked += f.blocked;
    const auto d = static_cast<unsigned long long>(f.decoded);
    const auto g = static_cast<unsigned long long>(f.generated);
    sum_dd += d * d;
    sum_gg += g * g;
    sum_dg += d * g;
  }

  void merge(const Accumulator& o) {
    totals.generated += o.totals.generated;
    totals.transmitted += o.totals.transmitted;
    totals.dropped += o.totals.dropped;
    totals.decoded += o.totals.decoded;
    totals.collided += o.totals.collided;
    totals.below_threshold += o.totals.below_threshold;
    totals.blocked += o.totals.blocked;
    sum_dd += o.sum_dd;
    sum_gg += o.sum_gg;
    sum_dg += o.sum_dg;
  }
};

}  // namespace

Rng make_stream(std::uint64_t seed, std::uint64_t frame, Stream stream) {
  std::uint64_t x = splitmix64(seed);
  x = splitmix64(x ^ frame);
  x = splitmix64(x ^ static_cast<std::uint64_t>(stream));
  return Rng(x);
}

std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::Proposed: return "proposed";
    case Scheme::TPDS: return "tpds";
    case Scheme::NAS: return "nas";
    case Scheme::Reference: return "reference";
  }
  return "?";
}

Scheme parse_scheme(std::string_view name) {
  for (auto s : {Scheme::Proposed, Scheme::TPDS, Scheme::NAS, Scheme::Reference})
    if (name == to_string(s)) return s;
  throw std::invalid_argument("unknown scheme '" + std::string(name) + "' (proposed|tpds|nas|reference)");
}

std::vector<double> device_powers(const SystemConfig& cfg, Scheme scheme, const std::vector<int>& counts) {
  const PowerMode mode = power_rule(cfg, scheme);
  const double p_max = cfg.power.p_max;
  std::vector<double> p(counts.size(), p_max);
  if (mode == PowerMode::Fixed) return p;
  if (mode == PowerMode::PerDeviceSplit) {
    for (std::size_t i = 0; i < counts.size(); ++i)
      if (counts[i] > 0) p[i] = p_max / counts[i];
    return p;
  }
  int rho = rho_max_proxy(cfg);
  if (cfg.power.exact_rho_max) rho = std::max(1, counts.empty() ? 1 : *std::max_element(counts.begin(), counts.end()));
  std::fill(p.begin(), p.end(), p_max / rho);
  return p;
}

std::vector<double> sample_deployment(int n_active, double radius, Rng& rng) {
  if (n_active < 0) throw DomainError("sample_deployment: n_active must be >= 0");
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> r(n_active);
  for (auto& x : r) x = radius * std::sqrt(u(rng));
  return r;
}

std::vector<int> generate_traffic(const SystemConfig& cfg, Rng& rng) {
  const int n = cfg.traffic.n_active;
  if (cfg.traffic.scenario == Scenario::NonEmergency) return std::vector<int>(n, 1);
  if (cfg.traffic.lambda <= 0) return std::vector<int>(n, 0);
  std::poisson_distribution<int> pois(cfg.traffic.lambda);
  std::vector<int> counts(n);
  for (auto& c : counts) c = pois(rng);
  return counts;
}

AccessPlan assign_slots_codes(const std::vector<int>& counts, int n_slots, int pool_size, Rng& rng) {
  if (n_slots < 1) throw DomainError("assign_slots_codes: n_slots must be >= 1");
  if (pool_size < 1) throw DomainError("assign_slots_codes: pool_size must be >= 1");
  AccessPlan plan;
  std::vector<int> slots(n_slots);
  std::uniform_int_distribution<int> code(0, pool_size - 1);
  for (int m = 0; m < static_cast<int>(counts.size()); ++m) {
    const int sent = std::min(counts[m], n_slots);
    plan.dropped += counts[m] - sent;
    std::iota(slots.begin(), slots.end(), 0);
    // Partial Fisher-Yates: the first `sent` entries are distinct uniform slots.
    for (int i = 0; i < sent; ++i) {
      std::uniform_int_distribution<int> pick(i, n_slots - 1);
      std::swap(slots[i], slots[pick(rng)]);
      plan.packets.push_back({m, slots[i], code(rng)});
    }
  }
  return plan;
}

std::vector<Eigen::VectorXcd> make_code_pool(int n_subcarriers, int pool_size) {
  if (n_subcarriers < 1 || n_subcarriers > 15) throw DomainError("make_code_pool: n_subcarriers must lie in [1, 15]");
  const std::uint64_t total = 1ULL << (2 * n_subcarriers);
  if (pool_size < 1 || static_cast<std::uint64_t>(pool_size) > total)
    throw DomainError("make_code_pool: pool_size must lie in [1, 4^J]");

  static const cd alphabet[4] = {{1, 1}, {-1, 1}, {-1, -1}, {1, -1}};
  const double scale = 1.0 / std::sqrt(2.0 * n_subcarriers);
  std::vector<Eigen::VectorXcd> pool;
  pool.reserve(pool_size);
  for (std::uint64_t i = 0; i < static_cast<std::uint64_t>(pool_size); ++i) {
    const std::uint64_t index = i * total / pool_size;
    Eigen::VectorXcd c(n_subcarriers);
    for (int j = 0; j < n_subcarriers; ++j) c(j) = alphabet[(index >> (2 * j)) & 3] * scale;
    pool.push_back(std::move(c));
  }
  return pool;
}

Eigen::MatrixXcd SlotRealization::equivalent_channel() const {
  Eigen::MatrixXcd g = fading.cwiseProduct(codes);
  for (int i = 0; i < size(); ++i) g.col(i) *= std::sqrt(gains[i]);
  return g;
}

Eigen::MatrixXcd mmse_weights(const Eigen::MatrixXcd& g, const Eigen::VectorXd& powers, double noise) {
  const auto k = g.cols();
  const auto j = g.rows();
  if (k < 1 || j < 1) throw DomainError("mmse_weights: empty channel matrix");
  if (powers.size() != k) throw DomainError("mmse_weights: one power per column required");
  if (!(noise >= 0)) throw DomainError("mmse_weights: noise must be >= 0");

  const Eigen::VectorXd sqrt_p = powers.cwiseSqrt();
  const Eigen::MatrixXcd gp = g * sqrt_p.asDiagonal();  // G P^1/2
  if (k <= j) {
    Eigen::MatrixXcd a = gp.adjoint() * gp;
    a.diagonal().array() += noise;
    return a.ldlt().solve(gp.adjoint());
  }
  // Push-through identity: (P^1/2 G^H G P^1/2 + s I)^-1 P^1/2 G^H = P^1/2 G^H (G P G^H + s I)^-1,
  // which keeps the solve J x J when the slot is overloaded.
  Eigen::MatrixXcd r = gp * gp.adjoint();
  r.diagonal().array() += noise;
  return r.ldlt().solve(gp).adjoint();
}

DecodingOutcome sic_decode(const SlotRealization& slot, double theta, double noise, SinrForm form) {
  const int k = slot.size();
  DecodingOutcome out;
  out.decoded.assign(k, false);
  out.cause.assign(k, FailureCause::BelowThreshold);
  if (k == 0) return out;

  std::vector<int> singles;
  for (int i = 0; i < k; ++i) {
    const auto shared = std::count(slot.code_index.begin(), slot.code_index.end(), slot.code_index[i]);
    if (shared > 1) {
      out.cause[i] = FailureCause::Collision;
    } else {
      singles.push_back(i);
    }
  }
  std::stable_sort(singles.begin(), singles.end(), [&](int a, int b) { return slot.radii[a] < slot.radii[b]; });

  const Eigen::MatrixXcd g_all = slot.equivalent_channel();
  std::vector<int> undecoded(k);
  std::iota(undecoded.begin(), undecoded.end(), 0);

  for (std::size_t step = 0; step < singles.size(); ++step) {
    const int target = singles[step];
    const int u = static_cast<int>(undecoded.size());
    Eigen::MatrixXcd g(g_all.rows(), u);
    Eigen::VectorXd p(u);
    int pos = 0;
    for (int c = 0; c < u; ++c) {
      g.col(c) = g_all.col(undecoded[c]);
      p(c) = slot.powers[undecoded[c]];
      if (undecoded[c] == target) pos = c;
    }
    const Eigen::MatrixXcd w = mmse_weights(g, p, noise);
    const double wnorm2 = w.row(pos).squaredNorm();
    const double signal = p(pos) * std::norm((w.row(pos) * g.col(pos)).value());

    double interference = 0;
    double noise_term = 0;
    if (form == SinrForm::Standard) {
      for (int c = 0; c < u; ++c)
        if (c != pos) interference += p(c) * std::norm((w.row(pos) * g.col(c)).value());
      noise_term = noise * wnorm2;
    } else {
      for (int c = 0; c < u; ++c)
        if (c != pos && slot.radii[undecoded[c]] > slot.radii[target])
          interference += p(c) * std::norm((w.row(c) * g.col(c)).value());
      noise_term = noise * std::sqrt(wnorm2);
    }
    const double sinr = signal / (interference + noise_term);
    out.sinr_trace.push_back({target, sinr});

    if (sinr >= theta) {
      out.decoded[target] = true;
      out.cause[target] = FailureCause::Decoded;
      undecoded.erase(undecoded.begin() + pos);
      continue;
    }
    out.cause[target] = FailureCause::BelowThreshold;
    for (std::size_t rest = step + 1; rest < singles.size(); ++rest)
      out.cause[singles[rest]] = FailureCause::BlockedByStronger;
    break;
  }
  return out;
}

SchemePlan resolve_plan(const SystemConfig& cfg, Scheme scheme) {
  SchemePlan plan{scheme, cfg.frame.n_slots};
  if (scheme == Scheme::Proposed && cfg.traffic.scenario == Scenario::Emergency)
    plan.n_slots = optimizer::adaptive_slots(cfg).n_practical;
  return plan;
}

FrameStats run_frame(const SystemConfig& cfg, const SchemePlan& plan, const std::vector<Eigen::VectorXcd>& pool,
                     std::uint64_t seed, std::uint64_t frame) {
  auto deploy_rng = make_stream(seed, frame, Stream::Deployment);
  auto traffic_rng = make_stream(seed, frame, Stream::Traffic);
  auto access_rng = make_stream(seed, frame, Stream::Access);
  auto fading_rng = make_stream(seed, frame, Stream::Fading);

  const auto radii = sample_deployment(cfg.traffic.n_active, cfg.geometry.cell_radius, deploy_rng);
  const auto counts = generate_traffic(cfg, traffic_rng);
  const auto powers = device_powers(cfg, plan.scheme, counts);
  const auto access = assign_slots_codes(counts, plan.n_slots, static_cast<int>(pool.size()), access_rng);

  FrameStats stats;
  stats.generated = std::accumulate(counts.begin(), counts.end(), 0L);
  stats.dropped = access.dropped;
  stats.transmitted = static_cast<long>(access.packets.size());

  const int j = cfg.frame.n_subcarriers;
  std::normal_distribution<double> half(0.0, std::sqrt(0.5));
  std::vector<Eigen::VectorXcd> fading(access.packets.size(), Eigen::VectorXcd(j));
  for (auto& h : fading)
    for (int s = 0; s < j; ++s) {
      const double re = half(fading_rng);
      h(s) = cd(re, half(fading_rng));
    }

  std::vector<std::vector<int>> by_slot(plan.n_slots);
  for (int i = 0; i < static_cast<int>(access.packets.size()); ++i) by_slot[access.packets[i].slot].push_back(i);

  for (const auto& members : by_slot) {
    if (members.empty()) continue;
    const int k = static_cast<int>(members.size());
    SlotRealization slot;
    slot.fading.resize(j, k);
    slot.codes.resize(j, k);
    for (int c = 0; c < k; ++c) {
      const auto& pkt = access.packets[members[c]];
      slot.device_ids.push_back(pkt.device);
      slot.radii.push_back(radii[pkt.device]);
      slot.gains.push_back(path_gain(cfg, radii[pkt.device]));
      slot.code_index.push_back(pkt.code);
      slot.powers.push_back(powers[pkt.device]);
      slot.fading.col(c) = fading[members[c]];
      slot.codes.col(c) = pool[pkt.code];
    }
    const auto outcome = sic_decode(slot, cfg.reliability.sinr_threshold, cfg.channel.noise_power,
                                    cfg.receiver.sinr_form);
    for (auto cause : outcome.cause) {
      switch (cause) {
        case FailureCause::Decoded: ++stats.decoded; break;
        case FailureCause::Collision: ++stats.collided; break;
        case FailureCause::BelowThreshold: ++stats.below_threshold; break;
        case FailureCause::BlockedByStronger: ++stats.blocked; break;
      }
    }
  }
  return stats;
}

CoverageEstimate estimate_coverage(const SystemConfig& cfg, Scheme scheme, long n_frames, std::uint64_t seed,
                                   int threads) {
  if (n_frames < 1) throw DomainError("estimate_coverage: n_frames must be >= 1");
  if (const auto report = validate_config(cfg); !report.ok()) throw ConfigError(report.summary());

  const auto plan = resolve_plan(cfg, scheme);
  const auto pool = make_code_pool(cfg.frame.n_subcarriers, cfg.frame.code_pool_size);

  if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = static_cast<int>(std::min<long>(threads, n_frames));

  std::vector<Accumulator> partial(threads);
  std::vector<std::exception_ptr> errors(threads);
  const auto work = [&](int t) {
    try {
      for (long f = t; f < n_frames; f += threads)
        partial[t].add(run_frame(cfg, plan, pool, seed, static_cast<std::uint64_t>(f)));
    } catch (...) {
      errors[t] = std::current_exception();
    }
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool_threads;
    for (int t = 0; t < threads; ++t) pool_threads.emplace_back(work, t);
    for (auto& th : pool_threads) th.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  Accumulator acc;
  for (const auto& p : partial) acc.merge(p);

  CoverageEstimate est;
  est.n_frames = n_frames;
  est.n_slots = plan.n_slots;
  est.packets_generated = acc.totals.generated;
  est.packets_transmitted = acc.totals.transmitted;
  est.packets_decoded = acc.totals.decoded;
  est.packets_dropped = acc.totals.dropped;
  est.packets_collided = acc.totals.collided;
  if (acc.totals.generated == 0) return est;

  const double gen = static_cast<double>(acc.totals.generated);
  const double p = acc.totals.decoded / gen;
  est.p_hat = p;
  if (n_frames > 1) {
    // Delta-method variance of the ratio of per-frame sums.
    const double ss = static_cast<double>(acc.sum_dd) - 2.0 * p * static_cast<double>(acc.sum_dg) +
                      p * p * static_cast<double>(acc.sum_gg);
    const double mean_g = gen / n_frames;
    const double var = std::max(0.0, ss) / ((n_frames - 1.0) * n_frames * mean_g * mean_g);
    est.ci_halfwidth = 1.959963984540054 * std::sqrt(var);
  }
  return est;
}

}  // namespace gfnoma::sim
