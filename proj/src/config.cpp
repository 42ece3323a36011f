#include "gfnoma/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>

#include "gfnoma/errors.hpp"
#include "gfnoma/units.hpp"

namespace gfnoma {

namespace {

enum class Unit { Plain, Integer, Length, Time, Frequency, Power, Ratio, Word };

struct Key {
  std::string_view name;
  Unit unit;
  std::function<void(SystemConfig&, double)> set_number;
  std::function<double(const SystemConfig&)> get_number;
  std::function<void(SystemConfig&, std::string_view)> set_word = nullptr;
  std::function<std::string(const SystemConfig&)> get_word = nullptr;
};

template <class T>
auto number_field(T SystemConfig::*section, double T::*field) {
  return std::pair{[=](SystemConfig& c, double v) { c.*section.*field = v; },
                   [=](const SystemConfig& c) { return c.*section.*field; }};
}

template <class T>
auto int_field(T SystemConfig::*section, int T::*field) {
  return std::pair{[=](SystemConfig& c, double v) { c.*section.*field = static_cast<int>(v); },
                   [=](const SystemConfig& c) { return static_cast<double>(c.*section.*field); }};
}

Key make_key(std::string_view name, Unit unit, auto accessors) {
  return Key{name, unit, accessors.first, accessors.second};
}

Scenario parse_scenario(std::string_view w) {
  if (w == "emergency") return Scenario::Emergency;
  if (w == "non_emergency") return Scenario::NonEmergency;
  throw ConfigError("expected emergency|non_emergency, got '" + std::string(w) + "'");
}

PowerMode parse_power_mode(std::string_view w) {
  if (w == "equal_split_by_max") return PowerMode::EqualSplitByMax;
  if (w == "per_device_split") return PowerMode::PerDeviceSplit;
  if (w == "fixed") return PowerMode::Fixed;
  throw ConfigError("expected equal_split_by_max|per_device_split|fixed, got '" + std::string(w) + "'");
}

SinrForm parse_sinr_form(std::string_view w) {
  if (w == "standard") return SinrForm::Standard;
  if (w == "literal") return SinrForm::Literal;
  throw ConfigError("expected standard|literal, got '" + std::string(w) + "'");
}

bool parse_bool(std::string_view w) {
  if (w == "true" || w == "1" || w == "yes") return true;
  if (w == "false" || w == "0" || w == "no") return false;
  throw ConfigError("expected true|false, got '" + std::string(w) + "'");
}

const std::vector<Key>& key_table() {
  static const std::vector<Key> keys = [] {
    std::vector<Key> k;
    using SC = SystemConfig;
    k.push_back(make_key("geometry.cell_radius", Unit::Length, number_field(&SC::geometry, &GeometryParams::cell_radius)));
    k.push_back(make_key("geometry.uav_altitude", Unit::Length, number_field(&SC::geometry, &GeometryParams::uav_altitude)));
    k.push_back(make_key("geometry.min_radius", Unit::Length, number_field(&SC::geometry, &GeometryParams::min_radius)));
    k.push_back(make_key("channel.pathloss_coeff", Unit::Ratio, number_field(&SC::channel, &ChannelParams::pathloss_coeff)));
    k.push_back(make_key("channel.pathloss_exp", Unit::Plain, number_field(&SC::channel, &ChannelParams::pathloss_exp)));
    k.push_back(make_key("channel.noise_power", Unit::Power, number_field(&SC::channel, &ChannelParams::noise_power)));
    k.push_back(make_key("channel.bandwidth", Unit::Frequency, number_field(&SC::channel, &ChannelParams::bandwidth)));
    k.push_back(make_key("traffic.n_active", Unit::Integer, int_field(&SC::traffic, &TrafficParams::n_active)));
    k.push_back(make_key("traffic.lambda", Unit::Plain, number_field(&SC::traffic, &TrafficParams::lambda)));
    k.push_back(make_key("traffic.lambda_min", Unit::Plain, number_field(&SC::traffic, &TrafficParams::lambda_min)));
    k.push_back(make_key("traffic.lambda_max", Unit::Plain, number_field(&SC::traffic, &TrafficParams::lambda_max)));
    k.push_back(Key{"traffic.scenario", Unit::Word, nullptr, nullptr,
                    [](SC& c, std::string_view w) { c.traffic.scenario = parse_scenario(w); },
                    [](const SC& c) { return to_string(c.traffic.scenario); }});
    k.push_back(Key{"traffic.tail_truncation", Unit::Word, nullptr, nullptr,
                    [](SC& c, std::string_view w) {
                      if (w == "auto") {
                        c.traffic.tail_truncation.reset();
                        return;
                      }
                      int v = 0;
                      auto [p, ec] = std::from_chars(w.data(), w.data() + w.size(), v);
                      if (ec != std::errc{} || p != w.data() + w.size())
                        throw ConfigError("expected an integer or 'auto', got '" + std::string(w) + "'");
                      c.traffic.tail_truncation = v;
                    },
                    [](const SC& c) {
                      return c.traffic.tail_truncation ? std::to_string(*c.traffic.tail_truncation)
                                                       : std::string("auto");
                    }});
    k.push_back(make_key("frame.frame_duration", Unit::Time, number_field(&SC::frame, &FrameParams::frame_duration)));
    k.push_back(make_key("frame.n_slots", Unit::Integer, int_field(&SC::frame, &FrameParams::n_slots)));
    k.push_back(make_key("frame.packet_bits", Unit::Integer, int_field(&SC::frame, &FrameParams::packet_bits)));
    k.push_back(make_key("frame.n_subcarriers", Unit::Integer, int_field(&SC::frame, &FrameParams::n_subcarriers)));
    k.push_back(make_key("frame.code_pool_size", Unit::Integer, int_field(&SC::frame, &FrameParams::code_pool_size)));
    k.push_back(make_key("power.p_max", Unit::Power, number_field(&SC::power, &PowerPolicy::p_max)));
    k.push_back(Key{"power.mode", Unit::Word, nullptr, nullptr,
                    [](SC& c, std::string_view w) { c.power.mode = parse_power_mode(w); },
                    [](const SC& c) { return to_string(c.power.mode); }});
    k.push_back(make_key("power.rho_max_quantile", Unit::Plain,
                         number_field(&SC::power, &PowerPolicy::rho_max_proxy_quantile)));
    k.push_back(Key{"power.exact_rho_max", Unit::Word, nullptr, nullptr,
                    [](SC& c, std::string_view w) { c.power.exact_rho_max = parse_bool(w); },
                    [](const SC& c) { return std::string(c.power.exact_rho_max ? "true" : "false"); }});
    k.push_back(make_key("reliability.sinr_threshold", Unit::Ratio,
                         number_field(&SC::reliability, &ReliabilityParams::sinr_threshold)));
    k.push_back(make_key("reliability.epsilon_max", Unit::Plain,
                         number_field(&SC::reliability, &ReliabilityParams::epsilon_max)));
    k.push_back(make_key("reliability.dispersion", Unit::Plain,
                         number_field(&SC::reliability, &ReliabilityParams::dispersion)));
    k.push_back(Key{"receiver.sinr_form", Unit::Word, nullptr, nullptr,
                    [](SC& c, std::string_view w) { c.receiver.sinr_form = parse_sinr_form(w); },
                    [](const SC& c) { return to_string(c.receiver.sinr_form); }});
    k.push_back(Key{"optimizer.delta_slack", Unit::Plain,
                    [](SC& c, double v) { c.delta_slack = v; },
                    [](const SC& c) { return c.delta_slack; }});
    return k;
  }();
  return keys;
}

std::string_view trim(std::string_view s) {
  const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

// Multiplier (or conversion) from a unit suffix to the SI value of the key's kind.
double apply_unit(Unit kind, double v, std::string_view suffix) {
  if (suffix.empty()) {
    if (kind == Unit::Integer && v != std::floor(v)) throw ConfigError("expected an integer");
    return v;
  }
  switch (kind) {
    case Unit::Length:
      if (suffix == "m") return v;
      if (suffix == "km") return v * 1e3;
      break;
    case Unit::Time:
      if (suffix == "s") return v;
      if (suffix == "ms") return v * 1e-3;
      if (suffix == "us") return v * 1e-6;
      break;
    case Unit::Frequency:
      if (suffix == "Hz") return v;
      if (suffix == "kHz") return v * 1e3;
      if (suffix == "MHz") return v * 1e6;
      if (suffix == "GHz") return v * 1e9;
      break;
    case Unit::Power:
      if (suffix == "W") return v;
      if (suffix == "mW") return v * 1e-3;
      if (suffix == "dBm") return units::dbm_to_watts(v);
      if (suffix == "dBW") return units::db_to_linear(v);
      break;
    case Unit::Ratio:
      if (suffix == "dB") return units::db_to_linear(v);
      break;
    default:
      break;
  }
  throw ConfigError("unit '" + std::string(suffix) + "' not accepted here");
}

std::string fmt17(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

const char* unit_label(Unit u) {
  switch (u) {
    case Unit::Length: return " m";
    case Unit::Time: return " s";
    case Unit::Frequency: return " Hz";
    case Unit::Power: return " W";
    default: return "";
  }
}

}  // namespace

bool ValidationReport::contains(std::string_view constraint) const {
  return std::any_of(violations.begin(), violations.end(),
                     [&](const Violation& v) { return v.constraint == constraint; });
}

std::string ValidationReport::summary() const {
  if (violations.empty()) return {};
  return violations.front().constraint + ": " + violations.front().message;
}

ValidationReport validate_config(const SystemConfig& cfg) {
  ValidationReport r;
  auto fail = [&](std::string c, std::string m) { r.violations.push_back({std::move(c), std::move(m)}); };

  const auto& g = cfg.geometry;
  if (!(g.cell_radius > 0)) fail("geometry.cell_radius", "cell_radius must be > 0");
  if (!(g.uav_altitude > 0)) fail("geometry.uav_altitude", "uav_altitude must be > 0");
  if (g.min_radius > g.cell_radius) fail("C6", "cell_radius < min_radius (" + fmt17(g.cell_radius) + " < " + fmt17(g.min_radius) + ")");

  const auto& ch = cfg.channel;
  if (!(ch.pathloss_coeff > 0)) fail("channel.pathloss_coeff", "pathloss_coeff must be > 0");
  if (!(ch.pathloss_exp >= 2)) fail("channel.pathloss_exp", "pathloss_exp must be >= 2");
  if (!(ch.noise_power > 0)) fail("channel.noise_power", "noise_power must be > 0");
  if (!(ch.bandwidth > 0)) fail("channel.bandwidth", "bandwidth must be > 0");

  const auto& t = cfg.traffic;
  if (t.n_active < 1) fail("traffic.n_active", "n_active must be >= 1");
  if (!(t.lambda >= 0)) fail("traffic.lambda", "lambda must be >= 0");
  if (t.tail_truncation && *t.tail_truncation < 0) fail("traffic.tail_truncation", "tail_truncation must be >= 0");
  if (t.scenario == Scenario::Emergency) {
    if (t.lambda_min > t.lambda) fail("C4", "lambda < lambda_min (" + fmt17(t.lambda) + " < " + fmt17(t.lambda_min) + ")");
    if (t.lambda > t.lambda_max) fail("C5", "lambda > lambda_max (" + fmt17(t.lambda) + " > " + fmt17(t.lambda_max) + ")");
  }

  const auto& f = cfg.frame;
  if (!(f.frame_duration > 0)) fail("frame.frame_duration", "frame_duration must be > 0");
  if (f.n_slots < 1) fail("frame.n_slots", "n_slots must be >= 1");
  if (f.packet_bits < 1) fail("frame.packet_bits", "packet_bits must be >= 1");
  if (f.n_subcarriers < 1) fail("frame.n_subcarriers", "n_subcarriers must be >= 1");
  if (f.code_pool_size < 2) fail("frame.code_pool_size", "code_pool_size must be >= 2");
  if (f.n_subcarriers >= 1 && f.n_subcarriers < 16 &&
      std::pow(4.0, f.n_subcarriers) < static_cast<double>(f.code_pool_size))
    fail("frame.code_pool_size", "code_pool_size exceeds the 4^J distinct codes of length J");

  const auto& p = cfg.power;
  if (!(p.p_max > 0)) fail("power.p_max", "p_max must be > 0");
  if (!(p.rho_max_proxy_quantile > 0 && p.rho_max_proxy_quantile < 1))
    fail("power.rho_max_quantile", "rho_max_quantile must lie in (0,1)");

  const auto& rel = cfg.reliability;
  if (!(rel.sinr_threshold > 0)) fail("reliability.sinr_threshold", "sinr_threshold must be > 0");
  if (!(rel.epsilon_max > 0 && rel.epsilon_max < 0.5)) fail("reliability.epsilon_max", "epsilon_max must lie in (0, 0.5)");
  if (!(rel.dispersion > 0)) fail("reliability.dispersion", "dispersion must be > 0");

  if (!(cfg.delta_slack >= 0)) fail("optimizer.delta_slack", "delta_slack must be >= 0");
  return r;
}

SystemConfig parse_config(std::string_view text) {
  SystemConfig cfg;
  const auto& keys = key_table();
  int line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;

    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    const auto context = [&](std::string_view key) {
      return "line " + std::to_string(line_no) + (key.empty() ? "" : " (" + std::string(key) + ")") + ": ";
    };
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(context("") + "expected 'key = value'");
    const std::string_view name = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));

    const auto it = std::find_if(keys.begin(), keys.end(), [&](const Key& k) { return k.name == name; });
    if (it == keys.end()) throw ConfigError(context(name) + "unknown key");
    if (value.empty()) throw ConfigError(context(name) + "missing value");

    try {
      if (it->unit == Unit::Word) {
        it->set_word(cfg, value);
        continue;
      }
      double v = 0;
      const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
      if (ec != std::errc{} || ptr == value.data()) throw ConfigError("expected a number, got '" + std::string(value) + "'");
      const std::string_view suffix = trim(std::string_view(ptr, value.data() + value.size() - ptr));
      it->set_number(cfg, apply_unit(it->unit, v, suffix));
    } catch (const ConfigError& e) {
      throw ConfigError(context(name) + e.what());
    }
  }

  if (const auto report = validate_config(cfg); !report.ok()) throw ConfigError(report.summary());
  return cfg;
}

SystemConfig load_config(std::istream& source) {
  std::ostringstream buf;
  buf << source.rdbuf();
  return parse_config(buf.str());
}

SystemConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return load_config(in);
}

std::string serialize_config(const SystemConfig& cfg) {
  std::string out;
  for (const auto& k : key_table()) {
    out += k.name;
    out += " = ";
    out += k.unit == Unit::Word ? k.get_word(cfg) : fmt17(k.get_number(cfg)) + unit_label(k.unit);
    out += '\n';
  }
  return out;
}

std::string to_string(Scenario s) { return s == Scenario::Emergency ? "emergency" : "non_emergency"; }

std::string to_string(PowerMode m) {
  switch (m) {
    case PowerMode::EqualSplitByMax: return "equal_split_by_max";
    case PowerMode::PerDeviceSplit: return "per_device_split";
    case PowerMode::Fixed: return "fixed";
  }
  return "?";
}

std::string to_string(SinrForm f) { return f == SinrForm::Standard ? "standard" : "literal"; }

double active_intensity(const SystemConfig& cfg) {
  const double r = cfg.geometry.cell_radius;
  return cfg.traffic.n_active / (std::numbers::pi * r * r);
}

double path_gain(const SystemConfig& cfg, double r) {
  const double h = cfg.geometry.uav_altitude;
  return cfg.channel.pathloss_coeff * std::pow(r * r + h * h, -cfg.channel.pathloss_exp / 2.0);
}

int poisson_quantile(double lambda, double q) {
  if (lambda <= 0) return 1;
  double pmf = std::exp(-lambda);
  double cdf = pmf;
  int k = 0;
  while (cdf < q) {
    ++k;
    pmf *= lambda / k;
    cdf += pmf;
  }
  return std::max(k, 1);
}

int rho_max_proxy(const SystemConfig& cfg) {
  if (cfg.traffic.scenario == Scenario::NonEmergency) return 1;
  return poisson_quantile(cfg.traffic.lambda, cfg.power.rho_max_proxy_quantile);
}

double packet_power(const SystemConfig& cfg) {
  if (cfg.power.mode == PowerMode::Fixed) return cfg.power.p_max;
  return cfg.power.p_max / rho_max_proxy(cfg);
}

int default_tail_truncation(double lambda) {
  if (lambda <= 0) return 0;
  const int top0 = static_cast<int>(std::ceil(lambda));
  // Tail mass above k, summed forward from the pmf at k+1 (no cancellation).
  const auto tail_above = [lambda](int k) {
    double log_pmf = -lambda + (k + 1) * std::log(lambda) - std::lgamma(k + 2.0);
    double sum = 0;
    for (int l = k + 1;; ++l) {
      const double term = std::exp(log_pmf);
      sum += term;
      if (term < 1e-18 * sum || term == 0) break;
      log_pmf += std::log(lambda) - std::log(l + 1.0);
    }
    return sum;
  };
  int l_lim = 0;
  while (tail_above(top0 + l_lim) >= 1e-12) ++l_lim;
  return l_lim;
}

int effective_tail_truncation(const SystemConfig& cfg) {
  return cfg.traffic.tail_truncation.value_or(default_tail_truncation(cfg.traffic.lambda));
}

double effective_lambda(const SystemConfig& cfg) {
  return cfg.traffic.scenario == Scenario::Emergency ? cfg.traffic.lambda : 1.0;
}

}  // namespace gfnoma
