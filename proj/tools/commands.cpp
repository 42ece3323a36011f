#include "commands.hpp"

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "gfnoma/analytic.hpp"
#include "gfnoma/errors.hpp"
#include "gfnoma/optimizer.hpp"
#include "gfnoma/shortpacket.hpp"
#include "gfnoma/units.hpp"

namespace gfnoma::cli {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double parse_number(std::string_view text, std::string_view what) {
  const std::string s(text);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v))
    throw UsageError("invalid " + std::string(what) + " '" + s + "'");
  return v;
}

/// Flat key=value record of one run, written next to the CSV.
class Manifest {
 public:
  Manifest(const SystemConfig& cfg, const RunOptions& opts) : inputs_(manifest_inputs(cfg, opts)) {
    lines_ << "command=" << opts.command << "\n";
    lines_ << "seed=" << opts.seed << "\n";
    lines_ << "trials=" << opts.trials << "\n";
    lines_ << "input_hash=" << git_blob_hash(inputs_) << "\n";
    std::istringstream config(serialize_config(cfg));
    for (std::string line; std::getline(config, line);)
      if (!line.empty() && line[0] != '#') lines_ << "config." << line << "\n";
  }

  void point(const std::string& key, const std::string& value) { lines_ << "point." << index_ << "." << key << "=" << value << "\n"; }
  void next_point() { ++index_; }

  void write_if_requested(const RunOptions& opts) const {
    std::string path = opts.manifest;
    if (path.empty() && !opts.out.empty()) path = opts.out + ".manifest";
    if (path.empty()) return;
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write manifest " + path);
    f << lines_.str() << "points=" << index_ << "\n";
  }

 private:
  std::string inputs_;
  std::ostringstream lines_;
  int index_ = 0;
};

template <class F>
auto at_point(const std::string& axis, double value, F&& body) {
  const std::string where = "at " + axis + "=" + fmt(value) + ": ";
  try {
    return body();
  } catch (const ConfigError& e) {
    throw ConfigError(where + e.what());
  } catch (const QuadratureError& e) {
    throw QuadratureError(where + e.what(), e.best_estimate(), e.error_estimate());
  } catch (const InfeasibleError& e) {
    throw InfeasibleError(e.constraint(), where + e.what());
  }
}

std::vector<double> sweep_values(const SystemConfig& cfg, const RunOptions& opts, std::string& axis) {
  if (opts.sweep) {
    axis = opts.sweep->axis;
    return opts.sweep->values;
  }
  axis = "n_slots";
  return {static_cast<double>(cfg.frame.n_slots)};
}

struct GridPoint {
  int n_active;
  double lambda;
};

std::vector<GridPoint> parse_grid(std::string_view text) {
  std::vector<GridPoint> grid;
  std::string item;
  std::istringstream in{std::string(text)};
  while (std::getline(in, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw UsageError("grid point '" + item + "' is not n_active:lambda");
    const double n = parse_number(std::string_view(item).substr(0, colon), "grid n_active");
    if (n != std::floor(n) || n < 1) throw UsageError("grid n_active must be a positive integer");
    grid.push_back({static_cast<int>(n), parse_number(std::string_view(item).substr(colon + 1), "grid lambda")});
  }
  if (grid.empty()) throw UsageError("empty validation grid");
  return grid;
}

}  // namespace

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string git_blob_hash(std::string_view content) {
  const std::string header = "blob " + std::to_string(content.size()) + '\0';
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  const bool ok = ctx && EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) &&
                  EVP_DigestUpdate(ctx, header.data(), header.size()) &&
                  EVP_DigestUpdate(ctx, content.data(), content.size()) && EVP_DigestFinal_ex(ctx, digest, &length);
  EVP_MD_CTX_free(ctx);
  if (!ok) throw std::runtime_error("SHA-1 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < length; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

Sweep parse_sweep(std::string_view spec) {
  const auto eq = spec.find('=');
  if (eq == std::string_view::npos) throw UsageError("sweep must look like axis=start:stop:step");
  Sweep s{std::string(spec.substr(0, eq)), {}};
  if (s.axis != "lambda" && s.axis != "n_active" && s.axis != "n_slots")
    throw UsageError("unknown sweep axis '" + s.axis + "' (lambda|n_active|n_slots)");

  std::vector<double> parts;
  std::string range(spec.substr(eq + 1));
  std::istringstream in(range);
  for (std::string p; std::getline(in, p, ':');) parts.push_back(parse_number(p, "sweep bound"));
  if (parts.size() == 1) parts = {parts[0], parts[0], 1.0};
  if (parts.size() != 3) throw UsageError("sweep must look like axis=start:stop:step");
  const double start = parts[0], stop = parts[1], step = parts[2];
  if (!(step > 0)) throw UsageError("sweep step must be > 0");
  const double slack = 1e-9 * step;
  for (long i = 0;; ++i) {
    const double v = start + i * step;
    if (v > stop + slack) break;
    if (i >= 100000) throw UsageError("sweep has too many points");
    s.values.push_back(v);
  }
  if (s.values.empty()) throw UsageError("sweep range is empty");
  return s;
}

SystemConfig apply_axis(const SystemConfig& cfg, const std::string& axis, double value) {
  SystemConfig c = cfg;
  const auto integral = [&] {
    if (value != std::round(value)) throw UsageError(axis + " must take integer values, got " + fmt(value));
    return static_cast<int>(std::lround(value));
  };
  if (axis == "lambda") {
    c.traffic.lambda = value;
  } else if (axis == "n_active") {
    c.traffic.n_active = integral();
  } else if (axis == "n_slots") {
    c.frame.n_slots = integral();
  } else {
    throw UsageError("unknown sweep axis '" + axis + "'");
  }
  return c;
}

std::string manifest_inputs(const SystemConfig& cfg, const RunOptions& opts) {
  std::ostringstream os;
  os << serialize_config(cfg);
  os << "command=" << opts.command << "\nseed=" << opts.seed << "\ntrials=" << opts.trials
     << "\nscheme=" << opts.scheme << "\n";
  if (opts.sweep) {
    os << "sweep=" << opts.sweep->axis;
    for (double v : opts.sweep->values) os << ' ' << fmt(v);
    os << "\n";
  }
  if (opts.command == "validate") os << "grid=" << opts.grid << "\n";
  return os.str();
}

std::string estimate_row(sim::Scheme scheme, const sim::CoverageEstimate& e) {
  std::ostringstream os;
  os << sim::to_string(scheme) << ',' << e.n_slots << ',' << e.n_frames << ',' << fmt(e.p_hat) << ','
     << fmt(e.ci_halfwidth) << ',' << e.packets_generated << ',' << e.packets_transmitted << ','
     << e.packets_decoded << ',' << e.packets_dropped << ',' << e.packets_collided;
  return os.str();
}

int cmd_analytic(const SystemConfig& cfg, const RunOptions& opts, std::ostream& out) {
  std::string axis;
  const auto values = sweep_values(cfg, opts, axis);
  Manifest manifest(cfg, opts);
  out << axis << ",p_succ,p_lambda,p_cf,n_singleton,quadrature_error\n";
  for (double v : values) {
    const auto t0 = Clock::now();
    const auto r = at_point(axis, v, [&] { return analytic::frame_coverage_prob(apply_axis(cfg, axis, v)); });
    out << fmt(v) << ',' << fmt(r.p_succ) << ',' << fmt(r.p_lambda) << ',' << fmt(r.p_cf) << ','
        << fmt(r.n_singleton) << ',' << fmt(r.quadrature_error_estimate) << '\n';
    manifest.point(axis, fmt(v));
    manifest.point("p_succ", fmt(r.p_succ));
    manifest.point("wall_seconds", fmt(seconds_since(t0)));
    manifest.next_point();
  }
  manifest.write_if_requested(opts);
  return kOk;
}

int cmd_simulate(const SystemConfig& cfg, const RunOptions& opts, std::ostream& out) {
  if (opts.trials < 1) throw UsageError("--trials must be >= 1");
  const auto scheme = sim::parse_scheme(opts.scheme);
  Manifest manifest(cfg, opts);
  const auto run_point = [&](const SystemConfig& c) {
    const auto t0 = Clock::now();
    const auto e = sim::estimate_coverage(c, scheme, opts.trials, opts.seed, opts.threads);
    manifest.point("p_hat", fmt(e.p_hat));
    manifest.point("ci_halfwidth", fmt(e.ci_halfwidth));
    manifest.point("wall_seconds", fmt(seconds_since(t0)));
    manifest.next_point();
    return e;
  };

  if (!opts.sweep) {
    out << kEstimateHeader << '\n' << estimate_row(scheme, run_point(cfg)) << '\n';
  } else {
    const auto& axis = opts.sweep->axis;
    out << axis << ',' << kEstimateHeader << '\n';
    for (double v : opts.sweep->values) {
      manifest.point(axis, fmt(v));
      const auto e = at_point(axis, v, [&] { return run_point(apply_axis(cfg, axis, v)); });
      out << fmt(v) << ',' << estimate_row(scheme, e) << '\n';
    }
  }
  manifest.write_if_requested(opts);
  return kOk;
}

int cmd_optimize(const SystemConfig& cfg, const RunOptions&, std::ostream& out) {
  const auto opt = optimizer::adaptive_slots(cfg);
  out << "n_practical=" << opt.n_practical << '\n'
      << "n_star=" << fmt(opt.n_star) << '\n'
      << "n_lambda_bound=" << fmt(opt.n_lambda_bound) << '\n'
      << "n_epsilon_bound=" << fmt(opt.n_epsilon_bound) << '\n'
      << "binding=" << optimizer::to_string(opt.binding) << '\n'
      << "residual=" << fmt(opt.residual) << '\n'
      << "gamma_db=" << fmt(units::linear_to_db(opt.gamma)) << '\n'
      << "epsilon_at_practical=" << fmt(opt.epsilon_at_practical) << '\n';

  const auto range = optimizer::feasible_slot_range(cfg);
  const auto bf = optimizer::brute_force_slots(cfg, range);
  const double at_practical = bf.curve.back().p_succ;
  out << "brute_force_best_n=" << bf.best_n << '\n'
      << "brute_force_best_p=" << fmt(bf.best_p) << '\n'
      << "p_succ_at_practical=" << fmt(at_practical) << '\n'
      << "shortfall=" << fmt(bf.best_p - at_practical) << '\n'
      << "n_slots,p_succ\n";
  for (const auto& pt : bf.curve) out << pt.n_slots << ',' << fmt(pt.p_succ) << '\n';
  return kOk;
}

int cmd_compare(const SystemConfig& cfg, const RunOptions& opts, std::ostream& out) {
  if (opts.trials < 1) throw UsageError("--trials must be >= 1");
  if (!opts.sweep || opts.sweep->axis != "lambda") throw UsageError("compare needs --sweep lambda=start:stop:step");
  Manifest manifest(cfg, opts);
  const sim::Scheme schemes[] = {sim::Scheme::Proposed, sim::Scheme::TPDS, sim::Scheme::NAS};
  out << "lambda,proposed_n_slots,proposed_p_hat,proposed_ci,tpds_p_hat,tpds_ci,nas_p_hat,nas_ci\n";
  for (double v : opts.sweep->values) {
    const auto c = apply_axis(cfg, "lambda", v);
    manifest.point("lambda", fmt(v));
    out << fmt(v);
    for (auto s : schemes) {
      const auto t0 = Clock::now();
      const auto e = at_point("lambda", v, [&] { return sim::estimate_coverage(c, s, opts.trials, opts.seed, opts.threads); });
      if (s == sim::Scheme::Proposed) out << ',' << e.n_slots;
      out << ',' << fmt(e.p_hat) << ',' << fmt(e.ci_halfwidth);
      manifest.point(sim::to_string(s) + ".p_hat", fmt(e.p_hat));
      manifest.point(sim::to_string(s) + ".wall_seconds", fmt(seconds_since(t0)));
    }
    out << '\n';
    manifest.next_point();
  }
  manifest.write_if_requested(opts);
  return kOk;
}

int cmd_validate(const SystemConfig& cfg, const RunOptions& opts, std::ostream& out) {
  if (opts.trials < 1) throw UsageError("--trials must be >= 1");
  const auto grid = parse_grid(opts.grid);
  Manifest manifest(cfg, opts);
  out << "# config_hash=" << git_blob_hash(serialize_config(cfg)) << '\n';
  out << "n_active,lambda,n_slots,analytic,simulated,ci_halfwidth,gap\n";
  for (const auto& g : grid) {
    const auto t0 = Clock::now();
    auto c = apply_axis(apply_axis(cfg, "n_active", g.n_active), "lambda", g.lambda);
    const auto a = at_point("lambda", g.lambda, [&] { return analytic::frame_coverage_prob(c); });
    const auto e = sim::estimate_coverage(c, sim::Scheme::Reference, opts.trials, opts.seed, opts.threads);
    const double gap = std::abs(a.p_succ - e.p_hat);
    out << g.n_active << ',' << fmt(g.lambda) << ',' << c.frame.n_slots << ',' << fmt(a.p_succ) << ','
        << fmt(e.p_hat) << ',' << fmt(e.ci_halfwidth) << ',' << fmt(gap) << '\n';
    manifest.point("n_active", std::to_string(g.n_active));
    manifest.point("lambda", fmt(g.lambda));
    manifest.point("gap", fmt(gap));
    manifest.point("wall_seconds", fmt(seconds_since(t0)));
    manifest.next_point();
  }
  manifest.write_if_requested(opts);
  return kOk;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Grant-free NOMA coverage analysis, slot optimization and link simulation"};
  app.require_subcommand(1);
  RunOptions opts;
  std::string sweep_text;

  const auto common = [&](CLI::App* sub, bool simulated, bool sweepable) {
    sub->add_option("--config", opts.config_path, "Config file (defaults apply when omitted)");
    sub->add_option("--out", opts.out, "CSV output path (stdout when omitted)");
    if (sweepable) sub->add_option("--sweep", sweep_text, "axis=start:stop:step, axis in lambda|n_active|n_slots");
    if (simulated) {
      sub->add_option("--seed", opts.seed, "Base seed of the per-frame random streams");
      sub->add_option("--trials", opts.trials, "Monte Carlo frames per point");
      sub->add_option("--manifest", opts.manifest, "Manifest path (default <out>.manifest)");
    }
  };
  auto* analytic_cmd = app.add_subcommand("analytic", "Analytic coverage probability, optionally swept");
  common(analytic_cmd, false, true);
  analytic_cmd->add_option("--manifest", opts.manifest, "Manifest path (default <out>.manifest)");
  auto* simulate_cmd = app.add_subcommand("simulate", "Monte Carlo coverage estimate");
  common(simulate_cmd, true, true);
  simulate_cmd->add_option("--scheme", opts.scheme, "proposed|tpds|nas|reference");
  auto* optimize_cmd = app.add_subcommand("optimize", "Adaptive slot count and brute-force check");
  common(optimize_cmd, false, false);
  auto* compare_cmd = app.add_subcommand("compare", "Proposed vs TPDS vs NAS over a lambda sweep");
  common(compare_cmd, true, true);
  auto* validate_cmd = app.add_subcommand("validate", "Analytic vs simulated coverage on an (n_active, lambda) grid");
  common(validate_cmd, true, false);
  validate_cmd->add_option("--grid", opts.grid, "Comma-separated n_active:lambda pairs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "usage: " << e.what() << '\n';
    return kUsage;
  }

  if (const char* env = std::getenv("GFNOMA_THREADS")) opts.threads = std::atoi(env);

  try {
    const SystemConfig cfg = opts.config_path.empty() ? SystemConfig{} : load_config_file(opts.config_path);
    if (!sweep_text.empty()) opts.sweep = parse_sweep(sweep_text);

    std::ofstream file;
    if (!opts.out.empty()) {
      file.open(opts.out);
      if (!file) {
        err << "error: cannot write " << opts.out << '\n';
        return kFailure;
      }
    }
    std::ostream& sink = opts.out.empty() ? out : file;

    if (analytic_cmd->parsed()) opts.command = "analytic";
    if (simulate_cmd->parsed()) opts.command = "simulate";
    if (optimize_cmd->parsed()) opts.command = "optimize";
    if (compare_cmd->parsed()) opts.command = "compare";
    if (validate_cmd->parsed()) opts.command = "validate";

    if (opts.command == "analytic") return cmd_analytic(cfg, opts, sink);
    if (opts.command == "simulate") return cmd_simulate(cfg, opts, sink);
    if (opts.command == "optimize") return cmd_optimize(cfg, opts, sink);
    if (opts.command == "compare") return cmd_compare(cfg, opts, sink);
    return cmd_validate(cfg, opts, sink);
  } catch (const UsageError& e) {
    err << "usage: " << e.what() << '\n';
    return kUsage;
  } catch (const std::invalid_argument& e) {
    err << "usage: " << e.what() << '\n';
    return kUsage;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const InfeasibleError& e) {
    err << "infeasible: " << e.what() << '\n';
    return kInfeasible;
  } catch (const QuadratureError& e) {
    err << "numeric error: " << e.what() << " (best estimate " << fmt(e.best_estimate()) << ")\n";
    return kNumeric;
  } catch (const DomainError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
}

}  // namespace gfnoma::cli
