#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "gfnoma/config.hpp"
#include "gfnoma/simulator.hpp"

namespace gfnoma::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kUsage = 2, kConfig = 3, kInfeasible = 4, kNumeric = 5 };

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// `axis=start:stop:step` with axis one of lambda, n_active, n_slots; stop is inclusive.
struct Sweep {
  std::string axis;
  std::vector<double> values;
};

Sweep parse_sweep(std::string_view spec);

/// Copy of `cfg` with the sweep axis set to `value`.
SystemConfig apply_axis(const SystemConfig& cfg, const std::string& axis, double value);

/// Shortest round-trip decimal: 17 significant digits.
std::string fmt(double v);

/// Git blob hash (SHA-1 over "blob <size>\0<content>"), lowercase hex.
std::string git_blob_hash(std::string_view content);

struct RunOptions {
  std::string command;
  std::string config_path;
  std::uint64_t seed = 1;
  long trials = 10000;
  std::string scheme = "proposed";
  std::optional<Sweep> sweep;
  std::string out;       // CSV destination, stdout when empty
  std::string manifest;  // defaults to <out>.manifest when out is set
  int threads = 0;       // from GFNOMA_THREADS
  /// validate only: comma-separated n_active:lambda pairs.
  std::string grid = "10:2,20:8,20:10";
};

/// Canonical text identifying every input that determines the numeric output.
std::string manifest_inputs(const SystemConfig& cfg, const RunOptions& opts);

// Each command writes its CSV or report to `out` and returns an exit code.
int cmd_analytic(const SystemConfig& cfg, const RunOptions& opts, std::ostream& out);
int cmd_simulate(const SystemConfig& cfg, const RunOptions& opts, std::ostream& out);
int cmd_optimize(const SystemConfig& cfg, const RunOptions& opts, std::ostream& out);
int cmd_compare(const SystemConfig& cfg, const RunOptions& opts, std::ostream& out);
int cmd_validate(const SystemConfig& cfg, const RunOptions& opts, std::ostream& out);

/// CSV row for one coverage estimate, matching kEstimateHeader.
inline constexpr std::string_view kEstimateHeader =
    "scheme,n_slots,n_frames,p_hat,ci_halfwidth,generated,transmitted,decoded,dropped,collided";
std::string estimate_row(sim::Scheme scheme, const sim::CoverageEstimate& e);

/// Full entry point: parses argv, maps exceptions to exit codes, messages to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gfnoma::cli
