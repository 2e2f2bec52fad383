#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace entropic {

/// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitNoConvergence = 2;

/// Runs `entropic-compose` with `args` (program name excluded).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

struct CheckLine {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

/// The Gaussian-toolkit battery run by `gauss-check`: log-partition against
/// the erf oracle, Renyi quadrature and identities, product identities and
/// the EM fit. Deterministic in (sample_count, seed).
std::vector<CheckLine> gauss_check_battery(std::size_t sample_count, std::uint64_t seed);
std::string format_check_table(const std::vector<CheckLine>& lines);

}  // namespace entropic
