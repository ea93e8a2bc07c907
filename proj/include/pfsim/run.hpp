#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "pfsim/config.hpp"

namespace pfsim {

struct RunResult {
  Trajectory trajectory;
  int snapshots_written = 0;
};

/// Integrates the configured problem and writes diagnostics.csv plus
/// theta_<step>.csv / chi_<step>.csv every time.snapshot_every steps
/// (and .pgm images when output.write_pgm). Rows written before a
/// FatalSolverError stay on disk.
RunResult run_simulation(const Config& c, const std::filesystem::path& out_dir);

struct StationaryOptions {
  std::optional<double> mu;
  std::optional<double> theta_lo;
  std::optional<double> theta_hi;
  double tol = 1e-10;
};

/// Solves the stationary problem with mu taken from the initial data unless
/// overridden. Guesses: the initial phase field, then constants 0, 0.5, -0.5.
StationaryResult run_stationary(const Config& c, const StationaryOptions& opt);

/// Text block summarizing a stationary solve.
std::string format_stationary(const StationaryResult& r);

/// Entry point of the command-line tool. Exit codes: 0 success, 1 config
/// error, 2 solver failure, 3 mandatory validation failure.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace pfsim
