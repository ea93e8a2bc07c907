#pragma once

#include <filesystem>
#include <ostream>
#include <span>
#include <string>

#include "pfsim/functionals.hpp"

namespace pfsim {

/// Scientific notation with 17 significant digits.
std::string format_sci(double v);

inline constexpr const char* kDiagnosticsHeader =
    "step,time,mu,energy,entropy,dissipation_cum,source_cum,energy_id_residual,"
    "theta_min,theta_max,chi_min,chi_max,u_spatial_std,newton_iters_chi,newton_iters_theta";

void write_diagnostics_header(std::ostream& out);
void write_diagnostics_row(std::ostream& out, const DiagnosticsRow& row);
/// Throws IoError when the file cannot be written.
void write_diagnostics(const std::filesystem::path& path, std::span<const DiagnosticsRow> rows);

/// ny+1 lines of nx comma-separated values, top row (j = ny) first.
std::string snapshot_csv(std::span<const double> field, const Grid& g);
void write_snapshot(const std::filesystem::path& path, std::span<const double> field,
                    const Grid& g);

/// Binary P5 image, nx by ny+1, maxval 65535, big-endian samples, same row
/// order as the CSV snapshot. Values are scaled linearly from [min, max];
/// a constant field maps to 0. The range goes to "<path>.range.txt" with the
/// extension of path stripped.
std::string pgm_bytes(std::span<const double> field, const Grid& g, double* vmin = nullptr,
                      double* vmax = nullptr);
void write_pgm(const std::filesystem::path& path, std::span<const double> field, const Grid& g);
std::filesystem::path pgm_range_path(const std::filesystem::path& pgm_path);

/// Exclusive lock file in an output directory; released on destruction.
/// Throws IoError if the directory is already locked.
class OutputLock {
public:
  explicit OutputLock(const std::filesystem::path& dir);
  ~OutputLock();
  OutputLock(const OutputLock&) = delete;
  OutputLock& operator=(const OutputLock&) = delete;

private:
  std::filesystem::path path_;
};

}  // namespace pfsim
