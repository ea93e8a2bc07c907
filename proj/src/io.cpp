#include "pfsim/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "pfsim/errors.hpp"

namespace pfsim {

namespace fs = std::filesystem;

namespace {

void write_file(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

}  // namespace

std::string format_sci(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

void write_diagnostics_header(std::ostream& out) { out << kDiagnosticsHeader << '\n'; }

void write_diagnostics_row(std::ostream& out, const DiagnosticsRow& r) {
  out << r.step << ',' << format_sci(r.t) << ',' << format_sci(r.mu) << ','
      << format_sci(r.energy) << ',' << format_sci(r.entropy) << ','
      << format_sci(r.dissipation_cum) << ',' << format_sci(r.source_cum) << ','
      << format_sci(r.energy_id_residual) << ',' << format_sci(r.theta_min) << ','
      << format_sci(r.theta_max) << ',' << format_sci(r.chi_min) << ','
      << format_sci(r.chi_max) << ',' << format_sci(r.u_spatial_std) << ','
      << r.newton_iters_chi << ',' << r.newton_iters_theta << '\n';
}

void write_diagnostics(const fs::path& path, std::span<const DiagnosticsRow> rows) {
  std::ostringstream out;
  write_diagnostics_header(out);
  for (const auto& r : rows) write_diagnostics_row(out, r);
  write_file(path, out.str());
}

std::string snapshot_csv(std::span<const double> field, const Grid& g) {
  if (field.size() != g.size()) throw IoError("snapshot field size does not match grid");
  std::string out;
  for (int j = g.ny(); j >= 0; --j) {
    for (int i = 0; i < g.nx(); ++i) {
      if (i > 0) out += ',';
      out += format_sci(field[g.index(i, j)]);
    }
    out += '\n';
  }
  return out;
}

void write_snapshot(const fs::path& path, std::span<const double> field, const Grid& g) {
  write_file(path, snapshot_csv(field, g));
}

std::string pgm_bytes(std::span<const double> field, const Grid& g, double* vmin,
                      double* vmax) {
  if (field.size() != g.size()) throw IoError("image field size does not match grid");
  const auto [lo_it, hi_it] = std::minmax_element(field.begin(), field.end());
  const double lo = *lo_it, hi = *hi_it;
  if (vmin) *vmin = lo;
  if (vmax) *vmax = hi;

  std::string out = "P5\n" + std::to_string(g.nx()) + " " + std::to_string(g.rows()) +
                    "\n65535\n";
  out.reserve(out.size() + 2 * g.size());
  for (int j = g.ny(); j >= 0; --j) {
    for (int i = 0; i < g.nx(); ++i) {
      unsigned sample = 0;
      if (hi > lo) {
        const double s = (field[g.index(i, j)] - lo) / (hi - lo) * 65535.0;
        sample = static_cast<unsigned>(std::clamp(std::lround(s), 0L, 65535L));
      }
      out += static_cast<char>((sample >> 8) & 0xFF);
      out += static_cast<char>(sample & 0xFF);
    }
  }
  return out;
}

fs::path pgm_range_path(const fs::path& pgm_path) {
  fs::path p = pgm_path;
  p.replace_extension();
  p += ".range.txt";
  return p;
}

void write_pgm(const fs::path& path, std::span<const double> field, const Grid& g) {
  double lo = 0.0, hi = 0.0;
  write_file(path, pgm_bytes(field, g, &lo, &hi));
  char buf[96];
  std::snprintf(buf, sizeof buf, "%.17g %.17g\n", lo, hi);
  write_file(pgm_range_path(path), buf);
}

OutputLock::OutputLock(const fs::path& dir) : path_(dir / ".pfsim.lock") {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
  std::FILE* f = std::fopen(path_.c_str(), "wx");
  if (!f) {
    throw IoError("output directory '" + dir.string() +
                  "' is locked by another run (remove " + path_.string() + " if stale)");
  }
  std::fclose(f);
}

OutputLock::~OutputLock() {
  std::error_code ec;
  fs::remove(path_, ec);
}

}  // namespace pfsim
