#include "pfsim/run.hpp"

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>

#include "pfsim/errors.hpp"
#include "pfsim/io.hpp"

namespace pfsim {

namespace fs = std::filesystem;

RunResult run_simulation(const Config& c, const fs::path& out_dir) {
  const Model md = make_model(c);
  const StepperConfig sc = make_stepper_config(c);
  const HeatSource src = make_source(c, md);
  const State s0 = make_initial_state(c, md);

  OutputLock lock(out_dir);
  const fs::path diag_path = out_dir / "diagnostics.csv";
  std::ofstream diag(diag_path, std::ios::binary | std::ios::trunc);
  if (!diag) throw IoError("cannot open '" + diag_path.string() + "' for writing");
  write_diagnostics_header(diag);

  RunResult result;
  const int every = c.time.snapshot_every;
  auto observer = [&](const State& s, const DiagnosticsRow& row) {
    write_diagnostics_row(diag, row);
    if (every > 0 && row.step % every == 0) {
      const std::string step = std::to_string(row.step);
      const Vec theta = s.theta();
      write_snapshot(out_dir / ("theta_" + step + ".csv"), theta, md.grid);
      write_snapshot(out_dir / ("chi_" + step + ".csv"), s.chi, md.grid);
      if (c.output.write_pgm) {
        write_pgm(out_dir / ("theta_" + step + ".pgm"), theta, md.grid);
        write_pgm(out_dir / ("chi_" + step + ".pgm"), s.chi, md.grid);
      }
      ++result.snapshots_written;
    }
  };
  try {
    result.trajectory = integrate(md, sc, src, s0, c.time.t_end, observer);
  } catch (...) {
    diag.flush();
    throw;
  }
  diag.flush();
  if (!diag) throw IoError("write to '" + diag_path.string() + "' failed");
  return result;
}

StationaryResult run_stationary(const Config& c, const StationaryOptions& opt) {
  const Model md = make_model(c);
  const State s0 = make_initial_state(c, md);
  const double mu = opt.mu.value_or(mass_mu(s0, md));

  // Decoupled estimate of the stationary temperature brackets the search.
  double latent = 0.0;
  for (std::size_t p = 0; p < s0.chi.size(); ++p) {
    latent += md.mass.bulk[p] * md.lat_bulk.value(s0.chi[p]) +
              md.mass.surf[p] * md.lat_surf.value(s0.chi[p]);
  }
  const double theta_est =
      (mu - latent) / (md.grid.bulk_measure() + md.grid.surface_measure());
  const double lo = opt.theta_lo.value_or(theta_est > 0.0 ? 0.5 * theta_est : 1e-3);
  const double hi = opt.theta_hi.value_or(theta_est > 0.0 ? 2.0 * theta_est : 1.0);

  std::vector<Vec> guesses{s0.chi};
  for (double v : {0.0, 0.5, -0.5}) guesses.emplace_back(md.grid.size(), v);
  return solve_stationary(mu, lo, hi, guesses, md, opt.tol);
}

std::string format_stationary(const StationaryResult& r) {
  std::ostringstream o;
  o.precision(17);
  o << "stationary solution\n"
    << "  mu_target      = " << r.mu_target << "\n"
    << "  theta_inf      = " << r.theta_inf << "\n"
    << "  u_inf          = " << r.u_inf << "\n"
    << "  phase_residual = " << r.phase_residual << "\n"
    << "  mass_gap       = " << r.mass_gap << "\n"
    << "  separation     = " << r.separation << "\n"
    << "  evaluations    = " << r.outer_iterations << "\n"
    << "  admissible     = " << (r.hypotheses.admissible ? "yes" : "no")
    << " (bound " << r.hypotheses.admissibility_bound << ")\n"
    << "  large_mass     = " << (r.hypotheses.large_mass ? "yes" : "no")
    << " (bound " << r.hypotheses.large_mass_bound << ")\n"
    << "  sign_condition = " << (r.hypotheses.sign_condition ? "yes" : "no")
    << " (margin " << r.hypotheses.sign_margin << ")\n";
  return o.str();
}

namespace {

enum ExitCode { kOk = 0, kConfig = 1, kSolver = 2, kValidation = 3 };

int cmd_simulate(const Config& c, const fs::path& dir, std::ostream& out, std::ostream& err) {
  const auto rep = validate_config(c);
  if (!rep.ok) {
    err << format_report(rep);
    return kValidation;
  }
  const auto res = run_simulation(c, dir);
  const auto& last = res.trajectory.rows.back();
  out << "simulate: " << res.trajectory.rows.size() - 1 << " steps to t = " << last.t
      << ", energy_id_residual = " << format_sci(last.energy_id_residual) << ", output in "
      << dir.string() << "\n";
  return kOk;
}

int cmd_stationary(const Config& c, const fs::path& dir, const StationaryOptions& opt,
                   std::ostream& out) {
  const auto res = run_stationary(c, opt);
  const Model md = make_model(c);
  OutputLock lock(dir);
  write_snapshot(dir / "chi_inf.csv", res.chi_inf, md.grid);
  if (c.output.write_pgm) write_pgm(dir / "chi_inf.pgm", res.chi_inf, md.grid);
  const std::string text = format_stationary(res);
  std::ofstream summary(dir / "stationary.txt", std::ios::trunc);
  if (!summary) throw IoError("cannot write stationary.txt");
  summary << text;
  out << text;
  return kOk;
}

int cmd_ode(const Config& c, const fs::path& dir, double tau_ref, int samples,
            std::ostream& out) {
  const Model md = make_model(c);
  if (!md.homogeneous_laws()) {
    throw ConfigError("ode requires identical bulk and surface potentials and latent heats");
  }
  const auto traj = integrate_homogeneous(c.init.theta.value, c.init.chi.value, md, tau_ref,
                                          c.time.t_end, samples);
  OutputLock lock(dir);
  std::ostringstream csv;
  csv << "t,theta,chi\n";
  for (const auto& s : traj) {
    csv << format_sci(s.t) << ',' << format_sci(s.theta) << ',' << format_sci(s.chi) << '\n';
  }
  std::ofstream f(dir / "ode.csv", std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write ode.csv");
  f << csv.str();
  out << "ode: " << traj.size() << " samples written to " << (dir / "ode.csv").string()
      << "\n";
  return kOk;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Penrose-Fife phase-field simulator with dynamic boundary conditions"};
  app.require_subcommand(1);

  std::string config_path;
  std::string output_dir;
  StationaryOptions st_opt;
  double tau_ref = 1e-6;
  int samples = 1000;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "configuration file")->required();
    sub->add_option("--output", output_dir, "output directory (overrides output.dir)");
  };
  auto* simulate = app.add_subcommand("simulate", "integrate in time and write diagnostics");
  auto* stationary = app.add_subcommand("stationary", "solve the steady-state problem");
  auto* check = app.add_subcommand("check", "validate a configuration");
  auto* ode = app.add_subcommand("ode", "integrate the spatially homogeneous reduction");
  for (auto* sub : {simulate, stationary, check, ode}) add_common(sub);
  stationary->add_option("--mu", st_opt.mu, "target internal-energy mass");
  stationary->add_option("--theta-lo", st_opt.theta_lo, "lower end of the temperature bracket");
  stationary->add_option("--theta-hi", st_opt.theta_hi, "upper end of the temperature bracket");
  stationary->add_option("--tol", st_opt.tol, "residual tolerance");
  ode->add_option("--tau-ref", tau_ref, "RK4 step");
  ode->add_option("--samples", samples, "number of output samples");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kConfig;
  }

  try {
    Config c = load_config(config_path);
    if (!output_dir.empty()) c.output.dir = output_dir;
    const fs::path dir = c.output.dir;

    if (check->parsed()) {
      const auto rep = validate_config(c);
      out << format_report(rep);
      return rep.ok ? kOk : kValidation;
    }
    if (simulate->parsed()) return cmd_simulate(c, dir, out, err);
    if (stationary->parsed()) return cmd_stationary(c, dir, st_opt, out);
    if (ode->parsed()) return cmd_ode(c, dir, tau_ref, samples, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const AdmissibilityError& e) {
    err << "validation failure: " << e.what() << "\n";
    return kValidation;
  } catch (const DomainError& e) {
    err << "validation failure: " << e.what() << "\n";
    return kValidation;
  } catch (const FatalSolverError& e) {
    err << "solver failure at step " << e.failing_step() << ": " << e.what() << "\n";
    return kSolver;
  } catch (const SolverError& e) {
    err << "solver failure: " << e.what() << "\n";
    return kSolver;
  } catch (const BracketError& e) {
    err << "solver failure: " << e.what() << "\n";
    return kSolver;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << "\n";
    return kConfig;
  }
  return kConfig;
}

}  // namespace pfsim
