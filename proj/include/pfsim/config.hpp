#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pfsim/functionals.hpp"
#include "pfsim/potentials.hpp"
#include "pfsim/stationary.hpp"
#include "pfsim/timestepper.hpp"

namespace pfsim {

enum class InitPreset { constant, sinusoid, tanh_stripe, random };

std::string_view to_string(InitPreset p);
InitPreset init_preset_from_string(std::string_view name);

/// Initial profile of one field:
///   constant     value
///   sinusoid     value + amplitude cos(2 pi kx x / lx)
///   tanh_stripe  value + amplitude tanh((y - ly/2) / width)
///   random       value + amplitude * (band-limited random field with modes up
///                to kx in x and y, normalized to unit max norm)
struct FieldInit {
  InitPreset preset = InitPreset::constant;
  double value = 0.0;
  double amplitude = 0.0;
  int kx = 1;
  double width = 0.1;
  bool operator==(const FieldInit&) const = default;
};

struct Config {
  struct Domain {
    double lx = 1.0;
    double ly = 1.0;
    int nx = 16;
    int ny = 16;
    bool operator==(const Domain&) const = default;
  } domain;
  struct Time {
    double dt = 1e-3;
    double t_end = 0.0;
    int snapshot_every = 0;
    double min_dt = 1e-3 / 1024.0;
    bool operator==(const Time&) const = default;
  } time;
  Potential potential_bulk;
  Potential potential_surf;
  LatentHeat latent_bulk;
  LatentHeat latent_surf;
  struct Source {
    SourceKind kind = SourceKind::zero;
    double amplitude = 0.0;
    int kx = 1;
    double omega = 0.0;
    bool operator==(const Source&) const = default;
  } source;
  struct Init {
    FieldInit theta{InitPreset::constant, 1.0, 0.0, 1, 0.1};
    FieldInit chi{InitPreset::constant, 0.0, 0.0, 1, 0.1};
    std::uint64_t seed = 0;
    bool operator==(const Init&) const = default;
  } init;
  struct Solver {
    double newton_tol = 1e-10;
    int newton_max_iter = 50;
    double cg_tol = 1e-10;
    double guard_eps = 1e-12;
    bool operator==(const Solver&) const = default;
  } solver;
  struct Output {
    std::string dir = "output";
    bool write_pgm = false;
    bool operator==(const Output&) const = default;
  } output;

  bool operator==(const Config&) const = default;
};

/// Parses the line-oriented `section.key = value` format. `#` starts a
/// comment; keys may appear in any order but at most once; unknown keys are
/// rejected. Required: domain.{lx,ly,nx,ny}, time.{dt,t_end},
/// potential_bulk.kind, potential_surf.kind. Throws ConfigError naming the
/// line and key.
Config parse_config(std::string_view text);
Config load_config(const std::string& path);

/// Writes every key; parse_config(serialize_config(c)) == c.
std::string serialize_config(const Config& c);

Model make_model(const Config& c);
StepperConfig make_stepper_config(const Config& c);
HeatSource make_source(const Config& c, const Model& md);
/// Samples the initial presets on the grid. Throws DomainError when the
/// result violates positivity or the potential domains.
State make_initial_state(const Config& c, const Model& md);

struct ValidationReport {
  bool ok = false;
  std::optional<CompatReport> compatibility;
  std::string compatibility_error;
  CoercivityReport coercivity;
  double source_projected_mean = 0.0;
  bool initial_data_ok = false;
  std::string initial_data_error;
  double mu0 = 0.0;
  HypothesisReport hypotheses;
  std::vector<std::string> failures;
};

inline constexpr int kValidationSamples = 2001;

ValidationReport validate_config(const Config& c);
std::string format_report(const ValidationReport& r);

}  // namespace pfsim
