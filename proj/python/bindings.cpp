#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "pfsim/config.hpp"
#include "pfsim/errors.hpp"
#include "pfsim/io.hpp"
#include "pfsim/run.hpp"
#include "pfsim/stationary.hpp"

namespace py = pybind11;
using namespace pfsim;

namespace {

py::array_t<double> to_array(const Vec& v) { return py::array_t<double>(v.size(), v.data()); }

Vec to_vec(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  return Vec(a.data(), a.data() + a.size());
}

/// Rows of a trajectory as a dict of numpy columns.
py::dict rows_to_dict(const std::vector<DiagnosticsRow>& rows) {
  auto column = [&](auto get) {
    Vec c;
    c.reserve(rows.size());
    for (const auto& r : rows) c.push_back(static_cast<double>(get(r)));
    return to_array(c);
  };
  py::dict d;
  d["step"] = column([](const DiagnosticsRow& r) { return r.step; });
  d["t"] = column([](const DiagnosticsRow& r) { return r.t; });
  d["mu"] = column([](const DiagnosticsRow& r) { return r.mu; });
  d["energy"] = column([](const DiagnosticsRow& r) { return r.energy; });
  d["entropy"] = column([](const DiagnosticsRow& r) { return r.entropy; });
  d["dissipation_cum"] = column([](const DiagnosticsRow& r) { return r.dissipation_cum; });
  d["source_cum"] = column([](const DiagnosticsRow& r) { return r.source_cum; });
  d["energy_id_residual"] = column([](const DiagnosticsRow& r) { return r.energy_id_residual; });
  d["theta_min"] = column([](const DiagnosticsRow& r) { return r.theta_min; });
  d["theta_max"] = column([](const DiagnosticsRow& r) { return r.theta_max; });
  d["chi_min"] = column([](const DiagnosticsRow& r) { return r.chi_min; });
  d["chi_max"] = column([](const DiagnosticsRow& r) { return r.chi_max; });
  d["u_spatial_std"] = column([](const DiagnosticsRow& r) { return r.u_spatial_std; });
  d["newton_iters_chi"] = column([](const DiagnosticsRow& r) { return r.newton_iters_chi; });
  d["newton_iters_theta"] = column([](const DiagnosticsRow& r) { return r.newton_iters_theta; });
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Penrose-Fife phase-field simulator with dynamic boundary conditions";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<SolverError>(m, "SolverError", base.ptr());
  py::register_exception<FatalSolverError>(m, "FatalSolverError", base.ptr());
  py::register_exception<AdmissibilityError>(m, "AdmissibilityError", base.ptr());
  py::register_exception<BracketError>(m, "BracketError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());

  py::enum_<PotentialKind>(m, "PotentialKind")
      .value("logarithmic", PotentialKind::logarithmic)
      .value("quartic", PotentialKind::quartic);

  py::class_<Potential>(m, "Potential")
      .def(py::init([](PotentialKind k, double delta) { return Potential{k, delta}; }),
           py::arg("kind") = PotentialKind::logarithmic, py::arg("delta") = 0.0)
      .def_readwrite("kind", &Potential::kind)
      .def_readwrite("delta", &Potential::delta)
      .def("in_domain", &Potential::in_domain)
      .def("s0", &Potential::s0)
      .def("s0_prime", &Potential::s0_prime);

  m.def("evaluate", [](const Potential& p, double r) {
    const auto v = evaluate(p, r);
    return py::make_tuple(v.F, v.f, v.fprime);
  }, py::arg("potential"), py::arg("r"), "Returns (F, f, f') at r.");

  py::class_<LatentHeat>(m, "LatentHeat")
      .def(py::init([](double a, double b, double c) { return LatentHeat{a, b, c}; }),
           py::arg("a") = 0.0, py::arg("b") = 0.0, py::arg("c") = 0.0)
      .def_readwrite("a", &LatentHeat::a)
      .def_readwrite("b", &LatentHeat::b)
      .def_readwrite("c", &LatentHeat::c);

  m.def("latent_eval", [](const LatentHeat& l, double r) {
    const auto v = latent_eval(l, r);
    return py::make_tuple(v.lambda, v.lambda_prime, v.lambda_second);
  }, py::arg("latent"), py::arg("r"), "Returns (lambda, lambda', lambda'') at r.");

  py::class_<Grid>(m, "Grid")
      .def(py::init<double, double, int, int>(), py::arg("lx"), py::arg("ly"), py::arg("nx"),
           py::arg("ny"))
      .def_property_readonly("lx", &Grid::lx)
      .def_property_readonly("ly", &Grid::ly)
      .def_property_readonly("nx", &Grid::nx)
      .def_property_readonly("ny", &Grid::ny)
      .def_property_readonly("size", &Grid::size)
      .def("index", &Grid::index);

  m.def("masses", [](const Grid& g) {
    const auto mv = assemble_masses(g);
    return py::make_tuple(to_array(mv.bulk), to_array(mv.surf), to_array(mv.comb));
  }, "Returns (bulk, surf, comb) nodal weights.");

  m.def("apply_stiffness", [](const Grid& g, const py::array_t<double>& z) {
    const Vec v = to_vec(z);
    if (v.size() != g.size()) throw ConfigError("field size does not match the grid");
    return to_array(StiffnessOp(g).apply(v));
  }, py::arg("grid"), py::arg("z"));

  py::class_<Config>(m, "Config")
      .def_static("parse", &parse_config, py::arg("text"))
      .def_static("load", &load_config, py::arg("path"))
      .def("serialize", &serialize_config)
      .def("__eq__", [](const Config& a, const Config& b) { return a == b; })
      .def_property("t_end", [](const Config& c) { return c.time.t_end; },
                    [](Config& c, double v) { c.time.t_end = v; })
      .def_property("dt", [](const Config& c) { return c.time.dt; },
                    [](Config& c, double v) { c.time.dt = v; });

  py::class_<Model>(m, "Model")
      .def(py::init(&make_model), py::arg("config"))
      .def_readonly("grid", &Model::grid);

  py::class_<State>(m, "State")
      .def(py::init([](double t, const py::array_t<double>& theta, const py::array_t<double>& chi) {
             return make_state(t, to_vec(theta), to_vec(chi));
           }),
           py::arg("t"), py::arg("theta"), py::arg("chi"))
      .def_readonly("t", &State::t)
      .def_property_readonly("u", [](const State& s) { return to_array(s.u); })
      .def_property_readonly("chi", [](const State& s) { return to_array(s.chi); })
      .def_property_readonly("theta", [](const State& s) { return to_array(s.theta()); });

  m.def("initial_state", &make_initial_state, py::arg("config"), py::arg("model"));
  m.def("mass_mu", py::overload_cast<const State&, const Model&>(&mass_mu));
  m.def("energy", py::overload_cast<const State&, const Model&>(&energy));
  m.def("entropy", py::overload_cast<const State&, const Model&>(&entropy));

  m.def("validate_config", [](const Config& c) {
    const auto r = validate_config(c);
    py::dict d;
    d["ok"] = r.ok;
    d["failures"] = r.failures;
    d["mu0"] = r.mu0;
    d["report"] = format_report(r);
    return d;
  }, py::arg("config"));

  m.def("simulate", [](const Config& c) {
    const Model md = make_model(c);
    const auto traj = integrate(md, make_stepper_config(c), make_source(c, md),
                                make_initial_state(c, md), c.time.t_end);
    return py::make_tuple(rows_to_dict(traj.rows), traj.final_state);
  }, py::arg("config"), "Integrates in memory; returns (diagnostics columns, final state).");

  m.def("run_simulation", [](const Config& c, const std::filesystem::path& out) {
    return run_simulation(c, out).snapshots_written;
  }, py::arg("config"), py::arg("out_dir"), "Writes diagnostics and snapshots; returns the snapshot count.");

  m.def("solve_stationary", [](const Config& c, std::optional<double> mu) {
    StationaryOptions opt;
    opt.mu = mu;
    const auto r = run_stationary(c, opt);
    py::dict d;
    d["mu_target"] = r.mu_target;
    d["theta_inf"] = r.theta_inf;
    d["u_inf"] = r.u_inf;
    d["chi_inf"] = to_array(r.chi_inf);
    d["phase_residual"] = r.phase_residual;
    d["mass_gap"] = r.mass_gap;
    d["separation"] = r.separation;
    return d;
  }, py::arg("config"), py::arg("mu") = py::none());

  m.def("integrate_homogeneous", [](double theta0, double chi0, const Model& md, double tau_ref,
                                    double t_end, int n) {
    const auto s = integrate_homogeneous(theta0, chi0, md, tau_ref, t_end, n);
    Vec t, th, ch;
    for (const auto& x : s) {
      t.push_back(x.t);
      th.push_back(x.theta);
      ch.push_back(x.chi);
    }
    return py::make_tuple(to_array(t), to_array(th), to_array(ch));
  }, py::arg("theta0"), py::arg("chi0"), py::arg("model"), py::arg("tau_ref"), py::arg("t_end"),
        py::arg("n_samples") = 1000, "Returns (t, theta, chi) arrays.");

  m.def("snapshot_csv", [](const py::array_t<double>& f, const Grid& g) {
    return snapshot_csv(to_vec(f), g);
  }, py::arg("field"), py::arg("grid"));
}
