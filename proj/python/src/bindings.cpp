// Python bindings. Reports that already have a JSON form cross the boundary as
// dicts (parsed on the Python side); plain structs are exposed as classes.

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "json.hpp"
#include "rbc/boussinesq.hpp"
#include "rbc/certify.hpp"
#include "rbc/diagnostics.hpp"
#include "rbc/errors.hpp"
#include "rbc/harness.hpp"
#include "rbc/interp_norm.hpp"
#include "rbc/kernels.hpp"
#include "rbc/stokes.hpp"

namespace py = pybind11;
using namespace rbc;

namespace {

py::object json_to_py(const std::string& text) { return py::module_::import("json").attr("loads")(text); }

py::dict nusselt_dict(const NusseltReport& r) {
  py::dict d;
  d["nu_plane_profile"] = r.nu_plane_profile;
  d["nu_plane_mean"] = r.nu_plane_mean;
  d["nu_volume"] = r.nu_volume;
  d["nu_dissipation"] = r.nu_dissipation;
  d["spread"] = r.spread;
  d["plane_flatness"] = r.plane_flatness;
  return d;
}

py::dict row_dict(const harness::SweepRow& r) {
  py::dict d;
  d["index"] = r.index;
  d["Ra"] = r.Ra;
  d["Pr"] = r.Pr;
  d["L"] = r.L;
  d["Nx"] = r.Nx;
  d["Nz"] = r.Nz;
  d["dt"] = r.dt;
  d["t_avg"] = r.t_avg;
  d["nu_plane_mean"] = r.nu_plane_mean;
  d["nu_volume"] = r.nu_volume;
  d["nu_dissipation"] = r.nu_dissipation;
  d["spread"] = r.spread;
  d["energy_residual"] = r.energy_residual;
  d["min_T"] = r.min_T;
  d["max_T"] = r.max_T;
  d["hardy_max"] = r.hardy_max;
  d["wall_clock"] = r.wall_clock;
  d["status"] = r.status;
  d["error"] = r.error;
  return d;
}

harness::SweepResult rows_from(const std::vector<std::tuple<double, double, double>>& ra_pr_nu) {
  harness::SweepResult r;
  int i = 0;
  for (const auto& [ra, pr, nu] : ra_pr_nu) {
    harness::SweepRow row;
    row.index = i++;
    row.Ra = ra;
    row.Pr = pr;
    row.nu_volume = nu;
    r.rows.push_back(row);
  }
  return r;
}

py::dict fit_dict(const harness::ScalingFit& f) {
  py::dict d;
  d["Pr"] = f.Pr;
  d["points"] = f.points;
  d["decades"] = f.decades;
  d["exponent"] = f.exponent;
  d["prefactor"] = f.prefactor;
  d["stderr_exponent"] = f.stderr_exponent;
  d["ci95"] = f.ci95;
  d["r2"] = f.r2;
  d["exponent_bound_form"] = f.exponent_bound_form;
  d["prefactor_bound_form"] = f.prefactor_bound_form;
  return d;
}

// A (Nx, Nz) array of nodal values on make_grid(L, Nx, Nz, H).
ModalField modal_from_array(const Eigen::MatrixXd& values, double L, double H) {
  GridPtr g = make_grid(L, static_cast<int>(values.rows()), static_cast<int>(values.cols()), H);
  return forward_transform(PhysicalField(g, values));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Rayleigh-Benard DNS, diagnostics and Stokes maximal-regularity certification";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<ParameterError>(m, "ParameterError", base.ptr());
  py::register_exception<StepSizeError>(m, "StepSizeError", base.ptr());
  py::register_exception<DivergenceError>(m, "DivergenceError", base.ptr());
  py::register_exception<InputError>(m, "InputError", base.ptr());
  py::register_exception<FitError>(m, "FitError", base.ptr());
  py::register_exception<DomainError>(m, "DomainError", base.ptr());

  py::class_<SimParams>(m, "SimParams")
      .def(py::init<>())
      .def(py::init([](double Ra, double Pr) {
             SimParams p;
             p.Ra = Ra;
             p.Pr = Pr;
             return p;
           }),
           py::arg("Ra"), py::arg("Pr") = 1.0)
      .def_readwrite("Ra", &SimParams::Ra)
      .def_readwrite("Pr", &SimParams::Pr)
      .def_readwrite("L", &SimParams::L)
      .def_readwrite("Nx", &SimParams::Nx)
      .def_readwrite("Nz", &SimParams::Nz)
      .def_readwrite("dt", &SimParams::dt)
      .def_readwrite("t_end", &SimParams::t_end)
      .def_readwrite("transient_fraction", &SimParams::transient_fraction)
      .def_readwrite("cfl_target", &SimParams::cfl_target)
      .def_readwrite("cfl_limit", &SimParams::cfl_limit)
      .def("validate", &SimParams::validate)
      .def("with_defaults", [](const SimParams& p) { return with_defaults(p); })
      .def("__repr__", [](const SimParams& p) {
        return "SimParams(Ra=" + std::to_string(p.Ra) + ", Pr=" + std::to_string(p.Pr) + ")";
      });

  m.def(
      "simulate",
      [](const SimParams& p, std::uint64_t seed, double amplitude, int hardy_every) {
        RunOptions o;
        o.seed = seed;
        o.amplitude = amplitude;
        o.hardy_every = hardy_every;
        Trajectory tr;
        {
          py::gil_scoped_release release;
          tr = run(p, o);
        }
        py::dict d = nusselt_dict(nusselt_report(tr.averages));
        d["z"] = tr.averages.z;
        d["energy_residual"] = energy_balance_residual(tr.averages, tr.params);
        d["min_T"] = tr.min_T;
        d["max_T"] = tr.max_T;
        d["steps"] = tr.steps;
        d["dt_last"] = tr.dt_last;
        d["times"] = tr.times;
        d["nu_series"] = tr.nu_series;
        d["hardy_series"] = tr.hardy_series;
        d["Nx"] = tr.params.Nx;
        d["Nz"] = tr.params.Nz;
        return d;
      },
      py::arg("params"), py::arg("seed") = 1, py::arg("amplitude") = 0.01, py::arg("hardy_every") = 0,
      "Run one DNS point; returns the Nusselt report and run statistics.");

  m.def(
      "conduction_nusselt",
      [](const SimParams& p) { return nusselt_dict(nusselt_report(instantaneous_averages(conduction_state(p)))); },
      py::arg("params"));

  m.def(
      "linear_growth_rate", [](const SimParams& p, double k, int Nz) { return linear_growth_rate(p, k, Nz); },
      py::arg("params"), py::arg("k"), py::arg("Nz") = 33);
  m.def(
      "critical_rayleigh",
      [](double lo, double hi, double Pr, int Nz) {
        const CriticalPoint c = find_critical_rayleigh(lo, hi, Pr, Nz);
        return py::make_tuple(c.Ra_c, c.k_c);
      },
      py::arg("ra_lo") = 1500.0, py::arg("ra_hi") = 2000.0, py::arg("Pr") = 1.0, py::arg("Nz") = 33,
      "(Ra_c, k_c) of the linear onset about conduction.");

  py::enum_<WeightKind>(m, "WeightKind")
      .value("strip", WeightKind::strip)
      .value("upper", WeightKind::upper)
      .value("lower", WeightKind::lower);
  m.def(
      "interpolation_norm",
      [](const Eigen::VectorXd& z, const Eigen::VectorXd& g, WeightKind w) {
        return json_to_py(to_json(weighted_interpolation_norm(z, g, w)));
      },
      py::arg("z"), py::arg("g"), py::arg("weight") = WeightKind::strip);
  m.def("interpolation_functional", &interpolation_functional, py::arg("z"), py::arg("g"), py::arg("weight"),
        py::arg("lam"));

  m.def("delta_choice", &delta_choice, py::arg("Ra"), py::arg("Pr"), py::arg("Nu"));
  m.def("bound_shape", &bound_shape, py::arg("Ra"), py::arg("Pr"));
  m.def(
      "classify_branch", [](double Ra, double Pr) { return to_string(classify_branch(Ra, Pr)); }, py::arg("Ra"),
      py::arg("Pr"));
  m.def(
      "bound_check",
      [](const std::vector<std::tuple<double, double, double>>& pts) {
        std::vector<BoundPoint> p;
        for (const auto& [ra, pr, nu] : pts) p.push_back({ra, pr, nu});
        const BoundCheckReport r = bound_check(p);
        py::dict d;
        d["C"] = r.C;
        d["binding_index"] = r.binding_index;
        d["C_per_point"] = r.C_per_point;
        std::vector<std::string> b;
        for (auto x : r.branches) b.push_back(to_string(x));
        d["branches"] = b;
        return d;
      },
      py::arg("points"), "points: list of (Ra, Pr, Nu)");

  m.def("gamma1", &kernels::gamma1, py::arg("z"), py::arg("t"), py::arg("dz") = 0);
  m.def(
      "heat_kernel_estimates",
      [](const std::vector<double>& t, const std::vector<double>& z, int d) {
        kernels::KernelEstimateReport r;
        {
          py::gil_scoped_release release;
          r = kernels::heat_kernel_estimates(t, z, d);
        }
        return json_to_py(kernels::to_json(r));
      },
      py::arg("t_samples"), py::arg("z_samples") = std::vector<double>{0.1, 1.0, 10.0}, py::arg("d") = 3);
  m.def(
      "kernel_bound_check",
      [](const std::function<double(double)>& K, double scale) {
        const kernels::BoundCheck b = kernels::kernel_bound_check(K, scale);
        py::dict d;
        d["lhs"] = b.lhs;
        d["rhs"] = b.rhs;
        d["ratio"] = b.ratio;
        d["argmax"] = b.argmax;
        return d;
      },
      py::arg("K"), py::arg("scale"));
  m.def(
      "bandedness",
      [](const Eigen::MatrixXd& values, double R, const std::string& item, double L, double H) {
        static const std::map<std::string, kernels::BandItem> items{{"band1", kernels::BandItem::band1},
                                                                    {"band2", kernels::BandItem::band2},
                                                                    {"P", kernels::BandItem::P},
                                                                    {"Q", kernels::BandItem::Q},
                                                                    {"R", kernels::BandItem::R}};
        auto it = items.find(item);
        if (it == items.end()) throw ParameterError("unknown bandedness item " + item);
        const auto r = kernels::bandedness_inequality(modal_from_array(values, L, H), R, it->second);
        py::dict d;
        d["lhs_norm"] = r.lhs_norm;
        d["rhs_norm"] = r.rhs_norm;
        d["ratio"] = r.ratio;
        d["pointwise_ratio"] = r.pointwise_ratio;
        return d;
      },
      py::arg("values"), py::arg("R"), py::arg("item"), py::arg("L") = 2.0, py::arg("H") = 1.0,
      "values: (Nx, Nz) nodal samples on the Chebyshev grid of [0, H].");

  m.def("band_modes", &stokes::band_modes, py::arg("R"), py::arg("L") = 2.0);
  m.def(
      "stokes_strip_ratio",
      [](std::uint64_t seed, const std::vector<int>& modes, double R, int Nz, int Nt, double dt) {
        stokes::TimeGrid t;
        t.Nt = Nt;
        t.dt = dt;
        const stokes::StripProblem p = stokes::random_strip_problem(seed, R, Nz, t, modes);
        stokes::MaxRegReport r;
        {
          py::gil_scoped_release release;
          r = stokes::maxreg_report(stokes::stokes_strip(p), p.modes, R, stokes::Domain::strip);
        }
        return json_to_py(stokes::to_json(r));
      },
      py::arg("seed"), py::arg("modes"), py::arg("R") = 1.0 / 16.0, py::arg("Nz") = 49, py::arg("Nt") = 200,
      py::arg("dt") = 0.02, "Maximal-regularity report for one random strip forcing.");

  m.def(
      "certify_stokes",
      [](const std::string& config_text, std::uint64_t seed) {
        const harness::RunSpec s = harness::parse_config(config_text);
        certify::StokesCertReport r;
        {
          py::gil_scoped_release release;
          r = certify::certify_stokes(s.stokes, seed);
        }
        return json_to_py(certify::to_json(r));
      },
      py::arg("config_text") = "", py::arg("seed") = 1,
      "Runs the Stokes certification with the [stokes] section of an INI text.");
  m.def(
      "certify_kernels",
      [](const std::string& config_text) {
        const harness::RunSpec s = harness::parse_config(config_text);
        certify::KernelCertReport r;
        {
          py::gil_scoped_release release;
          r = certify::certify_kernels(s.kernels);
        }
        return json_to_py(certify::to_json(r));
      },
      py::arg("config_text") = "");

  m.def(
      "normalize_config", [](const std::string& text) {
        harness::RunSpec s = harness::parse_config(text);
        harness::validate(s);
        return harness::serialize_config(s);
      },
      py::arg("text"), "Parse, validate and re-serialize an INI configuration.");
  m.def(
      "run_sweep",
      [](const std::string& config_text, const std::string& out) {
        harness::RunSpec s = harness::parse_config(config_text);
        s.out = out;
        s.mode = s.ra.empty() ? harness::Mode::simulate : harness::Mode::sweep;
        harness::validate(s);
        harness::SweepResult r;
        {
          py::gil_scoped_release release;
          r = harness::run_sweep(s);
        }
        py::list rows;
        for (const auto& row : r.rows) rows.append(row_dict(row));
        return rows;
      },
      py::arg("config_text"), py::arg("out") = "",
      "Runs the sweep described by an INI text; an empty out keeps results in memory.");
  m.def(
      "read_results",
      [](const std::string& path) {
        py::list rows;
        for (const auto& row : harness::read_csv(path).rows) rows.append(row_dict(row));
        return rows;
      },
      py::arg("path"));
  m.def(
      "fit_scaling",
      [](const std::vector<std::tuple<double, double, double>>& pts, double min_decades) {
        return fit_dict(harness::fit_scaling(rows_from(pts), min_decades));
      },
      py::arg("points"), py::arg("min_decades") = 1.5, "points: list of (Ra, Pr, Nu) sharing one Pr");
  m.def(
      "dimensional_to_nondimensional",
      [](double nu, double g, double alpha, double chi, double h, double T_bottom, double T_top) {
        const harness::Nondimensional n = harness::dimensional_to_nondimensional({nu, g, alpha, chi, h, T_bottom, T_top});
        return py::make_tuple(n.Ra, n.Pr);
      },
      py::arg("nu"), py::arg("g"), py::arg("alpha"), py::arg("chi"), py::arg("h"), py::arg("T_bottom"),
      py::arg("T_top"), "(Ra, Pr) from dimensional parameters in SI units.");
}
