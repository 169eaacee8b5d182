#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>
#include <limits>

#include "herdlv/basin.hpp"
#include "herdlv/dynamics.hpp"
#include "herdlv/integrator.hpp"
#include "herdlv/model.hpp"
#include "herdlv/version.hpp"

namespace py = pybind11;
using namespace herdlv;

namespace {

py::tuple point(const State& s) { return py::make_tuple(s.x, s.y); }

py::dict terminal_dict(const Terminal& t) {
  py::dict d;
  if (const auto* e = std::get_if<ExtinctionAt>(&t)) {
    d["kind"] = "extinction";
    d["t_ext"] = e->t_ext;
    d["t_lo"] = e->t_lo;
    d["t_hi"] = e->t_hi;
    d["slope"] = e->slope;
  } else if (const auto* c = std::get_if<ConvergedTo>(&t)) {
    d["kind"] = "converged";
    d["target"] = to_string(c->target.kind);
    d["point"] = point(c->target.point);
    d["t_conv"] = c->t_conv;
  } else {
    d["kind"] = "horizon";
    d["t_end"] = std::get<HorizonReached>(t).t_end;
  }
  return d;
}

py::dict verdict_dict(const BasinVerdict& v) {
  py::dict d;
  d["outcome"] = outcome_name(v);
  if (const auto* e = std::get_if<FiniteTimeExtinction>(&v)) d["t_ext"] = e->t_ext;
  if (const auto* u = std::get_if<Undetermined>(&v)) d["reason"] = to_string(u->reason);
  return d;
}

py::dict check_dict(const BoundCheck& c) {
  py::dict d;
  d["applicable"] = c.applicable;
  d["passed"] = c.passed;
  d["worst_slack"] = c.worst_slack;
  d["worst_t"] = c.worst_t;
  return d;
}

py::dict samples_dict(const std::vector<Sample>& samples) {
  py::array_t<double> t(samples.size()), x(samples.size()), y(samples.size());
  auto tv = t.mutable_unchecked<1>();
  auto xv = x.mutable_unchecked<1>();
  auto yv = y.mutable_unchecked<1>();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto k = static_cast<py::ssize_t>(i);
    tv(k) = samples[i].t;
    xv(k) = samples[i].state.x;
    yv(k) = samples[i].state.y;
  }
  py::dict d;
  d["t"] = t;
  d["x"] = x;
  d["y"] = y;
  return d;
}

IntegratorConfig config_or_default(const std::optional<IntegratorConfig>& cfg) {
  return cfg.value_or(IntegratorConfig{});
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Native core of the herdlv package";
  m.attr("__version__") = kVersion;

  auto param_error = py::register_exception<ParameterError>(m, "ParameterError", PyExc_ValueError);
  py::register_exception<RegimeError>(m, "RegimeError", param_error.ptr());
  py::register_exception<IntegrationFailure>(m, "IntegrationFailure", PyExc_RuntimeError);

  py::class_<ModelParams>(m, "Params")
      .def(py::init(&validate_params), py::arg("r"), py::arg("alpha"), py::arg("beta"))
      .def_property_readonly("r", &ModelParams::r)
      .def_property_readonly("alpha", &ModelParams::alpha)
      .def_property_readonly("beta", &ModelParams::beta)
      .def("__eq__", [](const ModelParams& a, const ModelParams& b) { return a == b; })
      .def("__repr__", [](const ModelParams& p) {
        return py::str("Params(r={!r}, alpha={!r}, beta={!r})").format(p.r(), p.alpha(), p.beta());
      });

  py::class_<IntegratorConfig>(m, "IntegratorConfig")
      .def(py::init([](py::kwargs kw) {
        IntegratorConfig c;
        py::object obj = py::cast(&c, py::return_value_policy::reference);
        for (const auto& [key, value] : kw) {
          const auto name = key.cast<std::string>();
          if (!py::hasattr(obj, name.c_str())) throw py::type_error("unknown config field: " + name);
          obj.attr(name.c_str()) = value;
        }
        c.validate();
        return c;
      }))
      .def_readwrite("rtol", &IntegratorConfig::rtol)
      .def_readwrite("atol", &IntegratorConfig::atol)
      .def_readwrite("h_init", &IntegratorConfig::h_init)
      .def_readwrite("h_min", &IntegratorConfig::h_min)
      .def_readwrite("h_max", &IntegratorConfig::h_max)
      .def_readwrite("t_max", &IntegratorConfig::t_max)
      .def_readwrite("event_tol", &IntegratorConfig::event_tol)
      .def_readwrite("conv_tol", &IntegratorConfig::conv_tol)
      .def_readwrite("conv_window", &IntegratorConfig::conv_window)
      .def_readwrite("continue_after_extinction", &IntegratorConfig::continue_after_extinction)
      .def("validate", &IntegratorConfig::validate);

  py::class_<Trajectory>(m, "Trajectory")
      .def_property_readonly("params", &Trajectory::params)
      .def_property_readonly("initial", [](const Trajectory& t) { return point(t.initial()); })
      .def_property_readonly("samples", [](const Trajectory& t) { return samples_dict(t.samples()); })
      .def_property_readonly("terminal", [](const Trajectory& t) { return terminal_dict(t.terminal()); })
      .def_property_readonly("t_final", &Trajectory::t_final)
      .def_property_readonly("t_ext",
                             [](const Trajectory& t) -> std::optional<double> {
                               if (const auto e = t.extinction()) return e->t_ext;
                               return std::nullopt;
                             })
      .def_property_readonly("stats",
                             [](const Trajectory& t) {
                               py::dict d;
                               d["accepted_steps"] = t.stats().accepted_steps;
                               d["rejected_steps"] = t.stats().rejected_steps;
                               d["rhs_evaluations"] = t.stats().rhs_evaluations;
                               d["event_iterations"] = t.stats().event_iterations;
                               return d;
                             })
      .def("at", [](const Trajectory& t, double time) { return point(t.at(time)); }, py::arg("t"))
      .def("resample", [](const Trajectory& t, std::size_t n) { return samples_dict(t.resample(n)); },
           py::arg("n"));

  m.def("interior_point",
        [](const ModelParams& p) -> std::optional<py::tuple> {
          if (const auto s = interior_point(p)) return point(*s);
          return std::nullopt;
        },
        py::arg("params"));
  m.def("equilibria",
        [](const ModelParams& p) {
          py::list out;
          for (const auto& e : equilibria(p)) {
            py::dict d;
            d["kind"] = to_string(e.kind);
            d["point"] = point(e.point);
            d["stability"] = to_string(e.stability);
            out.append(d);
          }
          return out;
        },
        py::arg("params"));
  m.def("jacobian", [](const ModelParams& p, double x, double y) { return jacobian(p, {x, y}); },
        py::arg("params"), py::arg("x"), py::arg("y"));
  m.def("eigenvalues", &eigenvalues, py::arg("matrix"));
  m.def("classify_interior",
        [](const ModelParams& p) {
          const auto c = classify_interior(p);
          py::dict d;
          d["ratio"] = c.ratio;
          d["criterion"] = to_string(c.criterion);
          d["eigen"] = to_string(c.eigen);
          d["eigenvalues"] = c.eigenvalues;
          d["agree"] = c.agree();
          return d;
        },
        py::arg("params"));
  m.def("k_threshold", &k_threshold, py::arg("params"), py::arg("x"));
  m.def("extinction_bound",
        [](const ModelParams& p, double x0, double y0) {
          const auto b = extinction_bound(p, {x0, y0});
          py::dict d;
          d["k_value"] = b.k_value;
          d["sufficient"] = b.sufficient;
          d["t_upper"] = b.t_upper;
          return d;
        },
        py::arg("params"), py::arg("x0"), py::arg("y0"));
  m.def("envelope", [](const ModelParams& p, double x0, double y0, double t) { return envelope(p, {x0, y0}, t); },
        py::arg("params"), py::arg("x0"), py::arg("y0"), py::arg("t"));
  m.def("rhs_raw", [](const ModelParams& p, double x, double y) { return rhs_raw(p, {x, y}); }, py::arg("params"),
        py::arg("x"), py::arg("y"));
  m.def("rhs_regularized", [](const ModelParams& p, double u, double y) { return rhs_regularized(p, {u, y}); },
        py::arg("params"), py::arg("u"), py::arg("y"));

  m.def("integrate",
        [](const ModelParams& p, double x0, double y0, const std::optional<IntegratorConfig>& cfg) {
          py::gil_scoped_release release;
          return integrate(p, {x0, y0}, config_or_default(cfg));
        },
        py::arg("params"), py::arg("x0"), py::arg("y0"), py::arg("config") = py::none());
  m.def("integrate_raw_reference",
        [](const ModelParams& p, double x0, double y0, double dt, double t_end, std::size_t stride) {
          py::gil_scoped_release release;
          return integrate_raw_reference(p, {x0, y0}, dt, t_end, stride);
        },
        py::arg("params"), py::arg("x0"), py::arg("y0"), py::arg("dt"), py::arg("t_end"),
        py::arg("record_stride") = 1);

  m.def("classify_ic",
        [](const ModelParams& p, double x0, double y0, const std::optional<IntegratorConfig>& cfg) {
          BasinVerdict v;
          {
            py::gil_scoped_release release;
            v = classify_ic(p, {x0, y0}, config_or_default(cfg));
          }
          return verdict_dict(v);
        },
        py::arg("params"), py::arg("x0"), py::arg("y0"), py::arg("config") = py::none());

  m.def("separatrix_scan",
        [](const ModelParams& p, const std::vector<double>& xs, double y_lo_init, std::optional<double> y_max,
           double bracket_tol, unsigned workers, const std::optional<IntegratorConfig>& cfg) {
          SeparatrixOptions opts;
          opts.y_lo_init = y_lo_init;
          opts.y_max = y_max;
          opts.bracket_tol = bracket_tol;
          opts.workers = workers;
          std::vector<SeparatrixResult> results;
          {
            py::gil_scoped_release release;
            results = separatrix_scan(p, xs, opts, config_or_default(cfg));
          }
          py::list out;
          for (const auto& r : results) {
            py::dict d;
            d["x"] = r.x;
            d["y_crit"] = r.point ? py::cast(r.point->y_crit) : py::none();
            d["y_lo"] = r.point ? py::cast(r.point->y_lo) : py::none();
            d["y_hi"] = r.point ? py::cast(r.point->y_hi) : py::none();
            d["failure"] = r.failure ? py::cast(to_string(*r.failure)) : py::none();
            d["lower_outcome"] = r.lower_outcome;
            d["upper_outcome"] = r.upper_outcome;
            out.append(d);
          }
          return out;
        },
        py::arg("params"), py::arg("x_values"), py::arg("y_lo_init") = 1e-3, py::arg("y_max") = py::none(),
        py::arg("bracket_tol") = 1e-4, py::arg("workers") = 0u, py::arg("config") = py::none());

  m.def("grid_sweep",
        [](const ModelParams& p, std::array<double, 4> region, std::size_t nx, std::size_t ny, unsigned workers,
           const std::optional<IntegratorConfig>& cfg) {
          const Region reg{region[0], region[1], region[2], region[3]};
          std::optional<BasinGrid> grid;
          {
            py::gil_scoped_release release;
            grid.emplace(grid_sweep(p, reg, nx, ny, config_or_default(cfg), workers));
          }
          py::array_t<double> x0(nx), y0(ny);
          py::array_t<double> t_ext({nx, ny});
          auto xv = x0.mutable_unchecked<1>();
          auto yv = y0.mutable_unchecked<1>();
          auto tv = t_ext.mutable_unchecked<2>();
          py::list outcome;
          for (std::size_t i = 0; i < nx; ++i) {
            py::list row;
            for (std::size_t j = 0; j < ny; ++j) {
              const State s = grid->initial_condition(i, j);
              xv(static_cast<py::ssize_t>(i)) = s.x;
              yv(static_cast<py::ssize_t>(j)) = s.y;
              const auto& v = grid->cell(i, j);
              row.append(outcome_name(v));
              const auto* e = std::get_if<FiniteTimeExtinction>(&v);
              tv(static_cast<py::ssize_t>(i), static_cast<py::ssize_t>(j)) =
                  e ? e->t_ext : std::numeric_limits<double>::quiet_NaN();
            }
            outcome.append(row);
          }
          py::dict d;
          d["x0"] = x0;
          d["y0"] = y0;
          d["outcome"] = outcome;
          d["t_ext"] = t_ext;
          return d;
        },
        py::arg("params"), py::arg("region"), py::arg("nx"), py::arg("ny"), py::arg("workers") = 0u,
        py::arg("config") = py::none(), "region is (x_min, x_max, y_min, y_max); outcome[i][j] is cell (x_i, y_j)");

  m.def("verify_theorem_bounds",
        [](const ModelParams& p, const Trajectory& traj, double slack) {
          const auto v = verify_theorem_bounds(p, traj, slack);
          py::dict d;
          d["predator_lower"] = check_dict(v.predator_lower);
          d["prey_upper"] = check_dict(v.prey_upper);
          d["envelope"] = check_dict(v.envelope);
          d["extinction"] = check_dict(v.extinction);
          d["all_passed"] = v.all_passed();
          return d;
        },
        py::arg("params"), py::arg("trajectory"), py::arg("slack") = kBoundSlack);
}
