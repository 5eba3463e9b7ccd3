#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include "breaklab/flow.hpp"
#include "breaklab/parallel.hpp"
#include "breaklab/report.hpp"
#include "breaklab/spectral.hpp"
#include "breaklab/transport.hpp"

namespace py = pybind11;
using namespace breaklab;
using potential::PiecewiseAffinePotential;
using scenario::Json;

namespace {

// Inputs arrive as plain sequences: the Eigen caster cannot fill a
// bounded-size Vec.
using Coords = std::vector<double>;
using Points = std::vector<Coords>;

Vec vec(const Coords& c) {
  if (c.empty() || c.size() > 3) throw DimensionError("expected a point with 1 to 3 coordinates");
  return Eigen::Map<const Eigen::VectorXd>(c.data(), static_cast<Eigen::Index>(c.size()));
}

std::vector<Vec> vecs(const Points& pts) {
  std::vector<Vec> out;
  for (const auto& p : pts) out.push_back(vec(p));
  return out;
}

geometry::Domain hull_domain(const Points& pts) {
  if (pts.empty()) throw DimensionError("domain needs at least two points");
  return geometry::Domain(geometry::ConvexPolytope::hull(static_cast<int>(pts[0].size()), vecs(pts)));
}

py::tuple outcome_tuple(const report::Outcome& o) {
  py::dict tables;
  for (const auto& t : o.tables) tables[py::str(t.name)] = report::to_csv(t);
  return py::make_tuple(report::dump(o.report), tables);
}

template <class Command>
py::tuple execute(const std::string& text, std::optional<std::uint64_t> seed, Command command) {
  const auto s = scenario::parse(Json::parse(text));
  const auto used = report::resolve_seed(seed, s);
  report::Outcome o;
  {
    py::gil_scoped_release release;
    o = command(s, used);
  }
  return outcome_tuple(o);
}

PiecewiseAffinePotential potential_from(const std::string& text) {
  auto s = scenario::parse(Json::parse(text));
  if (s.kind != scenario::Kind::potential) throw scenario::SchemaError("/kind", "expected a potential scenario");
  return *s.potential;
}

py::dict jump_dict(const potential::InterfaceJump& j) {
  py::dict d;
  d["face"] = j.face;
  d["cell_a"] = j.cell_a;
  d["cell_b"] = j.cell_b;
  d["normal"] = j.normal;
  d["lambda"] = j.lambda;
  d["face_mass"] = j.face_mass;
  return d;
}

spectral::SymMatrix small_matrix(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols() || a.rows() < 1 || a.rows() > 4) throw DimensionError("expected a square matrix of size 1 to 4");
  return a;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Piecewise affine potentials, monotone flows and polar factorization checks";
  m.attr("__version__") = BREAKLAB_VERSION;

  auto base = py::register_exception<Error>(m, "BreaklabError", PyExc_RuntimeError);
  py::register_exception<scenario::SchemaError>(m, "SchemaError", PyExc_ValueError);
  py::register_exception<ConvergenceError>(m, "ConvergenceError", base.ptr());
  static py::handle schema_error = m.attr("SchemaError");
  // nlohmann parse errors surface as schema errors at the document root.
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const nlohmann::json::exception& e) {
      PyErr_SetString(schema_error.ptr(), (std::string("/: malformed JSON: ") + e.what()).c_str());
    }
  });

  m.def(
      "validate", [](const std::string& text) { return scenario::kind_name(scenario::parse(Json::parse(text)).kind); },
      py::arg("scenario"), "Validate a scenario document; returns its kind.");
  m.def(
      "run",
      [](const std::string& text, std::optional<std::uint64_t> seed) { return execute(text, seed, report::run); },
      py::arg("scenario"), py::arg("seed") = py::none(), "Run every applicable check; returns (report, tables).");
  m.def(
      "solve_sdot_scenario",
      [](const std::string& text, std::optional<std::uint64_t> seed) { return execute(text, seed, report::solve_sdot); },
      py::arg("scenario"), py::arg("seed") = py::none());
  m.def(
      "polar", [](const std::string& text, std::optional<std::uint64_t> seed) { return execute(text, seed, report::polar); },
      py::arg("scenario"), py::arg("seed") = py::none());
  m.def(
      "set_threads", [](unsigned n) { thread_limit() = n; }, py::arg("n"), "Worker thread cap; 0 means all cores.");

  py::class_<PiecewiseAffinePotential>(m, "Potential")
      .def(py::init(&potential_from), py::arg("scenario"), "Build from a potential scenario document.")
      .def_property_readonly("dimension", &PiecewiseAffinePotential::dimension)
      .def("__len__", [](const PiecewiseAffinePotential& p) { return p.partition().size(); })
      .def_property_readonly("gradients", &PiecewiseAffinePotential::gradients)
      .def_property_readonly("offsets", &PiecewiseAffinePotential::offsets)
      .def(
          "value", [](const PiecewiseAffinePotential& p, const Coords& x) { return p.value(vec(x)); }, py::arg("x"))
      .def(
          "gradient", [](const PiecewiseAffinePotential& p, const Coords& x) { return p.gradient(vec(x)); }, py::arg("x"))
      .def("is_locally_convex", [](const PiecewiseAffinePotential& p) { return potential::is_locally_convex(p).convex; })
      .def("hessian_jumps",
           [](const PiecewiseAffinePotential& p) {
             py::list out;
             for (const auto& j : potential::interface_jumps(p)) out.append(jump_dict(j));
             return out;
           })
      .def("overlap_volume", &flow::overlap_volume, py::arg("t"))
      .def(
          "mpc_verdict",
          [](const PiecewiseAffinePotential& p, std::optional<std::vector<double>> times, std::uint64_t seed) {
            const auto v = flow::mpc_verdict(p, times ? *times : flow::default_time_grid(seed));
            py::dict d;
            d["preserving"] = v.preserving;
            d["witness_t"] = v.witness_t;
            d["witness_overlap"] = v.witness_overlap;
            d["tolerance"] = v.tolerance;
            d["times"] = v.times;
            d["overlaps"] = v.overlaps;
            return d;
          },
          py::arg("times") = py::none(), py::arg("seed") = 0)
      .def(
          "multiplicity",
          [](const PiecewiseAffinePotential& p, double t, const Points& y) { return flow::multiplicity_count(p, t, vecs(y)).counts; },
          py::arg("t"), py::arg("points"))
      .def(
          "weak_laplacian_pairing",
          [](const PiecewiseAffinePotential& p, const Coords& center, double radius) {
            return potential::weak_laplacian_pairing(p, {vec(center), radius}).value;
          },
          py::arg("center"), py::arg("radius"))
      .def(
          "gpsi",
          [](const PiecewiseAffinePotential& p, const Coords& center, double radius, const std::vector<double>& times,
             std::uint64_t seed) {
            std::vector<std::pair<double, double>> out;
            for (const auto& s : flow::gpsi_curve(p, {vec(center), radius}, times, seed).samples) out.emplace_back(s.t, s.value);
            return out;
          },
          py::arg("center"), py::arg("radius"), py::arg("times"), py::arg("seed") = 0)
      .def(
          "to_scenario",
          [](const PiecewiseAffinePotential& p, const std::string& name) {
            return report::dump(scenario::potential_scenario(name, p.partition().domain(), p, std::nullopt));
          },
          py::arg("name") = "potential");

  m.def(
      "solve_sdot",
      [](const Points& domain, const Points& sites, std::optional<std::vector<double>> masses, double tol,
         int max_iterations) {
        const auto dom = hull_domain(domain);
        transport::DiscreteTarget target{vecs(sites), masses ? *masses : std::vector<double>(
                                                                      sites.size(), dom.volume() / sites.size())};
        transport::LaguerreDiagram d;
        {
          py::gil_scoped_release release;
          d = transport::solve_sdot(dom, target, tol, {max_iterations});
        }
        py::dict out;
        out["weights"] = d.weights;
        out["volumes"] = d.volumes;
        out["residuals"] = d.residuals;
        out["residual_history"] = d.residual_history;
        out["iterations"] = d.iterations;
        out["potential"] = py::cast(transport::brenier_potential(d));
        return out;
      },
      py::arg("domain"), py::arg("sites"), py::arg("masses") = py::none(), py::arg("tol") = 1e-8,
      py::arg("max_iterations") = 50, "Semidiscrete transport onto sites from the convex hull of `domain`.");

  m.def(
      "eigenvalues", [](const Eigen::MatrixXd& a) { return spectral::eigenvalues(small_matrix(a)); }, py::arg("m"));
  m.def(
      "unit_det_sweep",
      [](const Eigen::MatrixXd& a, const std::vector<double>& times, double tol) {
        const auto s = spectral::unit_det_sweep(small_matrix(a), times, tol);
        py::dict d;
        d["rigid_zero"] = s.rigid_zero;
        d["violating_t"] = s.violating_t;
        d["violating_det"] = s.violating_det;
        d["epsilon"] = s.epsilon;
        d["deviations"] = s.deviations;
        return d;
      },
      py::arg("m"), py::arg("times"), py::arg("tol") = 1e-9);
  m.def(
      "amgm_slack", [](const Eigen::MatrixXd& a, double t) { return spectral::amgm_trace_bound(small_matrix(a), t).slack; },
      py::arg("m"), py::arg("t"));
}
