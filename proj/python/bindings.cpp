#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "peierls/barrier.hpp"
#include "peierls/error.hpp"
#include "peierls/experiments.hpp"
#include "peierls/generating.hpp"
#include "peierls/io.hpp"
#include "peierls/minimizer.hpp"

namespace py = pybind11;
using namespace peierls;

namespace {

py::object cell_to_py(const Cell& c) {
  return std::visit([](const auto& v) -> py::object { return py::cast(v); }, c);
}

py::dict table_dict(const Table& t) {
  py::list rows;
  for (const auto& row : t.rows) {
    py::list r;
    for (const auto& c : row) r.append(cell_to_py(c));
    rows.append(r);
  }
  py::dict d;
  d["columns"] = t.columns;
  d["rows"] = rows;
  return d;
}

SymbolVariant variant_from(const std::string& s) {
  if (s == "+") return SymbolVariant::Plus;
  if (s == "-") return SymbolVariant::Minus;
  if (s.empty()) return SymbolVariant::Exact;
  throw Error(ErrorKind::InvalidArgument, "variant must be '', '+' or '-'");
}

}  // namespace

PYBIND11_MODULE(_peierls, m) {
  m.doc() = "Minimal configurations and Peierls barriers of near-integrable twist maps";

  static py::exception<Error> error(m, "PeierlsError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py::reinterpret_borrow<py::object>(error.ptr())(std::string(error_kind_name(e.kind())) + ": " + e.what());
      exc.attr("kind") = error_kind_name(e.kind());
      PyErr_SetObject(error.ptr(), exc.ptr());
    }
  });

  py::class_<PerturbationParams>(m, "Params")
      .def(py::init([](int n, double a, int k, std::optional<double> s, double delta) {
             PerturbationParams p;
             p.n = n, p.a = a, p.k = k, p.s = s, p.delta = delta;
             p.validate();
             return p;
           }),
           py::arg("n") = 16, py::arg("a") = 1.9, py::arg("k") = 2, py::arg("s") = py::none(),
           py::arg("delta") = 0.05)
      .def_readwrite("n", &PerturbationParams::n)
      .def_readwrite("a", &PerturbationParams::a)
      .def_readwrite("k", &PerturbationParams::k)
      .def_readwrite("s", &PerturbationParams::s)
      .def_readwrite("delta", &PerturbationParams::delta)
      .def_property_readonly("resolved_s", &PerturbationParams::resolved_s);

  py::class_<GeneratingFunction>(m, "GeneratingFunction")
      .def("__call__", &GeneratingFunction::operator(), py::arg("x"), py::arg("xp"))
      .def("potential", [](const GeneratingFunction& h, double x, int order) {
             return order == 0 ? h.potential()(x) : h.potential().derivative(x, order);
           }, py::arg("x"), py::arg("order") = 0)
      .def_property_readonly("name", &GeneratingFunction::name)
      .def_property_readonly("integrable", &GeneratingFunction::is_integrable)
      .def("__repr__", [](const GeneratingFunction& h) { return "<GeneratingFunction " + h.name() + ">"; });

  m.def("generating_function", &make_named, py::arg("name"), py::arg("params") = PerturbationParams{},
        py::arg("q") = 1, "Family member by name: h0, hn, hbar_n or htilde_n.");

  m.def("orbit", [](const GeneratingFunction& h, double x, double y, int steps) {
    std::vector<std::pair<double, double>> out;
    for (const PhasePoint& pt : twist_orbit(h, PhasePoint{x, y}, steps)) out.emplace_back(pt.x, pt.y);
    return out;
  }, py::arg("h"), py::arg("x"), py::arg("y"), py::arg("steps"));

  m.def("minimize_periodic", [](const GeneratingFunction& h, long p, long q) {
    const MinimizeResult r = minimize_periodic(h, p, q);
    py::dict d;
    d["values"] = r.config.values;
    d["action"] = r.report.action;
    d["residual"] = r.report.residual_inf;
    d["converged"] = r.report.converged;
    return d;
  }, py::arg("h"), py::arg("p"), py::arg("q"));

  m.def("zero_plus", [](const GeneratingFunction& h, double xi) { return peierls_zero_plus(h, xi); },
        py::arg("h"), py::arg("xi"));
  m.def("rational", [](const GeneratingFunction& h, long p, long q, const std::string& variant, double xi) {
    return peierls_rational(h, p, q, variant_from(variant), xi);
  }, py::arg("h"), py::arg("p"), py::arg("q"), py::arg("variant") = "", py::arg("xi") = 0.5);
  m.def("irrational", [](const GeneratingFunction& h, double omega, double xi, int convergents) {
    const IrrationalValue v = peierls_irrational(h, omega, xi, convergents);
    py::dict d;
    d["value"] = v.value;
    d["error_estimate"] = v.error_estimate;
    d["stable"] = v.stable;
    d["steps"] = v.steps.size();
    return d;
  }, py::arg("h"), py::arg("omega"), py::arg("xi"), py::arg("convergents") = 12);

  m.def("profile", [](const GeneratingFunction& h, const std::string& symbol, int grid) {
    const BarrierProfile prof = barrier_profile(h, RotationSymbol::parse(symbol), grid);
    return py::make_tuple(prof.grid, prof.values);
  }, py::arg("h"), py::arg("symbol"), py::arg("grid") = 64);

  m.def("run_study", [](const std::string& name, const std::string& config) {
    const RunConfig rc = parse_config(config, name);
    StudyResult s;
    {
      py::gil_scoped_release release;
      s = run_study(config_spec(rc));
    }
    py::list checks;
    for (const Check& c : s.checks) {
      py::dict d;
      d["name"] = c.name;
      d["passed"] = c.passed;
      d["value"] = c.value;
      d["bound"] = c.bound;
      checks.append(d);
    }
    py::dict fits;
    for (const NamedFit& f : s.fits) fits[py::str(f.name)] = py::make_tuple(f.fit.slope, f.fit.intercept, f.fit.r2);
    py::dict d;
    d["name"] = s.name;
    d["table"] = table_dict(s.table);
    d["checks"] = checks;
    d["fits"] = fits;
    d["passed"] = s.passed();
    return d;
  }, py::arg("name"), py::arg("config") = "", "Run a study; `config` holds key = value lines.");
}
