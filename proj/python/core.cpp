#include "mfg/catalog.hpp"
#include "mfg/config.hpp"
#include "mfg/hypotheses.hpp"
#include "mfg/io.hpp"
#include "mfg/transport.hpp"

#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <fstream>
#include <sstream>

namespace py = pybind11;
using namespace pybind11::literals;
using namespace mfg;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Array to_array(const std::vector<double>& v, std::vector<py::ssize_t> shape) {
  Array a(shape);
  std::copy(v.begin(), v.end(), a.mutable_data());
  return a;
}

std::vector<double> to_vector(const Array& a) { return {a.data(), a.data() + a.size()}; }

// (K + 1, n^d)
Array curve_array(const MeasureCurve& c) {
  return to_array(c.data(), {static_cast<py::ssize_t>(c.times().nodes()), static_cast<py::ssize_t>(c.grid().size())});
}

// (K, n^d, control_dim)
Array control_array(const ControlField& u) {
  return to_array(u.data(), {static_cast<py::ssize_t>(u.times().steps()), static_cast<py::ssize_t>(u.grid().size()),
                             static_cast<py::ssize_t>(u.control_dim())});
}

class PyScenario {
 public:
  PyScenario(Config cfg) : cfg_(std::move(cfg)), s_(build_scenario(cfg_)) {}

  static PyScenario from_text(const std::string& text, const std::vector<std::string>& overrides) {
    std::istringstream is(text);
    Config c = Config::parse(is);
    for (const auto& o : overrides) c.apply_override(o);
    return PyScenario(std::move(c));
  }

  static PyScenario from_file(const std::string& path, const std::vector<std::string>& overrides) {
    Config c = Config::load(path);
    for (const auto& o : overrides) c.apply_override(o);
    return PyScenario(std::move(c));
  }

  const Scenario& scenario() const { return s_; }
  std::string snapshot() const { return cfg_.snapshot(); }

  Array nodes() const {
    std::vector<double> xs;
    for (std::size_t i = 0; i < s_.grid.size(); ++i) {
      const SVec x = s_.grid.node(i);
      for (int c = 0; c < x.size(); ++c) xs.push_back(x(c));
    }
    return to_array(xs, {static_cast<py::ssize_t>(s_.grid.size()), s_.grid.dim()});
  }

  Array times() const {
    std::vector<double> ts;
    for (std::size_t k = 0; k < s_.times.nodes(); ++k) ts.push_back(s_.times.time(k));
    return to_array(ts, {static_cast<py::ssize_t>(ts.size())});
  }

  Array initial() const { return to_array(s_.nu, {static_cast<py::ssize_t>(s_.nu.size())}); }

  MeasureCurve curve(const std::optional<Array>& a) const {
    if (!a) return MeasureCurve::constant(s_.grid, s_.times, s_.nu);
    if (a->size() != static_cast<py::ssize_t>(s_.times.nodes() * s_.grid.size())) {
      throw DimensionError("environment must have shape (K + 1, n^d)");
    }
    return MeasureCurve(s_.grid, s_.times, to_vector(*a));
  }

  ControlField control(const std::optional<Array>& a) const {
    const ControlSet& u = s_.coeffs.controls();
    if (!a) return ControlField::constant(s_.grid, s_.times, u.points()[u.default_index()]);
    const auto d1 = static_cast<std::size_t>(u.dim());
    if (a->size() != static_cast<py::ssize_t>(s_.times.steps() * s_.grid.size() * d1)) {
      throw DimensionError("control must have shape (K, n^d, control_dim)");
    }
    return ControlField(s_.grid, s_.times, u.dim(), to_vector(*a));
  }

  py::dict solve_fpk(const std::optional<Array>& control_in, const std::optional<Array>& env) const {
    const auto u = control(control_in);
    const auto rep = mfg::solve_fpk(s_.coeffs, curve(env), u, s_.nu, s_.fpk);
    return py::dict("solution"_a = curve_array(rep.solution), "mass_defect"_a = rep.mass_defect,
                    "v_moment"_a = rep.v_moment, "min_weight"_a = rep.min_weight, "cfl_margin"_a = rep.cfl_margin,
                    "scheme"_a = to_string(rep.scheme));
  }

  py::dict best_response(const std::optional<Array>& env) const {
    const auto br = solve_lp(s_.coeffs, curve(env), s_.nu, s_.fixed_point.best_response);
    return py::dict("relaxed_cost"_a = br.relaxed_cost, "projected_cost"_a = br.projected_cost,
                    "control"_a = control_array(br.control), "relaxed_curve"_a = curve_array(br.relaxed_curve),
                    "projected_curve"_a = curve_array(br.projected_curve), "deterministic"_a = br.deterministic,
                    "r"_a = br.r, "in_budget"_a = br.activity.in_budget);
  }

  double cost(const std::optional<Array>& control_in, const std::optional<Array>& env) const {
    const auto mu = curve(env);
    const auto u = control(control_in);
    const auto rep = mfg::solve_fpk(s_.coeffs, mu, u, s_.nu, s_.fpk);
    return evaluate_cost(s_.coeffs, mu, u, rep.solution);
  }

  py::dict equilibrium(std::size_t challengers) const {
    EquilibriumResult res = iterate(s_.coeffs, s_.grid, s_.times, s_.nu, s_.fixed_point);
    py::list history;
    for (const auto& h : res.history) {
      history.append(py::dict("iter"_a = h.iter, "kr_gap"_a = h.kr_gap, "relaxed_cost"_a = h.relaxed_cost,
                              "projected_cost"_a = h.projected_cost));
    }
    py::dict out("mu"_a = curve_array(res.mu), "player_curve"_a = curve_array(res.player_curve),
                 "control"_a = control_array(res.control), "history"_a = history, "converged"_a = res.converged,
                 "best_iter"_a = res.best_iter, "best_gap"_a = res.best_gap, "r"_a = res.r,
                 "warnings"_a = res.warnings);
    if (res.apriori) out["apriori_pass"] = res.apriori->pass;
    if (challengers > 0) out["certificate"] = certificate(res.mu, res.control, challengers);
    return out;
  }

  py::dict certify_arrays(const Array& mu, const Array& u, std::size_t challengers) const {
    return certificate(curve(mu), control(u), challengers);
  }

  py::list check_hypotheses(const std::optional<Array>& env) const {
    const auto mu = curve(env);
    py::list out;
    for (const auto& rep : check_all(s_.coeffs, mu, default_sample(s_.coeffs, mu))) {
      out.append(py::dict("hypothesis"_a = rep.hypothesis, "pass"_a = rep.pass(), "text"_a = rep.text()));
    }
    return out;
  }

  py::dict particle_check(std::size_t count, const std::optional<Array>& control_in,
                          const std::optional<Array>& env) const {
    const auto mu = curve(env);
    const auto u = control(control_in);
    const auto rep = mfg::solve_fpk(s_.coeffs, mu, u, s_.nu, s_.fpk);
    ParticleOptions po = s_.particles;
    if (count > 0) po.count = count;
    const auto ens = simulate(s_.coeffs, mu, u, s_.nu, po);
    const auto ce = cost_estimate(ens);
    return py::dict("w1_gap"_a = superposition_gap(ens, rep.solution), "mean_cost"_a = ce.mean,
                    "cost_standard_error"_a = ce.standard_error, "variance"_a = ens.variance);
  }

 private:
  py::dict certificate(const MeasureCurve& mu, const ControlField& u, std::size_t count) const {
    const auto ch = make_challengers(s_.coeffs, mu, u, count, s_.seed);
    const auto rep = certify(s_.coeffs, mu, u, ch, s_.nu, s_.certify_tolerance);
    return py::dict("candidate_cost"_a = rep.candidate_cost, "exploitability"_a = rep.exploitability,
                    "tolerance"_a = rep.tolerance, "gaps"_a = rep.gaps, "fpk_residual"_a = rep.fpk_residual,
                    "consistency_gap"_a = rep.consistency_gap, "pass"_a = rep.pass);
  }

  Config cfg_;
  Scenario s_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Discretized mean field games: FPK flows, occupation-measure best responses and equilibria";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_RuntimeError);

  py::class_<PyScenario>(m, "Scenario")
      .def_static("from_text", &PyScenario::from_text, "text"_a, "overrides"_a = std::vector<std::string>{})
      .def_static("from_file", &PyScenario::from_file, "path"_a, "overrides"_a = std::vector<std::string>{})
      .def_property_readonly("dim", [](const PyScenario& s) { return s.scenario().grid.dim(); })
      .def_property_readonly("steps", [](const PyScenario& s) { return s.scenario().times.steps(); })
      .def_property_readonly("model", [](const PyScenario& s) { return s.scenario().coeffs.name(); })
      .def_property_readonly("dependence",
                             [](const PyScenario& s) { return to_string(s.scenario().coeffs.mode()); })
      .def_property_readonly("nodes", &PyScenario::nodes)
      .def_property_readonly("times", &PyScenario::times)
      .def_property_readonly("initial", &PyScenario::initial)
      .def("snapshot", &PyScenario::snapshot)
      .def("solve_fpk", &PyScenario::solve_fpk, "control"_a = py::none(), "environment"_a = py::none(),
           "FPK flow under a (K, n^d, d') control; defaults are the constant default control and the constant "
           "initial law.")
      .def("best_response", &PyScenario::best_response, "environment"_a = py::none())
      .def("cost", &PyScenario::cost, "control"_a = py::none(), "environment"_a = py::none())
      .def("equilibrium", &PyScenario::equilibrium, "challengers"_a = 0)
      .def("certify", &PyScenario::certify_arrays, "mu"_a, "control"_a, "challengers"_a = 100)
      .def("check_hypotheses", &PyScenario::check_hypotheses, "environment"_a = py::none())
      .def("particle_check", &PyScenario::particle_check, "count"_a = 0, "control"_a = py::none(),
           "environment"_a = py::none());

  m.def(
      "legendre", [](const std::function<double(double)>& h, double p, double v_max) { return legendre(h, p, v_max); },
      "h"_a, "p"_a, "v_max"_a = 64.0, "sup over 0 <= v <= v_max of p v - h(v)");
  m.def(
      "beta_vw", [](const Array& v, const Array& w, double r) { return beta_vw(to_vector(v), to_vector(w), r); },
      "v"_a, "w"_a, "r"_a);
  m.def(
      "kr_distance",
      [](const Array& a, const Array& b, int dim, double half_width, std::size_t n) {
        return kr_distance(to_vector(a), to_vector(b), StateGrid(dim, half_width, n));
      },
      "a"_a, "b"_a, "dim"_a, "half_width"_a, "n"_a);
  m.def("catalog_names", &catalog_names);
}
