#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "splinemart/convergence.hpp"
#include "splinemart/error.hpp"
#include "splinemart/experiment.hpp"

namespace py = pybind11;
using namespace splinemart;
using nlohmann::json;

namespace {

SplineSpace space_of(const std::vector<double>& knots, int order) { return SplineSpace(Grid(knots, order)); }

json parse(const std::string& text) { return json::parse(text); }

py::dict decay_dict(const DecayFit& fit) {
  py::dict d;
  d["q_hat"] = fit.q_hat;
  d["C_hat"] = fit.C_hat;
  d["offset_max"] = fit.offset_max;
  d["kept"] = fit.kept;
  return d;
}

}  // namespace

PYBIND11_MODULE(_splinemart, m) {
  m.doc() = "Spline spaces, orthogonal projections and spline martingales on [0,1]";

  // Later registrations are tried first, so the subclass goes second.
  py::register_exception<Error>(m, "SplinemartError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  m.def("realize", [](const std::string& program, int order, std::size_t n) {
    return realize(make_program(parse(program), order), n).knot_vector();
  }, py::arg("program"), py::arg("order"), py::arg("n"));

  m.def("mesh_width", [](const std::vector<double>& knots) { return mesh_width(knots); });

  m.def("eval_basis", [](const std::vector<double>& knots, int order, double t) {
    const auto b = eval_basis(space_of(knots, order), t);
    return py::make_tuple(b.first, std::vector<double>(b.values.begin(), b.values.begin() + static_cast<std::ptrdiff_t>(b.count)));
  }, py::arg("knots"), py::arg("order"), py::arg("t"));

  m.def("basis_value", [](const std::vector<double>& knots, int order, std::size_t i, double t) {
    return basis_value(space_of(knots, order), i, t);
  });

  m.def("evaluate", [](const std::vector<double>& knots, int order, const Eigen::MatrixXd& coeffs,
                       const std::vector<double>& ts) {
    const Spline s(space_of(knots, order), coeffs);
    Eigen::MatrixXd out(static_cast<Eigen::Index>(ts.size()), coeffs.cols());
    for (std::size_t p = 0; p < ts.size(); ++p) out.row(static_cast<Eigen::Index>(p)) = s(ts[p]).transpose();
    return out;
  }, py::arg("knots"), py::arg("order"), py::arg("coeffs"), py::arg("ts"));

  m.def("insert_knot", [](const std::vector<double>& knots, int order, const Eigen::MatrixXd& coeffs, double x) {
    const auto r = insert_knot(Spline(space_of(knots, order), coeffs), x);
    return py::make_tuple(r.space().knot_vector(), r.coefficients());
  });

  m.def("gram_matrix", [](const std::vector<double>& knots, int order) {
    return gram_matrix(space_of(knots, order)).to_dense();
  });

  m.def("dual_coefficients", [](const std::vector<double>& knots, int order) {
    return dual_coefficients(space_of(knots, order));
  });

  m.def("fit_decay", [](const std::vector<double>& knots, int order) {
    return decay_dict(fit_decay(space_of(knots, order)));
  });

  m.def("project_function", [](const std::vector<double>& knots, int order, const std::string& function,
                               std::size_t quad_depth) {
    return project_function(space_of(knots, order), make_function(parse(function)), quad_depth).coefficients();
  }, py::arg("knots"), py::arg("order"), py::arg("function"), py::arg("quad_depth") = kDefaultQuadDepth);

  m.def("project_measure", [](const std::vector<double>& knots, int order, const std::string& measure,
                              std::size_t quad_depth) {
    return project_measure(space_of(knots, order), make_measure(parse(measure)), quad_depth).coefficients();
  }, py::arg("knots"), py::arg("order"), py::arg("measure"), py::arg("quad_depth") = kDefaultQuadDepth);

  m.def("martingale_defect", [](const std::string& program, int order, const std::string& function,
                                const std::vector<std::size_t>& schedule) {
    return make_martingale(make_program(parse(program), order), make_function(parse(function)), schedule).max_defect();
  });

  m.def("run_experiment", [](const std::string& config_text) {
    const auto result = run_experiment(parse_config(config_text));
    return py::make_tuple(result.pass, result.summary.dump());
  }, py::arg("config_text"));

  m.def("registry", []() { return registry_json().dump(); });
}
