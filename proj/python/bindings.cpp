#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "sobolmat/errors.hpp"
#include "sobolmat/ground_truth.hpp"
#include "sobolmat/gsa.hpp"
#include "sobolmat/sampling.hpp"
#include "sobolmat/surrogate.hpp"
#include "sobolmat/test_functions.hpp"

namespace py = pybind11;
using namespace sobolmat;

namespace {

std::vector<AxisSet> to_subsets(const std::vector<std::vector<std::size_t>>& lists, std::size_t dims) {
  std::vector<AxisSet> out;
  for (const auto& l : lists) out.emplace_back(l, dims);
  return out;
}

MomentOptions moment_options(const std::string& method, double kernel_offset) {
  MomentOptions o;
  if (method == "quadrature") o.method = IntegrationMethod::quadrature;
  else if (method != "closed") throw DomainError("method must be 'closed' or 'quadrature'");
  o.kernel_offset = kernel_offset;
  return o;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Sobol' matrices of Gaussian-process surrogates";

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());
  py::register_exception<DivisionByZero>(m, "DivisionByZero", base.ptr());
  py::register_exception<ZeroVariance>(m, "ZeroVariance", base.ptr());
  py::register_exception<OddRowCount>(m, "OddRowCount", base.ptr());
  py::register_exception<FactorizationFailure>(m, "FactorizationFailure", base.ptr());
  py::register_exception<NegativeQ>(m, "NegativeQ", base.ptr());

  m.def("latin_hypercube", &latin_hypercube, py::arg("n"), py::arg("dims"), py::arg("seed"));
  m.def("mnu9", py::overload_cast<const Matrix&>(&testfuncs::mnu9), py::arg("inputs"),
        "Nine-output benchmark model, N x M (M >= 5) to N x 9.");
  m.def("closed_table", &testfuncs::closed_table, py::arg("count"),
        "Tabulated closed Sobol' matrix of mnu9 for the leading `count` axes.");

  m.def(
      "oracle_sobol_matrix",
      [](const std::function<Matrix(const Matrix&)>& f, std::size_t dims,
         const std::vector<std::size_t>& subset, std::size_t points, std::uint64_t seed) {
        return oracle_sobol_matrix(f, dims, AxisSet(subset, dims), points, seed);
      },
      py::arg("f"), py::arg("dims"), py::arg("subset"), py::arg("points") = 1 << 16,
      py::arg("seed") = 0, "Pick-freeze estimate of S_m for a vectorized model f.");

  py::class_<Surrogate>(m, "Surrogate")
      .def_static(
          "fit",
          [](const Matrix& inputs, const Matrix& outputs, int restarts, std::uint64_t seed,
             std::size_t max_optimization_points) {
            DesignMatrix d;
            d.inputs = inputs;
            d.outputs = outputs;
            FitOptions o;
            o.restarts = restarts;
            o.seed = seed;
            o.max_optimization_points = max_optimization_points;
            py::gil_scoped_release release;
            return Surrogate::fit(d, o);
          },
          py::arg("inputs"), py::arg("outputs"), py::arg("restarts") = 8, py::arg("seed") = 0,
          py::arg("max_optimization_points") = 512)
      .def_static("from_json", &Surrogate::from_json)
      .def("to_json", &Surrogate::to_json)
      .def_property_readonly("input_dims", &Surrogate::input_dims)
      .def_property_readonly("output_dims", &Surrogate::output_dims)
      .def("predict_mean", &Surrogate::predict_mean)
      .def("predict_variance", &Surrogate::predict_variance)
      .def("hyperparameters", [](const Surrogate& s) {
        py::list out;
        for (std::size_t l = 0; l < s.output_dims(); ++l) {
          const auto& p = s.output(l).params;
          py::dict d;
          d["lengthscales"] = Vector(p.lengthscales);
          d["signal_variance"] = p.signal_variance;
          d["noise_variance"] = p.noise_variance;
          out.append(d);
        }
        return out;
      });

  m.def(
      "sobol_reports",
      [](const Surrogate& s, const std::vector<std::vector<std::size_t>>& subsets,
         const std::string& method, double kernel_offset) {
        const auto opts = moment_options(method, kernel_offset);
        const auto sets = to_subsets(subsets, s.input_dims());
        std::vector<SobolReport> reports;
        {
          py::gil_scoped_release release;
          reports = sobol_reports(s, sets, opts);
        }
        py::list out;
        for (const auto& r : reports) {
          py::dict d;
          d["subset"] = r.subset.axes();
          d["S"] = r.S;
          d["S_total"] = r.S_total;
          d["T"] = r.T;
          d["T_total"] = r.T_total;
          d["V"] = r.V;
          d["negative_q"] = r.diagnostics.negative_q;
          out.append(d);
        }
        return out;
      },
      py::arg("surrogate"), py::arg("subsets"), py::arg("method") = "closed",
      py::arg("kernel_offset") = 0.0,
      "Closed and total Sobol' matrices with standard errors, one dict per subset.");
}
