// JSON documents cross the boundary as strings; the Python package decodes them.

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "texplore/harness.hpp"

namespace py = pybind11;
using namespace texplore;

namespace {

RunConfig config_from(const std::string& config_json, const std::string& preset) {
  return load_config(nlohmann::json::parse(config_json), preset);
}

std::string design_json(const std::string& config_json, const std::string& preset) {
  const RunConfig cfg = config_from(config_json, preset);
  return design_to_json(design_exploration(cfg.spec, cfg.prior, cfg.sys.sigma_w), cfg.spec).dump();
}

std::string validate_json(const std::string& config_json, const std::string& design, int replicas,
                          const std::string& preset) {
  const RunConfig cfg = config_from(config_json, preset);
  return validation_to_json(validate_design(cfg, nlohmann::json::parse(design), replicas)).dump();
}

std::vector<py::dict> sweep_rows(const std::string& config_json, const std::vector<std::int64_t>& Ts, double ddes_per_T,
                                 const std::string& preset) {
  std::vector<py::dict> out;
  for (const SweepRow& r : run_sweep(config_from(config_json, preset), Ts, ddes_per_T)) {
    py::dict d;
    d["T"] = r.T;
    d["Ddes_norm"] = r.Ddes_norm;
    d["gamma_e_sq"] = r.gamma_e_sq;
    d["T_gamma_e_sq"] = r.T_gamma_e_sq;
    d["iters"] = r.iters;
    d["status"] = r.status;
    out.push_back(d);
  }
  return out;
}

Matrix simulate_np(const Matrix& A, const Matrix& B, const Matrix& U, const Matrix& W) {
  return simulate(SystemModel(A, B, 0.0), U, W).X;
}

Vector rls_np(const Matrix& X, const Matrix& U, double lambda) {
  Trajectory tr;
  tr.X = X;
  tr.U = U;
  tr.W = Matrix::Zero(U.rows(), X.cols());
  return rls_estimate(tr, lambda).theta_hat.theta();
}

}  // namespace

PYBIND11_MODULE(_texplore, m) {
  m.doc() = "Targeted exploration input design";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<InfeasibleError>(m, "InfeasibleError", PyExc_RuntimeError);
  py::register_exception<ResourceError>(m, "ResourceError", PyExc_RuntimeError);

  m.def("paper_example_config", [] { return paper_example_json().dump(); });
  m.def("design", &design_json, py::arg("config_json"), py::arg("preset") = "",
        py::call_guard<py::gil_scoped_release>());
  m.def("validate", &validate_json, py::arg("config_json"), py::arg("design_json"), py::arg("replicas"),
        py::arg("preset") = "", py::call_guard<py::gil_scoped_release>());
  m.def("sweep", &sweep_rows, py::arg("config_json"), py::arg("T_list"), py::arg("ddes_per_T"), py::arg("preset") = "");
  m.def(
      "constants",
      [](const std::string& config_json, const std::string& preset) {
        return constants_audit(config_from(config_json, preset)).dump();
      },
      py::arg("config_json"), py::arg("preset") = "");

  m.def("simulate", &simulate_np, py::arg("A"), py::arg("B"), py::arg("U"), py::arg("W"),
        "States x_0..x_T from x_0 = 0 as a (T+1) x nx array.");
  m.def("rls_estimate", &rls_np, py::arg("X"), py::arg("U"), py::arg("lambda_"),
        "Ridge estimate of vec([A, B]) from states x_0..x_T and inputs u_0..u_{T-1}.");
  m.def("spectral_amplitude", &spectral_amplitude, py::arg("seq"), py::arg("omega"));
  m.def(
      "synth_multisine",
      [](std::int64_t T, const std::vector<double>& freqs, const Matrix& amplitudes) {
        return synth_multisine(InputSpectrum(FrequencyGrid(T, freqs), amplitudes));
      },
      py::arg("T"), py::arg("frequencies"), py::arg("amplitudes"));
  m.def("hermitian_embed", &hermitian_embed, py::arg("H"));
}
