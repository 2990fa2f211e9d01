#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "cli/run.h"
#include "dirinfo/capacity.h"
#include "dirinfo/errors.h"
#include "dirinfo/model_io.h"
#include "dirinfo/simulate.h"
#include "dirinfo/version.h"

namespace py = pybind11;
using namespace dirinfo;

namespace {

ChannelModel BuildModel(const MatrixXd& C, const MatrixXd& D, const MatrixXd& KV,
                        const MatrixXd& R, const std::optional<MatrixXd>& Q,
                        double kappa) {
  const MatrixXd q = Q ? *Q : MatrixXd::Zero(C.rows(), C.rows());
  auto m = MakeTimeInvariantModel(C, D, KV, R, q, kappa);
  EnsureValid(m);
  return m;
}

py::dict SolutionDict(const FeedbackCapacityResult& r) {
  py::dict d;
  d["capacity_nats"] = r.capacity_nats;
  d["s_star"] = r.s_star;
  d["kappa_min"] = r.kappa_min;
  d["below_kappa_min"] = r.below_kappa_min;
  d["gain"] = r.solution.gain;
  d["KZ"] = r.solution.KZ;
  d["K"] = r.solution.KB;
  d["P"] = r.solution.P;
  d["achieved_cost"] = r.solution.achieved_cost;
  d["regime"] = std::string(ToString(r.solution.regime));
  d["notes"] = r.notes;
  return d;
}

}  // namespace

PYBIND11_MODULE(_dirinfo, m) {
  m.doc() = "Feedback capacity of Gaussian linear channels with memory";
  m.attr("__version__") = std::string(kVersion);

  auto base = py::register_exception<Error>(m, "DirinfoError");
  py::register_exception<DimensionError>(m, "DimensionError", base.ptr());
  py::register_exception<PreconditionError>(m, "PreconditionError", base.ptr());
  py::register_exception<ConvergenceError>(m, "ConvergenceError", base.ptr());
  py::register_exception<UnboundedError>(m, "UnboundedError", base.ptr());
  py::register_exception<InfeasibleError>(m, "InfeasibleError", base.ptr());

  m.def(
      "scalar_capacity",
      [](double C, double D, double KV, double kappa, double R) {
        const auto r = ScalarFeedbackCapacity(C, D, KV, kappa, R);
        py::dict d;
        d["capacity_nats"] = r.capacity_nats;
        d["gain"] = r.gain;
        d["kz"] = r.kz;
        d["kappa_min"] = r.kappa_min;
        d["s_star"] = r.s_star;
        d["regime"] = std::string(ToString(r.regime));
        return d;
      },
      py::arg("C"), py::arg("D"), py::arg("K_V"), py::arg("kappa"), py::arg("R") = 1.0,
      "Closed-form capacity of the scalar channel with Q = 0.");

  m.def(
      "feedback_capacity",
      [](const MatrixXd& C, const MatrixXd& D, const MatrixXd& KV, const MatrixXd& R,
         double kappa, const std::optional<MatrixXd>& Q) {
        return SolutionDict(FeedbackCapacity(BuildModel(C, D, KV, R, Q, kappa)));
      },
      py::arg("C"), py::arg("D"), py::arg("K_V"), py::arg("R"), py::arg("kappa"),
      py::arg("Q") = py::none(), "Infinite-horizon feedback capacity in nats.");

  m.def(
      "model_capacity",
      [](const std::string& path) {
        return SolutionDict(FeedbackCapacity(LoadModelFile(path).model));
      },
      py::arg("path"), "Feedback capacity of a JSON model file.");

  m.def(
      "nofeedback_capacity",
      [](const MatrixXd& C, const MatrixXd& D, const MatrixXd& KV, const MatrixXd& R,
         double kappa) {
        return NofeedbackCapacityQ0(BuildModel(C, D, KV, R, std::nullopt, kappa));
      },
      py::arg("C"), py::arg("D"), py::arg("K_V"), py::arg("R"), py::arg("kappa"));

  m.def(
      "simulate",
      [](const MatrixXd& C, const MatrixXd& D, const MatrixXd& KV, const MatrixXd& R,
         double kappa, int steps, int seeds, uint64_t first_seed, int threads) {
        const auto model = BuildModel(C, D, KV, R, std::nullopt, kappa);
        const auto sol = FeedbackCapacity(model).solution;
        std::vector<SimulationTrace> traces;
        {
          py::gil_scoped_release release;
          traces = SampleBatch(model, sol.AsStrategy(), steps, first_seed, seeds, threads);
        }
        std::vector<double> rates, costs;
        for (const auto& t : traces) {
          rates.push_back(t.running_rate.back());
          costs.push_back(t.running_cost.back());
        }
        py::dict d;
        d["rates"] = rates;
        d["costs"] = costs;
        d["target_nats"] = sol.rate_nats;
        return d;
      },
      py::arg("C"), py::arg("D"), py::arg("K_V"), py::arg("R"), py::arg("kappa"),
      py::arg("steps") = 100000, py::arg("seeds") = 8, py::arg("first_seed") = 1,
      py::arg("threads") = 0,
      "Monte Carlo run of the optimal stationary strategy; per-seed averages.");

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = cli::Main(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the command-line tool in-process.");
}
