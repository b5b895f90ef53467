#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "enksgd/harness.hpp"
#include "enksgd/meanfield.hpp"
#include "enksgd/stein.hpp"

namespace py = pybind11;
using namespace enksgd;

namespace {

UpdateVariant variant_from(const std::string& s) {
  if (s == "enksgd") return UpdateVariant::EnKSGD;
  if (s == "enkf") return UpdateVariant::EnKF;
  throw UsageError("variant must be 'enksgd' or 'enkf'");
}

// Least-squares problem around a Python forward map.
ProblemSpec callback_problem(std::function<Vector(const Vector&)> forward, Index n_x, const Vector& y_obs,
                             const Vector& x0, double noise_sigma, const std::string& name) {
  ProblemSpec p;
  p.name = name;
  p.n_x = n_x;
  p.n_y = y_obs.size();
  p.forward = [forward = std::move(forward)](const Vector& x) -> Vector {
    py::gil_scoped_acquire gil;
    return forward(x);
  };
  p.loss_value = [y_obs](const Vector& y) { return 0.5 * (y - y_obs).squaredNorm(); };
  p.loss_grad = [y_obs](const Vector& y) -> Vector { return y - y_obs; };
  p.loss_hess = [n = y_obs.size()](const Vector&) -> Matrix { return Matrix::Identity(n, n); };
  p.noise.sigma = noise_sigma;
  p.x0 = x0.size() ? x0 : Vector::Zero(n_x);
  p.validate();
  return p;
}

py::dict trace_dict(const RunResult& r) {
  const auto n = static_cast<Index>(r.trace.size());
  Vector phi(n), dt(n);
  std::vector<int> iter(n), backtracks(n);
  std::vector<std::uint64_t> evals(n);
  for (Index i = 0; i < n; ++i) {
    const auto& rec = r.trace[static_cast<std::size_t>(i)];
    iter[i] = static_cast<int>(rec.n);
    phi[i] = rec.phi_mean;
    dt[i] = rec.dt;
    backtracks[i] = rec.backtracks;
    evals[i] = rec.cumulative_evals;
  }
  py::dict d;
  d["iter"] = iter;
  d["phi_mean"] = phi;
  d["dt"] = dt;
  d["backtracks"] = backtracks;
  d["cum_evals"] = evals;
  return d;
}

}  // namespace

PYBIND11_MODULE(_enksgd, m) {
  m.doc() = "Derivative-free ensemble Kalman minimization";

  auto& base = py::register_exception<Error>(m, "EnksgdError", PyExc_RuntimeError);
  py::register_exception<UsageError>(m, "UsageError", base.ptr());
  py::register_exception<UnknownProblem>(m, "UnknownProblem", base.ptr());
  py::register_exception<NonFiniteError>(m, "NonFiniteError", base.ptr());
  py::register_exception<DimensionMismatch>(m, "DimensionMismatch", base.ptr());
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<NonPositiveTransform>(m, "NonPositiveTransform", base.ptr());
  py::register_exception<InvalidEnsembleSize>(m, "InvalidEnsembleSize", base.ptr());
  py::register_exception<UnsupportedProblem>(m, "UnsupportedProblem", base.ptr());

  py::class_<ProblemSpec>(m, "Problem")
      .def_readonly("name", &ProblemSpec::name)
      .def_readonly("n_x", &ProblemSpec::n_x)
      .def_readonly("n_y", &ProblemSpec::n_y)
      .def_readonly("x0", &ProblemSpec::x0)
      .def_property_readonly("noise_sigma", [](const ProblemSpec& p) { return p.noise.sigma; })
      .def("objective", &ProblemSpec::objective, py::arg("x"))
      .def("forward", [](const ProblemSpec& p, const Vector& x) { return p.forward(x); }, py::arg("x"))
      .def("dataset", [](const ProblemSpec& p) {
        py::dict d;
        for (const auto& [name, mat] : p.data) d[py::str(name)] = mat;
        return d;
      })
      .def("__repr__", [](const ProblemSpec& p) {
        return "<Problem " + p.name + " n_x=" + std::to_string(p.n_x) + " n_y=" + std::to_string(p.n_y) + ">";
      });

  m.def("problem_names", [] { return ProblemRegistry::global().names(); });
  m.def(
      "make_problem",
      [](const std::string& name, std::uint64_t seed, double noise_sigma, std::optional<Index> dim) {
        return ProblemRegistry::global().make(name, ProblemParams{seed, noise_sigma, dim});
      },
      py::arg("name"), py::arg("seed") = 0, py::arg("noise_sigma") = 0.0, py::arg("dim") = py::none());
  m.def("least_squares_problem", &callback_problem, py::arg("forward"), py::arg("n_x"), py::arg("y_obs"),
        py::arg("x0") = Vector(), py::arg("noise_sigma") = 0.0, py::arg("name") = "python");

  py::class_<OptimizerConfig>(m, "OptimizerConfig")
      .def(py::init<>())
      .def_readwrite("particles", &OptimizerConfig::particles)
      .def_readwrite("beta", &OptimizerConfig::beta)
      .def_readwrite("delta", &OptimizerConfig::delta)
      .def_readwrite("mu_ls", &OptimizerConfig::mu_ls)
      .def_readwrite("c_ls", &OptimizerConfig::c_ls)
      .def_readwrite("tau_ls", &OptimizerConfig::tau_ls)
      .def_readwrite("l_max", &OptimizerConfig::l_max)
      .def_readwrite("gamma_lb", &OptimizerConfig::gamma_lb)
      .def_readwrite("gamma_ub", &OptimizerConfig::gamma_ub)
      .def_readwrite("max_iters", &OptimizerConfig::n_max)
      .def_readwrite("sigma0", &OptimizerConfig::sigma_0)
      .def_readwrite("budget", &OptimizerConfig::budget)
      .def_readwrite("seed", &OptimizerConfig::seed)
      .def_readwrite("stencil", &OptimizerConfig::cfd_stencil)
      .def_property(
          "variant", [](const OptimizerConfig& c) { return std::string(to_string(c.variant)); },
          [](OptimizerConfig& c, const std::string& s) { c.variant = variant_from(s); })
      .def("validate", &OptimizerConfig::validate);

  py::class_<RunResult>(m, "RunResult")
      .def_readonly("terminal_mean", &RunResult::terminal_mean)
      .def_readonly("terminal_phi", &RunResult::terminal_phi)
      .def_readonly("total_evals", &RunResult::total_evals)
      .def_property_readonly("trace", &trace_dict);

  m.def(
      "minimize",
      [](const ProblemSpec& problem, std::optional<Vector> x0, const OptimizerConfig& config,
         const std::string& method) {
        const Vector start = x0.value_or(problem.x0);
        return run_method(problem, start, parse_method(method), config);
      },
      py::arg("problem"), py::arg("x0") = py::none(), py::arg("config") = OptimizerConfig(),
      py::arg("method") = "enksgd");

  m.def(
      "run_experiment",
      [](const std::string& problem, const std::string& method, const OptimizerConfig& config, int runs,
         std::uint64_t seed, double noise_sigma, std::optional<std::uint64_t> data_seed, int workers) {
        ExperimentConfig cfg;
        cfg.problem = problem;
        cfg.method = parse_method(method);
        cfg.optimizer = config;
        cfg.runs = runs;
        cfg.master_seed = seed;
        cfg.noise_sigma = noise_sigma;
        cfg.data_seed = data_seed;
        cfg.workers = workers;
        ExperimentResult r;
        {
          py::gil_scoped_release nogil;
          r = run_experiment(cfg);
        }
        py::dict stats;
        stats["mean"] = r.stats.mean;
        stats["median"] = r.stats.median;
        stats["variance"] = r.stats.variance;
        stats["variance_convention"] = std::string(kVarianceConvention);
        stats["mean_total_evals"] = r.stats.mean_total_evals;
        stats["count"] = r.stats.count;
        py::dict out;
        out["stats"] = stats;
        out["runs"] = r.runs;
        out["seeds"] = r.seeds;
        return out;
      },
      py::arg("problem"), py::arg("method") = "enksgd", py::arg("config") = OptimizerConfig(), py::arg("runs") = 1,
      py::arg("seed") = 0, py::arg("noise_sigma") = 0.0, py::arg("data_seed") = py::none(), py::arg("workers") = 0);

  m.def(
      "summarize",
      [](const std::vector<double>& v) {
        const SummaryStats s = summarize(v);
        return py::make_tuple(s.mean, s.median, s.variance);
      },
      py::arg("values"), "(mean, median, sample variance)");
  m.def("derive_run_seed", &derive_run_seed, py::arg("master"), py::arg("run_index"));

  m.def("projection_matrix", &projection_matrix, py::arg("k"));
  m.def("ensemble_mean", [](const Matrix& x) { return ensemble_mean(Ensemble(x)); }, py::arg("states"));
  m.def("ensemble_deviations", [](const Matrix& x) { return ensemble_deviations(Ensemble(x)).values(); },
        py::arg("states"));
  m.def("empirical_covariance", [](const Matrix& x) { return empirical_covariance(Ensemble(x)); },
        py::arg("states"));
  m.def("recombine", [](const Matrix& dev, const Vector& mean) { return recombine(DeviationMatrix(dev), mean).states(); },
        py::arg("deviations"), py::arg("mean"));
  m.def(
      "transform_matrix",
      [](const Matrix& h, double dt, double delta) {
        const TransformPair tp = transform_matrix(h, dt, delta, h.rows());
        return py::make_tuple(tp.t, tp.t_sqrt);
      },
      py::arg("h_proj"), py::arg("dt"), py::arg("delta"));
  m.def("clip_deviations",
        [](const Matrix& dev, double lb, double ub) { return clip_deviations(DeviationMatrix(dev), lb, ub, dev.rows()).values(); },
        py::arg("deviations"), py::arg("gamma_lb"), py::arg("gamma_ub"));
  m.def(
      "project_derivatives",
      [](const ProblemSpec& problem, const Matrix& states) {
        const Ensemble ens(states);
        const Vector mean = ensemble_mean(ens);
        Rng rng(0);
        ForwardEvaluator eval(problem, rng);
        const EvaluatedEnsemble ev = evaluate_ensemble(ens, mean, problem, eval);
        const ProjectedDerivatives pd = project_derivatives(ens, ev, problem);
        return py::make_tuple(pd.q, pd.h_proj);
      },
      py::arg("problem"), py::arg("states"), "(q, h_proj) at the ensemble mean");

  m.def("covariance_ode_rhs", &meanfield::covariance_ode_rhs, py::arg("p"), py::arg("b"), py::arg("delta"),
        py::arg("beta") = 0.0);
  m.def("closed_form_covariance", &meanfield::closed_form_covariance, py::arg("t"), py::arg("p0"), py::arg("b"),
        py::arg("delta"));
  m.def("stationary_eigen_relation", &meanfield::stationary_eigen_relation, py::arg("lam"), py::arg("delta"),
        py::arg("beta"));
}
