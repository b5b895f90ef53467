#include "enksgd/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

namespace enksgd {

using nlohmann::json;

std::string_view to_string(Method m) {
  switch (m) {
    case Method::EnKSGD:
      return "enksgd";
    case Method::EnKF:
      return "enkf";
    case Method::CfdGd:
      return "cfd-gd";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  if (name == "enksgd") return Method::EnKSGD;
  if (name == "enkf") return Method::EnKF;
  if (name == "cfd-gd") return Method::CfdGd;
  throw UsageError("unknown method '" + std::string(name) + "' (expected enksgd, enkf or cfd-gd)");
}

ProblemParams ExperimentConfig::problem_params() const {
  ProblemParams p;
  p.seed = data_seed.value_or(master_seed);
  p.noise_sigma = noise_sigma;
  p.dimension = dimension;
  return p;
}

void ExperimentConfig::validate() const {
  if (problem.empty()) throw UsageError("no problem given");
  if (runs < 1) throw UsageError("runs must be >= 1");
  if (workers < 0) throw UsageError("workers must be >= 0");
  if (!(noise_sigma >= 0.0)) throw UsageError("noise sigma must be >= 0");
  optimizer.validate();
}

std::uint64_t derive_run_seed(std::uint64_t master, std::size_t run_index) {
  // splitmix64 finalizer over (master, index)
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(run_index) + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

SummaryStats summarize(const std::vector<double>& values) {
  if (values.empty()) throw UsageError("summarize: no values");
  SummaryStats s;
  s.count = values.size();
  const double n = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / n;

  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t mid = sorted.size() / 2;
  s.median = sorted.size() % 2 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);

  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.variance = ss / (n - 1.0);
  }
  return s;
}

RunResult run_method(const ProblemSpec& problem, const Vector& x0, Method method, const OptimizerConfig& config) {
  OptimizerConfig c = config;
  switch (method) {
    case Method::EnKSGD:
      c.variant = UpdateVariant::EnKSGD;
      return enksgd_minimize(problem, x0, c);
    case Method::EnKF:
      c.variant = UpdateVariant::EnKF;
      return enksgd_minimize(problem, x0, c);
    case Method::CfdGd:
      return cfd_gd_minimize(problem, x0, c);
  }
  throw UsageError("unknown method");
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  const ProblemSpec problem = ProblemRegistry::global().make(config.problem, config.problem_params());
  return run_experiment(config, problem);
}

ExperimentResult run_experiment(const ExperimentConfig& config, const ProblemSpec& problem) {
  config.validate();
  problem.validate();
  const Vector x0 = config.x0.value_or(problem.x0);
  require_same(x0.size(), problem.n_x, "starting point length");

  const auto n_runs = static_cast<std::size_t>(config.runs);
  ExperimentResult out;
  out.runs.resize(n_runs);
  out.seeds.resize(n_runs);
  for (std::size_t i = 0; i < n_runs; ++i) out.seeds[i] = derive_run_seed(config.master_seed, i);

  std::vector<std::exception_ptr> errors(n_runs);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n_runs; i = next++) {
      try {
        OptimizerConfig c = config.optimizer;
        c.seed = out.seeds[i];
        out.runs[i] = run_method(problem, x0, config.method, c);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };

  std::size_t n_workers = config.workers > 0 ? static_cast<std::size_t>(config.workers)
                                             : std::max(1u, std::thread::hardware_concurrency());
  n_workers = std::min(n_workers, n_runs);
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (std::size_t i = 0; i < n_runs; ++i) {
    if (!errors[i]) continue;
    std::string what = "unknown error";
    try {
      std::rethrow_exception(errors[i]);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    throw Error("run " + std::to_string(i) + " (seed " + std::to_string(out.seeds[i]) + ") failed: " + what);
  }

  std::vector<double> logs;
  double evals = 0.0;
  for (const auto& r : out.runs) {
    logs.push_back(std::log10(r.terminal_phi));
    evals += static_cast<double>(r.total_evals);
  }
  out.stats = summarize(logs);
  out.stats.mean_total_evals = evals / static_cast<double>(n_runs);
  return out;
}

std::string format_real(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  std::string s(buf, res.ptr);
  if (std::isfinite(x) && s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

namespace {

json optimizer_json(const OptimizerConfig& c) {
  json j;
  j["particles"] = c.particles;
  j["beta"] = c.beta;
  j["delta"] = c.delta;
  j["mu_ls"] = c.mu_ls;
  j["c_ls"] = c.c_ls;
  j["tau_ls"] = c.tau_ls;
  j["l_max"] = c.l_max;
  j["gamma_lb"] = c.gamma_lb;
  j["gamma_ub"] = c.gamma_ub;
  j["max_iters"] = c.n_max;
  j["sigma0"] = c.sigma_0;
  j["stencil"] = c.cfd_stencil;
  j["budget"] = c.budget ? json(*c.budget) : json(nullptr);
  return j;
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["problem"] = c.problem;
  j["data_seed"] = c.problem_params().seed;
  j["noise_sigma"] = c.noise_sigma;
  j["dim"] = c.dimension ? json(*c.dimension) : json(nullptr);
  if (c.x0) j["x0"] = std::vector<double>(c.x0->data(), c.x0->data() + c.x0->size());
  j["method"] = std::string(to_string(c.method));
  j["optimizer"] = optimizer_json(c.optimizer);
  j["runs"] = c.runs;
  j["seed"] = c.master_seed;
  return j;
}

json stats_json(const SummaryStats& s) {
  return {{"mean_log10_phi", s.mean},
          {"median_log10_phi", s.median},
          {"variance_log10_phi", s.variance},
          {"variance_convention", std::string(kVarianceConvention)},
          {"mean_total_evals", s.mean_total_evals},
          {"count", s.count}};
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  return f;
}

void close_out(std::ofstream& f, const std::string& path) {
  f.flush();
  if (!f) throw IoError("write failed for '" + path + "'");
}

}  // namespace

std::string config_json(const ExperimentConfig& config) { return to_json(config).dump(2); }

void emit_trace(const ExperimentResult& result, const ExperimentConfig& config, TraceFormat format,
                const std::string& path) {
  std::ofstream f = open_out(path);
  if (format == TraceFormat::Csv) {
    f << kTraceHeader << '\n';
    for (std::size_t r = 0; r < result.runs.size(); ++r) {
      for (const auto& rec : result.runs[r].trace) {
        f << r << ',' << rec.n << ',' << format_real(rec.phi_mean) << ',' << format_real(std::log10(rec.phi_mean))
          << ',' << format_real(rec.dt) << ',' << rec.backtracks << ',' << rec.cumulative_evals << '\n';
      }
    }
  } else {
    json runs = json::array();
    for (std::size_t r = 0; r < result.runs.size(); ++r) {
      json records = json::array();
      for (const auto& rec : result.runs[r].trace) {
        records.push_back({{"run", r},
                           {"iter", rec.n},
                           {"phi_mean", rec.phi_mean},
                           {"log10_phi", std::log10(rec.phi_mean)},
                           {"dt", rec.dt},
                           {"backtracks", rec.backtracks},
                           {"cum_evals", rec.cumulative_evals}});
      }
      json run = {{"run", r}, {"records", std::move(records)}, {"total_evals", result.runs[r].total_evals}};
      if (r < result.seeds.size()) run["seed"] = result.seeds[r];
      runs.push_back(std::move(run));
    }
    json j = {{"config", to_json(config)}, {"runs", std::move(runs)}};
    f << j.dump(1) << '\n';
  }
  close_out(f, path);
}

void emit_summary(const ExperimentResult& result, const ExperimentConfig& config, const std::string& path) {
  std::ofstream f = open_out(path);
  json j = {{"config", to_json(config)}, {"summary", stats_json(result.stats)}, {"seeds", result.seeds}};
  f << j.dump(2) << '\n';
  close_out(f, path);
}

namespace {

std::string join_names(const std::vector<std::string>& names) {
  std::string s;
  for (const auto& n : names) s += (s.empty() ? "" : ", ") + n;
  return s;
}

}  // namespace

std::string usage_text() {
  std::ostringstream os;
  os << "usage: enksgd --problem <name> [--method <enksgd|enkf|cfd-gd>] [options]\n"
     << "  problems: " << join_names(ProblemRegistry::global().names()) << "\n"
     << "  methods:  enksgd, enkf, cfd-gd\n"
     << "run with --help for the full option list\n";
  return os.str();
}

ExperimentConfig parse_cli(int argc, const char* const* argv) {
  if (argc <= 1) throw UsageError(usage_text());

  ExperimentConfig cfg;
  OptimizerConfig& opt = cfg.optimizer;
  CLI::App app{"Ensemble Kalman minimization experiments", "enksgd"};
  app.set_config("--config", "", "flat key=value file; keys are long flag names without dashes");

  std::string method = "enksgd";
  std::string format = "csv";
  std::optional<std::uint64_t> budget;
  std::optional<std::uint64_t> data_seed;
  std::optional<Index> dim;
  std::string out, summary, dump;

  app.add_option("--problem", cfg.problem, "registered problem name");
  app.add_option("--method", method, "enksgd, enkf or cfd-gd");
  app.add_option("--particles", opt.particles, "ensemble size K");
  app.add_option("--beta", opt.beta, "perturbation scale");
  app.add_option("--delta", opt.delta, "covariance scale");
  app.add_option("--runs", cfg.runs, "independent repetitions");
  app.add_option("--seed", cfg.master_seed, "master seed");
  app.add_option("--data-seed", data_seed, "dataset seed for simulated problems (default: --seed)");
  app.add_option("--budget", budget, "forward-evaluation cap per run");
  app.add_option("--max-iters", opt.n_max, "iteration cap per run");
  app.add_option("--noise-sigma", cfg.noise_sigma, "std of additive noise on forward outputs");
  app.add_option("--dim", dim, "problem dimension (problems that accept one)");
  app.add_option("--sigma0", opt.sigma_0, "initial deviation scale");
  app.add_option("--mu-ls", opt.mu_ls, "initial line-search step");
  app.add_option("--c-ls", opt.c_ls, "sufficient decrease constant");
  app.add_option("--tau-ls", opt.tau_ls, "backtracking factor");
  app.add_option("--l-max", opt.l_max, "maximum line-search trials");
  app.add_option("--gamma-lb", opt.gamma_lb, "lower deviation norm bound");
  app.add_option("--gamma-ub", opt.gamma_ub, "upper deviation norm bound");
  app.add_option("--stencil", opt.cfd_stencil, "central-difference step for cfd-gd");
  app.add_option("--workers", cfg.workers, "parallel runs (0 = all cores)");
  app.add_option("--out", out, "trace output path");
  app.add_option("--format", format, "trace format: csv or json");
  app.add_option("--summary", summary, "JSON summary output path");
  app.add_option("--dump-data", dump, "write the problem's dataset as CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    throw HelpRequested(app.help());
  } catch (const CLI::ParseError& e) {
    throw UsageError(std::string(e.what()) + "\n" + usage_text());
  }

  if (cfg.problem.empty()) throw UsageError("missing --problem\n" + usage_text());
  if (!ProblemRegistry::global().contains(cfg.problem)) {
    throw UsageError("unknown problem '" + cfg.problem + "'\n" + usage_text());
  }
  cfg.method = parse_method(method);
  if (format == "csv") {
    cfg.output.format = TraceFormat::Csv;
  } else if (format == "json") {
    cfg.output.format = TraceFormat::Json;
  } else {
    throw UsageError("unknown format '" + format + "' (expected csv or json)");
  }
  opt.budget = budget;
  cfg.data_seed = data_seed;
  cfg.dimension = dim;
  if (!out.empty()) cfg.output.trace_path = out;
  if (!summary.empty()) cfg.output.summary_path = summary;
  if (!dump.empty()) cfg.output.dataset_path = dump;
  cfg.validate();
  // constructing the problem is the only way to see its fixed size
  if (cfg.dimension) ProblemRegistry::global().make(cfg.problem, cfg.problem_params());
  return cfg;
}

}  // namespace enksgd
