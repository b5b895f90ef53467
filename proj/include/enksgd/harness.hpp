#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "enksgd/optimizer.hpp"
#include "enksgd/problems.hpp"

namespace enksgd {

enum class Method { EnKSGD, EnKF, CfdGd };

std::string_view to_string(Method m);
Method parse_method(std::string_view name);

enum class TraceFormat { Csv, Json };

struct OutputOptions {
  std::optional<std::string> trace_path;
  TraceFormat format = TraceFormat::Csv;
  std::optional<std::string> summary_path;
  std::optional<std::string> dataset_path;
};

struct ExperimentConfig {
  std::string problem;
  /// Dataset seed for simulated problems; defaults to the master seed.
  std::optional<std::uint64_t> data_seed;
  double noise_sigma = 0.0;
  std::optional<Index> dimension;
  /// Overrides the problem's default starting mean.
  std::optional<Vector> x0;

  Method method = Method::EnKSGD;
  OptimizerConfig optimizer;
  int runs = 1;
  std::uint64_t master_seed = 0;
  /// 0 means one worker per hardware thread.
  int workers = 0;
  OutputOptions output;

  ProblemParams problem_params() const;
  void validate() const;
};

/// Statistics of log10 Phi(x bar_final) across runs.
struct SummaryStats {
  double mean = 0.0;
  double median = 0.0;
  /// Sample variance (divisor n - 1); 0 for a single value.
  double variance = 0.0;
  double mean_total_evals = 0.0;
  std::size_t count = 0;
};

inline constexpr std::string_view kVarianceConvention = "sample (n-1)";

struct ExperimentResult {
  std::vector<RunResult> runs;
  std::vector<std::uint64_t> seeds;
  SummaryStats stats;
};

/// Stable per-run seed; depends only on (master, run_index).
std::uint64_t derive_run_seed(std::uint64_t master, std::size_t run_index);

/// Mean, median and sample variance. Throws UsageError on empty input.
SummaryStats summarize(const std::vector<double>& values);

RunResult run_method(const ProblemSpec& problem, const Vector& x0, Method method, const OptimizerConfig& config);

/// Builds the problem from the registry and runs every repetition. A failing
/// run aborts the experiment with its index and seed in the message.
ExperimentResult run_experiment(const ExperimentConfig& config);
ExperimentResult run_experiment(const ExperimentConfig& config, const ProblemSpec& problem);

/// Shortest round-trip decimal; integral values keep a trailing ".0".
std::string format_real(double x);

inline constexpr std::string_view kTraceHeader = "run,iter,phi_mean,log10_phi,dt,backtracks,cum_evals";

void emit_trace(const ExperimentResult& result, const ExperimentConfig& config, TraceFormat format,
                const std::string& path);
void emit_summary(const ExperimentResult& result, const ExperimentConfig& config, const std::string& path);

/// JSON text of the resolved configuration.
std::string config_json(const ExperimentConfig& config);

class HelpRequested : public Error {
 public:
  using Error::Error;
};

/// Flags override values loaded with --config. Throws UsageError for bad
/// input and HelpRequested (carrying the help text) for --help.
ExperimentConfig parse_cli(int argc, const char* const* argv);

std::string usage_text();

}  // namespace enksgd
