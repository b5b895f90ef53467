#include <cmath>
#include <cstdio>
#include <iostream>

#include "enksgd/harness.hpp"

int main(int argc, char** argv) {
  using namespace enksgd;
  ExperimentConfig cfg;
  try {
    cfg = parse_cli(argc, argv);
  } catch (const HelpRequested& h) {
    std::cout << h.what();
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    const ProblemSpec problem = ProblemRegistry::global().make(cfg.problem, cfg.problem_params());
    if (cfg.output.dataset_path) dump_dataset(problem, *cfg.output.dataset_path);

    const ExperimentResult res = run_experiment(cfg, problem);
    if (cfg.output.trace_path) emit_trace(res, cfg, cfg.output.format, *cfg.output.trace_path);
    if (cfg.output.summary_path) emit_summary(res, cfg, *cfg.output.summary_path);

    std::printf("%s %s: %zu runs, log10(phi) mean %.4g median %.4g var %.4g, mean evals %.1f\n",
                cfg.problem.c_str(), std::string(to_string(cfg.method)).c_str(), res.stats.count, res.stats.mean,
                res.stats.median, res.stats.variance, res.stats.mean_total_evals);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
