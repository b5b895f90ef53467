#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "enksgd/problem.hpp"

namespace enksgd {

/// Ill-conditioned diagonal least squares: G = diag(10^{-2 + 0.5 (i-1)}),
/// D(y) = |y|^2 / 2, default start 1e5 * 1.
ProblemSpec linear_ls_problem(Index n = 13, double sigma = 0.0);

/// Diagonal entry i (0-based) of the linear least-squares forward matrix.
double linear_ls_diagonal(Index i);

/// Built-in nonlinear least-squares problems: nls_rosenbrock, hs25, mgh11,
/// mgh18. D(y) = |y - y_obs|^2 / 2 with the collection's standard start.
ProblemSpec nls_problem(const std::string& name);

const std::vector<std::string>& nls_problem_names();

/// Simulated Poisson regression data.
struct PoissonDataset {
  Matrix features;        // N_y x N_x, row i is a_i
  Vector counts;          // b_i
  Vector true_parameter;  // x*
};

inline constexpr Index kPoissonFeatures = 41;
inline constexpr Index kPoissonSamples = 189;

/// Feature variance for 0-based feature index m: 10^{-5 + 0.1 m}.
double poisson_feature_variance(Index m);

PoissonDataset simulate_poisson_dataset(std::uint64_t seed);

/// Per-datum Poisson probabilities as the forward map, D(y) = -sum log y.
ProblemSpec poisson_regression_problem(std::uint64_t seed);
ProblemSpec poisson_regression_problem(const PoissonDataset& data);

/// Negative log likelihood computed directly from the GLM form.
double poisson_nll(const PoissonDataset& data, const Vector& x);

inline constexpr Index kSignalPoints = 101;

/// Half-wave rectified 20 sin(6 pi t).
double signal_target(double t);

/// Amplifier inversion 100 tanh(x / 25) with boundary and smoothness
/// penalties (alpha_x = 1e10, alpha_y = 5) and N(0, 15^2) measurement noise.
ProblemSpec signal_reconstruction_problem(std::uint64_t seed);

/// Parameters a problem factory may consume. Factories ignore what they do
/// not need; `dimension` is rejected by fixed-size problems.
struct ProblemParams {
  std::uint64_t seed = 0;
  double noise_sigma = 0.0;
  std::optional<Index> dimension;
};

using ProblemFactory = std::function<ProblemSpec(const ProblemParams&)>;

/// Name -> factory map. The global instance comes preloaded with the
/// built-in problems; user code may add more.
class ProblemRegistry {
 public:
  static ProblemRegistry& global();

  void add(const std::string& name, ProblemFactory factory);
  bool contains(const std::string& name) const;
  ProblemSpec make(const std::string& name, const ProblemParams& params) const;
  std::vector<std::string> names() const;

 private:
  ProblemRegistry();

  mutable std::mutex mutex_;
  std::map<std::string, ProblemFactory> factories_;
};

/// Writes ProblemSpec::data as long-format CSV: field,row,col,value.
void dump_dataset(const ProblemSpec& problem, const std::string& path);

}  // namespace enksgd
