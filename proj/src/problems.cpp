#include "enksgd/problems.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>

namespace enksgd {

namespace {

// D(y) = |y - y_obs|^2 / 2
void set_squared_loss(ProblemSpec& p, Vector y_obs) {
  const Index n_y = y_obs.size();
  p.loss_value = [y_obs](const Vector& y) { return 0.5 * (y - y_obs).squaredNorm(); };
  p.loss_grad = [y_obs](const Vector& y) -> Vector { return y - y_obs; };
  p.loss_hess = [n_y](const Vector&) -> Matrix { return Matrix::Identity(n_y, n_y); };
}

ProblemSpec least_squares(std::string name, Index n_x, Vector y_obs, VectorFn forward, Vector x0) {
  ProblemSpec p;
  p.name = std::move(name);
  p.n_x = n_x;
  p.n_y = y_obs.size();
  p.forward = std::move(forward);
  p.x0 = std::move(x0);
  p.data.emplace_back("x0", p.x0);
  p.data.emplace_back("y_obs", y_obs);
  set_squared_loss(p, std::move(y_obs));
  return p;
}

Vector to_vector(std::initializer_list<double> values) {
  Vector v(static_cast<Index>(values.size()));
  Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

ProblemSpec rosenbrock() {
  auto g = [](const Vector& x) -> Vector {
    Vector r(2);
    r << 1.0 - x[0], 10.0 * (x[1] - x[0] * x[0]);
    return r;
  };
  return least_squares("nls_rosenbrock", 2, Vector::Zero(2), g, to_vector({-1.2, 1.0}));
}

// Hock-Schittkowski 25 without its bounds, 99 terms.
ProblemSpec hs25() {
  constexpr Index m = 99;
  Vector u(m), y_obs(m);
  for (Index i = 0; i < m; ++i) {
    const double t = 0.01 * static_cast<double>(i + 1);
    u[i] = 25.0 + std::pow(-50.0 * std::log(t), 2.0 / 3.0);
    y_obs[i] = t;
  }
  auto g = [u](const Vector& x) -> Vector {
    Vector out(u.size());
    for (Index i = 0; i < u.size(); ++i) {
      out[i] = std::exp(-std::pow(std::abs(u[i] - x[1]), x[2]) / x[0]);
    }
    return out;
  };
  return least_squares("hs25", 3, y_obs, g, to_vector({100.0, 12.5, 3.0}));
}

// Gulf research and development function, m = 100.
ProblemSpec mgh11() {
  constexpr Index m = 100;
  Vector y(m), t(m);
  for (Index i = 0; i < m; ++i) {
    t[i] = static_cast<double>(i + 1) / 100.0;
    y[i] = 25.0 + std::pow(-50.0 * std::log(t[i]), 2.0 / 3.0);
  }
  auto g = [y](const Vector& x) -> Vector {
    Vector out(y.size());
    for (Index i = 0; i < y.size(); ++i) {
      out[i] = std::exp(-std::pow(std::abs(y[i] - x[1]), x[2]) / x[0]);
    }
    return out;
  };
  return least_squares("mgh11", 3, t, g, to_vector({5.0, 2.5, 0.15}));
}

// Biggs EXP6, m = 13.
ProblemSpec mgh18() {
  constexpr Index m = 13;
  Vector t(m), y(m);
  for (Index i = 0; i < m; ++i) {
    t[i] = 0.1 * static_cast<double>(i + 1);
    y[i] = std::exp(-t[i]) - 5.0 * std::exp(-10.0 * t[i]) + 3.0 * std::exp(-4.0 * t[i]);
  }
  auto g = [t](const Vector& x) -> Vector {
    Vector out(t.size());
    for (Index i = 0; i < t.size(); ++i) {
      out[i] = x[2] * std::exp(-t[i] * x[0]) - x[3] * std::exp(-t[i] * x[1]) +
               x[5] * std::exp(-t[i] * x[4]);
    }
    return out;
  };
  return least_squares("mgh18", 6, y, g, to_vector({1.0, 2.0, 1.0, 1.0, 1.0, 1.0}));
}

}  // namespace

double linear_ls_diagonal(Index i) { return std::pow(10.0, -2.0 + 0.5 * static_cast<double>(i)); }

ProblemSpec linear_ls_problem(Index n, double sigma) {
  if (n < 1) throw UsageError("linear_ls: dimension must be >= 1");
  Vector diag(n);
  for (Index i = 0; i < n; ++i) diag[i] = linear_ls_diagonal(i);
  ProblemSpec p = least_squares("linear_ls", n, Vector::Zero(n),
                                [diag](const Vector& x) -> Vector { return diag.cwiseProduct(x); },
                                Vector::Constant(n, 1e5));
  p.noise.sigma = sigma;
  p.data.emplace_back("g_diag", diag);
  return p;
}

const std::vector<std::string>& nls_problem_names() {
  static const std::vector<std::string> names = {"nls_rosenbrock", "hs25", "mgh11", "mgh18"};
  return names;
}

ProblemSpec nls_problem(const std::string& name) {
  if (name == "nls_rosenbrock") return rosenbrock();
  if (name == "hs25") return hs25();
  if (name == "mgh11") return mgh11();
  if (name == "mgh18") return mgh18();
  std::string msg = "unknown nonlinear least-squares problem '" + name + "'; built-ins:";
  for (const auto& n : nls_problem_names()) msg += " " + n;
  throw UnknownProblem(msg);
}

double poisson_feature_variance(Index m) { return std::pow(10.0, -5.0 + 0.1 * static_cast<double>(m)); }

PoissonDataset simulate_poisson_dataset(std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  PoissonDataset d;
  d.features.resize(kPoissonSamples, kPoissonFeatures);
  for (Index i = 0; i < kPoissonSamples; ++i) {
    for (Index m = 0; m < kPoissonFeatures; ++m) {
      d.features(i, m) = std::sqrt(poisson_feature_variance(m)) * normal(rng);
    }
  }
  d.true_parameter.resize(kPoissonFeatures);
  for (Index m = 0; m < kPoissonFeatures; ++m) d.true_parameter[m] = normal(rng);
  d.counts.resize(kPoissonSamples);
  const Vector rates = (d.features * d.true_parameter).array().exp();
  for (Index i = 0; i < kPoissonSamples; ++i) {
    // libstdc++ switches from inversion to rejection sampling for large means.
    std::poisson_distribution<long long> pois(rates[i]);
    d.counts[i] = static_cast<double>(pois(rng));
  }
  return d;
}

double poisson_nll(const PoissonDataset& data, const Vector& x) {
  const Vector z = data.features * x;
  double nll = 0.0;
  for (Index i = 0; i < z.size(); ++i) {
    nll += std::exp(z[i]) - data.counts[i] * z[i] + std::lgamma(data.counts[i] + 1.0);
  }
  return nll;
}

ProblemSpec poisson_regression_problem(const PoissonDataset& data) {
  ProblemSpec p;
  p.name = "poisson_regression";
  p.n_x = data.features.cols();
  p.n_y = data.features.rows();
  Vector log_factorial(p.n_y);
  for (Index i = 0; i < p.n_y; ++i) log_factorial[i] = std::lgamma(data.counts[i] + 1.0);

  // exp(b z) exp(-exp(z)) / b!, evaluated as a single exponential so large
  // counts do not overflow the factorial.
  p.forward = [a = data.features, b = data.counts, log_factorial](const Vector& x) -> Vector {
    const Vector z = a * x;
    Vector out(z.size());
    for (Index i = 0; i < z.size(); ++i) {
      out[i] = std::exp(b[i] * z[i] - std::exp(z[i]) - log_factorial[i]);
    }
    return out;
  };
  p.loss_value = [](const Vector& y) {
    double sum = 0.0;
    for (Index i = 0; i < y.size(); ++i) {
      if (!(y[i] >= 0.0)) {
        throw DomainError("poisson NLL: probability " + std::to_string(i) + " is negative or NaN");
      }
      // An underflowed probability has infinite NLL.
      if (y[i] == 0.0) return std::numeric_limits<double>::infinity();
      sum -= std::log(y[i]);
    }
    return sum;
  };
  p.loss_grad = [](const Vector& y) -> Vector { return -y.cwiseInverse(); };
  p.loss_hess = [](const Vector& y) -> Matrix { return y.array().square().inverse().matrix().asDiagonal(); };
  p.x0 = Vector::Constant(p.n_x, 2.5);
  p.data.emplace_back("x0", p.x0);
  p.data.emplace_back("features", data.features);
  p.data.emplace_back("counts", data.counts);
  p.data.emplace_back("true_parameter", data.true_parameter);
  return p;
}

ProblemSpec poisson_regression_problem(std::uint64_t seed) {
  return poisson_regression_problem(simulate_poisson_dataset(seed));
}

double signal_target(double t) { return std::max(0.0, 20.0 * std::sin(6.0 * std::numbers::pi * t)); }

ProblemSpec signal_reconstruction_problem(std::uint64_t seed) {
  constexpr Index n = kSignalPoints;
  Vector target(n);
  for (Index i = 0; i < n; ++i) target[i] = signal_target(static_cast<double>(i) / static_cast<double>(n - 1));

  auto amplifier = [](const Vector& x) -> Vector { return 100.0 * (x.array() / 25.0).tanh(); };

  Rng rng(seed);
  std::normal_distribution<double> noise(0.0, 15.0);
  Vector y_obs = amplifier(target);
  for (Index i = 0; i < n; ++i) y_obs[i] += noise(rng);

  ProblemSpec p = least_squares("signal_reconstruction", n, y_obs, amplifier, Vector::Zero(n));
  p.data.emplace_back("target", target);

  // R(x) = |W x|^2 / 2 with W selecting the first and last samples.
  Regularizer boundary;
  boundary.value = [](const Vector& x) { return 0.5 * (x[0] * x[0] + x[x.size() - 1] * x[x.size() - 1]); };
  boundary.gradient = [](const Vector& x) -> Vector {
    Vector g = Vector::Zero(x.size());
    g[0] = x[0];
    g[x.size() - 1] = x[x.size() - 1];
    return g;
  };
  boundary.hessian = [](const Vector& x) -> Matrix {
    Matrix h = Matrix::Zero(x.size(), x.size());
    h(0, 0) = 1.0;
    h(x.size() - 1, x.size() - 1) = 1.0;
    return h;
  };

  // T(y) = |F y|^2 / 2, (F y)_i = y_i - y_{i+1}.
  Matrix f = Matrix::Zero(n - 1, n);
  for (Index i = 0; i + 1 < n; ++i) {
    f(i, i) = 1.0;
    f(i, i + 1) = -1.0;
  }
  const Matrix ftf = f.transpose() * f;
  Regularizer smooth;
  smooth.value = [f](const Vector& y) { return 0.5 * (f * y).squaredNorm(); };
  smooth.gradient = [ftf](const Vector& y) -> Vector { return ftf * y; };
  smooth.hessian = [ftf](const Vector&) -> Matrix { return ftf; };

  p.reg_x = std::move(boundary);
  p.reg_y = std::move(smooth);
  p.alpha_x = 1e10;
  p.alpha_y = 5.0;
  return p;
}

ProblemRegistry::ProblemRegistry() {
  factories_["linear_ls"] = [](const ProblemParams& q) {
    return linear_ls_problem(q.dimension.value_or(13), q.noise_sigma);
  };
  for (const auto& name : nls_problem_names()) {
    factories_[name] = [name](const ProblemParams&) { return nls_problem(name); };
  }
  factories_["poisson_regression"] = [](const ProblemParams& q) { return poisson_regression_problem(q.seed); };
  factories_["signal_reconstruction"] = [](const ProblemParams& q) {
    return signal_reconstruction_problem(q.seed);
  };
}

ProblemRegistry& ProblemRegistry::global() {
  static ProblemRegistry registry;
  return registry;
}

void ProblemRegistry::add(const std::string& name, ProblemFactory factory) {
  if (name.empty()) throw UsageError("problem name must be non-empty");
  std::lock_guard lock(mutex_);
  factories_[name] = std::move(factory);
}

bool ProblemRegistry::contains(const std::string& name) const {
  std::lock_guard lock(mutex_);
  return factories_.count(name) != 0;
}

ProblemSpec ProblemRegistry::make(const std::string& name, const ProblemParams& params) const {
  ProblemFactory factory;
  {
    std::lock_guard lock(mutex_);
    auto it = factories_.find(name);
    if (it == factories_.end()) {
      std::string msg = "unknown problem '" + name + "'; registered:";
      for (const auto& [n, f] : factories_) msg += " " + n;
      throw UnknownProblem(msg);
    }
    factory = it->second;
  }
  ProblemSpec p = factory(params);
  if (params.dimension && *params.dimension != p.n_x) {
    throw UsageError("problem '" + name + "' has dimension " + std::to_string(p.n_x) +
                     ", which conflicts with requested dimension " + std::to_string(*params.dimension));
  }
  if (params.noise_sigma != 0.0) p.noise.sigma = params.noise_sigma;
  p.validate();
  return p;
}

std::vector<std::string> ProblemRegistry::names() const {
  std::lock_guard lock(mutex_);
  std::vector<std::string> out;
  for (const auto& [n, f] : factories_) out.push_back(n);
  return out;
}

void dump_dataset(const ProblemSpec& problem, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "field,row,col,value\n";
  out << std::setprecision(17);
  for (const auto& [field, m] : problem.data) {
    for (Index r = 0; r < m.rows(); ++r) {
      for (Index c = 0; c < m.cols(); ++c) out << field << ',' << r << ',' << c << ',' << m(r, c) << '\n';
    }
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace enksgd
