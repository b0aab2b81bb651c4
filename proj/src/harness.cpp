#include "gradflow/harness.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

namespace gradflow {

LeastSquaresSolution solve_least_squares_optimum(const Dataset& data) {
  const Eigen::MatrixXd& A = data.design;
  const Eigen::VectorXd& B = data.targets;
  if (A.rows() != B.size()) {
    throw std::invalid_argument("solve_least_squares_optimum: row/target mismatch");
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  if (qr.rank() < A.cols()) {
    throw std::invalid_argument(
        "solve_least_squares_optimum: design matrix is rank deficient; inspect the feature "
        "columns for exact collinearity");
  }
  const Eigen::VectorXd diag = qr.matrixR().diagonal().cwiseAbs();
  const double condition = diag.maxCoeff() / diag.minCoeff();
  if (condition > 1e12) {
    throw std::invalid_argument(
        "solve_least_squares_optimum: condition estimate " + std::to_string(condition) +
        " exceeds 1e12; inspect the feature columns for near collinearity");
  }

  LeastSquaresSolution solution;
  solution.x = qr.solve(B);
  const Eigen::VectorXd residual = A * solution.x - B;
  solution.f_star = 0.5 * residual.squaredNorm();

  const double grad_norm = (A.transpose() * residual).norm();
  const double allowed = 1e-8 * (1.0 + (A.transpose() * B).norm());
  if (grad_norm > allowed) {
    throw std::runtime_error("solve_least_squares_optimum: gradient at the solution has norm " +
                             std::to_string(grad_norm) + ", above the expected " +
                             std::to_string(allowed));
  }
  return solution;
}

Dataset synthetic_dataset(unsigned long seed, int n, int d, double noise) {
  if (d < 1 || n <= d) {
    throw std::invalid_argument("synthetic_dataset: need n > d >= 1");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  Dataset data;
  data.design.resize(n, d);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) {
      data.design(i, j) = normal(rng);
    }
  }
  data.targets = data.design * Eigen::VectorXd::Ones(d);
  for (int i = 0; i < n; ++i) {
    data.targets[i] += noise * normal(rng);
  }
  return data;
}

Dataset build_mnist_dataset(const ExperimentConfig& config) {
  ImageSet raw = load_mnist_training(config.mnist_dir);

  // keep = (5, 1): the second digit maps to the positive class, so digit 1
  // becomes +1 (regression) or 1 (logistic).
  const auto scheme = config.objective == ObjectiveKind::logistic ? RelabelScheme::binary
                                                                  : RelabelScheme::signed_pm1;
  ImageSet filtered;
  if (config.mnist_sample_seed == 0) {
    filtered = filter_digits(raw, {5, 1}, config.mnist_limit, scheme);
  } else {
    filtered = filter_digits(raw, {5, 1}, raw.count(), scheme);
    std::mt19937_64 rng(config.mnist_sample_seed);
    std::vector<std::size_t> order(filtered.count());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    ImageSet sampled;
    for (std::size_t i = 0; i < std::min(config.mnist_limit, order.size()); ++i) {
      sampled.images.push_back(filtered.images[order[i]]);
      sampled.labels.push_back(filtered.labels[order[i]]);
    }
    filtered = std::move(sampled);
  }
  return feature_matrix(feature_table(filtered));
}

void validate(const ExperimentConfig& config) {
  if (config.sweep.empty()) {
    throw std::invalid_argument("config: sweep values must be non-empty");
  }
  if (!(config.integrator.delta > 0.0)) {
    throw std::invalid_argument("config: delta must be positive");
  }
  if (config.integrator.record_every < 1) {
    throw std::invalid_argument("config: record_every must be >= 1");
  }
  if (!(config.xc0 > 0.0)) {
    throw std::invalid_argument("config: initial controller state xc0 must be positive");
  }
  if (!(config.v0 > 0.0)) {
    throw std::invalid_argument("config: initial second moment v0 must be positive");
  }
  if (config.theorem_mode && config.mu0 != 0.0) {
    throw std::invalid_argument(
        "config: theorem mode requires mu(1) = 0; set theorem_mode = false to override");
  }
  const double start = config.optimizer == OptimizerKind::adam ? 1.0 : 0.0;
  if (config.integrator.horizon < start) {
    throw std::invalid_argument("config: horizon lies before the starting time");
  }
  for (const std::string& name : config.diagnostics) {
    if (name == "energy") {
      if (config.optimizer != OptimizerKind::gadagrad) {
        throw std::invalid_argument("config: the energy diagnostic applies to gadagrad runs");
      }
    } else if (name == "lyapunov") {
      if (config.optimizer != OptimizerKind::adam) {
        throw std::invalid_argument("config: the lyapunov diagnostic applies to adam runs");
      }
    } else {
      throw std::invalid_argument("config: unknown diagnostic '" + name +
                                  "' (expected energy or lyapunov)");
    }
  }
  if (config.source == DataSource::mnist && config.objective == ObjectiveKind::quadratic) {
    throw std::invalid_argument("config: the quadratic objective takes no data source");
  }
  if (config.objective == ObjectiveKind::quadratic && config.quad_dim < 1) {
    throw std::invalid_argument("config: quad_dim must be >= 1");
  }
}

namespace {

struct Problem {
  Objective objective;
  std::optional<double> f_star;
};

Problem build_problem(const ExperimentConfig& config) {
  Problem problem;
  switch (config.objective) {
    case ObjectiveKind::quadratic:
      problem.objective = quadratic_objective(config.quad_dim, config.curvature);
      problem.f_star = 0.0;
      break;
    case ObjectiveKind::least_squares: {
      Dataset data = config.source == DataSource::mnist
                         ? build_mnist_dataset(config)
                         : synthetic_dataset(config.seed, config.n, config.d, config.noise);
      problem.f_star = solve_least_squares_optimum(data).f_star;
      problem.objective = least_squares_objective(std::move(data));
      break;
    }
    case ObjectiveKind::logistic: {
      Dataset data;
      if (config.source == DataSource::mnist) {
        data = build_mnist_dataset(config);
      } else {
        data = synthetic_dataset(config.seed, config.n, config.d, config.noise);
        // Synthetic targets are continuous; binarize at zero for the
        // classification task.
        for (Eigen::Index i = 0; i < data.targets.size(); ++i) {
          data.targets[i] = data.targets[i] > 0.0 ? 1.0 : 0.0;
        }
      }
      problem.objective = logistic_objective(std::move(data));
      break;
    }
  }
  return problem;
}

template <class State>
void fill_series(SweepEntry& entry, const Trajectory<State>& traj,
                 const std::optional<double>& f_star) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& s : traj.samples) {
    entry.t.push_back(s.state.t);
    entry.f.push_back(s.f);
    entry.grad_norm.push_back(s.grad_norm);
    entry.optimality_gap.push_back(f_star ? s.f - *f_star : nan);
  }
  entry.final_f = traj.back().f;
  entry.final_grad_norm = traj.back().grad_norm;
}

SweepEntry run_gadagrad_entry(double alpha_value, const ExperimentConfig& config,
                              const Problem& problem) {
  SweepEntry entry;
  entry.sweep_value = alpha_value;
  GAdaGradParams params(alpha_value, /*allow_unstable=*/true);
  entry.within_theorem_range = params.within_theorem_range();
  if (!entry.within_theorem_range) {
    entry.message = params.logarithmic_regime() ? "alpha = 1: logarithmic regime"
                                                : "alpha outside (0,1): out of theorem range";
  }

  GAdaGradState initial;
  const int d = problem.objective.dimension;
  initial.x = Eigen::VectorXd::Constant(d, config.x0);
  initial.xc = Eigen::VectorXd::Constant(d, config.xc0);
  initial.t = 0.0;

  GAdaGradTrajectory traj = integrate(initial, problem.objective, params, config.integrator);
  fill_series(entry, traj, problem.f_star);

  for (const std::string& name : config.diagnostics) {
    if (name == "energy") {
      DiagnosticReport report = energy_residual(traj, problem.objective, params);
      entry.diagnostic_series[name].reserve(report.values.size());
      for (const auto& [t, value] : report.values) {
        entry.diagnostic_series[name].push_back(value);
      }
      entry.reports.push_back(std::move(report));
    }
  }
  return entry;
}

SweepEntry run_adam_entry(double lambda1_value, const ExperimentConfig& config,
                          const Problem& problem) {
  SweepEntry entry;
  entry.sweep_value = lambda1_value;
  AdamParams params(lambda1_value, config.lambda2, /*allow_out_of_range=*/true);
  entry.within_theorem_range = params.within_theorem_range();
  if (!entry.within_theorem_range) {
    entry.message = "parameters violate 0 < lambda2 < lambda1 < 1: out of theorem range";
  }

  AdamState initial;
  const int d = problem.objective.dimension;
  initial.x = Eigen::VectorXd::Constant(d, config.x0);
  initial.mu = Eigen::VectorXd::Constant(d, config.mu0);
  initial.v = Eigen::VectorXd::Constant(d, config.v0);
  initial.t = 1.0;

  AdamTrajectory traj = integrate(initial, problem.objective, params, config.integrator);
  fill_series(entry, traj, problem.f_star);

  for (const std::string& name : config.diagnostics) {
    if (name == "lyapunov") {
      DiagnosticReport report = check_lyapunov_monotone(traj, problem.objective, params);
      entry.diagnostic_series[name].reserve(report.values.size());
      for (const auto& [t, value] : report.values) {
        entry.diagnostic_series[name].push_back(value);
      }
      entry.reports.push_back(std::move(report));
    }
  }
  return entry;
}

}  // namespace

SweepResult run_experiment(const ExperimentConfig& config) {
  validate(config);
  const Problem problem = build_problem(config);

  SweepResult result;
  result.diagnostic_columns = config.diagnostics;
  result.f_star = problem.f_star;

  auto in_theorem_range = [&](double value) {
    return config.optimizer == OptimizerKind::gadagrad
               ? (value > 0.0 && value < 1.0)
               : (0.0 < config.lambda2 && config.lambda2 < value && value < 1.0);
  };

  for (double value : config.sweep) {
    try {
      result.entries.push_back(config.optimizer == OptimizerKind::gadagrad
                                   ? run_gadagrad_entry(value, config, problem)
                                   : run_adam_entry(value, config, problem));
    } catch (const NumericalError& err) {
      SweepEntry failed;
      failed.sweep_value = value;
      failed.failed = true;
      failed.message = err.what();
      failed.within_theorem_range = in_theorem_range(value);
      result.entries.push_back(std::move(failed));
    } catch (const std::invalid_argument& err) {
      // per-value parameter rejection (e.g. a degenerate lambda pair)
      SweepEntry failed;
      failed.sweep_value = value;
      failed.failed = true;
      failed.message = err.what();
      failed.within_theorem_range = in_theorem_range(value);
      result.entries.push_back(std::move(failed));
    }
  }
  return result;
}

namespace {

void append_number(std::string& line, double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  line += buf;
}

}  // namespace

void write_csv(const SweepResult& result, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("write_csv: cannot open '" + path + "' for writing");
  }
  std::string header = "sweep_value,t,f,grad_norm,optimality_gap";
  for (const std::string& name : result.diagnostic_columns) {
    header += ',';
    header += name;
  }
  out << header << '\n';

  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const SweepEntry& entry : result.entries) {
    for (std::size_t i = 0; i < entry.t.size(); ++i) {
      std::string line;
      append_number(line, entry.sweep_value);
      line += ',';
      append_number(line, entry.t[i]);
      line += ',';
      append_number(line, entry.f[i]);
      line += ',';
      append_number(line, entry.grad_norm[i]);
      line += ',';
      append_number(line, entry.optimality_gap[i]);
      for (const std::string& name : result.diagnostic_columns) {
        line += ',';
        const auto it = entry.diagnostic_series.find(name);
        const bool have = it != entry.diagnostic_series.end() && i < it->second.size();
        append_number(line, have ? it->second[i] : nan);
      }
      out << line << '\n';
    }
  }
  if (!out.good()) {
    throw std::runtime_error("write_csv: write to '" + path + "' failed");
  }
}

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

double parse_double(const std::string& value, const std::string& key) {
  try {
    std::size_t used = 0;
    const double parsed = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return parsed;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: key '" + key + "' has non-numeric value '" + value +
                                "'");
  }
}

long parse_long(const std::string& value, const std::string& key) {
  try {
    std::size_t used = 0;
    const long parsed = std::stol(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return parsed;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: key '" + key + "' has non-integer value '" + value +
                                "'");
  }
}

bool parse_bool(const std::string& value, const std::string& key) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw std::invalid_argument("config: key '" + key + "' has non-boolean value '" + value + "'");
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> items;
  std::stringstream stream(value);
  std::string item;
  while (std::getline(stream, item, ',')) {
    item = trim(item);
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

void apply_key(ExperimentConfig& config, const std::string& key, const std::string& value) {
  if (key == "optimizer") {
    if (value == "gadagrad") config.optimizer = OptimizerKind::gadagrad;
    else if (value == "adam") config.optimizer = OptimizerKind::adam;
    else throw std::invalid_argument("config: optimizer must be gadagrad or adam, got '" +
                                     value + "'");
  } else if (key == "objective") {
    if (value == "quadratic") config.objective = ObjectiveKind::quadratic;
    else if (value == "least_squares") config.objective = ObjectiveKind::least_squares;
    else if (value == "logistic") config.objective = ObjectiveKind::logistic;
    else throw std::invalid_argument(
        "config: objective must be quadratic, least_squares or logistic, got '" + value + "'");
  } else if (key == "source") {
    if (value == "synthetic") config.source = DataSource::synthetic;
    else if (value == "mnist") config.source = DataSource::mnist;
    else throw std::invalid_argument("config: source must be synthetic or mnist, got '" +
                                     value + "'");
  } else if (key == "method") {
    if (value == "euler") config.integrator.method = Method::euler;
    else if (value == "rk4") config.integrator.method = Method::rk4;
    else throw std::invalid_argument("config: method must be euler or rk4, got '" + value + "'");
  } else if (key == "mnist_dir") {
    config.mnist_dir = value;
  } else if (key == "mnist_limit") {
    config.mnist_limit = static_cast<std::size_t>(parse_long(value, key));
  } else if (key == "mnist_sample_seed") {
    config.mnist_sample_seed = static_cast<unsigned long>(parse_long(value, key));
  } else if (key == "seed") {
    config.seed = static_cast<unsigned long>(parse_long(value, key));
  } else if (key == "n") {
    config.n = static_cast<int>(parse_long(value, key));
  } else if (key == "d") {
    config.d = static_cast<int>(parse_long(value, key));
  } else if (key == "noise") {
    config.noise = parse_double(value, key);
  } else if (key == "quad_dim") {
    config.quad_dim = static_cast<int>(parse_long(value, key));
  } else if (key == "curvature") {
    config.curvature = parse_double(value, key);
  } else if (key == "delta") {
    config.integrator.delta = parse_double(value, key);
  } else if (key == "horizon") {
    config.integrator.horizon = parse_double(value, key);
  } else if (key == "record_every") {
    config.integrator.record_every = static_cast<int>(parse_long(value, key));
  } else if (key == "textbook_order") {
    config.integrator.textbook_order = parse_bool(value, key);
  } else if (key == "lambda2") {
    config.lambda2 = parse_double(value, key);
  } else if (key == "sweep") {
    config.sweep.clear();
    for (const std::string& item : split_list(value)) {
      config.sweep.push_back(parse_double(item, key));
    }
  } else if (key == "diagnostics") {
    config.diagnostics = split_list(value);
  } else if (key == "x0") {
    config.x0 = parse_double(value, key);
  } else if (key == "xc0") {
    config.xc0 = parse_double(value, key);
  } else if (key == "v0") {
    config.v0 = parse_double(value, key);
  } else if (key == "mu0") {
    config.mu0 = parse_double(value, key);
  } else if (key == "theorem_mode") {
    config.theorem_mode = parse_bool(value, key);
  } else if (key == "grad_threshold") {
    config.grad_threshold = parse_double(value, key);
  } else if (key == "out") {
    config.out = value;
  } else {
    throw std::invalid_argument("config: unknown key '" + key + "'");
  }
}

}  // namespace

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::invalid_argument("config: cannot open '" + path + "'");
  }
  ExperimentConfig config;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config: line " + std::to_string(line_number) +
                                  " is not of the form key = value");
    }
    apply_key(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return config;
}

}  // namespace gradflow
