#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gradflow/diagnostics.hpp"
#include "gradflow/integrators.hpp"
#include "gradflow/mnist.hpp"
#include "gradflow/objectives.hpp"

namespace gradflow {

enum class OptimizerKind { gadagrad, adam };
enum class ObjectiveKind { quadratic, least_squares, logistic };
enum class DataSource { synthetic, mnist };

/// One experiment: an optimizer/objective pairing integrated once per
/// sweep value. For G-AdaGrad the sweep runs over alpha, for Adam over
/// lambda1. Initial conditions are broadcast scalars; the defaults are
/// xc(0) = x(0) = 0.01, mu(1) = 0, v(1) = x(1) = 0.01.
struct ExperimentConfig {
  OptimizerKind optimizer = OptimizerKind::gadagrad;
  ObjectiveKind objective = ObjectiveKind::least_squares;
  DataSource source = DataSource::synthetic;
  std::string mnist_dir;
  std::size_t mnist_limit = 5000;
  unsigned long mnist_sample_seed = 0;  // 0: first matches in file order

  unsigned long seed = 7;  // synthetic data
  int n = 100;
  int d = 6;
  double noise = 0.1;

  int quad_dim = 2;
  double curvature = 1.0;

  IntegratorConfig integrator;

  double lambda2 = 0.0067;
  std::vector<double> sweep;             // alpha values / lambda1 values
  std::vector<std::string> diagnostics;  // "energy", "lyapunov"

  double x0 = 0.01;
  double xc0 = 0.01;
  double v0 = 0.01;
  double mu0 = 0.0;
  bool theorem_mode = true;  // enforce mu(1) = 0

  double grad_threshold = 1e-2;
  std::string out = "run.csv";
};

/// Per-sweep-value outcome: the recorded series, summary values, and any
/// diagnostic verdicts. A numerical failure leaves the series empty and
/// carries the error message.
struct SweepEntry {
  double sweep_value = 0.0;
  bool within_theorem_range = true;
  bool failed = false;
  std::string message;

  std::vector<double> t;
  std::vector<double> f;
  std::vector<double> grad_norm;
  std::vector<double> optimality_gap;  // NaN when no minimum is known
  std::map<std::string, std::vector<double>> diagnostic_series;
  std::vector<DiagnosticReport> reports;

  double final_f = 0.0;
  double final_grad_norm = 0.0;
};

struct SweepResult {
  std::vector<SweepEntry> entries;
  std::vector<std::string> diagnostic_columns;
  std::optional<double> f_star;
};

struct LeastSquaresSolution {
  Eigen::VectorXd x;
  double f_star;
};

/// Normal-equations minimizer via a rank-revealing QR factorization.
/// Rejects rank-deficient or badly conditioned designs and verifies that
/// the gradient at the solution is numerically zero.
LeastSquaresSolution solve_least_squares_optimum(const Dataset& data);

/// Seeded standard-normal design with a planted all-ones solution:
/// B = A*1 + noise*xi. Identical seeds give identical datasets.
Dataset synthetic_dataset(unsigned long seed, int n, int d, double noise);

/// Loads MNIST, keeps digits 5 and 1 (so digit 1 maps to the positive
/// class), extracts the quadratic feature matrix, and attaches targets for
/// the requested task: +/-1 for least squares, 0/1 for logistic.
Dataset build_mnist_dataset(const ExperimentConfig& config);

void validate(const ExperimentConfig& config);

/// Runs the whole sweep. Objectives and data are built once and shared;
/// a non-finite state fails only its own entry.
SweepResult run_experiment(const ExperimentConfig& config);

/// Long-format CSV: sweep_value,t,f,grad_norm,optimality_gap, then one
/// column per requested diagnostic. Values carry 17 significant digits so
/// re-reading reproduces them exactly.
void write_csv(const SweepResult& result, const std::string& path);

/// Plain-text key = value config (# starts a comment). Unknown keys are
/// rejected.
ExperimentConfig load_config(const std::string& path);

}  // namespace gradflow
