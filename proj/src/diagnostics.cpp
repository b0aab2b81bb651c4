#include "gradflow/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <stdexcept>

namespace gradflow {

namespace {

double auto_tolerance(double requested, double f0) {
  return requested >= 0.0 ? requested : 1e-5 * (1.0 + f0);
}

DiagnosticReport finish_max_residual(DiagnosticReport report) {
  double worst = 0.0;
  double worst_t = report.values.empty() ? 0.0 : report.values.front().first;
  for (const auto& [t, r] : report.values) {
    if (r > worst) {
      worst = r;
      worst_t = t;
    }
  }
  report.pass = worst <= report.tolerance;
  char buf[128];
  std::snprintf(buf, sizeof(buf), "max residual %.6g at t = %.6g (tolerance %.6g)", worst,
                worst_t, report.tolerance);
  report.detail = buf;
  return report;
}

}  // namespace

DiagnosticReport energy_residual(const GAdaGradTrajectory& traj, const Objective& obj,
                                 const GAdaGradParams& params, double tolerance) {
  if (params.logarithmic_regime()) {
    return energy_residual_log(traj, obj, tolerance);
  }
  if (traj.empty()) {
    throw std::invalid_argument("energy_residual: empty trajectory");
  }
  const double a = params.alpha;
  const double f0 = traj.front().f;
  const Eigen::ArrayXd xc0_pow = traj.front().state.xc.array().pow(1.0 - a);

  DiagnosticReport report;
  report.name = "energy_residual";
  report.tolerance = auto_tolerance(tolerance, f0);
  for (const auto& s : traj.samples) {
    const double rhs = f0 + ((xc0_pow - s.state.xc.array().pow(1.0 - a)) / (1.0 - a)).sum();
    report.values.emplace_back(s.state.t, std::abs(s.f - rhs));
  }
  return finish_max_residual(std::move(report));
}

DiagnosticReport energy_residual_log(const GAdaGradTrajectory& traj,
                                     const Objective& /*obj*/, double tolerance) {
  if (traj.empty()) {
    throw std::invalid_argument("energy_residual_log: empty trajectory");
  }
  const double f0 = traj.front().f;
  const Eigen::ArrayXd xc0 = traj.front().state.xc.array();

  DiagnosticReport report;
  report.name = "energy_residual_log";
  report.tolerance = auto_tolerance(tolerance, f0);
  for (const auto& s : traj.samples) {
    const double rhs = f0 + (xc0 / s.state.xc.array()).log().sum();
    report.values.emplace_back(s.state.t, std::abs(s.f - rhs));
  }
  return finish_max_residual(std::move(report));
}

double lyapunov_value(const AdamState& state, const Objective& obj, const AdamParams& params) {
  for (Eigen::Index i = 0; i < state.v.size(); ++i) {
    if (!(state.v[i] > 0.0)) {
      throw std::domain_error("lyapunov_value: second-moment component " + std::to_string(i) +
                              " is non-positive");
    }
  }
  const double a = bias_correction(state.t, params);
  const double momentum_term =
      (state.mu.array().square() / (2.0 * params.lambda1 * state.v.array().sqrt())).sum();
  return a * obj.value(state.x) + momentum_term;
}

DiagnosticReport check_lyapunov_monotone(const AdamTrajectory& traj, const Objective& obj,
                                         const AdamParams& params) {
  if (!obj.nonnegative) {
    throw std::invalid_argument(
        "check_lyapunov_monotone: the decrease argument assumes a non-negative objective; '" +
        obj.name + "' is not marked non-negative");
  }
  if (traj.size() < 2) {
    throw std::invalid_argument("check_lyapunov_monotone: need at least two samples");
  }

  DiagnosticReport report;
  report.name = "lyapunov";
  for (const auto& s : traj.samples) {
    report.values.emplace_back(s.state.t, lyapunov_value(s.state, obj, params));
  }

  const double horizon = traj.back().state.t;
  const auto threshold = find_monotonicity_threshold(params, horizon);
  if (!threshold) {
    report.pass = true;
    report.detail = "monotonicity threshold lies beyond the horizon; nothing to check";
    return report;
  }

  // Slack: relative floor plus an allowance proportional to the sample
  // spacing, calibrated by step-halving so integrator drift cannot flip
  // the verdict.
  const double spacing = report.values[1].first - report.values[0].first;
  double v_at_threshold = 0.0;
  for (const auto& [t, v] : report.values) {
    if (t >= *threshold) {
      v_at_threshold = v;
      break;
    }
  }
  const double slack = (1e-7 + 1e-3 * spacing) * (1.0 + std::abs(v_at_threshold));
  report.tolerance = slack;

  double worst_rise = 0.0;
  double worst_t = *threshold;
  bool have_prev = false;
  double prev = 0.0;
  for (const auto& [t, v] : report.values) {
    if (t < *threshold) continue;
    if (have_prev && v - prev > worst_rise) {
      worst_rise = v - prev;
      worst_t = t;
    }
    prev = v;
    have_prev = true;
  }
  report.pass = worst_rise <= slack;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "threshold T = %.6g, worst increase %.6g at t = %.6g (slack %.6g)", *threshold,
                worst_rise, worst_t, slack);
  report.detail = buf;
  return report;
}

namespace {

// Composite Simpson over [1, t] with 2*panels subintervals.
Eigen::VectorXd simpson_convolution(const std::function<Eigen::VectorXd(double)>& integrand,
                                    double t, int panels) {
  if (panels < 1) {
    throw std::invalid_argument("convolution oracle: panels must be >= 1");
  }
  const int n_sub = 2 * panels;
  const double h = (t - 1.0) / n_sub;
  Eigen::VectorXd total = integrand(1.0) + integrand(t);
  for (int j = 1; j < n_sub; ++j) {
    const double s = 1.0 + j * h;
    total += (j % 2 == 1 ? 4.0 : 2.0) * integrand(s);
  }
  return (h / 3.0) * total;
}

}  // namespace

Eigen::VectorXd mu_convolution_oracle(
    const std::function<Eigen::VectorXd(double)>& gradient_history, const AdamParams& params,
    double t, int panels) {
  if (!(t >= 1.0)) {
    throw std::invalid_argument("mu_convolution_oracle: t must be >= 1");
  }
  if (t == 1.0) {
    return Eigen::VectorXd::Zero(gradient_history(1.0).size());
  }
  const double l1 = params.lambda1;
  auto integrand = [&](double s) {
    return Eigen::VectorXd(std::exp(-l1 * (t - s)) * gradient_history(s));
  };
  return l1 * simpson_convolution(integrand, t, panels);
}

Eigen::VectorXd v_convolution_oracle(
    const std::function<Eigen::VectorXd(double)>& gradient_history, const AdamParams& params,
    double t, const Eigen::VectorXd& v_initial, int panels) {
  if (!(t >= 1.0)) {
    throw std::invalid_argument("v_convolution_oracle: t must be >= 1");
  }
  const double l2 = params.lambda2;
  const Eigen::VectorXd decay = std::exp(-l2 * (t - 1.0)) * v_initial;
  if (t == 1.0) return decay;
  auto integrand = [&](double s) {
    return Eigen::VectorXd(std::exp(-l2 * (t - s)) *
                           gradient_history(s).array().square().matrix());
  };
  return Eigen::VectorXd(l2 * simpson_convolution(integrand, t, panels) + decay);
}

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014327;

// Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration on the
// Legendre recurrence.
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double p_prime = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      p_prime = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / p_prime;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    nodes[i] = -x;
    nodes[n - 1 - i] = x;
    weights[i] = 2.0 / ((1.0 - x * x) * p_prime * p_prime);
    weights[n - 1 - i] = weights[i];
  }
}

void check_counterexample_args(int n_max) {
  if (n_max < 2) {
    throw std::invalid_argument("counterexample: n_max must be >= 2");
  }
}

}  // namespace

double counterexample_value(double t, int n_max) {
  check_counterexample_args(n_max);
  double total = 0.0;
  for (int n = 2; n <= n_max; ++n) {
    const double scale = std::pow(static_cast<double>(n), 8);
    const double dt = t - n;
    total += std::exp(-scale * dt * dt);
  }
  return kInvSqrt2Pi * total;
}

double counterexample_integral(int n_max, double t_end) {
  check_counterexample_args(n_max);
  if (!(t_end > 1.0)) {
    throw std::invalid_argument("counterexample_integral: t_end must exceed 1");
  }
  // Per-bump antiderivative: the bump at n integrates to
  // sqrt(pi)/(2 n^4) * [erf(n^4 (b-n)) - erf(n^4 (a-n))] over [a, b].
  double total = 0.0;
  for (int n = 2; n <= n_max; ++n) {
    const double s = std::pow(static_cast<double>(n), 4);
    total += std::sqrt(std::numbers::pi) / (2.0 * s) *
             (std::erf(s * (t_end - n)) - std::erf(s * (1.0 - n)));
  }
  return kInvSqrt2Pi * total;
}

double counterexample_integral_gl(int n_max, double t_end, int points) {
  check_counterexample_args(n_max);
  if (points < 2) {
    throw std::invalid_argument("counterexample_integral_gl: points must be >= 2");
  }
  std::vector<double> nodes, weights;
  gauss_legendre(points, nodes, weights);

  double total = 0.0;
  for (int n = 2; n <= n_max; ++n) {
    const double width = 8.0 / std::pow(static_cast<double>(n), 4);
    const double a = std::max(1.0, n - width);
    const double b = std::min(t_end, n + width);
    if (a >= b) continue;
    const double scale = std::pow(static_cast<double>(n), 8);
    double bump = 0.0;
    for (int j = 0; j < points; ++j) {
      const double t = 0.5 * (b - a) * nodes[j] + 0.5 * (a + b);
      const double dt = t - n;
      bump += weights[j] * std::exp(-scale * dt * dt);
    }
    total += 0.5 * (b - a) * bump;
  }
  return kInvSqrt2Pi * total;
}

double counterexample_sup(int n_max, int grid) {
  check_counterexample_args(n_max);
  if (grid < 1) {
    throw std::invalid_argument("counterexample_sup: grid must be >= 1");
  }
  double best = counterexample_value(1.0, n_max);
  for (int n = 2; n <= n_max; ++n) {
    const double width = 4.0 / std::pow(static_cast<double>(n), 4);
    best = std::max(best, counterexample_value(static_cast<double>(n), n_max));
    for (int j = 0; j <= grid; ++j) {
      const double t = n - width + 2.0 * width * j / grid;
      best = std::max(best, counterexample_value(t, n_max));
    }
  }
  return best;
}

void write_reports_csv(const std::vector<DiagnosticReport>& reports, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("write_reports_csv: cannot open '" + path + "' for writing");
  }
  out << "diagnostic,t,value,verdict\n";
  char buf[64];
  for (const auto& report : reports) {
    const char* verdict = report.pass ? "pass" : "fail";
    for (const auto& [t, value] : report.values) {
      out << report.name << ',';
      std::snprintf(buf, sizeof(buf), "%.17g", t);
      out << buf << ',';
      std::snprintf(buf, sizeof(buf), "%.17g", value);
      out << buf << ',' << verdict << '\n';
    }
  }
  if (!out.good()) {
    throw std::runtime_error("write_reports_csv: write to '" + path + "' failed");
  }
}

}  // namespace gradflow
