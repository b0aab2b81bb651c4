#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "gradflow/integrators.hpp"

namespace gradflow {

/// Result of one diagnostic check: a named (t, value) series plus a
/// pass/fail verdict at the stated tolerance.
struct DiagnosticReport {
  std::string name;
  std::vector<std::pair<double, double>> values;
  bool pass = false;
  double tolerance = 0.0;
  std::string detail;
};

/// Residual of the closed-form energy identity along a G-AdaGrad
/// trajectory (alpha != 1):
///   f(x(t)) = f(x(0)) + sum_i [xc_i(0)^(1-a) - xc_i(t)^(1-a)] / (1-a).
/// Exact along the true flow; a high-order trajectory keeps the residual
/// at the integrator's accuracy. alpha = 1 is redirected to the
/// logarithmic variant. tolerance < 0 selects 1e-5 * (1 + f(x(0))).
DiagnosticReport energy_residual(const GAdaGradTrajectory& traj, const Objective& obj,
                                 const GAdaGradParams& params, double tolerance = -1.0);

/// Logarithmic form of the identity for alpha = 1:
///   f(x(t)) = f(x(0)) + sum_i log(xc_i(0) / xc_i(t)).
DiagnosticReport energy_residual_log(const GAdaGradTrajectory& traj, const Objective& obj,
                                     double tolerance = -1.0);

/// V(t) = alpha(t) f(x(t)) + sum_i mu_i^2 / (2 lambda1 sqrt(v_i)).
double lyapunov_value(const AdamState& state, const Objective& obj, const AdamParams& params);

/// Checks that V is non-increasing (within slack) on every consecutive
/// sample pair past the monotonicity threshold. Requires an objective
/// declared non-negative; the slack combines a fixed relative floor with
/// an allowance proportional to the sample spacing.
DiagnosticReport check_lyapunov_monotone(const AdamTrajectory& traj, const Objective& obj,
                                         const AdamParams& params);

/// Exponential-convolution solution of the first-moment equation with
/// mu(1) = 0:  mu_i(t) = l1 * integral_1^t exp(-l1 (t-s)) grad_i f(x(s)) ds,
/// computed by composite Simpson quadrature (panels pairs of subintervals).
Eigen::VectorXd mu_convolution_oracle(
    const std::function<Eigen::VectorXd(double)>& gradient_history, const AdamParams& params,
    double t, int panels = 1024);

/// Same for the second moment, including the decay of the initial
/// condition. Integration starts at time 1, so the decay factor is
/// exp(-l2 (t-1)) applied to v(1).
Eigen::VectorXd v_convolution_oracle(
    const std::function<Eigen::VectorXd(double)>& gradient_history, const AdamParams& params,
    double t, const Eigen::VectorXd& v_initial, int panels = 1024);

/// The train of sharply narrowing Gaussian bumps
///   g(t) = sum_{n=2}^{n_max} exp(-n^8 (t-n)^2) / sqrt(2 pi),
/// whose integral stays small while its peaks do not.
double counterexample_value(double t, int n_max);

/// integral_1^t_end g via per-bump antiderivatives (error function); each
/// bump has width ~n^-4, far below any practical uniform grid.
double counterexample_integral(int n_max, double t_end);

/// Same integral by fixed-order Gauss-Legendre per bump on
/// [n - 8 n^-4, n + 8 n^-4], clipped to [1, t_end]. Second route used to
/// cross-check the closed form.
double counterexample_integral_gl(int n_max, double t_end, int points = 64);

/// sup g over [1, infinity), located by evaluating at the bump centers and
/// refining on a local grid of `grid` points around each.
double counterexample_sup(int n_max, int grid = 64);

/// Per-sample gradient norms; passes when the final value is at or below
/// the threshold.
template <class State>
DiagnosticReport gradient_norm_series(const Trajectory<State>& traj, double threshold) {
  DiagnosticReport report;
  report.name = "grad_norm";
  report.tolerance = threshold;
  for (const auto& s : traj.samples) {
    report.values.emplace_back(s.state.t, s.grad_norm);
  }
  report.pass = !report.values.empty() && report.values.back().second <= threshold;
  report.detail = report.values.empty()
                      ? "empty trajectory"
                      : "final gradient norm " + std::to_string(report.values.back().second);
  return report;
}

/// Copies a report's series into the matching trajectory samples so the
/// harness can emit it as a CSV column.
template <class State>
void annotate(Trajectory<State>& traj, const DiagnosticReport& report) {
  if (report.values.size() != traj.samples.size()) {
    throw std::invalid_argument("annotate: report '" + report.name + "' has " +
                                std::to_string(report.values.size()) + " values for " +
                                std::to_string(traj.samples.size()) + " samples");
  }
  for (std::size_t i = 0; i < traj.samples.size(); ++i) {
    traj.samples[i].diagnostics[report.name] = report.values[i].second;
  }
}

/// Long-format CSV of diagnostic series: diagnostic,t,value,verdict.
void write_reports_csv(const std::vector<DiagnosticReport>& reports, const std::string& path);

}  // namespace gradflow
