#include "gradflow/dynamics.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace gradflow {

namespace {

// t is continuous, so gamma^t must be the real power exp(t log gamma).
// gamma = 0 yields 0 for t >= 1; negative gamma yields NaN, which callers
// surface as a non-finite state.
double real_pow(double gamma, double t) {
  if (gamma == 0.0) return 0.0;
  return std::exp(t * std::log(gamma));
}

void require_time(double t) {
  if (!(t >= 1.0)) {
    throw std::domain_error("bias correction is only defined for t >= 1, got t = " +
                            std::to_string(t));
  }
}

}  // namespace

GAdaGradParams::GAdaGradParams(double alpha_in, bool allow_unstable) : alpha(alpha_in) {
  if (!(alpha > 0.0)) {
    throw std::invalid_argument("GAdaGradParams: alpha must be positive");
  }
  if (alpha > 1.0 && !allow_unstable) {
    throw std::invalid_argument(
        "GAdaGradParams: alpha > 1 makes the objective increase along the flow; "
        "pass allow_unstable to run it anyway");
  }
}

AdamParams::AdamParams(double lambda1_in, double lambda2_in, bool allow_out_of_range)
    : lambda1(lambda1_in), lambda2(lambda2_in) {
  if (!(lambda1 > 0.0) || !(lambda2 > 0.0)) {
    throw std::invalid_argument("AdamParams: lambda1 and lambda2 must be positive");
  }
  if (lambda1 == lambda2) {
    throw std::invalid_argument("AdamParams: lambda1 == lambda2 is degenerate");
  }
  if (!within_theorem_range() && !allow_out_of_range) {
    throw std::invalid_argument(
        "AdamParams: parameters violate 0 < lambda2 < lambda1 < 1; "
        "pass allow_out_of_range to run them anyway");
  }
}

double bias_correction(double t, const AdamParams& params) {
  require_time(t);
  const double g1 = 1.0 - params.lambda1;
  const double g2 = 1.0 - params.lambda2;
  return (1.0 - real_pow(g1, t)) / std::sqrt(1.0 - real_pow(g2, t));
}

double bias_correction_derivative(double t, const AdamParams& params) {
  require_time(t);
  const double g1 = 1.0 - params.lambda1;
  const double g2 = 1.0 - params.lambda2;
  const double g1t = real_pow(g1, t);
  const double g2t = real_pow(g2, t);
  const double num = g2t * (1.0 - g1t) * std::log(g2) - 2.0 * g1t * (1.0 - g2t) * std::log(g1);
  return num / (2.0 * std::pow(1.0 - g2t, 1.5));
}

namespace {

// Left side of the monotonicity condition; increasing in t whenever
// 0 < gamma1 < gamma2 < 1. The bias correction decreases exactly where
// this exceeds 2 log(gamma1)/log(gamma2).
double condition_lhs(double t, double g1, double g2) {
  return real_pow(g2 / g1, t) * (1.0 - real_pow(g1, t)) / (1.0 - real_pow(g2, t));
}

}  // namespace

std::optional<double> find_monotonicity_threshold(const AdamParams& params, double t_max) {
  if (!(t_max >= 1.0)) {
    throw std::invalid_argument("find_monotonicity_threshold: t_max must be >= 1");
  }
  const double g1 = 1.0 - params.lambda1;
  const double g2 = 1.0 - params.lambda2;
  const double rhs = 2.0 * std::log(g1) / std::log(g2);

  auto holds = [&](double t) { return condition_lhs(t, g1, g2) > rhs; };

  if (holds(1.0)) return 1.0;

  // Coarse scan for a bracket, then bisection; monotonicity of the left
  // side makes the first sign change the only one.
  constexpr double kScanStep = 0.25;
  double lo = 1.0;
  double hi = lo;
  bool bracketed = false;
  while (hi < t_max) {
    hi = std::min(hi + kScanStep, t_max);
    if (holds(hi)) {
      bracketed = true;
      break;
    }
    lo = hi;
  }
  if (!bracketed) return std::nullopt;

  while (hi - lo > 1e-9) {
    const double mid = 0.5 * (lo + hi);
    if (holds(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

GAdaGradDerivative gadagrad_field(const GAdaGradState& state, const Objective& obj,
                                  const GAdaGradParams& params) {
  for (Eigen::Index i = 0; i < state.xc.size(); ++i) {
    if (!(state.xc[i] > 0.0)) {
      throw std::domain_error("gadagrad_field: controller state component " +
                              std::to_string(i) + " is non-positive (" +
                              std::to_string(state.xc[i]) + ")");
    }
  }
  const Eigen::VectorXd g = obj.gradient(state.x);
  GAdaGradDerivative d;
  d.dxc = g.array().square();
  d.dx = -g.array() / state.xc.array().pow(params.alpha);
  return d;
}

AdamDerivative adam_field(const AdamState& state, const Objective& obj,
                          const AdamParams& params) {
  if (!(state.t >= 1.0)) {
    throw std::domain_error("adam_field: t must be >= 1, got " + std::to_string(state.t));
  }
  for (Eigen::Index i = 0; i < state.v.size(); ++i) {
    if (!(state.v[i] > 0.0)) {
      throw std::domain_error("adam_field: second-moment component " + std::to_string(i) +
                              " is non-positive (" + std::to_string(state.v[i]) + ")");
    }
  }
  const Eigen::VectorXd g = obj.gradient(state.x);
  const double a = bias_correction(state.t, params);
  AdamDerivative d;
  d.dmu = params.lambda1 * (g - state.mu);
  d.dv = params.lambda2 * (g.array().square().matrix() - state.v);
  d.dx = -state.mu.array() / (a * state.v.array().sqrt());
  return d;
}

}  // namespace gradflow
