#pragma once

#include <Eigen/Core>

#include <optional>

#include "gradflow/objectives.hpp"

namespace gradflow {

/// Exponent of the controller state in the G-AdaGrad update.
///
/// alpha in (0,1) is the regime covered by the convergence guarantee;
/// alpha = 1 is accepted and flagged as the logarithmic regime. Larger
/// exponents make the objective increase along the flow and are rejected
/// unless `allow_unstable` is set (demonstration runs only).
struct GAdaGradParams {
  double alpha;

  explicit GAdaGradParams(double alpha, bool allow_unstable = false);

  bool logarithmic_regime() const { return alpha == 1.0; }
  bool within_theorem_range() const { return alpha > 0.0 && alpha < 1.0; }
};

/// State of the autonomous system: position, per-coordinate controller
/// state, and the clock. Every xc component must stay positive; the flow
/// preserves this since xc never decreases.
struct GAdaGradState {
  Eigen::VectorXd x;
  Eigen::VectorXd xc;
  double t = 0.0;
};

/// Decay rates of the first/second moment estimates. The convergence
/// theorem needs 0 < lambda2 < lambda1 < 1; out-of-range values are
/// accepted only with `allow_out_of_range` so that divergent parameter
/// choices can still be demonstrated. lambda1 == lambda2 is always
/// rejected (it degenerates the monotonicity condition).
struct AdamParams {
  double lambda1;
  double lambda2;

  AdamParams(double lambda1, double lambda2, bool allow_out_of_range = false);

  bool within_theorem_range() const {
    return 0.0 < lambda2 && lambda2 < lambda1 && lambda1 < 1.0;
  }
};

/// State of the non-autonomous system. v components must be positive and
/// the clock starts at t = 1, where the bias correction is first defined.
struct AdamState {
  Eigen::VectorXd x;
  Eigen::VectorXd mu;
  Eigen::VectorXd v;
  double t = 1.0;
};

/// Bias-correction factor (1-(1-l1)^t)/sqrt(1-(1-l2)^t) for t >= 1.
/// Tends to 1 as t grows; equals l1/sqrt(l2) at t = 1.
double bias_correction(double t, const AdamParams& params);

/// Closed-form time derivative of the bias correction.
double bias_correction_derivative(double t, const AdamParams& params);

/// Smallest t in [1, t_max] past which the bias correction is strictly
/// decreasing, located to 1e-9 by a coarse scan plus bisection. The scanned
/// quantity is monotone increasing in t, so the bracket is reliable.
/// Returns nullopt when no t <= t_max qualifies.
std::optional<double> find_monotonicity_threshold(const AdamParams& params, double t_max);

struct GAdaGradDerivative {
  Eigen::VectorXd dxc;
  Eigen::VectorXd dx;
};

struct AdamDerivative {
  Eigen::VectorXd dmu;
  Eigen::VectorXd dv;
  Eigen::VectorXd dx;
};

/// Vector field of the autonomous system:
///   dxc_i = (grad_i f)^2,   dx_i = -grad_i f / xc_i^alpha.
/// dxc is componentwise non-negative for any input.
GAdaGradDerivative gadagrad_field(const GAdaGradState& state, const Objective& obj,
                                  const GAdaGradParams& params);

/// Vector field of the non-autonomous system:
///   dmu_i = -l1 mu_i + l1 grad_i f
///   dv_i  = -l2 v_i  + l2 (grad_i f)^2
///   dx_i  = -mu_i / (alpha(t) sqrt(v_i))
AdamDerivative adam_field(const AdamState& state, const Objective& obj,
                          const AdamParams& params);

}  // namespace gradflow
