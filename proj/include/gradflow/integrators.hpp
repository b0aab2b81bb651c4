#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "gradflow/dynamics.hpp"
#include "gradflow/objectives.hpp"

namespace gradflow {

/// Thrown when a state component becomes non-finite during integration.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Method { euler, rk4 };

struct IntegratorConfig {
  double delta = 0.01;       // sampling time
  Method method = Method::rk4;
  double horizon = 1.0;      // final time (absolute)
  int record_every = 1;      // sample stride, in steps
  // Use the post-update moments in the Adam position update (the discrete
  // algorithm as usually stated) instead of the pre-update ones that the
  // sampled continuous-time system produces.
  bool textbook_order = false;
};

/// Discrete Adam parameterization: beta1 = 1 - delta*lambda1,
/// beta2 = 1 - delta*lambda2, step size eta = delta.
struct DiscreteAdamParams {
  double beta1;
  double beta2;
  double eta;
};

struct LambdaMapping {
  AdamParams params;
  double delta;
  // False when the recovered rates land outside 0 < lambda2 < lambda1 < 1;
  // reported as a warning, not an error.
  bool within_theorem_range;
};

template <class State>
struct TrajectorySample {
  State state;
  double f = 0.0;
  double grad_norm = 0.0;
  std::map<std::string, double> diagnostics;
};

/// Time-ordered samples of one integration run. The first sample is the
/// initial condition and sample times are strictly increasing.
template <class State>
struct Trajectory {
  std::vector<TrajectorySample<State>> samples;

  bool empty() const { return samples.empty(); }
  std::size_t size() const { return samples.size(); }
  const TrajectorySample<State>& front() const { return samples.front(); }
  const TrajectorySample<State>& back() const { return samples.back(); }
};

using GAdaGradTrajectory = Trajectory<GAdaGradState>;
using AdamTrajectory = Trajectory<AdamState>;

/// One explicit Euler step with every right-hand side evaluated at the
/// current state; the position update divides by the pre-update controller
/// state. This is exactly one iteration of the discrete algorithm with
/// step size delta.
GAdaGradState euler_step_gadagrad(const GAdaGradState& state, const Objective& obj,
                                  const GAdaGradParams& params, double delta);

/// One explicit Euler step of the Adam system; requires delta*lambda1 < 1
/// and delta*lambda2 < 1 so the moment estimates keep their sign. With
/// `textbook_order` the position update uses the freshly updated moments.
AdamState euler_step_adam(const AdamState& state, const Objective& obj,
                          const AdamParams& params, double delta,
                          bool textbook_order = false);

/// Classical fourth-order Runge-Kutta step on the joint (xc, x) field.
GAdaGradState rk4_step_gadagrad(const GAdaGradState& state, const Objective& obj,
                                const GAdaGradParams& params, double delta);

/// Non-autonomous RK4 step; the bias correction is evaluated at the stage
/// times t, t + delta/2, t + delta/2, t + delta.
AdamState rk4_step_adam(const AdamState& state, const Objective& obj,
                        const AdamParams& params, double delta);

/// Repeatedly applies the configured stepper until the horizon, recording
/// the initial condition, every record_every-th step, and the final state.
/// Throws NumericalError (with the step index) if any component becomes
/// non-finite.
GAdaGradTrajectory integrate(const GAdaGradState& initial, const Objective& obj,
                             const GAdaGradParams& params, const IntegratorConfig& config);
AdamTrajectory integrate(const AdamState& initial, const Objective& obj,
                         const AdamParams& params, const IntegratorConfig& config);

/// Recover the continuous-time rates from a discrete parameterization:
/// lambda1 = (1 - beta1)/eta, lambda2 = (1 - beta2)/eta, delta = eta.
LambdaMapping lambda_from_beta(const DiscreteAdamParams& p);

/// Forward mapping beta = 1 - delta*lambda; rejects delta*lambda >= 1.
DiscreteAdamParams beta_from_lambda(const AdamParams& params, double delta);

}  // namespace gradflow
