#include "gradflow/integrators.hpp"

#include <cmath>
#include <functional>

namespace gradflow {

namespace {

bool finite(const GAdaGradState& s) { return s.x.allFinite() && s.xc.allFinite(); }
bool finite(const AdamState& s) {
  return s.x.allFinite() && s.mu.allFinite() && s.v.allFinite();
}

}  // namespace

GAdaGradState euler_step_gadagrad(const GAdaGradState& state, const Objective& obj,
                                  const GAdaGradParams& params, double delta) {
  if (delta < 0.0) {
    throw std::invalid_argument("euler_step_gadagrad: delta must be non-negative");
  }
  const GAdaGradDerivative d = gadagrad_field(state, obj, params);
  GAdaGradState next;
  next.xc = state.xc + delta * d.dxc;
  next.x = state.x + delta * d.dx;  // dx already divides by the pre-update xc
  next.t = state.t + delta;
  return next;
}

AdamState euler_step_adam(const AdamState& state, const Objective& obj,
                          const AdamParams& params, double delta, bool textbook_order) {
  if (delta < 0.0) {
    throw std::invalid_argument("euler_step_adam: delta must be non-negative");
  }
  if (delta * params.lambda2 >= 1.0 || delta * params.lambda1 >= 1.0) {
    throw std::invalid_argument(
        "euler_step_adam: delta*lambda must be < 1 to keep the moment estimates positive "
        "(delta = " + std::to_string(delta) + ")");
  }
  const AdamDerivative d = adam_field(state, obj, params);
  AdamState next;
  next.mu = state.mu + delta * d.dmu;
  next.v = state.v + delta * d.dv;
  if (textbook_order) {
    const double a = bias_correction(state.t, params);
    next.x = state.x.array() - (delta / a) * next.mu.array() / next.v.array().sqrt();
  } else {
    next.x = state.x + delta * d.dx;  // pre-update moments
  }
  next.t = state.t + delta;
  return next;
}

GAdaGradState rk4_step_gadagrad(const GAdaGradState& state, const Objective& obj,
                                const GAdaGradParams& params, double delta) {
  auto at = [&](double frac, const GAdaGradDerivative& k) {
    GAdaGradState s;
    s.x = state.x + frac * delta * k.dx;
    s.xc = state.xc + frac * delta * k.dxc;
    s.t = state.t + frac * delta;
    return s;
  };
  const GAdaGradDerivative k1 = gadagrad_field(state, obj, params);
  const GAdaGradDerivative k2 = gadagrad_field(at(0.5, k1), obj, params);
  const GAdaGradDerivative k3 = gadagrad_field(at(0.5, k2), obj, params);
  const GAdaGradDerivative k4 = gadagrad_field(at(1.0, k3), obj, params);
  GAdaGradState next;
  next.x = state.x + (delta / 6.0) * (k1.dx + 2.0 * k2.dx + 2.0 * k3.dx + k4.dx);
  next.xc = state.xc + (delta / 6.0) * (k1.dxc + 2.0 * k2.dxc + 2.0 * k3.dxc + k4.dxc);
  next.t = state.t + delta;
  return next;
}

AdamState rk4_step_adam(const AdamState& state, const Objective& obj,
                        const AdamParams& params, double delta) {
  auto at = [&](double frac, const AdamDerivative& k) {
    AdamState s;
    s.x = state.x + frac * delta * k.dx;
    s.mu = state.mu + frac * delta * k.dmu;
    s.v = state.v + frac * delta * k.dv;
    s.t = state.t + frac * delta;  // stage time drives the bias correction
    return s;
  };
  const AdamDerivative k1 = adam_field(state, obj, params);
  const AdamDerivative k2 = adam_field(at(0.5, k1), obj, params);
  const AdamDerivative k3 = adam_field(at(0.5, k2), obj, params);
  const AdamDerivative k4 = adam_field(at(1.0, k3), obj, params);
  AdamState next;
  next.x = state.x + (delta / 6.0) * (k1.dx + 2.0 * k2.dx + 2.0 * k3.dx + k4.dx);
  next.mu = state.mu + (delta / 6.0) * (k1.dmu + 2.0 * k2.dmu + 2.0 * k3.dmu + k4.dmu);
  next.v = state.v + (delta / 6.0) * (k1.dv + 2.0 * k2.dv + 2.0 * k3.dv + k4.dv);
  next.t = state.t + delta;
  return next;
}

namespace {

template <class State, class Step>
Trajectory<State> integrate_impl(const State& initial, const Objective& obj,
                                 const IntegratorConfig& config, Step step) {
  if (!(config.delta > 0.0)) {
    throw std::invalid_argument("integrate: delta must be positive");
  }
  if (config.record_every < 1) {
    throw std::invalid_argument("integrate: record_every must be >= 1");
  }
  if (config.horizon < initial.t - 1e-12) {
    throw std::invalid_argument("integrate: horizon lies before the initial time");
  }

  const long n_steps =
      static_cast<long>(std::floor((config.horizon - initial.t) / config.delta + 1e-9));

  Trajectory<State> traj;
  traj.samples.reserve(static_cast<std::size_t>(n_steps / config.record_every) + 2);

  auto record = [&](const State& s) {
    TrajectorySample<State> sample;
    sample.state = s;
    sample.f = obj.value(s.x);
    sample.grad_norm = obj.gradient(s.x).norm();
    traj.samples.push_back(std::move(sample));
  };

  State current = initial;
  record(current);
  for (long k = 1; k <= n_steps; ++k) {
    try {
      current = step(current, config.delta);
    } catch (const std::domain_error& err) {
      // a stage left the field's domain (non-positive controller state or
      // a NaN that propagated into it)
      throw NumericalError("integrate: step " + std::to_string(k) + " failed: " + err.what());
    }
    if (!finite(current)) {
      throw NumericalError("integrate: non-finite state at step " + std::to_string(k) +
                           " (t = " + std::to_string(current.t) + ")");
    }
    if (k % config.record_every == 0 || k == n_steps) {
      record(current);
    }
  }
  return traj;
}

}  // namespace

GAdaGradTrajectory integrate(const GAdaGradState& initial, const Objective& obj,
                             const GAdaGradParams& params, const IntegratorConfig& config) {
  auto step = [&](const GAdaGradState& s, double delta) {
    return config.method == Method::euler ? euler_step_gadagrad(s, obj, params, delta)
                                          : rk4_step_gadagrad(s, obj, params, delta);
  };
  return integrate_impl(initial, obj, config, step);
}

AdamTrajectory integrate(const AdamState& initial, const Objective& obj,
                         const AdamParams& params, const IntegratorConfig& config) {
  auto step = [&](const AdamState& s, double delta) {
    return config.method == Method::euler
               ? euler_step_adam(s, obj, params, delta, config.textbook_order)
               : rk4_step_adam(s, obj, params, delta);
  };
  return integrate_impl(initial, obj, config, step);
}

LambdaMapping lambda_from_beta(const DiscreteAdamParams& p) {
  if (p.beta1 < 0.0 || p.beta1 >= 1.0 || p.beta2 < 0.0 || p.beta2 >= 1.0) {
    throw std::invalid_argument("lambda_from_beta: beta values must lie in [0, 1)");
  }
  if (!(p.eta > 0.0)) {
    throw std::invalid_argument("lambda_from_beta: eta must be positive");
  }
  const double lambda1 = (1.0 - p.beta1) / p.eta;
  const double lambda2 = (1.0 - p.beta2) / p.eta;
  AdamParams params(lambda1, lambda2, /*allow_out_of_range=*/true);
  return LambdaMapping{params, p.eta, params.within_theorem_range()};
}

DiscreteAdamParams beta_from_lambda(const AdamParams& params, double delta) {
  if (!(delta > 0.0)) {
    throw std::invalid_argument("beta_from_lambda: delta must be positive");
  }
  if (delta * params.lambda1 >= 1.0 || delta * params.lambda2 >= 1.0) {
    throw std::invalid_argument("beta_from_lambda: delta*lambda must be < 1");
  }
  return DiscreteAdamParams{1.0 - delta * params.lambda1, 1.0 - delta * params.lambda2, delta};
}

}  // namespace gradflow
