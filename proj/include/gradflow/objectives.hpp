#pragma once

#include <Eigen/Core>

#include <functional>
#include <memory>
#include <optional>
#include <string>

namespace gradflow {

/// Design matrix / target pair for the data-driven objectives.
struct Dataset {
  Eigen::MatrixXd design;   // n x d
  Eigen::VectorXd targets;  // n

  Eigen::Index rows() const { return design.rows(); }
  Eigen::Index cols() const { return design.cols(); }
};

/// A smooth objective with an exact gradient. Objectives are immutable after
/// construction and all evaluations are pure, so they can be shared freely
/// across threads.
struct Objective {
  int dimension = 0;
  std::function<double(const Eigen::VectorXd&)> value;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
  std::optional<double> known_minimum;
  // True when value(x) >= 0 for every x. The Lyapunov diagnostic requires it.
  bool nonnegative = false;
  std::string name;
};

/// f(x) = (curvature/2) * |x|^2, minimum 0 at the origin.
Objective quadratic_objective(int dimension, double curvature);

/// f(x) = 1/2 * |Ax - B|^2. The minimum is left unset; it is computed on
/// demand by the normal-equations solver in the harness.
Objective least_squares_objective(Dataset data);

/// Mean cross-entropy of a logistic model; targets must be 0/1.
Objective logistic_objective(Dataset data);

/// Central-difference gradient, the reference oracle for analytic gradients.
Eigen::VectorXd finite_difference_gradient(const Objective& obj,
                                           const Eigen::VectorXd& x, double h);

}  // namespace gradflow
