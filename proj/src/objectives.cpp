#include "gradflow/objectives.hpp"

#include <cmath>
#include <stdexcept>

namespace gradflow {

namespace {

// Logistic function evaluated branch-by-sign so neither exp() overflows.
double sigmoid(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

constexpr double kLogFloor = 1e-12;  // keeps log() finite on saturated predictions

void check_dimension(const Eigen::VectorXd& x, Eigen::Index d, const char* what) {
  if (x.size() != d) {
    throw std::invalid_argument(std::string(what) + ": expected a vector of length " +
                                std::to_string(d) + ", got " + std::to_string(x.size()));
  }
}

}  // namespace

Objective quadratic_objective(int dimension, double curvature) {
  if (dimension < 1) {
    throw std::invalid_argument("quadratic_objective: dimension must be >= 1");
  }
  if (!(curvature > 0.0)) {
    throw std::invalid_argument("quadratic_objective: curvature must be positive");
  }
  Objective obj;
  obj.dimension = dimension;
  obj.value = [dimension, curvature](const Eigen::VectorXd& x) {
    check_dimension(x, dimension, "quadratic value");
    return 0.5 * curvature * x.squaredNorm();
  };
  obj.gradient = [dimension, curvature](const Eigen::VectorXd& x) {
    check_dimension(x, dimension, "quadratic gradient");
    return Eigen::VectorXd(curvature * x);
  };
  obj.known_minimum = 0.0;
  obj.nonnegative = true;
  obj.name = "quadratic";
  return obj;
}

Objective least_squares_objective(Dataset data) {
  if (!data.design.allFinite()) {
    throw std::invalid_argument("least_squares_objective: design matrix has non-finite entries");
  }
  if (data.targets.size() != data.design.rows()) {
    throw std::invalid_argument("least_squares_objective: targets length does not match rows");
  }
  auto shared = std::make_shared<const Dataset>(std::move(data));
  Objective obj;
  obj.dimension = static_cast<int>(shared->cols());
  obj.value = [shared](const Eigen::VectorXd& x) {
    check_dimension(x, shared->cols(), "least_squares value");
    return 0.5 * (shared->design * x - shared->targets).squaredNorm();
  };
  obj.gradient = [shared](const Eigen::VectorXd& x) {
    check_dimension(x, shared->cols(), "least_squares gradient");
    return Eigen::VectorXd(shared->design.transpose() * (shared->design * x - shared->targets));
  };
  obj.nonnegative = true;
  obj.name = "least_squares";
  return obj;
}

Objective logistic_objective(Dataset data) {
  if (data.targets.size() != data.design.rows()) {
    throw std::invalid_argument("logistic_objective: targets length does not match rows");
  }
  for (Eigen::Index i = 0; i < data.targets.size(); ++i) {
    const double b = data.targets[i];
    if (b != 0.0 && b != 1.0) {
      throw std::invalid_argument("logistic_objective: target " + std::to_string(i) +
                                  " is " + std::to_string(b) + ", expected 0 or 1");
    }
  }
  auto shared = std::make_shared<const Dataset>(std::move(data));
  const double n = static_cast<double>(shared->rows());
  Objective obj;
  obj.dimension = static_cast<int>(shared->cols());
  obj.value = [shared, n](const Eigen::VectorXd& x) {
    check_dimension(x, shared->cols(), "logistic value");
    const Eigen::VectorXd z = shared->design * x;
    double total = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      const double p = sigmoid(z[i]);
      const double b = shared->targets[i];
      total += -b * std::log(std::max(p, kLogFloor)) -
               (1.0 - b) * std::log(std::max(1.0 - p, kLogFloor));
    }
    return total / n;
  };
  obj.gradient = [shared, n](const Eigen::VectorXd& x) {
    check_dimension(x, shared->cols(), "logistic gradient");
    Eigen::VectorXd p = shared->design * x;
    for (Eigen::Index i = 0; i < p.size(); ++i) p[i] = sigmoid(p[i]);
    return Eigen::VectorXd(shared->design.transpose() * (p - shared->targets) / n);
  };
  obj.nonnegative = true;
  obj.name = "logistic";
  return obj;
}

Eigen::VectorXd finite_difference_gradient(const Objective& obj, const Eigen::VectorXd& x,
                                           double h) {
  if (!(h > 0.0)) {
    throw std::invalid_argument("finite_difference_gradient: h must be positive");
  }
  Eigen::VectorXd grad(x.size());
  Eigen::VectorXd probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double fp = obj.value(probe);
    probe[i] = x[i] - h;
    const double fm = obj.value(probe);
    probe[i] = x[i];
    grad[i] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

}  // namespace gradflow
