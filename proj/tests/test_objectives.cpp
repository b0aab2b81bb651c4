#include <doctest.h>

#include <cmath>
#include <random>

#include "gradflow/objectives.hpp"

using gradflow::Dataset;
using gradflow::Objective;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> values) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

Dataset make_dataset(std::initializer_list<std::initializer_list<double>> rows,
                     std::initializer_list<double> targets) {
  Dataset d;
  d.design.resize(static_cast<Eigen::Index>(rows.size()),
                  static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index r = 0;
  for (const auto& row : rows) {
    Eigen::Index c = 0;
    for (double x : row) d.design(r, c++) = x;
    ++r;
  }
  d.targets = vec(targets);
  return d;
}

}  // namespace

TEST_CASE("quadratic objective values and gradients") {
  const Objective q1 = gradflow::quadratic_objective(1, 1.0);
  CHECK(q1.value(vec({2.0})) == doctest::Approx(2.0));
  CHECK(q1.gradient(vec({2.0}))[0] == doctest::Approx(2.0));

  const Objective q3 = gradflow::quadratic_objective(3, 1.0);
  CHECK(q3.value(Eigen::VectorXd::Zero(3)) == 0.0);
  CHECK(q3.gradient(Eigen::VectorXd::Zero(3)).norm() == 0.0);

  const Objective q2 = gradflow::quadratic_objective(2, 4.0);
  CHECK(q2.value(vec({1.0, 1.0})) == doctest::Approx(4.0));
  CHECK(q2.gradient(vec({1.0, 1.0})).isApprox(vec({4.0, 4.0})));
  CHECK(*q2.known_minimum == 0.0);

  CHECK_THROWS_AS(gradflow::quadratic_objective(0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(gradflow::quadratic_objective(2, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(gradflow::quadratic_objective(2, -1.0), std::invalid_argument);
}

TEST_CASE("least squares objective") {
  const Objective exact = gradflow::least_squares_objective(make_dataset({{1.0}}, {0.0}));
  CHECK(exact.value(vec({0.0})) == 0.0);
  CHECK(exact.gradient(vec({0.0}))[0] == 0.0);

  // residuals (1, -1): value 1/2 (1 + 1) = 1, gradient 1*1 + 1*(-1) = 0
  const Objective two = gradflow::least_squares_objective(make_dataset({{1.0}, {1.0}}, {1.0, 3.0}));
  CHECK(two.value(vec({2.0})) == doctest::Approx(1.0));
  CHECK(two.gradient(vec({2.0}))[0] == doctest::Approx(0.0));

  const Objective diag =
      gradflow::least_squares_objective(make_dataset({{2.0, 0.0}, {0.0, 1.0}}, {2.0, 1.0}));
  CHECK(diag.value(vec({0.0, 0.0})) == doctest::Approx(2.5));
  CHECK(diag.gradient(vec({0.0, 0.0})).isApprox(vec({-4.0, -1.0})));

  CHECK_THROWS_AS(diag.value(vec({1.0})), std::invalid_argument);  // dimension mismatch
}

TEST_CASE("logistic objective") {
  const double log2 = std::log(2.0);

  const Objective zero_feature = gradflow::logistic_objective(make_dataset({{0.0}}, {1.0}));
  CHECK(zero_feature.value(vec({3.7})) == doctest::Approx(log2));
  CHECK(zero_feature.gradient(vec({3.7}))[0] == doctest::Approx(0.0));

  const Objective single = gradflow::logistic_objective(make_dataset({{1.0}}, {1.0}));
  CHECK(single.value(vec({0.0})) == doctest::Approx(log2));
  CHECK(single.gradient(vec({0.0}))[0] == doctest::Approx(-0.5));

  // both rows contribute -0.5 after averaging
  const Objective pair =
      gradflow::logistic_objective(make_dataset({{1.0}, {-1.0}}, {1.0, 0.0}));
  CHECK(pair.gradient(vec({0.0}))[0] == doctest::Approx(-0.5));

  CHECK_THROWS_AS(gradflow::logistic_objective(make_dataset({{1.0}}, {0.5})),
                  std::invalid_argument);
}

TEST_CASE("finite difference gradient matches the examples") {
  const Objective quad = gradflow::quadratic_objective(1, 1.0);
  CHECK(gradflow::finite_difference_gradient(quad, vec({1.0}), 1e-5)[0] ==
        doctest::Approx(1.0).epsilon(1e-8));

  const Objective two = gradflow::least_squares_objective(make_dataset({{1.0}, {1.0}}, {1.0, 3.0}));
  CHECK(gradflow::finite_difference_gradient(two, vec({2.0}), 1e-5)[0] ==
        doctest::Approx(0.0).epsilon(1e-8));

  const Objective single = gradflow::logistic_objective(make_dataset({{1.0}}, {1.0}));
  CHECK(gradflow::finite_difference_gradient(single, vec({0.0}), 1e-5)[0] ==
        doctest::Approx(-0.5).epsilon(1e-8));

  CHECK_THROWS_AS(gradflow::finite_difference_gradient(quad, vec({1.0}), 0.0),
                  std::invalid_argument);
}

TEST_CASE("analytic gradients agree with central differences at random points") {
  std::mt19937_64 rng(20240811);
  std::uniform_real_distribution<double> uniform(-2.0, 2.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  Dataset data;
  data.design.resize(12, 3);
  for (Eigen::Index i = 0; i < 12; ++i)
    for (Eigen::Index j = 0; j < 3; ++j) data.design(i, j) = normal(rng);
  data.targets.resize(12);
  for (Eigen::Index i = 0; i < 12; ++i) data.targets[i] = normal(rng);

  Dataset binary = data;
  for (Eigen::Index i = 0; i < 12; ++i) binary.targets[i] = binary.targets[i] > 0.0 ? 1.0 : 0.0;

  const Objective objectives[] = {
      gradflow::quadratic_objective(3, 2.0),
      gradflow::least_squares_objective(data),
      gradflow::logistic_objective(binary),
  };

  for (const Objective& obj : objectives) {
    for (int trial = 0; trial < 100; ++trial) {
      Eigen::VectorXd x(obj.dimension);
      for (int i = 0; i < obj.dimension; ++i) x[i] = uniform(rng);
      const Eigen::VectorXd analytic = obj.gradient(x);
      const Eigen::VectorXd numeric = gradflow::finite_difference_gradient(obj, x, 1e-5);
      const double bound = 1e-5 * (1.0 + analytic.lpNorm<Eigen::Infinity>());
      CHECK((analytic - numeric).lpNorm<Eigen::Infinity>() <= bound);
    }
  }
}

TEST_CASE("data-driven objectives are non-negative") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal(0.0, 1.0);
  Dataset data;
  data.design.resize(8, 2);
  data.targets.resize(8);
  for (Eigen::Index i = 0; i < 8; ++i) {
    data.design(i, 0) = normal(rng);
    data.design(i, 1) = normal(rng);
    data.targets[i] = i % 2;
  }
  const Objective ls = gradflow::least_squares_objective(data);
  const Objective lo = gradflow::logistic_objective(data);
  CHECK(ls.nonnegative);
  CHECK(lo.nonnegative);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::VectorXd x = Eigen::VectorXd::NullaryExpr(2, [&](Eigen::Index) {
      return 4.0 * normal(rng);
    });
    CHECK(ls.value(x) >= 0.0);
    CHECK(lo.value(x) >= 0.0);
  }
}
