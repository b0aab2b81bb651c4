#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gradflow/harness.hpp"

using gradflow::DataSource;
using gradflow::ExperimentConfig;
using gradflow::Method;
using gradflow::ObjectiveKind;
using gradflow::OptimizerKind;

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::size_t count_lines(const std::string& text) {
  std::size_t lines = 0;
  for (char c : text) {
    if (c == '\n') ++lines;
  }
  return lines;
}

}  // namespace

TEST_CASE("normal equations solver") {
  SUBCASE("identity system") {
    gradflow::Dataset data;
    data.design = Eigen::MatrixXd::Identity(2, 2);
    data.targets = Eigen::VectorXd(2);
    data.targets << 1.0, 2.0;
    const auto solution = gradflow::solve_least_squares_optimum(data);
    CHECK(solution.x.isApprox(data.targets));
    CHECK(solution.f_star == doctest::Approx(0.0));
  }

  SUBCASE("overdetermined single column") {
    gradflow::Dataset data;
    data.design = Eigen::MatrixXd::Ones(2, 1);
    data.targets = Eigen::VectorXd(2);
    data.targets << 0.0, 2.0;
    const auto solution = gradflow::solve_least_squares_optimum(data);
    CHECK(solution.x[0] == doctest::Approx(1.0));
    CHECK(solution.f_star == doctest::Approx(1.0));
  }

  SUBCASE("rank-deficient design is rejected") {
    gradflow::Dataset data;
    data.design = Eigen::MatrixXd::Zero(3, 2);
    data.design.col(0).setOnes();
    data.design.col(1).setOnes();  // exact collinearity
    data.targets = Eigen::VectorXd::Ones(3);
    CHECK_THROWS_WITH_AS(gradflow::solve_least_squares_optimum(data),
                         doctest::Contains("feature"), std::invalid_argument);
  }

  SUBCASE("gradient at the solution is numerically zero") {
    const auto data = gradflow::synthetic_dataset(123, 80, 5, 0.3);
    const auto solution = gradflow::solve_least_squares_optimum(data);
    const double grad_norm =
        (data.design.transpose() * (data.design * solution.x - data.targets)).norm();
    CHECK(grad_norm <= 1e-8 * (1.0 + (data.design.transpose() * data.targets).norm()));
  }
}

TEST_CASE("synthetic dataset generator") {
  const auto a = gradflow::synthetic_dataset(7, 30, 4, 0.2);
  const auto b = gradflow::synthetic_dataset(7, 30, 4, 0.2);
  CHECK(a.design == b.design);
  CHECK(a.targets == b.targets);

  const auto c = gradflow::synthetic_dataset(8, 30, 4, 0.2);
  CHECK(a.design != c.design);

  // noiseless targets are exactly consistent with the planted solution
  const auto exact = gradflow::synthetic_dataset(7, 100, 6, 0.0);
  const auto solution = gradflow::solve_least_squares_optimum(exact);
  CHECK(solution.f_star <= 1e-16 * 100);

  const auto noisy = gradflow::synthetic_dataset(7, 100, 6, 0.1);
  CHECK(gradflow::solve_least_squares_optimum(noisy).f_star > 0.0);

  CHECK_THROWS_AS(gradflow::synthetic_dataset(7, 4, 4, 0.1), std::invalid_argument);
}

TEST_CASE("run experiment over a gadagrad sweep") {
  ExperimentConfig config;
  config.optimizer = OptimizerKind::gadagrad;
  config.objective = ObjectiveKind::quadratic;
  config.quad_dim = 2;
  config.sweep = {0.3, 0.5, 1.0};
  config.x0 = 1.0;
  config.xc0 = 1.0;
  config.integrator = {0.01, Method::rk4, 50.0, 50};
  config.diagnostics = {"energy"};
  config.grad_threshold = 1e-3;

  const auto result = gradflow::run_experiment(config);
  REQUIRE(result.entries.size() == 3);
  for (const auto& entry : result.entries) {
    CHECK_FALSE(entry.failed);
    CHECK(entry.final_grad_norm < 1e-3);
    CHECK(entry.diagnostic_series.count("energy") == 1);
    REQUIRE(entry.reports.size() == 1);
    CHECK(entry.reports[0].pass);
  }
  CHECK(result.entries[2].within_theorem_range == false);  // alpha = 1
  CHECK(result.f_star == 0.0);

  // optimality gap stays non-negative when the minimum is known
  for (const auto& entry : result.entries) {
    for (double gap : entry.optimality_gap) CHECK(gap >= -1e-12);
  }
}

TEST_CASE("run experiment flags out-of-range adam parameters") {
  ExperimentConfig config;
  config.optimizer = OptimizerKind::adam;
  config.objective = ObjectiveKind::least_squares;
  config.source = DataSource::synthetic;
  config.seed = 777;
  config.n = 100;
  config.d = 6;
  config.noise = 0.1;
  config.lambda2 = 0.0067;
  config.sweep = {0.067, 0.67, 6.7};
  config.integrator = {0.01, Method::rk4, 20.0, 20};
  config.diagnostics = {"lyapunov"};

  const auto result = gradflow::run_experiment(config);
  REQUIRE(result.entries.size() == 3);
  CHECK(result.entries[0].within_theorem_range);
  CHECK(result.entries[1].within_theorem_range);
  // lambda1 = 6.7 violates lambda1 < 1; the bias correction is not real-valued
  // there, so the entry is flagged and its run fails fast instead of crashing
  CHECK((result.entries[2].failed || !result.entries[2].within_theorem_range));
  CHECK_FALSE(result.entries[2].within_theorem_range);
  CHECK(result.f_star.has_value());
}

TEST_CASE("config validation") {
  ExperimentConfig config;
  config.sweep = {};
  CHECK_THROWS_WITH_AS(gradflow::run_experiment(config), doctest::Contains("sweep"),
                       std::invalid_argument);

  config.sweep = {0.5};
  config.xc0 = 0.0;
  CHECK_THROWS_AS(gradflow::validate(config), std::invalid_argument);

  config.xc0 = 0.01;
  config.theorem_mode = true;
  config.mu0 = 0.5;
  CHECK_THROWS_WITH_AS(gradflow::validate(config), doctest::Contains("theorem"),
                       std::invalid_argument);

  config.mu0 = 0.0;
  config.diagnostics = {"lyapunov"};  // gadagrad run cannot request it
  config.optimizer = OptimizerKind::gadagrad;
  CHECK_THROWS_AS(gradflow::validate(config), std::invalid_argument);
}

TEST_CASE("csv output") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "gradflow_harness_test";
  fs::create_directories(dir);

  ExperimentConfig config;
  config.optimizer = OptimizerKind::gadagrad;
  config.objective = ObjectiveKind::quadratic;
  config.quad_dim = 1;
  config.sweep = {0.5};
  config.x0 = 1.0;
  config.xc0 = 1.0;

  SUBCASE("single sample trajectory gives a header plus one row") {
    config.integrator = {0.01, Method::euler, 0.0, 1};
    const auto result = gradflow::run_experiment(config);
    const fs::path path = dir / "single.csv";
    gradflow::write_csv(result, path.string());
    CHECK(count_lines(read_file(path)) == 2);
  }

  SUBCASE("two sweep values with ten samples each give twenty-one lines") {
    // 9 steps at stride 1 -> initial + 9 = 10 samples per entry
    config.sweep = {0.3, 0.5};
    config.integrator = {0.1, Method::euler, 0.9, 1};
    const auto result = gradflow::run_experiment(config);
    for (const auto& entry : result.entries) CHECK(entry.t.size() == 10);
    const fs::path path = dir / "two.csv";
    gradflow::write_csv(result, path.string());
    CHECK(count_lines(read_file(path)) == 21);
  }

  SUBCASE("values round trip through seventeen significant digits") {
    config.integrator = {0.01, Method::rk4, 1.0, 3};
    const auto result = gradflow::run_experiment(config);
    const fs::path path = dir / "roundtrip.csv";
    gradflow::write_csv(result, path.string());

    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "sweep_value,t,f,grad_norm,optimality_gap");
    std::size_t row = 0;
    while (std::getline(in, line)) {
      std::stringstream fields(line);
      std::string field;
      std::vector<double> parsed;
      while (std::getline(fields, field, ',')) parsed.push_back(std::stod(field));
      REQUIRE(parsed.size() == 5);
      const auto& entry = result.entries[0];
      CHECK(parsed[0] == entry.sweep_value);
      CHECK(parsed[1] == entry.t[row]);
      CHECK(parsed[2] == entry.f[row]);
      CHECK(parsed[3] == entry.grad_norm[row]);
      CHECK(parsed[4] == entry.optimality_gap[row]);
      ++row;
    }
    CHECK(row == result.entries[0].t.size());
  }

  SUBCASE("identical configs give byte-identical files") {
    config.sweep = {0.3, 0.5, 0.8};
    config.integrator = {0.01, Method::rk4, 5.0, 10};
    config.diagnostics = {"energy"};
    const fs::path first = dir / "a.csv";
    const fs::path second = dir / "b.csv";
    gradflow::write_csv(gradflow::run_experiment(config), first.string());
    gradflow::write_csv(gradflow::run_experiment(config), second.string());
    const std::string a = read_file(first);
    CHECK(!a.empty());
    CHECK(a == read_file(second));
  }

  fs::remove_all(dir);
}

TEST_CASE("alpha sweep ordering on synthetic least squares") {
  ExperimentConfig config;
  config.optimizer = OptimizerKind::gadagrad;
  config.objective = ObjectiveKind::least_squares;
  config.source = DataSource::synthetic;
  config.seed = 777;
  config.n = 100;
  config.d = 6;
  config.noise = 0.1;
  config.sweep = {0.2, 0.5, 0.8, 1.0};
  config.x0 = 0.0;
  config.xc0 = 1.0;
  config.integrator = {0.01, Method::rk4, 5.0, 100};

  const auto result = gradflow::run_experiment(config);
  REQUIRE(result.entries.size() == 4);
  for (std::size_t i = 1; i < result.entries.size(); ++i) {
    CHECK(result.entries[i].final_f >= result.entries[i - 1].final_f);
  }

  // f* is the global minimum, so the gap series never goes negative
  for (const auto& entry : result.entries) {
    for (double gap : entry.optimality_gap) CHECK(gap >= -1e-8);
  }
}

TEST_CASE("config file parsing") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "gradflow_config_test";
  fs::create_directories(dir);
  const fs::path path = dir / "run.cfg";
  {
    std::ofstream out(path);
    out << "# comment line\n"
        << "optimizer = adam\n"
        << "objective = least_squares\n"
        << "source = synthetic\n"
        << "seed = 11\n"
        << "lambda2 = 0.0067\n"
        << "sweep = 0.5, 0.67\n"
        << "delta = 0.05   # trailing comment\n"
        << "horizon = 10\n"
        << "method = euler\n"
        << "record_every = 4\n"
        << "diagnostics = lyapunov\n"
        << "out = result.csv\n";
  }
  const auto config = gradflow::load_config(path.string());
  CHECK(config.optimizer == OptimizerKind::adam);
  CHECK(config.objective == ObjectiveKind::least_squares);
  CHECK(config.seed == 11);
  CHECK(config.lambda2 == doctest::Approx(0.0067));
  CHECK(config.sweep == std::vector<double>{0.5, 0.67});
  CHECK(config.integrator.delta == doctest::Approx(0.05));
  CHECK(config.integrator.method == Method::euler);
  CHECK(config.integrator.record_every == 4);
  CHECK(config.diagnostics == std::vector<std::string>{"lyapunov"});
  CHECK(config.out == "result.csv");

  {
    std::ofstream out(path);
    out << "unknown_key = 3\n";
  }
  CHECK_THROWS_WITH_AS(gradflow::load_config(path.string()), doctest::Contains("unknown"),
                       std::invalid_argument);

  {
    std::ofstream out(path);
    out << "delta 0.05\n";
  }
  CHECK_THROWS_AS(gradflow::load_config(path.string()), std::invalid_argument);

  CHECK_THROWS_AS(gradflow::load_config((dir / "missing.cfg").string()),
                  std::invalid_argument);
  fs::remove_all(dir);
}
