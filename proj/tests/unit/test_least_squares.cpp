#include <antibunch/least_squares.hpp>
#include <antibunch/types.hpp>

#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

using namespace antibunch;

namespace {

const CurveModel exp_decay = [](double x, const Eigen::VectorXd& p, Eigen::Ref<Eigen::VectorXd> g) {
  const double e = std::exp(-x / p[1]);
  g[0] = e;
  g[1] = p[0] * e * x / (p[1] * p[1]);
  g[2] = 1.0;
  return p[0] * e + p[2];
};

}  // namespace

TEST_CASE("exact data is fitted exactly") {
  std::vector<double> x, y, s;
  for (int i = 0; i < 60; ++i) {
    x.push_back(i * 0.5);
    y.push_back(4.0 * std::exp(-x.back() / 6.0) + 0.5);
    s.push_back(0.1);
  }
  Eigen::VectorXd p0(3);
  p0 << 1.0, 2.0, 0.0;
  const CurveFitResult r = weighted_curve_fit(x, y, s, p0, exp_decay);
  CHECK(r.converged);
  CHECK(r.params[0] == doctest::Approx(4.0).epsilon(1e-7));
  CHECK(r.params[1] == doctest::Approx(6.0).epsilon(1e-7));
  CHECK(r.params[2] == doctest::Approx(0.5).epsilon(1e-7));
  CHECK(r.chi2 < 1e-10);
  CHECK(r.gradient_norm < 1e-8);
}

TEST_CASE("linear model: one step to the normal-equation solution and covariance") {
  std::mt19937_64 eng(4);
  std::normal_distribution<double> noise(0.0, 0.3);
  std::vector<double> x, y, s;
  for (int i = 0; i < 40; ++i) {
    x.push_back(i);
    y.push_back(1.5 + 0.25 * i + noise(eng));
    s.push_back(0.3);
  }
  const CurveModel line = [](double xi, const Eigen::VectorXd& p, Eigen::Ref<Eigen::VectorXd> g) {
    g[0] = 1.0;
    g[1] = xi;
    return p[0] + p[1] * xi;
  };
  const CurveFitResult r = weighted_curve_fit(x, y, s, Eigen::Vector2d(0, 0), line);
  Eigen::MatrixXd a(40, 2);
  Eigen::VectorXd b(40);
  for (int i = 0; i < 40; ++i) {
    a(i, 0) = 1.0 / 0.3;
    a(i, 1) = x[i] / 0.3;
    b[i] = y[i] / 0.3;
  }
  const Eigen::VectorXd ref = a.colPivHouseholderQr().solve(b);
  const Eigen::MatrixXd cov = (a.transpose() * a).inverse();
  CHECK(r.params[0] == doctest::Approx(ref[0]).epsilon(1e-9));
  CHECK(r.params[1] == doctest::Approx(ref[1]).epsilon(1e-9));
  CHECK(r.covariance(0, 0) == doctest::Approx(cov(0, 0)).epsilon(1e-9));
  CHECK(r.covariance(0, 1) == doctest::Approx(cov(0, 1)).epsilon(1e-9));
}

TEST_CASE("error bar scale does not change the estimate") {
  std::mt19937_64 eng(8);
  std::normal_distribution<double> noise(0.0, 0.05);
  std::vector<double> x, y, s1, s2;
  for (int i = 0; i < 80; ++i) {
    x.push_back(i * 0.4);
    y.push_back(2.0 * std::exp(-x.back() / 5.0) + 0.3 + noise(eng));
    s1.push_back(0.05 * (1 + i % 3));
    s2.push_back(s1.back() * 37.0);
  }
  Eigen::VectorXd p0(3);
  p0 << 1.0, 3.0, 0.0;
  const CurveFitResult a = weighted_curve_fit(x, y, s1, p0, exp_decay);
  const CurveFitResult b = weighted_curve_fit(x, y, s2, p0, exp_decay);
  REQUIRE(a.converged);
  REQUIRE(b.converged);
  for (int k = 0; k < 3; ++k) CHECK(a.params[k] == doctest::Approx(b.params[k]).epsilon(1e-9));
}

TEST_CASE("non-convergence is reported with the best parameters") {
  std::vector<double> x, y, s;
  for (int i = 0; i < 30; ++i) {
    x.push_back(i);
    y.push_back(std::exp(-i / 4.0));
    s.push_back(0.01);
  }
  Eigen::VectorXd p0(3);
  p0 << 0.1, 40.0, 0.5;
  CurveFitOptions o;
  o.max_iterations = 2;
  const CurveFitResult r = weighted_curve_fit(x, y, s, p0, exp_decay, {}, o);
  CHECK_FALSE(r.converged);
  CHECK(r.iterations == 2);
  CHECK(r.params.allFinite());
}

TEST_CASE("input validation") {
  std::vector<double> x{1, 2, 3}, y{1, 2, 3}, s{1, 0, 1};
  CHECK_THROWS_AS(weighted_curve_fit(x, y, s, Eigen::Vector3d(1, 1, 1), exp_decay), ParameterError);
  s = {1, 1};
  CHECK_THROWS_AS(weighted_curve_fit(x, y, s, Eigen::Vector3d(1, 1, 1), exp_decay), ParameterError);
  s = {1, 1, 1};
  const ParamCheck positive = [](const Eigen::VectorXd& p) { return p[1] > 0; };
  CHECK_THROWS_AS(weighted_curve_fit(x, y, s, Eigen::Vector3d(1, -1, 1), exp_decay, positive), ParameterError);
}
