#include <antibunch/emitter.hpp>

#include <doctest.h>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>

using namespace antibunch;

namespace {

Eigen::Matrix3d as_eigen(const RateMatrix& m) {
  Eigen::Matrix3d e;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) e(i, j) = m.entries[i][j];
  return e;
}

/// Stationary vector from a dense solve: M p = 0 with one row replaced by
/// the normalization.
Eigen::Vector3d lu_steady_state(const RateMatrix& m) {
  Eigen::Matrix3d a = as_eigen(m);
  a.row(2).setOnes();
  return a.fullPivLu().solve(Eigen::Vector3d(0, 0, 1));
}

/// Conditional excited population after a photon, integrated with RK4 and
/// divided by its steady-state value.
double rk4_g2(const EmitterParams& p, double t_ns, double dt = 1e-3) {
  const Eigen::Matrix3d m = as_eigen(build_rate_matrix(p));
  Eigen::Vector3d x(1, 0, 0);
  const int steps = static_cast<int>(std::ceil(std::abs(t_ns) / dt));
  const double h = steps ? std::abs(t_ns) / steps : 0.0;
  for (int i = 0; i < steps; ++i) {
    const Eigen::Vector3d k1 = m * x;
    const Eigen::Vector3d k2 = m * (x + 0.5 * h * k1);
    const Eigen::Vector3d k3 = m * (x + 0.5 * h * k2);
    const Eigen::Vector3d k4 = m * (x + h * k3);
    x += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  return x[1] / steady_state(build_rate_matrix(p)).excited;
}

EmitterParams random_params(std::mt19937_64& eng) {
  std::uniform_real_distribution<double> u(-3.0, 0.0);
  EmitterParams p;
  p.pump_rate = std::pow(10.0, u(eng));
  p.radiative_rate = std::pow(10.0, u(eng));
  p.shelve_rate = std::pow(10.0, u(eng));
  p.deshelve_rate = std::pow(10.0, u(eng));
  return p;
}

}  // namespace

TEST_CASE("rate matrix is a generator with the documented entries") {
  const EmitterParams p = paper_emitter().params;
  const RateMatrix m = build_rate_matrix(p);
  CHECK(m.is_valid_generator());
  for (int c = 0; c < 3; ++c) CHECK(std::abs(m.column_sum(c)) < 1e-15);
  CHECK(m(State::excited, State::ground) == p.pump_rate);
  CHECK(m(State::ground, State::excited) == p.radiative_rate);
  CHECK(m(State::shelf, State::excited) == p.shelve_rate);
  CHECK(m(State::ground, State::shelf) == doctest::Approx(p.effective_deshelve_rate()));
}

TEST_CASE("steady state agrees with a dense linear solve") {
  std::mt19937_64 eng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const EmitterParams p = random_params(eng);
    const RateMatrix m = build_rate_matrix(p);
    const Populations s = steady_state(m);
    const Eigen::Vector3d ref = lu_steady_state(m);
    CHECK(s.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.ground == doctest::Approx(ref[0]).epsilon(1e-10));
    CHECK(s.excited == doctest::Approx(ref[1]).epsilon(1e-10));
    CHECK(s.shelf == doctest::Approx(ref[2]).epsilon(1e-10));
    const Eigen::Vector3d r = as_eigen(m) * Eigen::Vector3d(s.ground, s.excited, s.shelf);
    CHECK(r.cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("isolated shelf gets no population; empty generator throws") {
  EmitterParams p;
  p.pump_rate = 0.01;
  const Populations s = steady_state(build_rate_matrix(p));
  CHECK(s.shelf == 0.0);
  CHECK(s.excited == doctest::Approx(0.01 / (0.01 + p.radiative_rate)));
  RateMatrix zero;
  CHECK_THROWS_AS(steady_state(zero), DataError);
}

TEST_CASE("parameter validation") {
  EmitterParams p;
  p.pump_rate = -1.0;
  CHECK_THROWS_AS(p.validate(), ParameterError);
  p.pump_rate = 0.1;
  p.radiative_rate = 0.0;
  CHECK_THROWS_AS(p.validate(), ParameterError);
}

TEST_CASE("default calibration reproduces the reported numbers") {
  const CalibratedEmitter c = paper_emitter();
  CHECK(c.params.lifetime_ns() == doctest::Approx(11.6));
  CHECK(emission_rate_per_s(c.params) == doctest::Approx(1.4e6).epsilon(1e-9));
  CHECK(c.params.pump_rate == doctest::Approx(15.0 * c.pump_per_mW));
  CHECK(1.0 / c.params.deshelve_rate == doctest::Approx(500.0));
  // half of the infinite-pump emission at the saturation power
  const double s_inf = emission_rate_per_s(c.params.with_pump(1e9));
  CHECK(emission_rate_per_s(c.at_power(50.0)) == doctest::Approx(0.5 * s_inf).epsilon(1e-6));
  // Gamma-limited bound: 1/11.6 ns = 8.6e7 /s, the reported 9e7 to 5%
  EmitterParams unshelved = c.params.with_pump(1e9);
  unshelved.shelve_rate = 0.0;
  CHECK(emission_rate_per_s(unshelved) == doctest::Approx(9e7).epsilon(0.05));
}

TEST_CASE("analytic g2 matches the ODE solution") {
  SUBCASE("paper preset, real eigenvalues") {
    const EmitterParams p = paper_emitter().params;
    for (double t : {0.0, 0.5, 3.0, 11.6, 40.0, 150.0, 600.0}) CHECK(analytic_g2(p, t) == doctest::Approx(rk4_g2(p, t)).epsilon(1e-8));
  }
  SUBCASE("complex eigenvalues") {
    EmitterParams p;
    p.pump_rate = 1.0;
    p.radiative_rate = 0.1;
    p.shelve_rate = 1.0;
    p.deshelve_rate = 1.0;
    for (double t : {0.0, 0.7, 2.0, 5.0, 20.0}) CHECK(analytic_g2(p, t) == doctest::Approx(rk4_g2(p, t)).epsilon(1e-8));
    CHECK_THROWS_AS(g2_decomposition(p), ParameterError);
  }
  SUBCASE("repeated eigenvalue") {
    EmitterParams p;
    p.pump_rate = 1.0;
    p.radiative_rate = 1.0;
    p.shelve_rate = 1.0;
    p.deshelve_rate = 1.0;
    for (double t : {0.0, 0.3, 1.0, 4.0}) CHECK(analytic_g2(p, t) == doctest::Approx(rk4_g2(p, t)).epsilon(1e-8));
  }
  SUBCASE("no shelving: two-level form") {
    EmitterParams p;
    p.pump_rate = 0.05;
    for (double t : {0.0, 2.0, 10.0, 50.0})
      CHECK(analytic_g2(p, t) == doctest::Approx(1.0 - std::exp(-(0.05 + p.radiative_rate) * t)).epsilon(1e-12));
  }
}

TEST_CASE("g2 is even, vanishes at zero and tends to one") {
  std::mt19937_64 eng(5);
  for (int i = 0; i < 50; ++i) {
    const EmitterParams p = random_params(eng);
    CHECK(std::abs(analytic_g2(p, 0.0)) < 1e-12);
    CHECK(analytic_g2(p, 3.7) == analytic_g2(p, -3.7));
    CHECK(analytic_g2(p, 1e6) == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("decomposition eigenvalues agree with the rate matrix spectrum") {
  std::mt19937_64 eng(17);
  int checked = 0;
  for (int i = 0; i < 100; ++i) {
    const EmitterParams p = random_params(eng);
    G2Decomposition d;
    try {
      d = g2_decomposition(p);
    } catch (const ParameterError&) {
      continue;  // complex pair
    }
    ++checked;
    Eigen::EigenSolver<Eigen::Matrix3d> es(as_eigen(build_rate_matrix(p)));
    std::vector<double> ev;
    for (int k = 0; k < 3; ++k) ev.push_back(es.eigenvalues()[k].real());
    std::sort(ev.begin(), ev.end());  // two negative, one ~0
    CHECK(-1.0 / d.tau1_ns == doctest::Approx(ev[0]).epsilon(1e-8));
    CHECK(-1.0 / d.tau2_ns == doctest::Approx(ev[1]).epsilon(1e-8));
    for (double t : {0.3, 5.0, 80.0}) {
      const double model = 1.0 - (1.0 + d.a) * std::exp(-t / d.tau1_ns) + d.a * std::exp(-t / d.tau2_ns);
      CHECK(model == doctest::Approx(analytic_g2(p, t)).epsilon(1e-9));
    }
  }
  CHECK(checked > 50);
}

TEST_CASE("paper preset decomposition") {
  const G2Decomposition d = g2_decomposition(paper_emitter().params);
  CHECK(d.tau1_ns == doctest::Approx(8.738).epsilon(1e-3));
  CHECK(d.tau2_ns == doctest::Approx(390.8).epsilon(1e-3));
  CHECK(d.a == doctest::Approx(0.2857).epsilon(1e-3));
}

TEST_CASE("bin average equals numerical quadrature") {
  const EmitterParams p = paper_emitter().params;
  auto simpson = [&](double a, double b) {
    const int n = 2000;
    const double h = (b - a) / n;
    double s = analytic_g2(p, a) + analytic_g2(p, b);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * analytic_g2(p, a + i * h);
    return s * h / 3.0 / (b - a);
  };
  CHECK(analytic_g2_bin_average(p, 0.0, 1.0) == doctest::Approx(simpson(0.0, 1.0)).epsilon(1e-10));
  CHECK(analytic_g2_bin_average(p, -1.0, 0.0) == doctest::Approx(simpson(-1.0, 0.0)).epsilon(1e-10));
  CHECK(analytic_g2_bin_average(p, -0.4, 0.6) == doctest::Approx(0.4 * simpson(-0.4, 0.0) + 0.6 * simpson(0.0, 0.6)).epsilon(1e-10));
  CHECK(analytic_g2_bin_average(p, 30.0, 31.0) == doctest::Approx(simpson(30.0, 31.0)).epsilon(1e-10));
  CHECK(analytic_g2_bin_average(p, 0.0, 1.0) == doctest::Approx(0.0705).epsilon(2e-3));
  CHECK_THROWS_AS(analytic_g2_bin_average(p, 1.0, 1.0), ParameterError);
}

TEST_CASE("simulation is deterministic and chunking-independent") {
  const EmitterParams p = paper_emitter().params;
  const TimePs T = kPsPerSecond / 100;
  const PhotonStream a = simulate_photon_stream(p, T, 42);
  const PhotonStream b = simulate_photon_stream(p, T, 42);
  CHECK(a == b);
  CHECK(a.valid());
  EmissionSimulator sim(p, derive_seed(42, StreamTag::emission, 0));
  std::vector<Photon> chunked;
  std::mt19937_64 eng(1);
  for (TimePs t = 0; t < T;) {
    t = std::min(T, t + static_cast<TimePs>(eng() % 5'000'000'000ull));
    sim.generate_until(t, chunked);
  }
  CHECK(chunked == a.photons);
  CHECK(simulate_photon_stream(p, T, 43) != a);
}

TEST_CASE("emission rate of the simulation") {
  const EmitterParams p = paper_emitter().params;
  const PhotonStream s = simulate_photon_stream(p, kPsPerSecond / 2, 7);
  const double expected = 0.5 * emission_rate_per_s(p);
  // shelving makes the count super-Poissonian: Fano ~ 1 + 2 a tau2 R
  const G2Decomposition d = g2_decomposition(p);
  const double fano = 1.0 + 2.0 * d.a * d.tau2_ns * 1e-9 * emission_rate_per_s(p);
  CHECK(std::abs(static_cast<double>(s.size()) - expected) < 5.0 * std::sqrt(fano * expected));
}

TEST_CASE("multi-emitter streams") {
  const EmitterParams p = paper_emitter().params;
  const TimePs T = kPsPerSecond / 200;
  const std::vector<EmitterParams> one{p};
  CHECK(multi_emitter_stream(one, T, 9) == simulate_photon_stream(p, T, 9));
  const std::vector<EmitterParams> three{p, p, p};
  const PhotonStream m = multi_emitter_stream(three, T, 9);
  CHECK(m.valid());
  CHECK(m.source_count() == 3);
  CHECK_THROWS_AS(multi_emitter_stream(std::vector<EmitterParams>{}, T, 9), ParameterError);
  CHECK(multi_emitter_stream(one, 0, 9).empty());
}
