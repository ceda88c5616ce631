#include "antibunch/emitter.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>

namespace antibunch {

namespace {

using cplx = std::complex<double>;

constexpr int kG = 0;
constexpr int kE = 1;
constexpr int kS = 2;

// Nonzero eigenvalues of the generator and the coefficients of
//   p_e(t | ground at 0) / p_e(inf) = 1 + A1 exp(l1 t) + A2 exp(l2 t).
// Built from the trace and the sum of principal minors, which fix the
// characteristic polynomial lambda (lambda^2 - tr lambda + b).
struct G2Kernel {
  cplx l1, l2;
  cplx A1, A2;
  bool repeated = false;
  // repeated root: 1 + (A + B t) exp(l t)
  cplx l, A, B;

  double value(double t) const {
    t = std::abs(t);
    if (repeated) return 1.0 + ((A + B * t) * std::exp(l * t)).real();
    return 1.0 + (A1 * std::exp(l1 * t) + A2 * std::exp(l2 * t)).real();
  }

  // Integral of value() over [u0, u1] with 0 <= u0 <= u1.
  double integral(double u0, double u1) const {
    double acc = u1 - u0;
    if (repeated) {
      auto prim = [&](double u) {
        return std::exp(l * u) * (A / l + B * (u / l - 1.0 / (l * l)));
      };
      acc += (prim(u1) - prim(u0)).real();
    } else {
      acc += (A1 * (std::exp(l1 * u1) - std::exp(l1 * u0)) / l1).real();
      acc += (A2 * (std::exp(l2 * u1) - std::exp(l2 * u0)) / l2).real();
    }
    return acc;
  }
};

G2Kernel make_kernel(const EmitterParams& params) {
  params.validate();
  const RateMatrix m = build_rate_matrix(params);
  const Populations pop = steady_state(m);
  if (!(pop.excited > 0.0)) {
    throw ParameterError("g2 is undefined: steady-state excited population is zero");
  }
  const double kp = params.pump_rate;
  const double gamma = params.radiative_rate;
  const double ks = params.shelve_rate;
  const double kd = params.effective_deshelve_rate();

  const double tr = -(kp + gamma + ks + kd);
  const double b = kp * ks + kp * kd + (gamma + ks) * kd;
  const cplx disc = cplx(tr * tr - 4.0 * b, 0.0);
  const cplx root = std::sqrt(disc);
  // slope of the normalized excited population at t = 0
  const double slope = kp / pop.excited;

  G2Kernel k;
  const double scale = std::abs(tr);
  if (std::abs(root) <= 1e-10 * scale) {
    k.repeated = true;
    k.l = cplx(tr / 2.0, 0.0);
    k.A = -1.0;
    k.B = slope + k.l;
    return k;
  }
  // l1 is the fast (more negative real part) root
  k.l1 = (tr - root) / 2.0;
  k.l2 = (tr + root) / 2.0;
  if (k.l1.real() > k.l2.real()) std::swap(k.l1, k.l2);
  k.A1 = (slope + k.l2) / (k.l1 - k.l2);
  k.A2 = -1.0 - k.A1;
  return k;
}

void check_rate(double v, const char* name) {
  if (!(v >= 0.0) || !std::isfinite(v)) {
    throw ParameterError(std::string("rate must be finite and non-negative: ") + name);
  }
}

}  // namespace

EmitterParams EmitterParams::with_pump(double pump) const {
  EmitterParams p = *this;
  p.pump_rate = pump;
  return p;
}

void EmitterParams::validate() const {
  check_rate(pump_rate, "pump_rate");
  check_rate(shelve_rate, "shelve_rate");
  check_rate(deshelve_rate, "deshelve_rate");
  check_rate(laser_deshelve_coeff, "laser_deshelve_coeff");
  if (!(radiative_rate > 0.0) || !std::isfinite(radiative_rate)) {
    throw ParameterError("radiative_rate must be positive");
  }
}

bool RateMatrix::is_zero() const {
  for (const auto& row : entries)
    for (double v : row)
      if (v != 0.0) return false;
  return true;
}

bool RateMatrix::is_valid_generator(double tol) const {
  for (int j = 0; j < 3; ++j) {
    double scale = 0.0;
    for (int i = 0; i < 3; ++i) {
      if (i != j && entries[i][j] < 0.0) return false;
      scale = std::max(scale, std::abs(entries[i][j]));
    }
    if (std::abs(column_sum(j)) > tol * std::max(scale, 1e-300)) return false;
  }
  return true;
}

RateMatrix build_rate_matrix(const EmitterParams& params) {
  params.validate();
  const double kp = params.pump_rate;
  const double gamma = params.radiative_rate;
  const double ks = params.shelve_rate;
  const double kd = params.effective_deshelve_rate();
  RateMatrix m;
  auto& e = m.entries;
  e[kE][kG] = kp;
  e[kG][kG] = -kp;
  e[kG][kE] = gamma;
  e[kS][kE] = ks;
  e[kE][kE] = -(gamma + ks);
  e[kG][kS] = kd;
  e[kS][kS] = -kd;
  return m;
}

Populations steady_state(const RateMatrix& m) {
  if (!m.is_valid_generator(1e-9)) throw ParameterError("matrix is not a valid rate generator");
  if (m.is_zero()) throw DataError("zero generator has no unique steady state");
  const auto& e = m.entries;

  // A state with no connections at all is unreachable; solve the remaining pair.
  for (int iso = 0; iso < 3; ++iso) {
    bool isolated = true;
    for (int k = 0; k < 3; ++k) {
      if (k == iso) continue;
      if (e[iso][k] != 0.0 || e[k][iso] != 0.0) isolated = false;
    }
    if (!isolated) continue;
    const int a = iso == 0 ? 1 : 0;
    const int b = iso == 2 ? 1 : 2;
    const double into_a = e[a][b];
    const double into_b = e[b][a];
    const double total = into_a + into_b;
    if (!(total > 0.0)) throw DataError("generator has no unique steady state");
    std::array<double, 3> p{};
    p[a] = into_a / total;
    p[b] = into_b / total;
    return {p[0], p[1], p[2]};
  }

  // Matrix-tree theorem: each stationary weight is the principal 2x2 minor of
  // the generator with that state's row and column removed.
  auto minor = [&](int i, int j) { return e[i][i] * e[j][j] - e[i][j] * e[j][i]; };
  const double wg = minor(kE, kS);
  const double we = minor(kG, kS);
  const double ws = minor(kG, kE);
  const double total = wg + we + ws;
  double scale = 0.0;
  for (int i = 0; i < 3; ++i) scale = std::max(scale, std::abs(e[i][i]));
  if (!(total > 1e-14 * scale * scale)) throw DataError("generator has no unique steady state");
  return {wg / total, we / total, ws / total};
}

double emission_rate_per_s(const EmitterParams& params) {
  const Populations p = steady_state(build_rate_matrix(params));
  return params.radiative_rate * p.excited * 1e9;
}

G2Decomposition g2_decomposition(const EmitterParams& params) {
  params.validate();
  const double kp = params.pump_rate;
  const double gamma = params.radiative_rate;
  const double kd = params.effective_deshelve_rate();
  if (params.shelve_rate == 0.0) {
    if (!(kp > 0.0)) throw ParameterError("g2 is undefined without pumping");
    return {1.0 / (kp + gamma), kd > 0.0 ? 1.0 / kd : INFINITY, 0.0};
  }
  const G2Kernel k = make_kernel(params);
  if (k.repeated) throw ParameterError("repeated eigenvalue: g2 is not a sum of two exponentials");
  if (std::abs(k.l1.imag()) > 0.0 || std::abs(k.l2.imag()) > 0.0) {
    throw ParameterError("complex eigenvalues: g2 oscillates and has no two-exponential form");
  }
  G2Decomposition d;
  d.tau1_ns = -1.0 / k.l1.real();
  d.tau2_ns = -1.0 / k.l2.real();
  d.a = k.A2.real();
  return d;
}

double analytic_g2(const EmitterParams& params, double t_ns) {
  return make_kernel(params).value(t_ns);
}

double analytic_g2_bin_average(const EmitterParams& params, double t0_ns, double t1_ns) {
  if (!(t1_ns > t0_ns)) throw ParameterError("bin must have t1 > t0");
  const G2Kernel k = make_kernel(params);
  double acc = 0.0;
  if (t0_ns < 0.0) {
    const double hi = std::min(t1_ns, 0.0);
    acc += k.integral(-hi, -t0_ns);
  }
  if (t1_ns > 0.0) {
    const double lo = std::max(t0_ns, 0.0);
    acc += k.integral(lo, t1_ns);
  }
  return acc / (t1_ns - t0_ns);
}

EmissionSimulator::EmissionSimulator(const EmitterParams& params, std::uint64_t seed, std::uint32_t source)
    : engine_(seed), source_(source) {
  params.validate();
  pump_ = params.pump_rate;
  decay_total_ = params.radiative_rate + params.shelve_rate;
  radiative_fraction_ = params.radiative_rate / decay_total_;
  deshelve_ = params.effective_deshelve_rate();

  const Populations p = steady_state(build_rate_matrix(params));
  const double u = uniform01(engine_);
  if (u < p.ground) {
    state_ = State::ground;
  } else if (u < p.ground + p.excited) {
    state_ = State::excited;
  } else {
    state_ = State::shelf;
  }
  schedule_next();
}

void EmissionSimulator::schedule_next() {
  double rate = 0.0;
  switch (state_) {
    case State::ground:
      rate = pump_;
      pending_to_ = State::excited;
      pending_photon_ = false;
      break;
    case State::excited:
      rate = decay_total_;
      break;
    case State::shelf:
      rate = deshelve_;
      pending_to_ = State::ground;
      pending_photon_ = false;
      break;
  }
  if (!(rate > 0.0)) {
    event_ps_ = kNever;
    return;
  }
  const double wait_ps = exponential(engine_, rate) * static_cast<double>(kPsPerNs);
  if (state_ == State::excited) {
    pending_photon_ = uniform01(engine_) < radiative_fraction_;
    pending_to_ = pending_photon_ ? State::ground : State::shelf;
  }
  const double total = event_frac_ + wait_ps;
  const double whole = std::floor(total);
  if (whole >= static_cast<double>(kNever - event_ps_)) {
    event_ps_ = kNever;
    return;
  }
  event_ps_ += static_cast<TimePs>(whole);
  event_frac_ = total - whole;
}

void EmissionSimulator::generate_until(TimePs end, std::vector<Photon>& out) {
  while (event_ps_ < end) {
    if (pending_photon_) out.push_back({event_ps_, source_});
    state_ = pending_to_;
    schedule_next();
  }
}

MultiEmitterSource::MultiEmitterSource(std::span<const EmitterParams> emitters, std::uint64_t seed) {
  if (emitters.empty()) throw ParameterError("at least one emitter is required");
  sims_.reserve(emitters.size());
  for (std::size_t i = 0; i < emitters.size(); ++i) {
    sims_.emplace_back(emitters[i], derive_seed(seed, StreamTag::emission, i),
                       static_cast<std::uint32_t>(i));
  }
}

void MultiEmitterSource::generate_until(TimePs end, std::vector<Photon>& out) {
  const std::size_t start = out.size();
  std::vector<std::size_t> bounds{start};
  for (auto& sim : sims_) {
    sim.generate_until(end, out);
    bounds.push_back(out.size());
  }
  // pairwise in-place merges keep ties in emitter order
  const auto base = out.begin();
  for (std::size_t k = 2; k < bounds.size(); ++k) {
    std::inplace_merge(base + static_cast<std::ptrdiff_t>(start),
                       base + static_cast<std::ptrdiff_t>(bounds[k - 1]),
                       base + static_cast<std::ptrdiff_t>(bounds[k]),
                       [](const Photon& x, const Photon& y) { return x.time < y.time; });
  }
}

PhotonStream simulate_photon_stream(const EmitterParams& params, TimePs duration, std::uint64_t seed) {
  const std::array<EmitterParams, 1> one{params};
  return multi_emitter_stream(one, duration, seed);
}

PhotonStream multi_emitter_stream(std::span<const EmitterParams> emitters, TimePs duration,
                                  std::uint64_t seed) {
  if (duration < 0) throw ParameterError("duration must be non-negative");
  MultiEmitterSource source(emitters, seed);
  PhotonStream s;
  s.duration = duration;
  source.generate_until(duration, s.photons);
  return s;
}

CalibratedEmitter calibrate_emitter(const CalibrationTargets& t) {
  if (!(t.lifetime_ns > 0.0) || !(t.emission_rate_per_s > 0.0) || !(t.reference_power_mW > 0.0) ||
      !(t.saturation_power_mW > 0.0) || !(t.shelf_lifetime_ns > 0.0) || t.laser_deshelve_coeff < 0.0) {
    throw ParameterError("calibration targets must be positive");
  }
  const double gamma = 1.0 / t.lifetime_ns;
  const double kd = 1.0 / t.shelf_lifetime_ns;
  // Steady-state emission is S_max P / (P + P_sat) with
  //   S_max = gamma kd / (kd + ks),   P_sat = (gamma + ks) / ((1 + ks/kd) c)
  // for pump = c P.
  const double emission = t.emission_rate_per_s * 1e-9;
  const double s_max = emission * (t.reference_power_mW + t.saturation_power_mW) / t.reference_power_mW;
  if (!(s_max < gamma)) {
    throw ParameterError("targets need a saturated emission rate above the radiative rate");
  }
  const double ks = kd * (gamma / s_max - 1.0);
  const double c = (gamma + ks) / ((1.0 + ks / kd) * t.saturation_power_mW);

  CalibratedEmitter out;
  out.targets = t;
  out.pump_per_mW = c;
  out.params.radiative_rate = gamma;
  out.params.shelve_rate = ks;
  out.params.deshelve_rate = kd;
  out.params.laser_deshelve_coeff = t.laser_deshelve_coeff;
  out.params.pump_rate = c * t.reference_power_mW;
  return out;
}

CalibratedEmitter paper_emitter() { return calibrate_emitter(CalibrationTargets{}); }

}  // namespace antibunch
