#pragma once
#include <antibunch/random.hpp>
#include <antibunch/types.hpp>

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace antibunch {

/// Effective three-state scheme of the color center. The two fast intra-band
/// decays of the four-level picture are folded into the pump and radiative
/// rates.
enum class State : int { ground = 0, excited = 1, shelf = 2 };

struct Position {
  double x_um = 0.0;
  double y_um = 0.0;
  double z_um = 0.0;

  friend bool operator==(const Position&, const Position&) = default;
};

/// Rate-equation parameters of one emitter. All rates in 1/ns.
struct EmitterParams {
  double pump_rate = 0.0;                 ///< ground -> excited
  double radiative_rate = 1.0 / 11.6;     ///< excited -> ground, emits a photon
  double shelve_rate = 0.0;               ///< excited -> shelf
  double deshelve_rate = 0.0;             ///< shelf -> ground, pump-independent part
  double laser_deshelve_coeff = 0.0;      ///< extra shelf -> ground per unit pump rate
  Position position{};

  double lifetime_ns() const { return 1.0 / radiative_rate; }
  /// deshelve_rate + laser_deshelve_coeff * pump_rate
  double effective_deshelve_rate() const { return deshelve_rate + laser_deshelve_coeff * pump_rate; }
  EmitterParams with_pump(double pump) const;
  /// Throws ParameterError for negative rates or a non-positive radiative rate.
  void validate() const;

  friend bool operator==(const EmitterParams&, const EmitterParams&) = default;
};

/// Generator of the population dynamics dp/dt = M p over (ground, excited,
/// shelf). Entry (i, j) is the rate from state j into state i; columns sum to 0.
struct RateMatrix {
  std::array<std::array<double, 3>, 3> entries{};

  double operator()(State to, State from) const {
    return entries[static_cast<int>(to)][static_cast<int>(from)];
  }
  double column_sum(int col) const { return entries[0][col] + entries[1][col] + entries[2][col]; }
  bool is_zero() const;
  /// Off-diagonals non-negative and columns summing to 0 (relative tolerance).
  bool is_valid_generator(double tol = 1e-12) const;
};

struct Populations {
  double ground = 0.0;
  double excited = 0.0;
  double shelf = 0.0;

  double sum() const { return ground + excited + shelf; }
};

RateMatrix build_rate_matrix(const EmitterParams& params);

/// Stationary distribution of the generator. Throws DataError when the
/// stationary distribution is not unique. A state with no incoming or outgoing
/// rates at all is treated as unreachable from the rest of the chain and gets
/// zero population.
Populations steady_state(const RateMatrix& m);

/// Photon emission rate Γ·p_e in 1/s.
double emission_rate_per_s(const EmitterParams& params);

/// Coefficients of g2(t) = 1 - (1 + a) exp(-|t|/tau1) + a exp(-|t|/tau2),
/// with tau1 <= tau2. Without shelving a = 0 and tau2 = 1/deshelve (or +inf).
struct G2Decomposition {
  double tau1_ns = 0.0;
  double tau2_ns = 0.0;
  double a = 0.0;
};

/// Throws ParameterError when the conditional evolution has complex
/// eigenvalues (damped oscillatory g2), which the real form cannot express.
G2Decomposition g2_decomposition(const EmitterParams& params);

/// Conditional excited-state population after an emission, normalized to the
/// steady state. Even in t. Handles real, repeated and complex eigenvalues.
double analytic_g2(const EmitterParams& params, double t_ns);

/// Mean of analytic_g2 over [t0, t1) computed from the closed-form integral.
double analytic_g2_bin_average(const EmitterParams& params, double t0_ns, double t1_ns);

/// Exact continuous-time Markov chain trajectory of one emitter. Starts from a
/// state drawn from the steady state at t = 0; emits a photon at every
/// excited -> ground transition. Output depends only on (params, seed), never
/// on how generate_until calls are chunked.
class EmissionSimulator {
 public:
  EmissionSimulator(const EmitterParams& params, std::uint64_t seed, std::uint32_t source = 0);

  /// Appends all photons with time < end in order.
  void generate_until(TimePs end, std::vector<Photon>& out);
  State state() const { return state_; }

 private:
  void schedule_next();

  Engine engine_;
  std::uint32_t source_;
  double pump_;
  double decay_total_;
  double radiative_fraction_;
  double deshelve_;
  State state_ = State::ground;
  TimePs event_ps_ = 0;     // integer part of the pending event time
  double event_frac_ = 0.0; // fractional picoseconds, in [0, 1)
  State pending_to_ = State::ground;
  bool pending_photon_ = false;
};

/// Merged trajectories of several independent emitters. Emitter i uses the
/// substream derive_seed(seed, emission, i) and tags photons with source i.
class MultiEmitterSource {
 public:
  MultiEmitterSource(std::span<const EmitterParams> emitters, std::uint64_t seed);

  void generate_until(TimePs end, std::vector<Photon>& out);
  std::size_t emitter_count() const { return sims_.size(); }

 private:
  std::vector<EmissionSimulator> sims_;
};

PhotonStream simulate_photon_stream(const EmitterParams& params, TimePs duration, std::uint64_t seed);

/// Throws ParameterError for an empty list. For one emitter the result equals
/// simulate_photon_stream with the same seed.
PhotonStream multi_emitter_stream(std::span<const EmitterParams> emitters, TimePs duration,
                                  std::uint64_t seed);

/// Targets from which the default preset is derived. The excitation is linear
/// in laser power with pump_per_mW; shelving and pump are solved so that the
/// steady-state emission rate and the saturation power hit the targets.
struct CalibrationTargets {
  double lifetime_ns = 11.6;
  double emission_rate_per_s = 1.4e6;     ///< at reference power
  double reference_power_mW = 15.0;
  double saturation_power_mW = 50.0;      ///< inferred, not measured
  double shelf_lifetime_ns = 500.0;       ///< inferred, not measured
  double laser_deshelve_coeff = 0.0;
};

struct CalibratedEmitter {
  EmitterParams params;  ///< at the reference power
  double pump_per_mW = 0.0;
  CalibrationTargets targets;

  EmitterParams at_power(double power_mW) const { return params.with_pump(pump_per_mW * power_mW); }
};

CalibratedEmitter calibrate_emitter(const CalibrationTargets& targets);

/// Preset reproducing the reported lifetime (11.6 ns) and inferred emission
/// rate (1.4e6 /s at 15 mW). The fully saturated emission bound is the
/// radiative rate itself, 1/11.6 ns = 8.6e7 /s.
CalibratedEmitter paper_emitter();

}  // namespace antibunch
