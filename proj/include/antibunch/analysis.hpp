#pragma once
#include <antibunch/correlator.hpp>
#include <antibunch/detection.hpp>
#include <antibunch/emitter.hpp>
#include <antibunch/least_squares.hpp>

#include <optional>
#include <string>
#include <vector>

namespace antibunch {

/// Binned g2 samples. t_ns are bin centers.
struct G2Curve {
  std::vector<double> t_ns;
  std::vector<double> g2;
  std::vector<double> sigma;

  std::size_t size() const { return t_ns.size(); }
};

/// Background-corrected curve of a correlation result, sampled at bin centers.
G2Curve curve_from_correlation(const CorrelationResult& r);

/// Three-level form 1 - (1 + a) exp(-|t|/tau1) + a exp(-|t|/tau2).
double model_g2(double t_ns, double tau1_ns, double tau2_ns, double a);
inline double model_g2(double t_ns, const G2Decomposition& p) { return model_g2(t_ns, p.tau1_ns, p.tau2_ns, p.a); }

struct FitResult {
  double tau1_ns = 0.0;
  double tau2_ns = 0.0;
  double a = 0.0;
  double g2_zero = 0.0;        ///< model value at t = 0
  double residual_norm = 0.0;  ///< sqrt(chi^2)
  double chi2 = 0.0;
  std::size_t dof = 0;
  double tau1_sigma = 0.0;
  double tau2_sigma = 0.0;
  double a_sigma = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  /// The dip is not resolved by the sampled delays (e.g. a flat curve).
  bool degenerate = false;
  G2Decomposition initial_guess{};

  G2Decomposition params() const { return {tau1_ns, tau2_ns, a}; }
  double reduced_chi2() const { return dof > 0 ? chi2 / static_cast<double>(dof) : 0.0; }
};

/// Starting point from the curve's dip depth, half-recovery delay and
/// bunching plateau.
G2Decomposition initial_guess(const G2Curve& curve);

/// Weighted damped least-squares fit of model_g2 to the curve. Needs at least
/// 10 bins with positive error bars; the t = 0 bin is included. Throws
/// ParameterError on invalid input; non-convergence is reported through
/// FitResult::converged with the best parameters reached.
FitResult fit_g2(const G2Curve& curve, std::optional<G2Decomposition> guess = std::nullopt,
                 const CurveFitOptions& options = {});

/// Simulation settings shared by every row of a power study.
struct SimulationBudget {
  TimePs duration = 10 * kPsPerSecond;
  DetectionConfig detection = ideal_detection();
  CorrelatorSettings correlator{};
  std::uint64_t seed = 1;
};

struct BunchingRow {
  double pump_rate = 0.0;   ///< 1/ns
  double rho = 1.0;
  FitResult fit;
  G2Decomposition truth{};  ///< eigen-decomposition of the simulated emitter
};

struct BunchingTable {
  std::vector<BunchingRow> rows;
  bool a_increasing = false;
  bool tau2_decreasing = false;
};

/// Runs simulate -> detect -> correlate -> fit for every pump value, with the
/// emitter's laser-assisted deshelving coefficient applied at each pump.
BunchingTable bunching_vs_power(const EmitterParams& preset, std::span<const double> pump_values,
                                const SimulationBudget& budget);

}  // namespace antibunch
