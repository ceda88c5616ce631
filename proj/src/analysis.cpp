#include "antibunch/analysis.hpp"

#include "antibunch/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace antibunch {

G2Curve curve_from_correlation(const CorrelationResult& r) {
  G2Curve c;
  c.t_ns.reserve(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) c.t_ns.push_back(r.histogram.center_ns(i));
  c.g2 = r.g2;
  c.sigma = r.g2_sigma;
  return c;
}

double model_g2(double t_ns, double tau1_ns, double tau2_ns, double a) {
  if (!(tau1_ns > 0.0) || !(tau2_ns > 0.0)) throw ParameterError("timescales must be positive");
  const double t = std::abs(t_ns);
  return 1.0 - (1.0 + a) * std::exp(-t / tau1_ns) + a * std::exp(-t / tau2_ns);
}

G2Decomposition initial_guess(const G2Curve& curve) {
  const std::size_t n = curve.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return std::abs(curve.t_ns[i]) < std::abs(curve.t_ns[j]); });

  // moving average over neighbours in |t|, both sides pooled
  constexpr std::size_t half = 3;
  std::vector<double> at(n), smooth(n);
  for (std::size_t k = 0; k < n; ++k) {
    at[k] = std::abs(curve.t_ns[order[k]]);
    const std::size_t lo = k > half ? k - half : 0;
    const std::size_t hi = std::min(n, k + half + 1);
    double acc = 0.0;
    for (std::size_t m = lo; m < hi; ++m) acc += curve.g2[order[m]];
    smooth[k] = acc / static_cast<double>(hi - lo);
  }
  const double dip = std::min(smooth[0], 1.0);
  const auto peak_it = std::max_element(smooth.begin(), smooth.end());
  const double plateau = std::max(*peak_it, 1.0);
  const double level = 0.5 * (dip + plateau);

  double spacing = at.back() / static_cast<double>(std::max<std::size_t>(n / 2, 1));
  for (std::size_t k = 1; k < n; ++k) {
    if (at[k] > at[k - 1]) {
      spacing = std::min(spacing, at[k] - at[k - 1]);
    }
  }
  double t_half = at.back() / 10.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (smooth[k] >= level) {
      t_half = at[k];
      break;
    }
  }
  G2Decomposition g;
  g.tau1_ns = std::max(t_half / std::log(2.0), 0.5 * spacing);
  g.a = std::max(plateau - 1.0, 1e-3);

  const std::size_t peak = static_cast<std::size_t>(peak_it - smooth.begin());
  const double target = 1.0 + g.a / std::exp(1.0);
  g.tau2_ns = 0.5 * at.back();
  for (std::size_t k = peak; k < n; ++k) {
    if (smooth[k] <= target) {
      g.tau2_ns = at[k];
      break;
    }
  }
  g.tau2_ns = std::max(g.tau2_ns, 2.0 * g.tau1_ns);
  return g;
}

FitResult fit_g2(const G2Curve& curve, std::optional<G2Decomposition> guess, const CurveFitOptions& options) {
  if (curve.size() < 10) throw ParameterError("fit needs at least 10 bins");
  if (curve.g2.size() != curve.size() || curve.sigma.size() != curve.size())
    throw ParameterError("curve columns have different lengths");
  for (double s : curve.sigma)
    if (!(s > 0.0)) throw ParameterError("error bars must be positive");

  const G2Decomposition start = guess ? *guess : initial_guess(curve);
  Eigen::VectorXd p0(3);
  p0 << start.tau1_ns, start.tau2_ns, start.a;

  const CurveModel model = [](double t, const Eigen::VectorXd& p, Eigen::Ref<Eigen::VectorXd> grad) {
    const double u = std::abs(t);
    const double e1 = std::exp(-u / p[0]);
    const double e2 = std::exp(-u / p[1]);
    grad[0] = -(1.0 + p[2]) * e1 * u / (p[0] * p[0]);
    grad[1] = p[2] * e2 * u / (p[1] * p[1]);
    grad[2] = e2 - e1;
    return 1.0 - (1.0 + p[2]) * e1 + p[2] * e2;
  };
  const ParamCheck check = [](const Eigen::VectorXd& p) {
    return p[0] > 0.0 && p[1] > 0.0 && std::isfinite(p[0]) && std::isfinite(p[1]) && std::isfinite(p[2]);
  };
  const CurveFitResult r = weighted_curve_fit(curve.t_ns, curve.g2, curve.sigma, p0, model, check, options);

  FitResult f;
  f.initial_guess = start;
  f.tau1_ns = r.params[0];
  f.tau2_ns = r.params[1];
  f.a = r.params[2];
  f.g2_zero = model_g2(0.0, f.tau1_ns, f.tau2_ns, f.a);
  f.chi2 = r.chi2;
  f.residual_norm = std::sqrt(r.chi2);
  f.dof = curve.size() - 3;
  f.tau1_sigma = std::sqrt(std::max(0.0, r.covariance(0, 0)));
  f.tau2_sigma = std::sqrt(std::max(0.0, r.covariance(1, 1)));
  f.a_sigma = std::sqrt(std::max(0.0, r.covariance(2, 2)));
  f.gradient_norm = r.gradient_norm;
  f.iterations = r.iterations;
  f.converged = r.converged;

  // Dip depth at the innermost sampled delay versus the typical error bar.
  double t_in = INFINITY;
  for (double t : curve.t_ns) t_in = std::min(t_in, std::abs(t));
  std::vector<double> s(curve.sigma);
  std::nth_element(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(s.size() / 2), s.end());
  const double depth = 1.0 - model_g2(t_in, f.tau1_ns, f.tau2_ns, f.a);
  f.degenerate = !(depth > 3.0 * s[s.size() / 2]);
  return f;
}

BunchingTable bunching_vs_power(const EmitterParams& preset, std::span<const double> pump_values,
                                const SimulationBudget& budget) {
  if (pump_values.empty()) throw ParameterError("need at least one pump value");
  BunchingTable table;
  for (std::size_t i = 0; i < pump_values.size(); ++i) {
    PipelineSettings s;
    s.emitters = {preset.with_pump(pump_values[i])};
    s.detection = budget.detection;
    s.correlator = budget.correlator;
    s.duration = budget.duration;
    s.seed = derive_seed(budget.seed, StreamTag::trials, i);
    const PipelineResult run = run_pipeline(s);

    BunchingRow row;
    row.pump_rate = pump_values[i];
    row.rho = run.rho;
    row.fit = fit_g2(curve_from_correlation(run.correlation));
    try {
      row.truth = g2_decomposition(s.emitters.front());
    } catch (const ParameterError&) {
      row.truth = {};
    }
    table.rows.push_back(row);
  }
  table.a_increasing = table.rows.size() >= 2;
  table.tau2_decreasing = table.rows.size() >= 2;
  for (std::size_t i = 1; i < table.rows.size(); ++i) {
    if (!(table.rows[i].fit.a > table.rows[i - 1].fit.a)) table.a_increasing = false;
    if (!(table.rows[i].fit.tau2_ns < table.rows[i - 1].fit.tau2_ns)) table.tau2_decreasing = false;
  }
  return table;
}

}  // namespace antibunch
