#include "antibunch/least_squares.hpp"

#include "antibunch/types.hpp"

#include <cmath>
#include <limits>

namespace antibunch {

namespace {

struct Linearization {
  Eigen::MatrixXd hessian;  // J^T J
  Eigen::VectorXd gradient; // J^T r
  double chi2 = 0.0;
};

bool evaluate(std::span<const double> x, std::span<const double> y, std::span<const double> sigma,
              const Eigen::VectorXd& p, const CurveModel& model, Linearization& out) {
  const auto n = static_cast<Eigen::Index>(p.size());
  out.hessian = Eigen::MatrixXd::Zero(n, n);
  out.gradient = Eigen::VectorXd::Zero(n);
  out.chi2 = 0.0;
  Eigen::VectorXd grad(n);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = model(x[i], p, grad);
    const double inv = 1.0 / sigma[i];
    const double r = (y[i] - f) * inv;
    grad *= inv;
    out.hessian.selfadjointView<Eigen::Lower>().rankUpdate(grad);
    out.gradient += r * grad;
    out.chi2 += r * r;
  }
  out.hessian = out.hessian.selfadjointView<Eigen::Lower>();
  return std::isfinite(out.chi2);
}

double chi2_only(std::span<const double> x, std::span<const double> y, std::span<const double> sigma,
                 const Eigen::VectorXd& p, const CurveModel& model) {
  Eigen::VectorXd grad(p.size());
  double chi2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = (y[i] - model(x[i], p, grad)) / sigma[i];
    chi2 += r * r;
  }
  return std::isfinite(chi2) ? chi2 : std::numeric_limits<double>::infinity();
}

Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& h) {
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(h);
  return cod.pseudoInverse();
}

}  // namespace

CurveFitResult weighted_curve_fit(std::span<const double> x, std::span<const double> y,
                                  std::span<const double> sigma, Eigen::VectorXd initial,
                                  const CurveModel& model, const ParamCheck& check,
                                  const CurveFitOptions& options) {
  if (x.size() != y.size() || x.size() != sigma.size()) throw ParameterError("x, y, sigma sizes differ");
  if (x.size() < static_cast<std::size_t>(initial.size())) throw ParameterError("fewer points than parameters");
  double weight_sum = 0.0;
  for (double s : sigma) {
    if (!(s > 0.0) || !std::isfinite(s)) throw ParameterError("error bars must be positive");
    weight_sum += 1.0 / (s * s);
  }
  if (check && !check(initial)) throw ParameterError("initial guess outside the model domain");

  CurveFitResult result;
  Eigen::VectorXd p = std::move(initial);
  Linearization lin;
  if (!evaluate(x, y, sigma, p, model, lin)) throw ParameterError("model is not finite at the initial guess");

  const double norm = std::sqrt(weight_sum);
  auto gradient_norm = [&](const Linearization& l) {
    const Eigen::VectorXd step = pseudo_inverse(l.hessian) * l.gradient;
    return std::sqrt(std::max(0.0, l.gradient.dot(step))) / norm;
  };

  double lambda = options.initial_damping;
  double gnorm = gradient_norm(lin);
  int it = 0;
  while (it < options.max_iterations) {
    if (gnorm < options.gradient_tolerance) {
      result.converged = true;
      break;
    }
    ++it;
    Eigen::MatrixXd damped = lin.hessian;
    for (Eigen::Index k = 0; k < damped.rows(); ++k) {
      const double d = lin.hessian(k, k);
      damped(k, k) += lambda * (d > 0.0 ? d : 1e-12);
    }
    const Eigen::VectorXd delta = damped.ldlt().solve(lin.gradient);
    const Eigen::VectorXd trial = p + delta;
    const bool in_domain = trial.allFinite() && (!check || check(trial));
    const double trial_chi2 = in_domain ? chi2_only(x, y, sigma, trial, model) : INFINITY;
    if (trial_chi2 < lin.chi2) {
      p = trial;
      evaluate(x, y, sigma, p, model, lin);
      gnorm = gradient_norm(lin);
      lambda = std::max(lambda / 10.0, 1e-15);
    } else {
      lambda *= 10.0;
      if (lambda > 1e20) {
        // No downhill step left. If the predicted decrease is at the round-off
        // level of chi^2 this is the numerical minimum.
        const double predicted = gnorm * gnorm * weight_sum;
        if (predicted <= 1e3 * std::numeric_limits<double>::epsilon() * std::max(lin.chi2, 1.0))
          result.converged = true;
        break;
      }
    }
  }
  if (!result.converged && gnorm < options.gradient_tolerance) result.converged = true;

  result.params = p;
  result.covariance = pseudo_inverse(lin.hessian);
  result.chi2 = lin.chi2;
  result.gradient_norm = gnorm;
  result.iterations = it;
  return result;
}

}  // namespace antibunch
