#pragma once
#include <Eigen/Dense>

#include <functional>
#include <span>

namespace antibunch {

/// Model value at x; writes d(model)/d(param) into grad.
using CurveModel = std::function<double(double x, const Eigen::VectorXd& params, Eigen::Ref<Eigen::VectorXd> grad)>;
/// Rejects parameter vectors outside the model's domain.
using ParamCheck = std::function<bool(const Eigen::VectorXd& params)>;

struct CurveFitOptions {
  int max_iterations = 500;
  double gradient_tolerance = 1e-8;
  double initial_damping = 1e-3;
};

struct CurveFitResult {
  Eigen::VectorXd params;
  Eigen::MatrixXd covariance;  ///< inverse of J^T W J at the solution
  double chi2 = 0.0;
  /// sqrt(g^T H^-1 g / sum(1/sigma^2)), independent of a common error-bar scale.
  double gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Damped Gauss-Newton (Levenberg-Marquardt with Marquardt diagonal scaling)
/// minimizing sum(((y - f(x)) / sigma)^2). Stops when gradient_norm drops
/// below the tolerance or after max_iterations; on failure the best
/// parameters so far are returned with converged = false.
CurveFitResult weighted_curve_fit(std::span<const double> x, std::span<const double> y,
                                  std::span<const double> sigma, Eigen::VectorXd initial,
                                  const CurveModel& model, const ParamCheck& check = {},
                                  const CurveFitOptions& options = {});

}  // namespace antibunch
