#pragma once

#include <functional>
#include <vector>

namespace resforge {

/// Residual evaluator: fills `out` (fixed length) for the given
/// parameter vector and returns false if the point is infeasible.
using ResidualFn = std::function<bool(const std::vector<double>&, std::vector<double>&)>;

struct LevMarOptions {
    int max_iterations = 500;
    double residual_rel_tol = 1e-10; // relative change of the residual norm
    double step_tol = 1e-12;        // scaled step norm
    double initial_damping = 1e-3;
    /// Typical magnitude per parameter, used for finite-difference steps
    /// and the step-norm scale. Empty means |x| with a floor of 1.
    std::vector<double> typical_scale;
};

struct LevMarResult {
    std::vector<double> params;
    double residual_norm = 0.0; // sum of squared residuals at the optimum
    bool converged = false;
    int n_iterations = 0;
    /// Residual norms of accepted iterates, starting with the initial point.
    std::vector<double> objective_history;
    /// Covariance of the parameters: sigma^2 (J^T J)^{-1} with
    /// sigma^2 = residual_norm / (m - p). Row-major p x p.
    std::vector<double> covariance;
    /// cond(J) estimated from the scale-normalized J^T J at the optimum.
    double condition_number = 0.0;
    /// Unit direction of least curvature (eigenvector of the smallest
    /// eigenvalue of the normalized J^T J).
    std::vector<double> degenerate_direction;
};

/// Damped Gauss-Newton (Levenberg-Marquardt) with forward-difference
/// Jacobian and Marquardt diagonal scaling. Accepted steps never
/// increase the residual norm.
LevMarResult levmar_fit(const ResidualFn& fn, std::vector<double> x0,
                        std::size_t n_residuals, const LevMarOptions& options = {});

/// Weighted straight-line fit y = intercept + slope * x with known
/// per-point sigmas (pass empty or zeros for an unweighted fit, in which
/// case the covariance is scaled by the residual variance).
struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double var_slope = 0.0;
    double var_intercept = 0.0;
    double cov_slope_intercept = 0.0;
    double chi2 = 0.0;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y,
                 const std::vector<double>& sigma = {});

/// Proportional fit y = c * x (no intercept), residual-variance scaled
/// uncertainty.
struct ProportionalFit {
    double coeff = 0.0;
    double var_coeff = 0.0;
    double chi2 = 0.0;
};

ProportionalFit fit_proportional(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace resforge
