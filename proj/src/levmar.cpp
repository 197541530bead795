#include "resforge/levmar.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace resforge {

namespace {

// Solve the symmetric positive-definite system A x = b (row-major n x n)
// by Gaussian elimination with partial pivoting. Returns false if A is
// numerically singular.
bool solve_dense(std::vector<double> a, std::vector<double> b, std::size_t n,
                 std::vector<double>& x) {
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r * n + col]) > std::abs(a[pivot * n + col])) pivot = r;
        if (a[pivot * n + col] == 0.0) return false;
        if (pivot != col) {
            for (std::size_t c = 0; c < n; ++c) std::swap(a[col * n + c], a[pivot * n + c]);
            std::swap(b[col], b[pivot]);
        }
        const double inv = 1.0 / a[col * n + col];
        for (std::size_t r = col + 1; r < n; ++r) {
            const double factor = a[r * n + col] * inv;
            if (factor == 0.0) continue;
            for (std::size_t c = col; c < n; ++c) a[r * n + c] -= factor * a[col * n + c];
            b[r] -= factor * b[col];
        }
    }
    x.assign(n, 0.0);
    for (std::size_t r = n; r-- > 0;) {
        double sum = b[r];
        for (std::size_t c = r + 1; c < n; ++c) sum -= a[r * n + c] * x[c];
        x[r] = sum / a[r * n + r];
    }
    return true;
}

// Jacobi eigensolver for a small symmetric matrix (row-major n x n).
// Fills ascending eigenvalues and the matching unit eigenvectors
// (column k of `vecs` is the k-th eigenvector).
void symmetric_eigen(std::vector<double> a, std::size_t n, std::vector<double>& vals,
                     std::vector<double>& vecs) {
    vecs.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) vecs[i * n + i] = 1.0;

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a[p * n + q] * a[p * n + q];
        if (off < 1e-300) break;

        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a[p * n + q];
                if (apq == 0.0) continue;
                const double theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a[k * n + p], akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a[p * n + k], aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = vecs[k * n + p], vkq = vecs[k * n + q];
                    vecs[k * n + p] = c * vkp - s * vkq;
                    vecs[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    vals.resize(n);
    for (std::size_t i = 0; i < n; ++i) vals[i] = a[i * n + i];

    // Sort ascending, permuting eigenvector columns alongside.
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return vals[i] < vals[j]; });
    std::vector<double> sorted_vals(n), sorted_vecs(n * n);
    for (std::size_t k = 0; k < n; ++k) {
        sorted_vals[k] = vals[order[k]];
        for (std::size_t r = 0; r < n; ++r) sorted_vecs[r * n + k] = vecs[r * n + order[k]];
    }
    vals = std::move(sorted_vals);
    vecs = std::move(sorted_vecs);
}

double norm_sq(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

}  // namespace

LevMarResult levmar_fit(const ResidualFn& fn, std::vector<double> x0,
                        std::size_t n_residuals, const LevMarOptions& options) {
    const std::size_t p = x0.size();
    const std::size_t m = n_residuals;
    if (p == 0 || m == 0) throw std::invalid_argument("levmar_fit: empty problem");

    auto scale_of = [&](std::size_t j, const std::vector<double>& x) {
        const double typical =
            options.typical_scale.empty() ? 0.0 : options.typical_scale[j];
        // A zero entry means "unspecified": fall back to unit scale so a
        // parameter starting at 0 still gets a usable difference step.
        return std::max(std::abs(x[j]), typical > 0.0 ? typical : 1.0);
    };

    LevMarResult result;
    result.params = x0;

    std::vector<double> residual(m);
    if (!fn(x0, residual))
        throw std::invalid_argument("levmar_fit: initial point is infeasible");
    double cost = norm_sq(residual);
    result.objective_history.push_back(cost);

    const double fd_eps = std::sqrt(std::numeric_limits<double>::epsilon());
    std::vector<double> jac(m * p);
    std::vector<double> jtj(p * p), jtr(p), trial_residual(m), step, x_trial(p);
    double damping = options.initial_damping;
    bool converged = false;
    int iter = 0;

    for (; iter < options.max_iterations && !converged; ++iter) {
        // Forward-difference Jacobian around the current point.
        for (std::size_t j = 0; j < p; ++j) {
            const double h = fd_eps * scale_of(j, result.params);
            x_trial = result.params;
            x_trial[j] += h;
            if (!fn(x_trial, trial_residual)) {
                x_trial[j] = result.params[j] - h;  // fall back to backward difference
                if (!fn(x_trial, trial_residual))
                    throw std::runtime_error("levmar_fit: cannot differentiate at bound");
                for (std::size_t i = 0; i < m; ++i)
                    jac[i * p + j] = (residual[i] - trial_residual[i]) / h;
                continue;
            }
            for (std::size_t i = 0; i < m; ++i)
                jac[i * p + j] = (trial_residual[i] - residual[i]) / h;
        }

        std::fill(jtj.begin(), jtj.end(), 0.0);
        std::fill(jtr.begin(), jtr.end(), 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t a = 0; a < p; ++a) {
                jtr[a] += jac[i * p + a] * residual[i];
                for (std::size_t b = a; b < p; ++b)
                    jtj[a * p + b] += jac[i * p + a] * jac[i * p + b];
            }
        }
        for (std::size_t a = 0; a < p; ++a)
            for (std::size_t b = 0; b < a; ++b) jtj[a * p + b] = jtj[b * p + a];

        // Inner loop: raise the damping until a step reduces the cost.
        bool accepted = false;
        for (int attempt = 0; attempt < 40; ++attempt) {
            std::vector<double> damped = jtj;
            for (std::size_t a = 0; a < p; ++a) {
                const double d = jtj[a * p + a];
                damped[a * p + a] += damping * (d > 0.0 ? d : 1.0);
            }
            std::vector<double> neg_grad(p);
            for (std::size_t a = 0; a < p; ++a) neg_grad[a] = -jtr[a];

            if (!solve_dense(damped, neg_grad, p, step)) {
                damping *= 10.0;
                continue;
            }
            for (std::size_t a = 0; a < p; ++a) x_trial[a] = result.params[a] + step[a];

            if (!fn(x_trial, trial_residual)) {
                damping *= 10.0;
                continue;
            }
            const double trial_cost = norm_sq(trial_residual);
            if (trial_cost <= cost) {
                // Scaled step norm for the convergence test.
                double step_scaled = 0.0;
                for (std::size_t a = 0; a < p; ++a) {
                    const double s = step[a] / scale_of(a, result.params);
                    step_scaled += s * s;
                }
                step_scaled = std::sqrt(step_scaled);

                const double rel_drop =
                    (cost - trial_cost) / std::max(cost, 1e-300);
                result.params = x_trial;
                residual = trial_residual;
                cost = trial_cost;
                result.objective_history.push_back(cost);
                damping = std::max(damping * 0.25, 1e-14);
                accepted = true;

                if (rel_drop < options.residual_rel_tol ||
                    step_scaled < options.step_tol || cost < 1e-280)
                    converged = true;
                break;
            }
            damping *= 10.0;
        }
        if (!accepted) {
            // Damping exhausted without progress: the point is stationary
            // to machine precision.
            converged = true;
        }
    }

    result.converged = converged;
    result.n_iterations = iter;
    result.residual_norm = cost;

    // Covariance and conditioning diagnostics from the final Jacobian.
    {
        for (std::size_t j = 0; j < p; ++j) {
            const double h = fd_eps * scale_of(j, result.params);
            x_trial = result.params;
            x_trial[j] += h;
            if (fn(x_trial, trial_residual)) {
                for (std::size_t i = 0; i < m; ++i)
                    jac[i * p + j] = (trial_residual[i] - residual[i]) / h;
            }
        }
        std::fill(jtj.begin(), jtj.end(), 0.0);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t a = 0; a < p; ++a)
                for (std::size_t b = a; b < p; ++b)
                    jtj[a * p + b] += jac[i * p + a] * jac[i * p + b];
        for (std::size_t a = 0; a < p; ++a)
            for (std::size_t b = 0; b < a; ++b) jtj[a * p + b] = jtj[b * p + a];

        // Correlation-normalized copy for the identifiability measure.
        std::vector<double> normalized(p * p, 0.0);
        std::vector<double> d(p);
        for (std::size_t a = 0; a < p; ++a)
            d[a] = std::sqrt(std::max(jtj[a * p + a], 1e-300));
        for (std::size_t a = 0; a < p; ++a)
            for (std::size_t b = 0; b < p; ++b)
                normalized[a * p + b] = jtj[a * p + b] / (d[a] * d[b]);

        std::vector<double> vals, vecs;
        symmetric_eigen(normalized, p, vals, vecs);
        const double lam_min = std::max(vals.front(), 0.0);
        const double lam_max = std::max(vals.back(), 1e-300);
        result.condition_number = std::sqrt(lam_max / std::max(lam_min, 1e-300));
        result.degenerate_direction.resize(p);
        for (std::size_t a = 0; a < p; ++a) {
            // eigenvector in original (unnormalized) coordinates
            result.degenerate_direction[a] = vecs[a * p + 0] / d[a];
        }
        double dn = std::sqrt(norm_sq(result.degenerate_direction));
        if (dn > 0.0)
            for (auto& v : result.degenerate_direction) v /= dn;

        // sigma^2 (J^T J)^{-1} via the eigendecomposition of the
        // normalized matrix, with a floor on tiny eigenvalues so that
        // degenerate directions report large-but-finite uncertainties.
        const std::size_t dof = (m > p) ? (m - p) : 1;
        const double sigma_sq = cost / static_cast<double>(dof);
        result.covariance.assign(p * p, 0.0);
        for (std::size_t a = 0; a < p; ++a) {
            for (std::size_t b = 0; b < p; ++b) {
                double sum = 0.0;
                for (std::size_t k = 0; k < p; ++k) {
                    const double lam = std::max(vals[k], lam_max * 1e-14);
                    sum += vecs[a * p + k] * vecs[b * p + k] / lam;
                }
                result.covariance[a * p + b] = sigma_sq * sum / (d[a] * d[b]);
            }
        }
    }

    return result;
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y,
                 const std::vector<double>& sigma) {
    const std::size_t n = x.size();
    if (n != y.size() || n < 2) throw std::invalid_argument("fit_line: need >= 2 points");

    bool weighted = sigma.size() == n;
    if (weighted)
        for (double s : sigma)
            if (!(s > 0.0)) { weighted = false; break; }

    double sw = 0.0, swx = 0.0, swy = 0.0, swxx = 0.0, swxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double w = weighted ? 1.0 / (sigma[i] * sigma[i]) : 1.0;
        sw += w;
        swx += w * x[i];
        swy += w * y[i];
        swxx += w * x[i] * x[i];
        swxy += w * x[i] * y[i];
    }
    const double det = sw * swxx - swx * swx;
    if (det == 0.0) throw std::invalid_argument("fit_line: degenerate abscissae");

    LineFit fit;
    fit.slope = (sw * swxy - swx * swy) / det;
    fit.intercept = (swxx * swy - swx * swxy) / det;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - fit.intercept - fit.slope * x[i];
        const double w = weighted ? 1.0 / (sigma[i] * sigma[i]) : 1.0;
        fit.chi2 += w * r * r;
    }
    // With known sigmas the covariance is (X^T W X)^{-1}; otherwise scale
    // by the residual variance.
    const double scale = weighted ? 1.0 : fit.chi2 / std::max<std::size_t>(n - 2, 1);
    fit.var_slope = scale * sw / det;
    fit.var_intercept = scale * swxx / det;
    fit.cov_slope_intercept = -scale * swx / det;
    return fit;
}

ProportionalFit fit_proportional(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    if (n != y.size() || n < 1)
        throw std::invalid_argument("fit_proportional: need >= 1 point");
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    if (sxx == 0.0) throw std::invalid_argument("fit_proportional: all x are zero");

    ProportionalFit fit;
    fit.coeff = sxy / sxx;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - fit.coeff * x[i];
        fit.chi2 += r * r;
    }
    const double dof = (n > 1) ? static_cast<double>(n - 1) : 1.0;
    fit.var_coeff = (fit.chi2 / dof) / sxx;
    return fit;
}

}  // namespace resforge
