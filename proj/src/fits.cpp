#include <algorithm>
#include <cmath>
#include <sstream>

#include "resforge/fit.hpp"
#include "resforge/levmar.hpp"

namespace resforge {

namespace {

double wrap_angle(double x) { return std::atan2(std::sin(x), std::cos(x)); }

std::string format_direction(const std::vector<std::string>& names,
                             const std::vector<double>& direction) {
    std::ostringstream out;
    out.precision(2);
    bool first = true;
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (std::abs(direction[i]) < 0.1) continue;
        if (!first) out << (direction[i] >= 0 ? " + " : " - ");
        else if (direction[i] < 0) out << "-";
        out << std::abs(direction[i]) << "*" << names[i];
        first = false;
    }
    return out.str();
}

}  // namespace

double FitResult::param(const std::string& name) const {
    const auto it = params.find(name);
    if (it == params.end()) throw std::out_of_range("FitResult: no parameter " + name);
    return it->second;
}

double FitResult::std_error(const std::string& name) const {
    const auto it = std_errors.find(name);
    if (it == std_errors.end()) throw std::out_of_range("FitResult: no std_error " + name);
    return it->second;
}

// ---------------------------------------------------------------------------
// Linear resonance fit
// ---------------------------------------------------------------------------

FitResult fit_linear_resonance(const ComplexTrace& trace, std::optional<InitialGuess> guess) {
    trace.validate();
    if (!guess) guess = initial_guess_circle(trace);

    const std::size_t n = trace.size();
    const double f_ref = 0.5 * (trace.freqs.front() + trace.freqs.back());
    const double span = trace.span();

    // Internal parameter vector:
    //   [omega0, kappa, gamma, a, alpha_c, tau, phi]
    // where alpha_c = alpha - 2 pi f_ref tau. Referencing the phase to the
    // band centre decorrelates the phase offset from the delay.
    const auto& g = *guess;
    std::vector<double> x0 = {
        g.resonance.omega0,
        g.resonance.kappa_ext,
        std::max(g.resonance.gamma_int, 1e-9 * g.resonance.total_rate()),
        g.environment.amplitude_a,
        wrap_angle(g.environment.phase_alpha - two_pi * f_ref * g.environment.delay_tau),
        g.environment.delay_tau,
        g.environment.impedance_mismatch_phi};

    constexpr double phi_limit = std::numbers::pi / 2.0 * 0.9999;
    ResidualFn fn = [&](const std::vector<double>& x, std::vector<double>& out) {
        const double omega0 = x[0], kappa = x[1], gamma = x[2];
        const double a = x[3], alpha_c = x[4], tau = x[5], phi = x[6];
        const double total = kappa + gamma;
        if (!(total > 0.0) || kappa < 0.0 || gamma < 0.0 || !(a > 0.0) ||
            std::abs(phi) > phi_limit)
            return false;
        const double ratio = kappa / total;
        for (std::size_t i = 0; i < n; ++i) {
            const double f = trace.freqs[i];
            const double detuning = (two_pi * f - omega0) / total;
            const std::complex<double> model =
                a * std::polar(1.0, alpha_c - two_pi * (f - f_ref) * tau) *
                s21_notch(detuning, ratio, phi);
            const std::complex<double> r = model - trace.samples[i];
            out[2 * i] = r.real();
            out[2 * i + 1] = r.imag();
        }
        return true;
    };

    const double total0 = g.resonance.total_rate();
    LevMarOptions opts;
    opts.max_iterations = 500;
    opts.typical_scale = {total0, total0, total0, g.environment.amplitude_a,
                          1.0, 1.0 / (two_pi * span), 1.0};
    const LevMarResult lm = levmar_fit(fn, x0, 2 * n, opts);

    FitResult result;
    result.residual_norm = lm.residual_norm;
    result.converged = lm.converged;
    result.n_iterations = lm.n_iterations;
    result.objective_history = lm.objective_history;

    const double omega0 = lm.params[0], kappa = lm.params[1], gamma = lm.params[2];
    const double a = lm.params[3], alpha_c = lm.params[4], tau = lm.params[5],
                 phi = lm.params[6];
    result.params["f0_hz"] = omega0 / two_pi;
    result.params["kappa_hz"] = kappa / two_pi;
    result.params["gamma_hz"] = gamma / two_pi;
    result.params["q_i"] = omega0 / gamma;
    result.params["q_c"] = omega0 / kappa;
    result.params["a"] = a;
    result.params["alpha"] = wrap_angle(alpha_c + two_pi * f_ref * tau);
    result.params["tau_s"] = tau;
    result.params["phi"] = phi;

    if (!lm.converged) {
        result.diagnostics.push_back("NotConverged: iteration limit reached");
        return result;
    }

    const auto cov = [&](std::size_t i, std::size_t j) { return lm.covariance[i * 7 + j]; };
    result.std_errors["f0_hz"] = std::sqrt(std::max(cov(0, 0), 0.0)) / two_pi;
    result.std_errors["kappa_hz"] = std::sqrt(std::max(cov(1, 1), 0.0)) / two_pi;
    result.std_errors["gamma_hz"] = std::sqrt(std::max(cov(2, 2), 0.0)) / two_pi;
    // Q_i = omega0/gamma and Q_c = omega0/kappa by first-order propagation.
    const double var_qi = cov(0, 0) / (gamma * gamma) +
                          omega0 * omega0 / std::pow(gamma, 4) * cov(2, 2) -
                          2.0 * omega0 / std::pow(gamma, 3) * cov(0, 2);
    const double var_qc = cov(0, 0) / (kappa * kappa) +
                          omega0 * omega0 / std::pow(kappa, 4) * cov(1, 1) -
                          2.0 * omega0 / std::pow(kappa, 3) * cov(0, 1);
    result.std_errors["q_i"] = std::sqrt(std::max(var_qi, 0.0));
    result.std_errors["q_c"] = std::sqrt(std::max(var_qc, 0.0));
    result.std_errors["a"] = std::sqrt(std::max(cov(3, 3), 0.0));
    const double var_alpha = cov(4, 4) + std::pow(two_pi * f_ref, 2) * cov(5, 5) +
                             2.0 * two_pi * f_ref * cov(4, 5);
    result.std_errors["alpha"] = std::sqrt(std::max(var_alpha, 0.0));
    result.std_errors["tau_s"] = std::sqrt(std::max(cov(5, 5), 0.0));
    result.std_errors["phi"] = std::sqrt(std::max(cov(6, 6), 0.0));
    return result;
}

// ---------------------------------------------------------------------------
// TLS power-scan fit
// ---------------------------------------------------------------------------

FitResult fit_power_scan(const PowerScan& scan, double omega0, double temperature) {
    scan.validate();
    const std::size_t n = scan.points.size();
    if (n < 6) throw InvalidParameter("fit_power_scan: need at least 6 points");

    auto points = scan.points;
    std::sort(points.begin(), points.end(),
              [](const auto& a, const auto& b) { return a.n_ph < b.n_ph; });
    if (points.back().n_ph / points.front().n_ph < 1e3)
        throw InvalidParameter("fit_power_scan: need >= 3 decades of photon number");

    double tanh_factor = 1.0;
    if (temperature > 0.0) {
        const auto& c = constants();
        tanh_factor = std::tanh(c.hbar * omega0 / (2.0 * c.k_B * temperature));
    }

    std::vector<double> y(n), sqrt_w(n, 1.0);
    bool weighted = true;
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = 1.0 / points[i].q_i;
        if (!(points[i].q_i_err > 0.0)) weighted = false;
    }
    if (weighted)
        for (std::size_t i = 0; i < n; ++i) {
            const double sigma_y = points[i].q_i_err / (points[i].q_i * points[i].q_i);
            sqrt_w[i] = 1.0 / sigma_y;
        }

    // Starting values from the scan endpoints: the high-power tail gives
    // the residual loss, the low-power excess the TLS amplitude, and the
    // half-decay photon number seeds n_C.
    const double y_lo = 0.5 * (y[0] + y[1]);
    const double y_hi = 0.5 * (y[n - 1] + y[n - 2]);
    const double amplitude = std::max(y_lo - y_hi, 0.0);
    double n_c0 = std::sqrt(points.front().n_ph * points.back().n_ph);
    if (amplitude > 0.0) {
        for (std::size_t i = 0; i + 1 < n; ++i) {
            if (y[i] - y_hi >= 0.5 * amplitude && y[i + 1] - y_hi < 0.5 * amplitude) {
                n_c0 = points[i].n_ph;
                break;
            }
        }
    }
    const double y_scale = std::max(y_lo, 1e-30);
    std::vector<double> x0 = {amplitude / tanh_factor, std::log(n_c0), 1.0,
                              std::max(y_hi, 1e-3 * y_scale)};

    ResidualFn fn = [&](const std::vector<double>& x, std::vector<double>& out) {
        const double f_delta0 = x[0], beta = x[2], delta0 = x[3];
        if (!(beta > 0.0 && beta <= 2.0)) return false;
        const double n_c = std::exp(x[1]);
        for (std::size_t i = 0; i < n; ++i) {
            const double model =
                f_delta0 * tanh_factor / std::pow(1.0 + points[i].n_ph / n_c, beta) + delta0;
            out[i] = (model - y[i]) * sqrt_w[i];
        }
        return true;
    };

    LevMarOptions opts;
    opts.max_iterations = 500;
    opts.typical_scale = {std::max(amplitude, 0.1 * y_scale), 1.0, 1.0, y_scale};
    const LevMarResult lm = levmar_fit(fn, x0, n, opts);

    FitResult result;
    result.residual_norm = lm.residual_norm;
    result.converged = lm.converged;
    result.n_iterations = lm.n_iterations;
    result.objective_history = lm.objective_history;

    const double n_c = std::exp(lm.params[1]);
    result.params["tls_loss_F_delta0"] = lm.params[0];
    result.params["critical_photon_nC"] = n_c;
    result.params["saturation_beta"] = lm.params[2];
    result.params["delta0_eff"] = lm.params[3];

    if (!lm.converged) {
        result.diagnostics.push_back("NotConverged: iteration limit reached");
        return result;
    }

    const auto cov = [&](std::size_t i, std::size_t j) { return lm.covariance[i * 4 + j]; };
    result.std_errors["tls_loss_F_delta0"] = std::sqrt(std::max(cov(0, 0), 0.0));
    result.std_errors["critical_photon_nC"] = n_c * std::sqrt(std::max(cov(1, 1), 0.0));
    result.std_errors["saturation_beta"] = std::sqrt(std::max(cov(2, 2), 0.0));
    result.std_errors["delta0_eff"] = std::sqrt(std::max(cov(3, 3), 0.0));

    if (lm.condition_number > 1e8) {
        result.diagnostics.push_back(
            "IllConditioned: degenerate direction " +
            format_direction({"tls_loss_F_delta0", "ln_nC", "saturation_beta", "delta0_eff"},
                             lm.degenerate_direction));
    }
    return result;
}

// ---------------------------------------------------------------------------
// Two-dimensional Kerr fit
// ---------------------------------------------------------------------------

FitResult fit_kerr_2d(const std::vector<ComplexTrace>& traces,
                      const ResonanceParams& res_fixed, double config_C) {
    if (traces.empty()) throw InvalidParameter("fit_kerr_2d: no traces");
    for (const auto& t : traces) t.validate();
    res_fixed.validate();

    const double omega0 = res_fixed.omega0;
    const double kappa = res_fixed.kappa_ext;
    const double total = res_fixed.total_rate();
    const double ratio = kappa / total;

    std::vector<double> drive(traces.size());
    std::size_t n_res = 0;
    for (std::size_t t = 0; t < traces.size(); ++t) {
        const double power_watt =
            std::pow(10.0, (traces[t].power_dbm - traces[t].attenuation_db) / 10.0) / 1000.0;
        drive[t] = config_C * power_watt / (2.0 * constants().hbar * omega0);
        n_res += 2 * traces[t].size();
    }

    // Initial K from the dip-frequency shift between the weakest and
    // strongest drives; the on-resonance photon number scales the shift.
    auto dip_freq = [](const ComplexTrace& tr) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < tr.size(); ++i)
            if (std::abs(tr.samples[i]) < std::abs(tr.samples[best])) best = i;
        return tr.freqs[best];
    };
    std::size_t t_lo = 0, t_hi = 0;
    for (std::size_t t = 1; t < traces.size(); ++t) {
        if (drive[t] < drive[t_lo]) t_lo = t;
        if (drive[t] > drive[t_hi]) t_hi = t;
    }
    const double photons_lo = 2.0 * kappa * drive[t_lo] / (total * total);
    const double photons_hi = 2.0 * kappa * drive[t_hi] / (total * total);
    double k0 = 0.0;
    if (photons_hi > photons_lo) {
        k0 = two_pi * (dip_freq(traces[t_hi]) - dip_freq(traces[t_lo])) /
             (photons_hi - photons_lo);
    }

    constexpr double phi_limit = std::numbers::pi / 2.0 * 0.9999;
    ResidualFn fn = [&](const std::vector<double>& x, std::vector<double>& out) {
        const double k = x[0], phi = x[1];
        if (std::abs(phi) > phi_limit) return false;
        std::size_t idx = 0;
        for (std::size_t t = 0; t < traces.size(); ++t) {
            const double xi = kappa * drive[t] * k / (total * total * total);
            for (std::size_t i = 0; i < traces[t].size(); ++i) {
                const double delta = (two_pi * traces[t].freqs[i] - omega0) / total;
                const double occ = solve_photon_occupation(delta, xi).stable_root;
                const std::complex<double> model =
                    s21_notch(delta - xi * occ, ratio, phi);
                const std::complex<double> r = model - traces[t].samples[i];
                out[idx++] = r.real();
                out[idx++] = r.imag();
            }
        }
        return true;
    };

    const double max_drive = *std::max_element(drive.begin(), drive.end());
    const double k_scale =
        std::max(std::abs(k0),
                 max_drive > 0.0 ? total * total * total / (kappa * max_drive) * 1e-3
                                 : std::abs(omega0) * 1e-12);
    LevMarOptions opts;
    opts.max_iterations = 500;
    opts.typical_scale = {k_scale, 1.0};
    const LevMarResult lm = levmar_fit(fn, {k0, 0.0}, n_res, opts);

    FitResult result;
    result.residual_norm = lm.residual_norm;
    result.converged = lm.converged;
    result.n_iterations = lm.n_iterations;
    result.objective_history = lm.objective_history;
    result.params["kerr_rad_per_photon"] = lm.params[0];
    result.params["kerr_hz_per_photon"] = lm.params[0] / two_pi;
    result.params["phi"] = lm.params[1];

    // Reject fits whose converged drive admits bistable occupations
    // anywhere inside an included trace's window.
    for (std::size_t t = 0; t < traces.size(); ++t) {
        const double xi = kappa * drive[t] * lm.params[0] / (total * total * total);
        const double d_lo = (two_pi * traces[t].freqs.front() - omega0) / total;
        const double d_hi = (two_pi * traces[t].freqs.back() - omega0) / total;
        if (bifurcation_onset(d_lo, d_hi, xi))
            throw BifurcationInFitWindow("fit_kerr_2d: trace " + std::to_string(t) +
                                         " is above the bifurcation threshold");
    }

    if (!lm.converged) {
        result.diagnostics.push_back("NotConverged: iteration limit reached");
        return result;
    }
    result.std_errors["kerr_rad_per_photon"] = std::sqrt(std::max(lm.covariance[0], 0.0));
    result.std_errors["kerr_hz_per_photon"] =
        result.std_errors["kerr_rad_per_photon"] / two_pi;
    result.std_errors["phi"] = std::sqrt(std::max(lm.covariance[3], 0.0));
    return result;
}

// ---------------------------------------------------------------------------
// Field-sweep and misalignment fits
// ---------------------------------------------------------------------------

FitResult fit_field_sweep_bc(const FieldSweepSeries& series) {
    series.validate();
    const std::size_t n = series.points.size();
    if (n == 0) throw InvalidParameter("fit_field_sweep_bc: empty series");

    double mean_shift = 0.0;
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = series.points[i].b * series.points[i].b;
        y[i] = series.points[i].rel_shift;
        mean_shift += y[i];
    }
    mean_shift /= static_cast<double>(n);
    if (mean_shift > 0.0)
        throw PositiveShiftDominates("fit_field_sweep_bc: mean relative shift is positive");

    const ProportionalFit prop = fit_proportional(x, y);
    if (!(prop.coeff < 0.0))
        throw PositiveShiftDominates("fit_field_sweep_bc: quadratic coefficient is not negative");

    const double b_c = std::sqrt(-1.0 / (4.0 * prop.coeff));
    const double sigma_c = std::sqrt(std::max(prop.var_coeff, 0.0));
    const double sigma_bc = sigma_c / (8.0 * prop.coeff * prop.coeff * b_c);

    FitResult result;
    result.converged = true;
    result.n_iterations = 1;
    result.residual_norm = prop.chi2;
    result.params["b_c_t"] = b_c;
    result.params["quad_coeff"] = prop.coeff;
    result.std_errors["b_c_t"] = sigma_bc;
    result.std_errors["quad_coeff"] = sigma_c;
    return result;
}

FitResult fit_misalignment(const std::map<double, FieldSweepSeries>& series_by_width,
                           const FilmProperties& film) {
    if (series_by_width.size() < 3)
        throw InvalidParameter("fit_misalignment: need at least 3 widths");
    film.validate();
    if (!(film.thickness_t > 0.0 && film.critical_temp_Tc > 0.0))
        throw InvalidParameter("fit_misalignment: film thickness and Tc required");

    const auto& c = constants();
    const double t = film.thickness_t;
    const double prefactor = std::numbers::pi / 48.0 * c.e_charge * c.e_charge * t * t /
                             (c.hbar * c.k_B * film.critical_temp_Tc);

    std::vector<double> aspect_sq, d_p, sigma_d_p;
    double chi2 = 0.0;
    for (const auto& [width, series] : series_by_width) {
        if (series.orientation != FieldOrientation::in_plane)
            throw InvalidParameter("fit_misalignment: series must be in-plane");
        series.validate();
        std::vector<double> x, y;
        for (const auto& p : series.points) {
            x.push_back(p.b * p.b);
            y.push_back(p.rel_shift);
        }
        const ProportionalFit prop = fit_proportional(x, y);
        aspect_sq.push_back((width / t) * (width / t));
        d_p.push_back(-prop.coeff / prefactor);
        sigma_d_p.push_back(std::sqrt(std::max(prop.var_coeff, 0.0)) / prefactor);
        chi2 += prop.chi2;
    }

    const LineFit line = fit_line(aspect_sq, d_p, sigma_d_p);

    FitResult result;
    result.converged = true;
    result.n_iterations = 1;
    result.residual_norm = chi2;
    result.params["diffusion_D"] = line.intercept;
    result.params["slope"] = line.slope;
    result.params["intercept"] = line.intercept;
    result.std_errors["diffusion_D"] = std::sqrt(std::max(line.var_intercept, 0.0));
    result.std_errors["slope"] = std::sqrt(std::max(line.var_slope, 0.0));
    result.std_errors["intercept"] = result.std_errors["diffusion_D"];

    double theta = 0.0;
    double sigma_theta = 0.0;
    const double sigma_slope = std::sqrt(std::max(line.var_slope, 0.0));
    // Slopes statistically consistent with zero (or at machine level
    // relative to the intercept) report a zero angle.
    const bool significant = line.slope > std::max(2.0 * sigma_slope,
                                                   1e-12 * std::abs(line.intercept));
    if (significant && line.intercept > 0.0) {
        theta = std::sqrt(line.slope / line.intercept);
        const double rel_var = line.var_slope / (line.slope * line.slope) +
                               line.var_intercept / (line.intercept * line.intercept) -
                               2.0 * line.cov_slope_intercept / (line.slope * line.intercept);
        sigma_theta = 0.5 * theta * std::sqrt(std::max(rel_var, 0.0));
    } else {
        if (line.slope < 0.0)
            result.diagnostics.push_back("NegativeSlope: misalignment slope is negative");
        if (line.intercept > 0.0)
            sigma_theta = std::sqrt(std::sqrt(std::max(line.var_slope, 0.0)) / line.intercept);
    }
    result.params["theta_b_rad"] = theta;
    result.params["theta_b_deg"] = theta * 180.0 / std::numbers::pi;
    // Conservative 2-sigma bound: theta enters through a square root of a
    // small-sample regression ratio.
    result.std_errors["theta_b_rad"] = 2.0 * sigma_theta;
    result.std_errors["theta_b_deg"] = 2.0 * sigma_theta * 180.0 / std::numbers::pi;
    return result;
}

double fit_ctilde_from_frequency(double f_measured, const ResonatorGeometry& geom_partial) {
    if (!(f_measured > 0.0))
        throw InvalidParameter("fit_ctilde_from_frequency: frequency must be > 0");
    if (!(geom_partial.length_l > 0.0 && geom_partial.inductance_per_length > 0.0))
        throw InvalidParameter("fit_ctilde_from_frequency: l and Ltilde required");
    const double l = geom_partial.length_l;
    return 1.0 / (16.0 * l * l * f_measured * f_measured *
                  geom_partial.inductance_per_length);
}

QcDecision qc_filter(const FitResult& result) {
    if (!result.converged) return {false, "not converged"};
    constexpr double threshold = 1e3;  // exclusion rule, reporting units
    for (const auto& [name, err] : result.std_errors) {
        if (!(err <= threshold))
            return {false, "std_error on " + name + " exceeds 1e3"};
    }
    for (const char* q : {"q_i", "q_c"}) {
        const auto it = result.params.find(q);
        if (it != result.params.end() && !(it->second > 0.0))
            return {false, std::string(q) + " is non-positive"};
    }
    return {true, ""};
}

}  // namespace resforge
