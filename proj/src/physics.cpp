#include "resforge/physics.hpp"

#include <algorithm>
#include <cmath>

namespace resforge {

namespace {

// Occupation equation and its derivative in the original variable n,
// evaluated by Horner's rule: f(n) = ((x2 n - 2 d x) n + (d^2 + 1/4)) n - 1/2.
inline double occupation_eq(double n, double delta, double xi) {
    const double b = delta * delta + 0.25;
    return ((xi * xi * n - 2.0 * delta * xi) * n + b) * n - 0.5;
}

inline double occupation_eq_deriv(double n, double delta, double xi) {
    const double b = delta * delta + 0.25;
    return (3.0 * xi * xi * n - 4.0 * delta * xi) * n + b;
}

// Newton polish on the occupation equation; the cubic-formula root is
// already close, so a handful of steps reaches machine residual.
inline double polish_root(double n, double delta, double xi) {
    for (int it = 0; it < 8; ++it) {
        const double f = occupation_eq(n, delta, xi);
        if (std::abs(f) < 1e-16) break;
        const double df = occupation_eq_deriv(n, delta, xi);
        if (df == 0.0) break;
        const double step = f / df;
        n -= step;
        if (std::abs(step) < 1e-18 * std::max(1.0, std::abs(n))) break;
    }
    return n;
}

// Real roots of the monic cubic x^3 + a x^2 + b x + c.
int monic_cubic_real_roots(double a, double b, double c, double out[3]) {
    const double shift = a / 3.0;
    const double p = b - a * a / 3.0;
    const double q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    const double disc = -4.0 * p * p * p - 27.0 * q * q;

    if (disc > 0.0) {
        // Three distinct real roots, trigonometric form.
        const double r = std::sqrt(-p / 3.0);
        const double arg = std::clamp(3.0 * q / (2.0 * p * r), -1.0, 1.0);
        const double theta = std::acos(arg);
        for (int k = 0; k < 3; ++k)
            out[k] = 2.0 * r * std::cos((theta - two_pi * k) / 3.0) - shift;
        std::sort(out, out + 3);
        return 3;
    }

    if (p == 0.0 && q == 0.0) {
        out[0] = -shift;
        return 1;
    }

    // One real root; pick the large-magnitude cube root to avoid
    // cancellation, the partner term follows from u*v = -p/3.
    const double s = std::sqrt(std::max(0.0, q * q / 4.0 + p * p * p / 27.0));
    const double u3 = (q >= 0.0) ? (-q / 2.0 - s) : (-q / 2.0 + s);
    const double u = std::cbrt(u3);
    const double y = (u == 0.0) ? 0.0 : u - p / (3.0 * u);
    out[0] = y - shift;
    return 1;
}

}  // namespace

std::complex<double> s21_notch(double detuning_norm, double coupling_ratio, double phi) {
    if (std::cos(phi) == 0.0) throw DomainError("s21_notch: cos(phi) vanishes");
    // e^{i phi}/cos(phi) = 1 + i tan(phi)
    const std::complex<double> mismatch(1.0, std::tan(phi));
    const std::complex<double> lorentz = 1.0 / std::complex<double>(1.0, 2.0 * detuning_norm);
    return 1.0 - coupling_ratio * mismatch * lorentz;
}

std::complex<double> s21_linear(double f_drive, const ResonanceParams& res,
                                const EnvironmentParams& env) {
    const double total = res.total_rate();
    if (!(total > 0.0)) throw DomainError("s21_linear: kappa + gamma must be > 0");
    const double detuning = (two_pi * f_drive - res.omega0) / total;
    const std::complex<double> dip =
        s21_notch(detuning, res.kappa_ext / total, env.impedance_mismatch_phi);
    const double phase = env.phase_alpha - two_pi * f_drive * env.delay_tau;
    return env.amplitude_a * std::polar(1.0, phase) * dip;
}

OccupationRoots solve_photon_occupation(double delta, double xi) {
    OccupationRoots result;

    if (xi == 0.0) {
        result.roots.push_back(0.5 / (delta * delta + 0.25));
        result.stable_root = result.roots.front();
        return result;
    }

    // Substituting m = xi*n gives the monic cubic
    //   m^3 - 2 delta m^2 + (delta^2 + 1/4) m - xi/2 = 0,
    // well conditioned for arbitrarily small xi.
    double m[3];
    const int count = monic_cubic_real_roots(-2.0 * delta, delta * delta + 0.25,
                                             -xi / 2.0, m);

    for (int k = 0; k < count; ++k) {
        double n = m[k] / xi;
        if (!(n > 0.0)) continue;
        n = polish_root(n, delta, xi);
        if (n > 0.0) result.roots.push_back(n);
    }
    std::sort(result.roots.begin(), result.roots.end());

    // Merge roots that collapsed onto each other during polishing.
    auto close = [](double a, double b) {
        return std::abs(a - b) <= 1e-12 * std::max({1.0, std::abs(a), std::abs(b)});
    };
    result.roots.erase(std::unique(result.roots.begin(), result.roots.end(), close),
                       result.roots.end());

    // The equation always has a positive root (f(0) = -1/2, f(inf) = +inf);
    // recover it by bisection if the closed form lost it to roundoff.
    if (result.roots.empty()) {
        double lo = 0.0, hi = std::max(2.0, 0.5 / (delta * delta + 0.25)) * 4.0;
        while (occupation_eq(hi, delta, xi) < 0.0) hi *= 2.0;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            (occupation_eq(mid, delta, xi) < 0.0 ? lo : hi) = mid;
        }
        result.roots.push_back(polish_root(0.5 * (lo + hi), delta, xi));
    }

    result.stable_root = result.roots.front();
    return result;
}

bool bifurcation_onset(double delta_lo, double delta_hi, double xi) {
    if (xi == 0.0) return false;
    if (delta_lo > delta_hi) std::swap(delta_lo, delta_hi);

    // Below the Duffing threshold |xi| = 2 sqrt(3)/9 no detuning admits
    // multiple roots; the triple-root point sits at |delta| = sqrt(3)/2.
    constexpr double xi_onset = 0.3849001794597505;  // 2*sqrt(3)/9
    if (std::abs(xi) < xi_onset) return false;

    const int n_grid = 4001;
    const double step = (delta_hi - delta_lo) / (n_grid - 1);
    for (int k = 0; k < n_grid; ++k) {
        const double delta = delta_lo + k * step;
        if (solve_photon_occupation(delta, xi).bistable()) return true;
    }
    return false;
}

double kerr_drive_xi(const ResonanceParams& res, const KerrModelParams& kerr) {
    const double total = res.total_rate();
    const double alpha_tilde_sq = res.kappa_ext * kerr.drive_amplitude_sq / (total * total);
    return alpha_tilde_sq * kerr.kerr_K / total;
}

std::complex<double> s21_nonlinear(double f_drive, const ResonanceParams& res,
                                   const KerrModelParams& kerr, double env_phi) {
    const double total = res.total_rate();
    const double delta = (two_pi * f_drive - res.omega0) / total;
    const double xi = kerr_drive_xi(res, kerr);
    const double n = solve_photon_occupation(delta, xi).stable_root;
    return s21_notch(delta - xi * n, res.kappa_ext / total, env_phi);
}

double inverse_qi(double n_ph, const LossModelParams& loss, double omega0) {
    if (n_ph < 0.0) throw DomainError("inverse_qi: n_ph must be >= 0");
    double tanh_factor = 1.0;  // T = 0 limit
    if (loss.temperature_T > 0.0) {
        const auto& c = constants();
        tanh_factor = std::tanh(c.hbar * omega0 / (2.0 * c.k_B * loss.temperature_T));
    }
    const double saturation =
        std::pow(1.0 + n_ph / loss.critical_photon_nC, loss.saturation_beta);
    return loss.tls_loss_F_delta0 * tanh_factor / saturation + loss.qp_loss +
           loss.residual_delta0;
}

double lk_of_current(double i, const FilmProperties& film) {
    if (!(film.depairing_current_Istar > 0.0))
        throw InvalidParameter("lk_of_current: depairing current must be > 0");
    const double ratio = std::abs(i) / film.depairing_current_Istar;
    if (ratio >= 1.0)
        throw DomainError("lk_of_current: |i| must be below the depairing current");
    const double n = film.depairing_exponent_n;
    return film.lk_sheet * std::pow(1.0 - std::pow(ratio, n), -1.0 / n);
}

double lk_from_sheet_resistance(const FilmProperties& film, double temperature) {
    if (!(film.critical_temp_Tc > 0.0))
        throw InvalidParameter("lk_from_sheet_resistance: Tc must be > 0");
    if (temperature >= film.critical_temp_Tc)
        throw DomainError("lk_from_sheet_resistance: temperature must be below Tc");
    const auto& c = constants();
    const double gap = film.gap();
    double tanh_factor = 1.0;  // T = 0 limit
    if (temperature > 0.0)
        tanh_factor = std::tanh(gap / (2.0 * c.k_B * temperature));
    return film.sheet_resistance * c.hbar / (std::numbers::pi * gap) / tanh_factor;
}

double kerr_bcs(double omega_r, double total_inductance, double i_star) {
    if (!(omega_r > 0.0 && total_inductance > 0.0 && i_star > 0.0))
        throw InvalidParameter("kerr_bcs: all inputs must be > 0");
    return -0.375 * constants().hbar * omega_r * omega_r /
           (total_inductance * i_star * i_star);
}

double kerr_bcs_geometric(double omega_r, const FilmProperties& film,
                          const ResonatorGeometry& geom, double j_c) {
    if (!(omega_r > 0.0 && film.lk_sheet > 0.0 && film.thickness_t > 0.0 && j_c > 0.0))
        throw InvalidParameter("kerr_bcs_geometric: all inputs must be > 0");
    const double t = film.thickness_t;
    return -0.375 * constants().hbar * omega_r * omega_r /
           (film.lk_sheet * j_c * j_c * t * t * geom.length_l * geom.width_w);
}

double kerr_jj(double omega_r, const FilmProperties& film, const ResonatorGeometry& geom) {
    if (!(film.grain_size_a > 0.0 && film.switching_current_Isw > 0.0 &&
          film.thickness_t > 0.0 && geom.width_w > 0.0 && geom.length_l > 0.0))
        throw InvalidParameter("kerr_jj: grain size, Isw, t, w, l must be > 0");
    const double j_sw = film.switching_current_Isw / (geom.width_w * film.thickness_t);
    const double grain_volume = geom.length_l * geom.width_w * film.thickness_t;
    return -(3.0 / 16.0) * std::numbers::pi * constants().e_charge * film.grain_size_a *
           omega_r * omega_r / (j_sw * grain_volume);
}

double inplane_freq_shift(double b_par, const FilmProperties& film,
                          const ResonatorGeometry& geom, double theta_b) {
    if (b_par < 0.0) throw DomainError("inplane_freq_shift: field must be >= 0");
    const auto& c = constants();
    const double t = film.thickness_t;
    const double aspect = geom.width_w / t;
    const double prefactor = std::numbers::pi / 48.0 * c.e_charge * c.e_charge * t * t /
                             (c.hbar * c.k_B * film.critical_temp_Tc);
    return -prefactor * film.diffusion_D * (1.0 + theta_b * theta_b * aspect * aspect) *
           b_par * b_par;
}

double quadratic_shift_bc(double b, double b_c) {
    if (!(b_c > 0.0)) throw InvalidParameter("quadratic_shift_bc: b_c must be > 0");
    const double ratio = b / b_c;
    return -0.25 * ratio * ratio;
}

double gap_vs_field(double b, const FilmProperties& film, double b_c) {
    if (!(b_c > 0.0)) throw InvalidParameter("gap_vs_field: b_c must be > 0");
    if (b < 0.0 || b > b_c)
        throw DomainError("gap_vs_field: field must lie in [0, b_c]");
    const double ratio = b / b_c;
    return film.gap() * std::sqrt(1.0 - ratio * ratio);
}

double photon_number(double power_dbm, double attenuation_db, const ResonanceParams& res,
                     double config_C) {
    const double total = res.total_rate();
    if (!(total > 0.0)) throw DomainError("photon_number: kappa + gamma must be > 0");
    const double power_watt = std::pow(10.0, (power_dbm - attenuation_db) / 10.0) / 1000.0;
    return config_C * res.kappa_ext / (constants().hbar * res.omega0 * total * total) *
           power_watt;
}

double drive_amplitude_sq_from_power(double power_dbm, double attenuation_db,
                                     const ResonanceParams& res) {
    const double power_watt = std::pow(10.0, (power_dbm - attenuation_db) / 10.0) / 1000.0;
    return 2.0 * power_watt / (constants().hbar * res.omega0);
}

double quarterwave_frequency(const ResonatorGeometry& geom) {
    if (!(geom.length_l > 0.0 && geom.inductance_per_length > 0.0 &&
          geom.capacitance_per_length > 0.0))
        throw InvalidParameter("quarterwave_frequency: l, Ltilde, Ctilde must be > 0");
    return 1.0 / (4.0 * geom.length_l *
                  std::sqrt(geom.inductance_per_length * geom.capacitance_per_length));
}

double characteristic_impedance(const ResonatorGeometry& geom) {
    if (!(geom.inductance_per_length > 0.0 && geom.capacitance_per_length > 0.0))
        throw InvalidParameter("characteristic_impedance: Ltilde, Ctilde must be > 0");
    return std::sqrt(geom.inductance_per_length / geom.capacitance_per_length);
}

}  // namespace resforge
