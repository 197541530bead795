#include <algorithm>
#include <cmath>
#include <numeric>

#include "resforge/fit.hpp"
#include "resforge/levmar.hpp"

namespace resforge {

namespace {

double wrap_angle(double x) { return std::atan2(std::sin(x), std::cos(x)); }

// Sequential phase unwrap of arg(z_i).
std::vector<double> unwrapped_phase(const std::vector<std::complex<double>>& z) {
    std::vector<double> phase(z.size());
    double offset = 0.0;
    double prev = std::arg(z.front());
    phase[0] = prev;
    for (std::size_t i = 1; i < z.size(); ++i) {
        const double raw = std::arg(z[i]);
        const double d = raw - prev;
        if (d > std::numbers::pi) offset -= two_pi;
        else if (d < -std::numbers::pi) offset += two_pi;
        phase[i] = raw + offset;
        prev = raw;
    }
    return phase;
}

struct Circle {
    double xc = 0.0, yc = 0.0, radius = 0.0;
};

// Kasa algebraic circle fit: linear least squares on
// x^2 + y^2 = 2 x xc + 2 y yc + (r^2 - xc^2 - yc^2).
Circle fit_circle(const std::vector<std::complex<double>>& z) {
    double sxx = 0, sxy = 0, syy = 0, sx = 0, sy = 0;
    double sxz = 0, syz = 0, sz = 0;
    const double n = static_cast<double>(z.size());
    for (const auto& p : z) {
        const double x = p.real(), y = p.imag();
        const double q = x * x + y * y;
        sxx += x * x; sxy += x * y; syy += y * y;
        sx += x; sy += y;
        sxz += x * q; syz += y * q; sz += q;
    }
    const double a[9] = {sxx, sxy, sx, sxy, syy, sy, sx, sy, n};
    const double b[3] = {sxz, syz, sz};
    auto det3 = [](const double m[9]) {
        return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
               m[2] * (m[3] * m[7] - m[4] * m[6]);
    };
    const double d = det3(a);
    if (d == 0.0) throw NoDipFound("circle fit degenerate");
    double sol[3];
    for (int col = 0; col < 3; ++col) {
        double m[9];
        std::copy(a, a + 9, m);
        for (int r = 0; r < 3; ++r) m[r * 3 + col] = b[r];
        sol[col] = det3(m) / d;
    }
    Circle c;
    c.xc = sol[0] / 2.0;
    c.yc = sol[1] / 2.0;
    c.radius = std::sqrt(std::max(sol[2] + c.xc * c.xc + c.yc * c.yc, 0.0));
    return c;
}

struct PhaseFit {
    double f_r = 0.0;
    double q_loaded = 0.0;
    double theta0 = 0.0;
};

// Arctangent fit of the circle-centred phase:
//   psi(f) = theta0 + 2 atan(2 Q_l (1 - f/f_r)).
PhaseFit fit_phase(const std::vector<double>& freqs, const std::vector<double>& psi,
                   double f_r0, double q_l0) {
    const std::size_t n = freqs.size();
    ResidualFn fn = [&](const std::vector<double>& x, std::vector<double>& out) {
        if (!(x[0] > 0.0) || !(x[1] > 0.0)) return false;
        for (std::size_t i = 0; i < n; ++i) {
            const double model = x[2] + 2.0 * std::atan(2.0 * x[1] * (1.0 - freqs[i] / x[0]));
            out[i] = wrap_angle(psi[i] - model);
        }
        return true;
    };
    double ss = 0.0, sc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = psi[i] - 2.0 * std::atan(2.0 * q_l0 * (1.0 - freqs[i] / f_r0));
        ss += std::sin(r);
        sc += std::cos(r);
    }
    LevMarOptions opts;
    opts.max_iterations = 200;
    opts.typical_scale = {f_r0, q_l0, 1.0};
    const auto res = levmar_fit(fn, {f_r0, q_l0, std::atan2(ss, sc)}, n, opts);
    return {res.params[0], res.params[1], res.params[2]};
}

// Complete estimate derived from one delay value.
struct CircleEstimate {
    double tau = 0.0;
    double f_r = 0.0;
    double q_loaded = 0.0;
    double coupling_ratio = 0.0;
    double amp = 1.0;
    double alpha = 0.0;
    double phi = 0.0;
};

CircleEstimate estimate_from_delay(const ComplexTrace& trace, double tau, double f_r0,
                                   double q_l0) {
    const std::size_t n = trace.size();
    std::vector<std::complex<double>> corrected(n);
    for (std::size_t i = 0; i < n; ++i)
        corrected[i] = trace.samples[i] * std::polar(1.0, two_pi * trace.freqs[i] * tau);

    const Circle circle = fit_circle(corrected);
    const std::complex<double> centre(circle.xc, circle.yc);
    std::vector<double> psi(n);
    for (std::size_t i = 0; i < n; ++i) psi[i] = std::arg(corrected[i] - centre);
    const PhaseFit phase = fit_phase(trace.freqs, psi, f_r0, q_l0);

    const std::complex<double> off_resonant =
        centre + circle.radius * std::polar(1.0, phase.theta0 + std::numbers::pi);
    const double amp = std::abs(off_resonant);
    if (!(amp > 0.0)) throw NoDipFound("off-resonant point at the origin");

    CircleEstimate est;
    est.tau = tau;
    est.f_r = phase.f_r;
    est.q_loaded = std::max(phase.q_loaded, 1e-3);
    est.amp = amp;
    est.alpha = std::arg(off_resonant);
    constexpr double phi_limit = std::numbers::pi / 2.0 * 0.999;
    est.phi = std::clamp(wrap_angle(std::arg(off_resonant - centre) - est.alpha),
                         -phi_limit, phi_limit);
    est.coupling_ratio = std::clamp(2.0 * circle.radius * std::cos(est.phi) / amp,
                                    1e-12, 1.0 - 1e-12);
    return est;
}

}  // namespace

InitialGuess initial_guess_circle(const ComplexTrace& trace) {
    trace.validate();
    const std::size_t n = trace.size();

    std::vector<std::size_t> wings;
    const std::size_t w = std::min(std::max<std::size_t>(3, n / 10), n / 2);
    for (std::size_t i = 0; i < w; ++i) wings.push_back(i);
    for (std::size_t i = n - w; i < n; ++i) wings.push_back(i);

    // Noise floor from successive differences over the wings; the
    // difference of two samples carries 2 sigma^2 per quadrature.
    double diff_sq = 0.0;
    std::size_t n_diff = 0;
    for (std::size_t k = 1; k < wings.size(); ++k) {
        if (wings[k] != wings[k - 1] + 1) continue;
        diff_sq += std::norm(trace.samples[wings[k]] - trace.samples[wings[k - 1]]);
        ++n_diff;
    }
    const double noise = n_diff ? std::sqrt(diff_sq / (4.0 * n_diff)) : 0.0;

    std::vector<double> wing_mags;
    for (auto i : wings) wing_mags.push_back(std::abs(trace.samples[i]));
    std::nth_element(wing_mags.begin(), wing_mags.begin() + wing_mags.size() / 2,
                     wing_mags.end());
    const double baseline = wing_mags[wing_mags.size() / 2];

    double min_mag = baseline;
    std::size_t dip_index = n / 2;
    for (std::size_t i = 0; i < n; ++i) {
        const double m = std::abs(trace.samples[i]);
        if (m < min_mag) {
            min_mag = m;
            dip_index = i;
        }
    }
    const double dip = baseline - min_mag;
    if (!(dip > 3.0 * noise + 1e-12 * std::max(baseline, 1.0)))
        throw NoDipFound("no resonance dip above the noise floor");

    // Linewidth start from the half-depth width of the magnitude dip.
    const double half_level = baseline - 0.5 * dip;
    std::size_t lo = dip_index, hi = dip_index;
    while (lo > 0 && std::abs(trace.samples[lo]) < half_level) --lo;
    while (hi + 1 < n && std::abs(trace.samples[hi]) < half_level) ++hi;
    double fwhm = trace.freqs[hi] - trace.freqs[lo];
    if (!(fwhm > 0.0)) fwhm = trace.span() / 10.0;
    const double f_r0 = trace.freqs[dip_index];
    const double q_l0 = f_r0 / fwhm;

    // Wing phase regression for the delay. The second pass subtracts the
    // resonance phase predicted by the first-pass estimate, which removes
    // the dip's own contribution to the apparent slope.
    auto regress_delay = [&](const CircleEstimate* prior) {
        std::vector<std::complex<double>> detrended(n);
        for (std::size_t i = 0; i < n; ++i) {
            std::complex<double> dip_factor(1.0, 0.0);
            if (prior) {
                const double detuning =
                    prior->q_loaded * (trace.freqs[i] - prior->f_r) / prior->f_r;
                dip_factor = s21_notch(detuning, prior->coupling_ratio, prior->phi);
            }
            detrended[i] = trace.samples[i] * std::polar(1.0, -std::arg(dip_factor));
        }
        const auto phases = unwrapped_phase(detrended);
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (auto i : wings) {
            sx += trace.freqs[i];
            sy += phases[i];
            sxx += trace.freqs[i] * trace.freqs[i];
            sxy += trace.freqs[i] * phases[i];
        }
        const double nw = static_cast<double>(wings.size());
        const double denom = nw * sxx - sx * sx;
        return denom != 0.0 ? -(nw * sxy - sx * sy) / denom / two_pi : 0.0;
    };

    CircleEstimate est = estimate_from_delay(trace, regress_delay(nullptr), f_r0, q_l0);
    est = estimate_from_delay(trace, regress_delay(&est), est.f_r, est.q_loaded);

    const double omega0 = two_pi * est.f_r;
    const double total = omega0 / est.q_loaded;
    const double kappa = est.coupling_ratio * total;

    return InitialGuess{ResonanceParams(omega0, kappa, total - kappa),
                        EnvironmentParams(est.amp, est.alpha, est.tau, est.phi)};
}

}  // namespace resforge
