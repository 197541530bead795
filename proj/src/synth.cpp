#include "resforge/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace resforge {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    // splitmix64 of seed advanced by index steps of the golden-ratio
    // increment.
    std::uint64_t z = seed + (index + 1) * 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double GaussianSource::uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double GaussianSource::next() {
    if (have_cached_) {
        have_cached_ = false;
        return cached_;
    }
    double u1 = uniform();
    while (u1 == 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    cached_ = r * std::sin(two_pi * u2);
    have_cached_ = true;
    return r * std::cos(two_pi * u2);
}

namespace {

double interpolate_template(const std::vector<std::pair<double, double>>& knots, double b,
                            double fallback) {
    if (knots.empty()) return fallback;
    if (b <= knots.front().first) return knots.front().second;
    if (b >= knots.back().first) return knots.back().second;
    for (std::size_t i = 1; i < knots.size(); ++i) {
        if (b <= knots[i].first) {
            const auto& [b0, q0] = knots[i - 1];
            const auto& [b1, q1] = knots[i];
            const double t = (b - b0) / (b1 - b0);
            return q0 + t * (q1 - q0);
        }
    }
    return knots.back().second;
}

}  // namespace

ComplexTrace generate_trace(const GeneratorTruth& truth, const std::vector<double>& grid,
                            const NoiseSpec& noise) {
    truth.validate();
    noise.validate();
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1]))
            throw InvalidParameter("generate_trace: grid must be strictly increasing");

    const auto& res = truth.resonance;
    const auto& env = truth.env;
    const double total = res.total_rate();
    const double expected_photons =
        2.0 * res.kappa_ext * truth.kerr.drive_amplitude_sq / (total * total);
    const bool nonlinear =
        std::abs(truth.kerr.kerr_K) * expected_photons > 1e-3 * total;

    ComplexTrace trace;
    trace.freqs = grid;
    trace.samples.resize(grid.size());

    GaussianSource rng(noise.seed);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double f = grid[i];
        std::complex<double> value;
        if (nonlinear) {
            const double prefactor_phase = env.phase_alpha - two_pi * f * env.delay_tau;
            value = env.amplitude_a * std::polar(1.0, prefactor_phase) *
                    s21_nonlinear(f, res, truth.kerr, env.impedance_mismatch_phi);
        } else {
            value = s21_linear(f, res, env);
        }
        if (noise.sigma > 0.0)
            value += noise.sigma * std::complex<double>(rng.next(), rng.next());
        trace.samples[i] = value;
    }
    trace.validate();
    return trace;
}

PowerMap generate_power_map(const GeneratorTruth& truth, const std::vector<double>& powers_dbm,
                            const std::vector<double>& grid, const NoiseSpec& noise,
                            double attenuation_db) {
    for (std::size_t i = 1; i < powers_dbm.size(); ++i)
        if (!(powers_dbm[i] > powers_dbm[i - 1]))
            throw InvalidParameter("generate_power_map: powers must be ascending");

    const auto& res = truth.resonance;
    const double total = res.total_rate();

    PowerMap map;
    for (std::size_t p = 0; p < powers_dbm.size(); ++p) {
        GeneratorTruth point_truth = truth;
        point_truth.kerr.drive_amplitude_sq =
            drive_amplitude_sq_from_power(powers_dbm[p], attenuation_db, res);

        NoiseSpec sub_noise = noise;
        sub_noise.seed = derive_seed(noise.seed, p);
        ComplexTrace trace = generate_trace(point_truth, grid, sub_noise);
        trace.power_dbm = powers_dbm[p];
        trace.attenuation_db = attenuation_db;

        const double xi = kerr_drive_xi(res, point_truth.kerr);
        const double d_lo = (two_pi * grid.front() - res.omega0) / total;
        const double d_hi = (two_pi * grid.back() - res.omega0) / total;
        map.bifurcated.push_back(bifurcation_onset(d_lo, d_hi, xi));
        map.traces.push_back(std::move(trace));
    }
    return map;
}

FieldSweepSeries generate_field_sweep(const GeneratorTruth& truth,
                                      const std::vector<double>& b_values,
                                      FieldOrientation orientation, const NoiseSpec& noise) {
    truth.validate();
    noise.validate();
    for (std::size_t i = 1; i < b_values.size(); ++i)
        if (b_values[i] < b_values[i - 1])
            throw InvalidParameter("generate_field_sweep: fields must be non-decreasing");

    const double b_c = orientation == FieldOrientation::out_of_plane
                           ? truth.field.b_c_perp_t
                           : truth.field.b_c_parallel_t;

    FieldSweepSeries series;
    series.orientation = orientation;
    GaussianSource rng(noise.seed);

    for (double b : b_values) {
        if (b < 0.0 || (b_c > 0.0 && b > b_c))
            throw DomainError("generate_field_sweep: field beyond B_C");

        double shift;
        if (orientation == FieldOrientation::out_of_plane) {
            shift = quadratic_shift_bc(b, b_c);
        } else {
            shift = inplane_freq_shift(b, truth.film, truth.geometry,
                                       truth.field.theta_b_rad);
        }
        if (noise.sigma > 0.0) shift += noise.sigma * rng.next();

        FieldSweepSeries::Point point;
        point.b = b;
        point.rel_shift = shift;
        point.q_i = interpolate_template(truth.field.qi_template, b,
                                         truth.resonance.q_internal());
        point.q_c = truth.resonance.q_coupling();
        series.points.push_back(point);
    }
    return series;
}

std::vector<double> oracle_cubic_roots(double delta, double xi) {
    // Direct evaluation of the occupation equation; root finding goes
    // through sign changes only, keeping this path independent of the
    // closed-form solver.
    const double b = delta * delta + 0.25;
    const double c2 = 2.0 * delta * xi;
    const double c3 = xi * xi;
    auto f = [=](double n) { return ((c3 * n - c2) * n + b) * n - 0.5; };

    const double n_max = 4.0 * std::max(2.0, 0.5 / b);
    constexpr std::size_t samples = 1000000;
    const double step = n_max / static_cast<double>(samples);

    std::vector<double> roots;
    auto bisect = [&](double lo, double hi, double flo) {
        while (hi - lo > 1e-14) {
            const double mid = 0.5 * (lo + hi);
            const double fm = f(mid);
            if (fm == 0.0) return mid;
            if ((flo < 0.0) == (fm < 0.0)) {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
        }
        return 0.5 * (lo + hi);
    };

    // Branch-free block evaluation keeps the dense pass vectorizable;
    // sign changes are located in a second cheap scan per block.
    constexpr std::size_t block = 8192;
    static const auto offsets = [] {
        std::vector<double> k(block);
        for (std::size_t i = 0; i < block; ++i) k[i] = static_cast<double>(i);
        return k;
    }();
    double values[block];
    double prev_f = f(step);
    if (prev_f == 0.0) roots.push_back(step);

    for (std::size_t begin = 2; begin <= samples; begin += block) {
        const std::size_t count = std::min(begin + block, samples + 1) - begin;
        const double base = static_cast<double>(begin) * step;
        for (std::size_t k = 0; k < count; ++k) {
            const double n = base + offsets[k] * step;
            values[k] = ((c3 * n - c2) * n + b) * n - 0.5;
        }
        for (std::size_t k = 0; k < count; ++k) {
            const double fn = values[k];
            if (fn == 0.0) {
                roots.push_back(base + offsets[k] * step);
            } else if (prev_f * fn < 0.0) {
                const double n = base + offsets[k] * step;
                // prev_n recomputed from the grid; a 1-ulp placement
                // difference cannot move the bracket.
                const double pn = n - step;
                const double fp = f(pn);
                if (fp == 0.0) roots.push_back(pn);
                else if ((fp < 0.0) != (fn < 0.0)) roots.push_back(bisect(pn, n, fp));
                else roots.push_back(pn);
            }
            prev_f = fn;
        }
    }
    return roots;
}

double grid_fit_objective(const ComplexTrace& trace, double omega0, double kappa,
                          double gamma, const EnvironmentParams& env) {
    const double total = kappa + gamma;
    double objective = 0.0;
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const double f = trace.freqs[i];
        const double detuning = (two_pi * f - omega0) / total;
        const std::complex<double> model =
            env.amplitude_a *
            std::polar(1.0, env.phase_alpha - two_pi * f * env.delay_tau) *
            s21_notch(detuning, kappa / total, env.impedance_mismatch_phi);
        objective += std::norm(model - trace.samples[i]);
    }
    return objective;
}

GridFitEstimate oracle_grid_fit(const ComplexTrace& trace, const GridFitBounds& bounds) {
    trace.validate();
    const int n = std::max(bounds.points_per_axis, 15);
    auto axis_value = [n](double lo, double hi, int k) {
        return lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1);
    };

    GridFitEstimate best;
    best.objective = std::numeric_limits<double>::infinity();
    for (int a = 0; a < n; ++a) {
        const double omega0 = axis_value(bounds.omega0_lo, bounds.omega0_hi, a);
        for (int b = 0; b < n; ++b) {
            const double kappa = axis_value(bounds.kappa_lo, bounds.kappa_hi, b);
            for (int c = 0; c < n; ++c) {
                const double gamma = axis_value(bounds.gamma_lo, bounds.gamma_hi, c);
                if (!(kappa + gamma > 0.0)) continue;
                const double obj =
                    grid_fit_objective(trace, omega0, kappa, gamma, bounds.env);
                if (obj < best.objective)
                    best = {omega0, kappa, gamma, obj};
            }
        }
    }
    return best;
}

}  // namespace resforge
