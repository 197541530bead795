#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "resforge/fit.hpp"
#include "resforge/trace.hpp"

namespace resforge {

/// Name of the noise algorithm, recorded in generated artifacts so
/// determinism is portable.
inline constexpr const char* rng_algorithm = "mt19937_64/box-muller";

/// Additive complex Gaussian noise, white across frequency.
struct NoiseSpec {
    double sigma = 0.0;  // per-quadrature standard deviation
    std::uint64_t seed = 0;

    void validate() const {
        if (sigma < 0.0) throw InvalidParameter("NoiseSpec: sigma must be >= 0");
    }
};

/// Deterministic sub-stream seed derivation (splitmix64 of seed + index).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

/// Deterministic standard-normal source: mt19937_64 driving an explicit
/// Box-Muller transform (no implementation-defined distributions).
class GaussianSource {
public:
    explicit GaussianSource(std::uint64_t seed) : engine_(seed) {}
    double next();

private:
    double uniform();  // in [0, 1), 53-bit mantissa
    std::mt19937_64 engine_;
    double cached_ = 0.0;
    bool have_cached_ = false;
};

/// Field-response behaviour of a simulated resonator. The Q_i template
/// is a piecewise-linear list of (B, Q_i) knots emulating measured
/// shapes (ESR dip, sweet spot, cutoff); it is an input, not a physics
/// claim. An empty template means a field-independent Q_i.
struct FieldBehavior {
    double b_c_parallel_t = 0.0;
    double b_c_perp_t = 0.0;
    double theta_b_rad = 0.0;
    std::vector<std::pair<double, double>> qi_template;
};

/// Complete ground truth behind a generated artifact; serialized as a
/// sidecar next to every output so fits are verifiable by round-trip.
struct GeneratorTruth {
    ResonanceParams resonance;
    EnvironmentParams env;
    KerrModelParams kerr;
    LossModelParams loss;
    FilmProperties film;
    ResonatorGeometry geometry;
    FieldBehavior field;

    void validate() const {
        resonance.validate();
        env.validate();
        kerr.validate();
        loss.validate();
        film.validate();
    }
};

/// Forward-model trace on `grid` plus complex Gaussian noise. The Kerr
/// model is used when |K| times the expected resonant occupation exceeds
/// 1e-3 of the total linewidth, the linear model otherwise.
ComplexTrace generate_trace(const GeneratorTruth& truth, const std::vector<double>& grid,
                            const NoiseSpec& noise);

struct PowerMap {
    std::vector<ComplexTrace> traces;   // one per power, ascending
    std::vector<bool> bifurcated;       // drive admits multiple roots in-window
};

/// One trace per source power, drive amplitudes mapped through the
/// photon-number calibration at the given line attenuation.
PowerMap generate_power_map(const GeneratorTruth& truth, const std::vector<double>& powers_dbm,
                            const std::vector<double>& grid, const NoiseSpec& noise,
                            double attenuation_db);

/// Frequency-shift/quality-factor series over a field sweep. In-plane
/// shifts follow the misalignment model, out-of-plane shifts the
/// quadratic critical-field law; Q_i follows the truth template.
FieldSweepSeries generate_field_sweep(const GeneratorTruth& truth,
                                      const std::vector<double>& b_values,
                                      FieldOrientation orientation, const NoiseSpec& noise);

/// Brute-force occupation roots: dense scan over (0, n_max] with 1e6
/// samples, sign-change bracketing and bisection to 1e-14. Independent
/// of the closed-form solver.
std::vector<double> oracle_cubic_roots(double delta, double xi);

/// Exhaustive coarse grid over (omega0, kappa, gamma) minimizing the
/// same complex objective as the resonance fitter, with the environment
/// held fixed. Confirms an engine optimum is not a spurious minimum.
struct GridFitBounds {
    double omega0_lo = 0.0, omega0_hi = 0.0;  // rad/s
    double kappa_lo = 0.0, kappa_hi = 0.0;    // rad/s
    double gamma_lo = 0.0, gamma_hi = 0.0;    // rad/s
    int points_per_axis = 15;
    EnvironmentParams env;
};

struct GridFitEstimate {
    double omega0 = 0.0, kappa = 0.0, gamma = 0.0;
    double objective = 0.0;  // sum of squared complex residuals
};

GridFitEstimate oracle_grid_fit(const ComplexTrace& trace, const GridFitBounds& bounds);

/// Objective evaluated by oracle_grid_fit at explicit parameters.
double grid_fit_objective(const ComplexTrace& trace, double omega0, double kappa,
                          double gamma, const EnvironmentParams& env);

}  // namespace resforge
