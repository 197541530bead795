#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "resforge/physics.hpp"
#include "resforge/trace.hpp"

namespace resforge {

/// Raised when a trace shows no usable resonance dip. The caller may
/// widen the scan and retry.
class NoDipFound : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when a trace included in a Kerr fit admits multiple occupation
/// roots inside the fit window.
class BifurcationInFitWindow : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when a field-sweep series is dominated by positive frequency
/// shifts, inconsistent with the quadratic suppression model.
class PositiveShiftDominates : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Universal fitter output: named estimates, 1-sigma uncertainties (only
/// populated when converged), the summed squared residual and
/// convergence diagnostics.
struct FitResult {
    std::map<std::string, double> params;
    std::map<std::string, double> std_errors;
    double residual_norm = 0.0;
    bool converged = false;
    int n_iterations = 0;
    /// Soft error conditions ("NotConverged", "IllConditioned: ...",
    /// "NegativeSlope", ...). Empty on a clean fit.
    std::vector<std::string> diagnostics;
    /// Residual norms of accepted optimizer iterates (monotone).
    std::vector<double> objective_history;

    double param(const std::string& name) const;
    double std_error(const std::string& name) const;
};

/// Starting point produced by the circle method.
struct InitialGuess {
    ResonanceParams resonance;
    EnvironmentParams environment;
};

/// Circle-method initial guesses: cable delay from a linear phase
/// regression on the off-resonant wings, an algebraic circle fit to the
/// delay-corrected data, a phase-vs-frequency arctangent fit for the
/// resonance frequency and total linewidth, and the mismatch angle from
/// the off-resonant-point/circle-center geometry. Throws NoDipFound when
/// the dip is not at least 3x the noise floor.
InitialGuess initial_guess_circle(const ComplexTrace& trace);

/// Full complex fit of the linear hanger model over
/// (omega0, kappa, gamma, a, alpha, tau, phi). Parameters are reported
/// as f0_hz, kappa_hz, gamma_hz, q_i, q_c, a, alpha, tau_s, phi.
FitResult fit_linear_resonance(const ComplexTrace& trace,
                               std::optional<InitialGuess> guess = std::nullopt);

/// TLS loss-model fit on 1/Q_i versus photon number. Estimates
/// (tls_loss_F_delta0, critical_photon_nC, saturation_beta, delta0_eff);
/// the quasiparticle term is folded into delta0_eff.
FitResult fit_power_scan(const PowerScan& scan, double omega0, double temperature);

/// Joint two-dimensional Kerr fit over (K, phi) with fixed resonance
/// rates. Traces must be environment-normalized; drive amplitudes follow
/// from each trace's power and attenuation. Reports kerr_rad_per_photon,
/// kerr_hz_per_photon and phi.
FitResult fit_kerr_2d(const std::vector<ComplexTrace>& traces,
                      const ResonanceParams& res_fixed, double config_C = 4.0);

/// Critical-field fit of rel_shift = -(1/4)(B/B_C)^2. Reports b_c_t and
/// the quadratic coefficient.
FitResult fit_field_sweep_bc(const FieldSweepSeries& series);

/// Two-stage misalignment estimate: per-width quadratic field fits give
/// generalized diffusion coefficients D_p, whose linear regression
/// against (w/t)^2 yields D (intercept) and theta_B = sqrt(slope/intercept).
/// The theta_b std_error is a conservative (2-sigma) bound.
FitResult fit_misalignment(const std::map<double, FieldSweepSeries>& series_by_width,
                           const FilmProperties& film);

/// Capacitance per length from a measured quarter-wave frequency:
/// Ctilde = 1 / (16 l^2 f^2 Ltilde).
double fit_ctilde_from_frequency(double f_measured, const ResonatorGeometry& geom_partial);

/// Quality-control decision on a fit result.
struct QcDecision {
    bool accepted = false;
    std::string reason;  // empty when accepted
};

/// Rejects results that did not converge, report any std_error above
/// 10^3 in reporting units, or carry non-positive quality factors.
QcDecision qc_filter(const FitResult& result);

}  // namespace resforge
