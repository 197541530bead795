#pragma once

#include <complex>
#include <vector>

#include "resforge/types.hpp"

namespace resforge {

// ---------------------------------------------------------------------------
// Hanger transmission models
// ---------------------------------------------------------------------------

/// Resonance lineshape common to the linear and Kerr models:
///   1 - ratio * (e^{i phi}/cos phi) / (1 + 2i * detuning_norm)
/// where `ratio` is kappa/(kappa+gamma) and `detuning_norm` is the
/// detuning in units of the total linewidth.
std::complex<double> s21_notch(double detuning_norm, double coupling_ratio, double phi);

/// Linear hanger transmission at drive frequency `f_drive` (Hz),
/// including the environment prefactor a e^{i alpha} e^{-2 pi i f tau}.
std::complex<double> s21_linear(double f_drive, const ResonanceParams& res,
                                const EnvironmentParams& env);

/// Steady-state roots of the Kerr occupation equation
///   (delta^2 + 1/4) n - 2 delta xi n^2 + xi^2 n^3 = 1/2
/// in the reduced variables delta = (w_d - w_0)/(kappa+gamma) and
/// xi = |alpha_tilde_in|^2 K / (kappa+gamma).
struct OccupationRoots {
    std::vector<double> roots;  // positive real roots, ascending
    double stable_root = 0.0;   // smallest positive root (low-amplitude branch)

    bool bistable() const { return roots.size() > 1; }
};

OccupationRoots solve_photon_occupation(double delta, double xi);

/// True iff any reduced detuning in [delta_lo, delta_hi] admits more
/// than one positive occupation root at drive strength `xi`.
bool bifurcation_onset(double delta_lo, double delta_hi, double xi);

/// Reduced drive strength xi for a resonance + drive pair:
///   xi = kappa |alpha_in|^2 K / (kappa+gamma)^3.
double kerr_drive_xi(const ResonanceParams& res, const KerrModelParams& kerr);

/// Kerr (Duffing) hanger transmission. The occupation is taken from the
/// stable branch of solve_photon_occupation at the same (delta, xi).
std::complex<double> s21_nonlinear(double f_drive, const ResonanceParams& res,
                                   const KerrModelParams& kerr, double env_phi);

// ---------------------------------------------------------------------------
// Loss and kinetic-inductance models
// ---------------------------------------------------------------------------

/// Power-dependent inverse internal quality factor:
///   F d0_TLS tanh(hbar w0 / 2 kB T) / (1 + n/n_C)^beta + qp_loss + d0.
/// At T = 0 the tanh factor is taken as its limit, 1.
double inverse_qi(double n_ph, const LossModelParams& loss, double omega0);

/// Current-dependent sheet kinetic inductance
///   Lk(I) = Lk(0) [1 - (|I|/I*)^n]^{-1/n}.
/// Throws DomainError at |i| >= I* where the expression diverges.
double lk_of_current(double i, const FilmProperties& film);

/// Sheet kinetic inductance from the normal-state sheet resistance:
///   Lk = R_sq hbar / (pi Delta) / tanh(Delta / 2 kB T),  Delta = 1.764 kB Tc.
/// Throws DomainError for temperature >= Tc.
double lk_from_sheet_resistance(const FilmProperties& film, double temperature);

// ---------------------------------------------------------------------------
// Self-Kerr estimates
// ---------------------------------------------------------------------------

/// Dirty-limit BCS self-Kerr: K = -(3/8) hbar w_r^2 / (Lt I*^2). Always
/// negative for positive inputs.
double kerr_bcs(double omega_r, double total_inductance, double i_star);

/// Same expression written against film/geometry quantities:
///   K = -(3/8) hbar w_r^2 / (Lk j_c^2 t^2 l w),
/// identical to kerr_bcs under Lt = Lk l/w, I* = j_c t w.
double kerr_bcs_geometric(double omega_r, const FilmProperties& film,
                          const ResonatorGeometry& geom, double j_c);

/// Junction-array self-Kerr for granular films:
///   K = -(3/16) pi e a w_r^2 / (j_sw V_g),
/// with j_sw = Isw/(w t) and grain volume V_g = l w t.
double kerr_jj(double omega_r, const FilmProperties& film, const ResonatorGeometry& geom);

// ---------------------------------------------------------------------------
// Magnetic-field response
// ---------------------------------------------------------------------------

/// Relative frequency shift under an in-plane field with an out-of-plane
/// misalignment angle theta_b:
///   dw/w0 = -(pi/48) (e^2 t^2 / hbar kB Tc) D (1 + theta^2 w^2/t^2) B^2.
double inplane_freq_shift(double b_par, const FilmProperties& film,
                          const ResonatorGeometry& geom, double theta_b);

/// Quadratic critical-field approximation dw/w0 = -(1/4)(B/B_C)^2.
double quadratic_shift_bc(double b, double b_c);

/// Gap suppression Delta(B) = Delta0 sqrt(1 - (B/B_C)^2); domain error
/// outside 0 <= b <= b_c.
double gap_vs_field(double b, const FilmProperties& film, double b_c);

// ---------------------------------------------------------------------------
// Calibration and transmission-line relations
// ---------------------------------------------------------------------------

/// Mean intracavity photon number for a source power P (dBm) attenuated
/// by A (dB): n = C kappa / (hbar w0 (kappa+gamma)^2) * 10^{(P-A)/10}/1000.
/// C = 4 for the hanger configuration.
double photon_number(double power_dbm, double attenuation_db, const ResonanceParams& res,
                     double config_C = 4.0);

/// Drive normalization |alpha_in|^2 for the Kerr model, calibrated so
/// the linear-limit on-resonance photon number reproduces photon_number
/// with C = 4.
double drive_amplitude_sq_from_power(double power_dbm, double attenuation_db,
                                     const ResonanceParams& res);

/// Quarter-wave resonance f = 1 / (4 l sqrt(Ltilde Ctilde)).
double quarterwave_frequency(const ResonatorGeometry& geom);

/// Characteristic impedance Z = sqrt(Ltilde / Ctilde).
double characteristic_impedance(const ResonatorGeometry& geom);

}  // namespace resforge
