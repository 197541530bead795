#pragma once

#include <stdexcept>
#include <string>

#include "resforge/constants.hpp"

namespace resforge {

/// Thrown when a domain-type invariant is violated at construction.
class InvalidParameter : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Thrown when an operation is evaluated outside its mathematical domain.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Background transmission parameters of the hanger model: a global
/// amplitude, phase offset, cable delay and impedance-mismatch angle.
struct EnvironmentParams {
    double amplitude_a = 1.0;            // dimensionless, > 0
    double phase_alpha = 0.0;            // rad
    double delay_tau = 0.0;              // s
    double impedance_mismatch_phi = 0.0; // rad, in (-pi/2, pi/2)

    EnvironmentParams() = default;
    EnvironmentParams(double a, double alpha, double tau, double phi)
        : amplitude_a(a), phase_alpha(alpha), delay_tau(tau), impedance_mismatch_phi(phi) {
        validate();
    }
    void validate() const {
        if (!(amplitude_a > 0.0))
            throw InvalidParameter("EnvironmentParams: amplitude_a must be > 0");
        constexpr double half_pi = std::numbers::pi / 2.0;
        if (!(impedance_mismatch_phi > -half_pi && impedance_mismatch_phi < half_pi))
            throw InvalidParameter("EnvironmentParams: phi must lie in (-pi/2, pi/2)");
    }
};

/// Resonance frequency and loss rates. All rates are angular (rad/s);
/// conversions to Hz happen only at file/CLI boundaries.
struct ResonanceParams {
    double omega0 = 0.0;     // rad/s, > 0
    double kappa_ext = 0.0;  // rad/s, >= 0 (coupling to the feedline)
    double gamma_int = 0.0;  // rad/s, >= 0 (internal losses)

    ResonanceParams() = default;
    ResonanceParams(double omega0_, double kappa, double gamma)
        : omega0(omega0_), kappa_ext(kappa), gamma_int(gamma) {
        validate();
    }

    static ResonanceParams from_quality_factors(double f0_hz, double q_i, double q_c) {
        if (!(f0_hz > 0.0) || !(q_i > 0.0) || !(q_c > 0.0))
            throw InvalidParameter("from_quality_factors: f0, Q_i, Q_c must be > 0");
        const double w0 = two_pi * f0_hz;
        return ResonanceParams(w0, w0 / q_c, w0 / q_i);
    }

    void validate() const {
        if (!(omega0 > 0.0))
            throw InvalidParameter("ResonanceParams: omega0 must be > 0");
        if (kappa_ext < 0.0 || gamma_int < 0.0)
            throw InvalidParameter("ResonanceParams: rates must be >= 0");
        if (!(kappa_ext + gamma_int > 0.0))
            throw InvalidParameter("ResonanceParams: kappa + gamma must be > 0");
    }

    double total_rate() const { return kappa_ext + gamma_int; }
    double f0_hz() const { return omega0 / two_pi; }
    double q_internal() const { return omega0 / gamma_int; }
    double q_coupling() const { return omega0 / kappa_ext; }
    double q_loaded() const { return omega0 / total_rate(); }
};

/// Self-Kerr coefficient and drive normalization. `drive_amplitude_sq`
/// is |alpha_in|^2 in photons/s, scaled so that the intracavity photon
/// number n*|alpha_tilde_in|^2 matches the hanger photon-number
/// calibration (C = 4) at resonance in the linear limit.
struct KerrModelParams {
    double kerr_K = 0.0;             // rad/s per photon, <= 0
    double drive_amplitude_sq = 0.0; // photons/s, >= 0

    KerrModelParams() = default;
    KerrModelParams(double k, double drive_sq) : kerr_K(k), drive_amplitude_sq(drive_sq) {
        validate();
    }
    void validate() const {
        if (kerr_K > 0.0)
            throw InvalidParameter("KerrModelParams: kinetic-inductance Kerr must be <= 0");
        if (drive_amplitude_sq < 0.0)
            throw InvalidParameter("KerrModelParams: drive_amplitude_sq must be >= 0");
    }
};

/// Power- and temperature-dependent loss model. The quasiparticle
/// contribution is carried as a single fixed scalar at the measurement
/// temperature; base-temperature fits fold it into residual_delta0.
struct LossModelParams {
    double tls_loss_F_delta0 = 0.0;  // dimensionless, >= 0 (product F * delta0_TLS)
    double critical_photon_nC = 1.0; // photons, > 0
    double saturation_beta = 1.0;    // dimensionless, (0, 2]
    double residual_delta0 = 0.0;    // dimensionless, >= 0
    double qp_loss = 0.0;            // dimensionless, >= 0
    double temperature_T = 0.0;      // K, >= 0

    LossModelParams() = default;
    LossModelParams(double f_delta0, double n_c, double beta, double delta0,
                    double qp, double temperature)
        : tls_loss_F_delta0(f_delta0), critical_photon_nC(n_c), saturation_beta(beta),
          residual_delta0(delta0), qp_loss(qp), temperature_T(temperature) {
        validate();
    }
    void validate() const {
        if (tls_loss_F_delta0 < 0.0 || residual_delta0 < 0.0 || qp_loss < 0.0)
            throw InvalidParameter("LossModelParams: loss contributions must be >= 0");
        if (!(critical_photon_nC > 0.0))
            throw InvalidParameter("LossModelParams: critical_photon_nC must be > 0");
        if (!(saturation_beta > 0.0 && saturation_beta <= 2.0))
            throw InvalidParameter("LossModelParams: saturation_beta must lie in (0, 2]");
        if (temperature_T < 0.0)
            throw InvalidParameter("LossModelParams: temperature must be >= 0");
    }
};

/// Thin-film material properties. `gap_delta0 == 0` means "derive from
/// Tc" via the BCS weak-coupling ratio.
struct FilmProperties {
    double lk_sheet = 0.0;              // H/sq
    double thickness_t = 0.0;           // m
    double critical_temp_Tc = 0.0;      // K
    double sheet_resistance = 0.0;      // Ohm/sq
    double gap_delta0 = 0.0;            // J; 0 -> derived as 1.764 k_B Tc
    double diffusion_D = 0.0;           // m^2/s
    double depairing_current_Istar = 0.0; // A
    double switching_current_Isw = 0.0; // A
    double grain_size_a = 0.0;          // m
    double depairing_exponent_n = 2.21; // dimensionless

    void validate() const {
        if (thickness_t < 0.0 || lk_sheet < 0.0 || critical_temp_Tc < 0.0 ||
            sheet_resistance < 0.0 || gap_delta0 < 0.0 || diffusion_D < 0.0 ||
            depairing_current_Istar < 0.0 || switching_current_Isw < 0.0 ||
            grain_size_a < 0.0)
            throw InvalidParameter("FilmProperties: fields must be >= 0");
        if (!(depairing_exponent_n > 0.0))
            throw InvalidParameter("FilmProperties: depairing exponent must be > 0");
    }

    /// Superconducting gap at zero field, derived from Tc unless set.
    double gap() const {
        if (gap_delta0 > 0.0) return gap_delta0;
        return bcs_gap_ratio * constants().k_B * critical_temp_Tc;
    }
};

/// Transmission-line geometry of a single wire resonator.
struct ResonatorGeometry {
    double width_w = 0.0;               // m
    double length_l = 0.0;              // m
    double inductance_per_length = 0.0; // H/m
    double capacitance_per_length = 0.0;// F/m

    ResonatorGeometry() = default;
    ResonatorGeometry(double w, double l, double ltilde, double ctilde)
        : width_w(w), length_l(l), inductance_per_length(ltilde),
          capacitance_per_length(ctilde) {
        validate();
    }

    /// Geometry with the inductance per length taken from the film sheet
    /// inductance: Ltilde = Lk / w.
    static ResonatorGeometry from_film(const FilmProperties& film, double w, double l,
                                       double ctilde) {
        if (!(w > 0.0))
            throw InvalidParameter("ResonatorGeometry: width must be > 0");
        return ResonatorGeometry(w, l, film.lk_sheet / w, ctilde);
    }

    void validate() const {
        if (!(width_w > 0.0) || !(length_l > 0.0))
            throw InvalidParameter("ResonatorGeometry: width and length must be > 0");
        if (inductance_per_length < 0.0 || capacitance_per_length < 0.0)
            throw InvalidParameter("ResonatorGeometry: per-length values must be >= 0");
    }

    /// Total wire inductance Lt = Ltilde * l (= Lk * l / w for a film).
    double total_inductance() const { return inductance_per_length * length_l; }
};

}  // namespace resforge
