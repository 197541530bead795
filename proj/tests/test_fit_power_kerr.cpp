#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "resforge/fit.hpp"
#include "resforge/synth.hpp"

using namespace resforge;

namespace {

std::vector<double> span_grid(const ResonanceParams& res, double linewidths, int n) {
    const double half = linewidths / 2.0 * res.total_rate() / two_pi;
    std::vector<double> grid(n);
    for (int i = 0; i < n; ++i)
        grid[i] = res.f0_hz() - half + linewidths * res.total_rate() / two_pi *
                                           static_cast<double>(i) / (n - 1);
    return grid;
}

PowerScan synth_power_scan(const LossModelParams& loss, double omega0, int n_points,
                           double rel_sigma, std::uint64_t seed) {
    PowerScan scan;
    GaussianSource rng(seed);
    for (int i = 0; i < n_points; ++i) {
        const double n_ph =
            std::pow(10.0, -2.0 + 8.0 * static_cast<double>(i) / (n_points - 1));
        const double inv_qi = inverse_qi(n_ph, loss, omega0);
        double q = 1.0 / inv_qi;
        double err = 0.0;
        if (rel_sigma > 0.0) {
            err = rel_sigma * q;
            q += err * rng.next();
        }
        scan.points.push_back({n_ph, q, err});
    }
    return scan;
}

}  // namespace

TEST_CASE("power-scan fit: noise-free exact recovery") {
    const double omega0 = two_pi * 4.0743e9;
    const LossModelParams loss(2.4e-5, 37.0, 0.74, 5.1e-6, 0.0, 0.0);
    const auto scan = synth_power_scan(loss, omega0, 25, 0.0, 0);
    const auto fit = fit_power_scan(scan, omega0, 0.0);

    REQUIRE(fit.converged);
    CHECK(fit.param("tls_loss_F_delta0") == doctest::Approx(2.4e-5).epsilon(1e-6));
    CHECK(fit.param("critical_photon_nC") == doctest::Approx(37.0).epsilon(1e-6));
    CHECK(fit.param("saturation_beta") == doctest::Approx(0.74).epsilon(1e-6));
    CHECK(fit.param("delta0_eff") == doctest::Approx(5.1e-6).epsilon(1e-6));
}

TEST_CASE("power-scan fit: finite temperature tanh factor") {
    const double omega0 = two_pi * 4.0743e9;
    const LossModelParams loss(2.4e-5, 37.0, 0.74, 5.1e-6, 0.0, 0.08);
    const auto scan = synth_power_scan(loss, omega0, 25, 0.0, 0);
    const auto fit = fit_power_scan(scan, omega0, 0.08);
    REQUIRE(fit.converged);
    CHECK(fit.param("tls_loss_F_delta0") == doctest::Approx(2.4e-5).epsilon(1e-5));
}

TEST_CASE("power-scan fit: flat scan gives a TLS amplitude consistent with zero") {
    const double omega0 = two_pi * 5e9;
    const LossModelParams loss(0.0, 1.0, 1.0, 8e-6, 0.0, 0.0);
    auto scan = synth_power_scan(loss, omega0, 20, 1e-4, 7);
    const auto fit = fit_power_scan(scan, omega0, 0.0);
    REQUIRE(fit.converged);
    CHECK(std::abs(fit.param("tls_loss_F_delta0")) <=
          std::max(fit.std_error("tls_loss_F_delta0"), 1e-12));
}

TEST_CASE("power-scan fit: weighted noisy recovery") {
    const double omega0 = two_pi * 4.0743e9;
    const LossModelParams loss(3e-5, 80.0, 0.9, 4e-6, 0.0, 0.0);
    const auto scan = synth_power_scan(loss, omega0, 30, 5e-3, 21);
    const auto fit = fit_power_scan(scan, omega0, 0.0);
    REQUIRE(fit.converged);
    CHECK(fit.param("tls_loss_F_delta0") == doctest::Approx(3e-5).epsilon(0.10));
    CHECK(fit.param("critical_photon_nC") == doctest::Approx(80.0).epsilon(0.35));
    CHECK(fit.param("saturation_beta") == doctest::Approx(0.9).epsilon(0.15));
}

TEST_CASE("power-scan fit: field-driven n_C collapse is reproduced") {
    // families generated with n_C dropping by orders of magnitude, as in
    // the in-plane power scans
    const double omega0 = two_pi * 4.8282e9;
    double previous = 1e9;
    for (double n_c : {3.0e4, 3.0e2, 3.0}) {
        const LossModelParams loss(2e-5, n_c, 0.8, 4e-6, 0.0, 0.0);
        const auto scan = synth_power_scan(loss, omega0, 30, 0.0, 0);
        const auto fit = fit_power_scan(scan, omega0, 0.0);
        REQUIRE(fit.converged);
        CHECK(fit.param("critical_photon_nC") == doctest::Approx(n_c).epsilon(1e-4));
        CHECK(fit.param("critical_photon_nC") < previous / 10.0);
        previous = fit.param("critical_photon_nC");
    }
}

TEST_CASE("power-scan fit preconditions") {
    const LossModelParams loss(2e-5, 30.0, 0.8, 4e-6, 0.0, 0.0);
    auto scan = synth_power_scan(loss, two_pi * 5e9, 25, 0.0, 0);
    SUBCASE("too few points") {
        scan.points.resize(5);
        CHECK_THROWS_AS(fit_power_scan(scan, two_pi * 5e9, 0.0), InvalidParameter);
    }
    SUBCASE("insufficient decade span") {
        PowerScan narrow;
        for (int i = 0; i < 10; ++i)
            narrow.points.push_back({10.0 + i, 1e4, 0.0});
        CHECK_THROWS_AS(fit_power_scan(narrow, two_pi * 5e9, 0.0), InvalidParameter);
    }
}

// ---------------------------------------------------------------------------
// Kerr 2D fit
// ---------------------------------------------------------------------------

namespace {

struct KerrMapSetup {
    GeneratorTruth truth;
    std::vector<double> powers;
    std::vector<double> grid;
    double attenuation = 80.0;
};

// Source power whose drive reaches |K| <n_ph> = frac * (kappa+gamma).
double power_at_fraction(const ResonanceParams& res, double kerr_hz, double frac,
                         double attenuation) {
    const double total = res.total_rate();
    const double drive =
        frac * total * total * total / (2.0 * res.kappa_ext * two_pi * std::abs(kerr_hz));
    const double p_watt = drive * constants().hbar * res.omega0 / 2.0;
    return 10.0 * std::log10(p_watt * 1000.0) + attenuation;
}

KerrMapSetup nbn_map(double kerr_hz) {
    KerrMapSetup setup;
    setup.truth.resonance = ResonanceParams::from_quality_factors(4.0743e9, 13805.0, 28241.0);
    setup.truth.env = EnvironmentParams{};  // environment-normalized traces
    setup.truth.kerr = KerrModelParams(two_pi * kerr_hz, 0.0);
    const double top = power_at_fraction(setup.truth.resonance, kerr_hz, 0.3,
                                         setup.attenuation);
    for (int k = -8; k <= 0; ++k) setup.powers.push_back(top + 2.0 * k);
    setup.grid = span_grid(setup.truth.resonance, 12.0, 201);
    return setup;
}

}  // namespace

TEST_CASE("kerr 2D fit: noise-free recovery to 1e-6") {
    auto setup = nbn_map(-4.506);
    const auto map = generate_power_map(setup.truth, setup.powers, setup.grid, {},
                                        setup.attenuation);
    for (bool flag : map.bifurcated) CHECK_FALSE(flag);
    const auto fit = fit_kerr_2d(map.traces, setup.truth.resonance);
    REQUIRE(fit.converged);
    CHECK(fit.param("kerr_hz_per_photon") == doctest::Approx(-4.506).epsilon(1e-6));
    CHECK(std::abs(fit.param("phi")) < 1e-7);
}

TEST_CASE("kerr 2D fit: zero-Kerr generator is consistent with zero") {
    auto setup = nbn_map(-4.506);
    setup.truth.kerr = KerrModelParams(0.0, 0.0);
    const auto map = generate_power_map(setup.truth, setup.powers, setup.grid,
                                        {1e-4, 33}, setup.attenuation);
    const auto fit = fit_kerr_2d(map.traces, setup.truth.resonance);
    REQUIRE(fit.converged);
    CHECK(std::abs(fit.param("kerr_hz_per_photon")) <=
          2.0 * fit.std_error("kerr_hz_per_photon") + 1e-9);
}

TEST_CASE("kerr 2D fit: grAl-like map at sigma=1e-3 recovers within 5%") {
    KerrMapSetup setup;
    setup.truth.resonance =
        ResonanceParams::from_quality_factors(4.2809e9, 6.75e5, 8893.0);
    setup.truth.env = EnvironmentParams{};
    setup.truth.kerr = KerrModelParams(-two_pi * 49.999, 0.0);
    const double top = power_at_fraction(setup.truth.resonance, 49.999, 0.3,
                                         setup.attenuation);
    for (int k = -6; k <= 0; ++k) setup.powers.push_back(top + 2.5 * k);
    setup.grid = span_grid(setup.truth.resonance, 12.0, 201);

    std::vector<double> errors;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto map = generate_power_map(setup.truth, setup.powers, setup.grid,
                                            {1e-3, seed}, setup.attenuation);
        const auto fit = fit_kerr_2d(map.traces, setup.truth.resonance);
        if (!fit.converged) continue;
        errors.push_back(std::abs(fit.param("kerr_hz_per_photon") + 49.999) / 49.999);
    }
    REQUIRE(errors.size() >= 19);
    std::sort(errors.begin(), errors.end());
    CHECK(errors[errors.size() / 2] < 0.05);
}

TEST_CASE("kerr 2D fit rejects maps whose drive bifurcates in-window") {
    auto setup = nbn_map(-4.506);
    // push far beyond the bifurcation threshold
    for (auto& p : setup.powers) p += 30.0;
    const auto map = generate_power_map(setup.truth, setup.powers, setup.grid, {},
                                        setup.attenuation);
    bool any_flagged = false;
    for (bool flag : map.bifurcated) any_flagged = any_flagged || flag;
    REQUIRE(any_flagged);
    CHECK_THROWS_AS(fit_kerr_2d(map.traces, setup.truth.resonance),
                    BifurcationInFitWindow);
}
