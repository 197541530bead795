#include <doctest.h>

#include <cmath>
#include <random>

#include "resforge/physics.hpp"
#include "resforge/synth.hpp"

using namespace resforge;

namespace {

double occupation_residual(double n, double delta, double xi) {
    return (delta * delta + 0.25) * n - 2.0 * delta * xi * n * n + xi * xi * n * n * n -
           0.5;
}

}  // namespace

TEST_CASE("zero drive gives the closed-form single root") {
    SUBCASE("on resonance") {
        const auto roots = solve_photon_occupation(0.0, 0.0);
        REQUIRE(roots.roots.size() == 1);
        CHECK(roots.stable_root == doctest::Approx(2.0).epsilon(1e-14));
    }
    SUBCASE("any detuning") {
        for (double delta : {-7.0, -0.3, 0.5, 4.0, 18.5}) {
            const auto roots = solve_photon_occupation(delta, 0.0);
            REQUIRE(roots.roots.size() == 1);
            CHECK(roots.stable_root ==
                  doctest::Approx(0.5 / (delta * delta + 0.25)).epsilon(1e-14));
        }
    }
}

TEST_CASE("roots satisfy the occupation equation to 1e-12") {
    std::mt19937_64 rng(8451);
    auto uniform = [&](double lo, double hi) {
        return lo + (hi - lo) * static_cast<double>(rng() >> 11) * 0x1.0p-53;
    };
    for (int trial = 0; trial < 5000; ++trial) {
        const double delta = uniform(-20.0, 20.0);
        const double xi = uniform(-5.0, 5.0);
        const auto result = solve_photon_occupation(delta, xi);
        REQUIRE(!result.roots.empty());
        CHECK(result.roots.size() <= 3);
        CHECK(result.stable_root == result.roots.front());
        for (double n : result.roots) {
            CHECK(n > 0.0);
            CHECK(std::abs(occupation_residual(n, delta, xi)) < 1e-12);
        }
        for (std::size_t k = 1; k < result.roots.size(); ++k)
            CHECK(result.roots[k] > result.roots[k - 1]);
    }
}

TEST_CASE("tiny nonzero drive stays continuous with the linear limit") {
    for (double xi : {1e-30, -1e-30, 1e-15, -1e-15}) {
        const auto roots = solve_photon_occupation(1.0, xi);
        REQUIRE(roots.roots.size() == 1);
        CHECK(roots.stable_root == doctest::Approx(0.5 / 1.25).epsilon(1e-9));
    }
}

TEST_CASE("fast solver agrees with the brute-force oracle") {
    // dense-scan oracle with bisection; agreement in count and value
    std::mt19937_64 rng(20260809);
    auto uniform = [&](double lo, double hi) {
        return lo + (hi - lo) * static_cast<double>(rng() >> 11) * 0x1.0p-53;
    };
    int bistable_seen = 0;
    for (int trial = 0; trial < 300; ++trial) {
        const double delta = uniform(-20.0, 20.0);
        const double xi = uniform(-5.0, 5.0);
        const auto fast = solve_photon_occupation(delta, xi);
        const auto slow = oracle_cubic_roots(delta, xi);
        REQUIRE(fast.roots.size() == slow.size());
        for (std::size_t k = 0; k < slow.size(); ++k)
            CHECK(std::abs(fast.roots[k] - slow[k]) < 1e-10);
        if (fast.roots.size() > 1) ++bistable_seen;
    }
    CHECK(bistable_seen > 0);  // the sampled box must cover the bistable region
}

TEST_CASE("known bistable point") {
    // xi above the Duffing threshold with matched detuning: three roots.
    const auto onset = solve_photon_occupation(2.0, 1.0);
    CHECK(onset.roots.size() == 3);
    const auto oracle = oracle_cubic_roots(2.0, 1.0);
    REQUIRE(oracle.size() == 3);
    for (std::size_t k = 0; k < 3; ++k)
        CHECK(std::abs(onset.roots[k] - oracle[k]) < 1e-10);
}

TEST_CASE("bifurcation_onset") {
    SUBCASE("zero drive never bifurcates") {
        CHECK_FALSE(bifurcation_onset(-100.0, 100.0, 0.0));
    }
    SUBCASE("below the Duffing threshold never bifurcates") {
        CHECK_FALSE(bifurcation_onset(-50.0, 50.0, 0.3));
        CHECK_FALSE(bifurcation_onset(-50.0, 50.0, -0.3));
    }
    SUBCASE("strong drive at matched detuning bifurcates") {
        CHECK(bifurcation_onset(0.0, 5.0, 1.0));
        CHECK(bifurcation_onset(-5.0, 0.0, -1.0));  // mirrored for negative Kerr
        CHECK_FALSE(bifurcation_onset(-5.0, -0.5, 1.0));  // wrong detuning side
    }
    SUBCASE("range endpoints may be swapped") {
        CHECK(bifurcation_onset(5.0, 0.0, 1.0));
    }
}

TEST_CASE("bifurcation onset power matches the K n ~ kappa+gamma estimate") {
    // Table I Res 0 rates with the fitted Kerr. Increase the drive until
    // the window bifurcates; the onset must sit within a factor of 10 of
    // the power where |K| <n_ph> = kappa + gamma.
    const auto res = ResonanceParams::from_quality_factors(4.0743e9, 13805.0, 28241.0);
    const double total = res.total_rate();
    const double k = -two_pi * 4.506;

    // drive at which |K| n = total, with n from the linear on-resonance
    // occupation 2 kappa |a_in|^2 / total^2
    const double drive_star = total * total * total / (2.0 * res.kappa_ext * std::abs(k));

    auto window_bifurcates = [&](double drive) {
        const double xi = res.kappa_ext * drive * k / (total * total * total);
        return bifurcation_onset(-30.0, 30.0, xi);
    };
    CHECK_FALSE(window_bifurcates(drive_star / 10.0));
    CHECK(window_bifurcates(drive_star * 10.0));
}

TEST_CASE("nonlinear S21 reduces to the linear model at zero Kerr") {
    const auto res = ResonanceParams::from_quality_factors(4.0743e9, 13805.0, 28241.0);
    const KerrModelParams kerr(0.0, 1e12);
    for (int k = -10; k <= 10; ++k) {
        const double f = res.f0_hz() + k * res.total_rate() / two_pi;
        const auto nonlinear = s21_nonlinear(f, res, kerr, 0.1);
        const auto linear = s21_linear(f, res, EnvironmentParams(1.0, 0.0, 0.0, 0.1));
        CHECK(std::abs(nonlinear - linear) < 1e-12 * std::abs(linear));
    }
}

TEST_CASE("effective resonance reproduces the linear dip value") {
    const auto res = ResonanceParams::from_quality_factors(4.0743e9, 13805.0, 28241.0);
    const double total = res.total_rate();
    // moderate drive (|xi| = 0.3, below the bistability threshold) so the
    // response stays single valued across the sweep
    const double k_rad = -two_pi * 4.506;
    const double drive = 0.3 * total * total * total / (res.kappa_ext * std::abs(k_rad));
    const KerrModelParams kerr(k_rad, drive);
    const double xi = kerr_drive_xi(res, kerr);

    // Find the drive frequency where delta = xi * n by scanning.
    double best_f = res.f0_hz();
    double best_gap = 1e9;
    for (int k = -40000; k <= 1000; ++k) {
        const double f = res.f0_hz() + k * total / two_pi / 1000.0;
        const double delta = (two_pi * f - res.omega0) / total;
        const double n = solve_photon_occupation(delta, xi).stable_root;
        if (std::abs(delta - xi * n) < best_gap) {
            best_gap = std::abs(delta - xi * n);
            best_f = f;
        }
    }
    const double dip_mag = std::abs(s21_nonlinear(best_f, res, kerr, 0.0));
    const double linear_dip = std::abs(s21_linear(res.f0_hz(), res, EnvironmentParams{}));
    CHECK(dip_mag == doctest::Approx(linear_dip).epsilon(1e-4));
}

TEST_CASE("negative Kerr redshifts the dip at high drive") {
    const auto res = ResonanceParams::from_quality_factors(4.0743e9, 13805.0, 28241.0);
    const double total = res.total_rate();
    // drive near the nonlinearity onset
    const double drive = total * total * total / (2.0 * res.kappa_ext * two_pi * 4.506) * 0.5;
    const KerrModelParams kerr(-two_pi * 4.506, drive);

    double dip_f = 0.0, dip_mag = 2.0;
    for (int k = -3000; k <= 3000; ++k) {
        const double f = res.f0_hz() + k * total / two_pi / 100.0;
        const double mag = std::abs(s21_nonlinear(f, res, kerr, 0.0));
        if (mag < dip_mag) {
            dip_mag = mag;
            dip_f = f;
        }
    }
    CHECK(dip_f < res.f0_hz());  // redshift
    // shift magnitude of order |K| n / 2 pi
    const double n_res = 2.0 * res.kappa_ext * drive / (total * total);
    CHECK(std::abs(dip_f - res.f0_hz()) > 0.1 * 4.506 * n_res);
}

TEST_CASE("oracle handles the linear limit directly") {
    const auto at_zero = oracle_cubic_roots(0.0, 0.0);
    REQUIRE(at_zero.size() == 1);
    CHECK(at_zero.front() == doctest::Approx(2.0).epsilon(1e-12));

    const auto detuned = oracle_cubic_roots(1.0, 0.0);
    REQUIRE(detuned.size() == 1);
    CHECK(detuned.front() == doctest::Approx(0.5 / 1.25).epsilon(1e-12));
}

TEST_CASE("worked point delta=1, xi=0.1 agrees with the scan oracle") {
    const auto fast = solve_photon_occupation(1.0, 0.1);
    const auto slow = oracle_cubic_roots(1.0, 0.1);
    REQUIRE(fast.roots.size() == slow.size());
    for (std::size_t k = 0; k < slow.size(); ++k) {
        CHECK(std::abs(fast.roots[k] - slow[k]) < 1e-10);
        const double n = fast.roots[k];
        const double residual =
            (1.0 + 0.25) * n - 2.0 * 0.1 * n * n + 0.01 * n * n * n - 0.5;
        CHECK(std::abs(residual) < 1e-12);
    }
}
