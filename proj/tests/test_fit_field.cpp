#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "resforge/fit.hpp"
#include "resforge/synth.hpp"

using namespace resforge;

namespace {

GeneratorTruth nbn_field_truth(double width, double b_c_par, double theta_b) {
    GeneratorTruth truth;
    truth.resonance = ResonanceParams::from_quality_factors(4.0743e9, 13805.0, 28241.0);
    truth.film.lk_sheet = 89e-12;
    truth.film.thickness_t = 13e-9;
    truth.film.critical_temp_Tc = 4.0;
    truth.film.diffusion_D = 1.5e-4;
    truth.geometry = ResonatorGeometry::from_film(truth.film, width, 376e-6, 60e-12);
    truth.field.b_c_parallel_t = b_c_par;
    truth.field.b_c_perp_t = 1.0766;
    truth.field.theta_b_rad = theta_b;
    return truth;
}

std::vector<double> field_axis(double b_max, int n) {
    std::vector<double> values(n);
    for (int i = 0; i < n; ++i)
        values[i] = b_max * static_cast<double>(i) / (n - 1);
    return values;
}

}  // namespace

TEST_CASE("critical-field fit: exact recovery on clean data") {
    const auto truth = nbn_field_truth(200e-9, 13.537, 0.0);
    const auto series = generate_field_sweep(truth, field_axis(1.0, 25),
                                             FieldOrientation::out_of_plane, {});
    // out-of-plane generation uses b_c_perp; series rel_shift is exactly
    // the quadratic law
    for (const auto& p : series.points)
        CHECK(p.rel_shift ==
              doctest::Approx(quadratic_shift_bc(p.b, 1.0766)).epsilon(1e-14));
    const auto fit = fit_field_sweep_bc(series);
    REQUIRE(fit.converged);
    CHECK(fit.param("b_c_t") == doctest::Approx(1.0766).epsilon(1e-8));
}

TEST_CASE("critical-field fit: single point inverts exactly") {
    FieldSweepSeries series;
    series.points.push_back({3.0, quadratic_shift_bc(3.0, 13.537), 1e4, 1e4});
    const auto fit = fit_field_sweep_bc(series);
    CHECK(fit.param("b_c_t") == doctest::Approx(13.537).epsilon(1e-12));
}

TEST_CASE("critical-field fit: Monte-Carlo at sigma=1e-4 within 1%") {
    GeneratorTruth truth = nbn_field_truth(200e-9, 13.537, 0.0);
    truth.field.b_c_perp_t = 13.537;  // reuse the out-of-plane path for B_C par
    std::vector<double> errors;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto series = generate_field_sweep(truth, field_axis(6.0, 60),
                                                 FieldOrientation::out_of_plane,
                                                 {1e-4, seed});
        const auto fit = fit_field_sweep_bc(series);
        errors.push_back(std::abs(fit.param("b_c_t") - 13.537) / 13.537);
    }
    std::sort(errors.begin(), errors.end());
    CHECK(errors[errors.size() / 2] < 0.01);
}

TEST_CASE("critical-field fit rejects positive-shift data") {
    FieldSweepSeries series;
    for (int i = 0; i < 8; ++i)
        series.points.push_back({0.5 * i, 1e-3 * i, 1e4, 1e4});
    CHECK_THROWS_AS(fit_field_sweep_bc(series), PositiveShiftDominates);
}

// ---------------------------------------------------------------------------
// Misalignment fit
// ---------------------------------------------------------------------------

namespace {

std::map<double, FieldSweepSeries> six_width_family(double theta_b, double sigma,
                                                    std::uint64_t seed,
                                                    FilmProperties* film_out) {
    std::map<double, FieldSweepSeries> by_width;
    std::uint64_t sub = 0;
    for (double width : {200e-9, 300e-9, 400e-9, 500e-9, 600e-9, 700e-9}) {
        auto truth = nbn_field_truth(width, 13.537, theta_b);
        by_width[width] = generate_field_sweep(truth, field_axis(6.0, 40),
                                               FieldOrientation::in_plane,
                                               {sigma, derive_seed(seed, sub++)});
        if (film_out) *film_out = truth.film;
    }
    return by_width;
}

}  // namespace

TEST_CASE("misalignment fit: clean six-width family recovers theta and D") {
    const double theta_truth = 1.08 * std::numbers::pi / 180.0;
    FilmProperties film;
    const auto family = six_width_family(theta_truth, 0.0, 0, &film);
    const auto fit = fit_misalignment(family, film);
    REQUIRE(fit.converged);
    CHECK(fit.param("theta_b_rad") == doctest::Approx(theta_truth).epsilon(1e-8));
    CHECK(fit.param("theta_b_deg") == doctest::Approx(1.08).epsilon(1e-8));
    CHECK(fit.param("diffusion_D") == doctest::Approx(1.5e-4).epsilon(1e-8));
}

TEST_CASE("misalignment fit: theta recovered within 5% at sigma=1e-4") {
    const double theta_truth = 1.08 * std::numbers::pi / 180.0;
    FilmProperties film;
    std::vector<double> errors;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto family = six_width_family(theta_truth, 1e-4, seed, &film);
        const auto fit = fit_misalignment(family, film);
        errors.push_back(std::abs(fit.param("theta_b_rad") - theta_truth) / theta_truth);
    }
    std::sort(errors.begin(), errors.end());
    CHECK(errors[errors.size() / 2] < 0.05);
}

TEST_CASE("misalignment fit: reported bound covers the true error in >= 90/100 seeds") {
    const double theta_truth = 1.08 * std::numbers::pi / 180.0;
    FilmProperties film;
    int covered = 0;
    for (std::uint64_t seed = 1000; seed < 1100; ++seed) {
        const auto family = six_width_family(theta_truth, 1e-4, seed, &film);
        const auto fit = fit_misalignment(family, film);
        if (std::abs(fit.param("theta_b_rad") - theta_truth) <=
            fit.std_error("theta_b_rad"))
            ++covered;
    }
    CHECK(covered >= 90);
}

TEST_CASE("misalignment fit: zero-misalignment generator reports theta 0") {
    FilmProperties film;
    const auto family = six_width_family(0.0, 0.0, 0, &film);
    const auto fit = fit_misalignment(family, film);
    REQUIRE(fit.converged);
    CHECK(fit.param("theta_b_rad") == 0.0);
}

TEST_CASE("misalignment fit: negative slope is reported, not fatal") {
    // widths deliberately anti-correlated with the shift
    FilmProperties film;
    film.thickness_t = 13e-9;
    film.critical_temp_Tc = 4.0;
    film.diffusion_D = 1.5e-4;
    film.lk_sheet = 89e-12;
    std::map<double, FieldSweepSeries> family;
    double scale = 4.0;
    for (double width : {200e-9, 400e-9, 600e-9}) {
        FieldSweepSeries series;
        series.orientation = FieldOrientation::in_plane;
        for (int i = 0; i < 20; ++i) {
            const double b = 6.0 * i / 19.0;
            series.points.push_back({b, -1e-4 * scale * b * b, 1e4, 1e4});
        }
        family[width] = series;
        scale *= 0.5;  // wider resonators shift LESS: unphysical
    }
    const auto fit = fit_misalignment(family, film);
    CHECK(fit.param("theta_b_rad") == 0.0);
    bool flagged = false;
    for (const auto& d : fit.diagnostics)
        flagged = flagged || d.find("NegativeSlope") != std::string::npos;
    CHECK(flagged);
}

TEST_CASE("misalignment fit preconditions") {
    FilmProperties film;
    film.thickness_t = 13e-9;
    film.critical_temp_Tc = 4.0;
    std::map<double, FieldSweepSeries> family;
    family[200e-9] = FieldSweepSeries{};
    family[300e-9] = FieldSweepSeries{};
    CHECK_THROWS_AS(fit_misalignment(family, film), InvalidParameter);
}

// ---------------------------------------------------------------------------
// Ctilde inversion
// ---------------------------------------------------------------------------

TEST_CASE("ctilde inversion") {
    const double ltilde = 89e-12 / 200e-9;
    ResonatorGeometry geom(200e-9, 376e-6, ltilde, 0.0);

    SUBCASE("round trip with the quarter-wave frequency") {
        geom.capacitance_per_length = 60e-12;
        const double f = quarterwave_frequency(geom);
        ResonatorGeometry partial(200e-9, 376e-6, ltilde, 0.0);
        CHECK(fit_ctilde_from_frequency(f, partial) ==
              doctest::Approx(60e-12).epsilon(1e-12));
    }
    SUBCASE("halving f quadruples Ctilde") {
        const double c1 = fit_ctilde_from_frequency(4e9, geom);
        const double c2 = fit_ctilde_from_frequency(2e9, geom);
        CHECK(c2 == doctest::Approx(4.0 * c1).epsilon(1e-12));
    }
    SUBCASE("Table I chain: Ctilde near 60 pF/m and Z near 2.725 kOhm") {
        const double ctilde = fit_ctilde_from_frequency(4.0743e9, geom);
        CHECK(ctilde == doctest::Approx(59.85e-12).epsilon(0.01));
        geom.capacitance_per_length = ctilde;
        CHECK(characteristic_impedance(geom) == doctest::Approx(2725.0).epsilon(0.01));
    }
}
