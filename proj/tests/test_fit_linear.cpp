#include <doctest.h>

#include <cmath>

#include "resforge/fit.hpp"
#include "resforge/synth.hpp"

using namespace resforge;

namespace {

GeneratorTruth table_truth() {
    GeneratorTruth truth;
    truth.resonance = ResonanceParams::from_quality_factors(4.0743e9, 13805.0, 28241.0);
    truth.env = EnvironmentParams(0.93, 0.4, 30e-9, 0.12);
    return truth;
}

std::vector<double> span_grid(const ResonanceParams& res, double linewidths, int n) {
    const double half = linewidths / 2.0 * res.total_rate() / two_pi;
    std::vector<double> grid(n);
    for (int i = 0; i < n; ++i)
        grid[i] = res.f0_hz() - half + linewidths * res.total_rate() / two_pi *
                                           static_cast<double>(i) / (n - 1);
    return grid;
}

double rel_err(double estimate, double truth) {
    return std::abs(estimate - truth) / std::abs(truth);
}

}  // namespace

TEST_CASE("noise-free round trip recovers all parameters to 1e-6") {
    const auto truth = table_truth();
    const auto trace = generate_trace(truth, span_grid(truth.resonance, 10.0, 401), {});
    const auto fit = fit_linear_resonance(trace);

    REQUIRE(fit.converged);
    CHECK(rel_err(fit.param("f0_hz"), truth.resonance.f0_hz()) < 1e-9);
    CHECK(rel_err(fit.param("kappa_hz"), truth.resonance.kappa_ext / two_pi) < 1e-6);
    CHECK(rel_err(fit.param("gamma_hz"), truth.resonance.gamma_int / two_pi) < 1e-6);
    CHECK(rel_err(fit.param("q_i"), 13805.0) < 1e-6);
    CHECK(rel_err(fit.param("q_c"), 28241.0) < 1e-6);
    CHECK(rel_err(fit.param("a"), 0.93) < 1e-6);
    CHECK(rel_err(fit.param("alpha"), 0.4) < 1e-6);
    CHECK(rel_err(fit.param("tau_s"), 30e-9) < 1e-6);
    CHECK(rel_err(fit.param("phi"), 0.12) < 1e-6);
    CHECK(fit.residual_norm < 1e-16);
    CHECK(qc_filter(fit).accepted);
}

TEST_CASE("objective history is monotone") {
    const auto truth = table_truth();
    const auto trace =
        generate_trace(truth, span_grid(truth.resonance, 10.0, 401), {1e-3, 11});
    const auto fit = fit_linear_resonance(trace);
    REQUIRE(fit.converged);
    for (std::size_t i = 1; i < fit.objective_history.size(); ++i)
        CHECK(fit.objective_history[i] <= fit.objective_history[i - 1]);
}

TEST_CASE("Table I generator recovered within the quoted uncertainty at sigma=1e-3") {
    const auto truth = table_truth();
    const auto trace =
        generate_trace(truth, span_grid(truth.resonance, 10.0, 401), {1e-3, 4242});
    const auto fit = fit_linear_resonance(trace);
    REQUIRE(fit.converged);
    CHECK(std::abs(fit.param("q_i") - 13805.0) < 286.0);
    CHECK(std::abs(fit.param("q_c") - 28241.0) < 104.0);
}

TEST_CASE("Monte-Carlo at sigma=1e-3: median Q errors below 1%") {
    const auto truth = table_truth();
    const auto grid = span_grid(truth.resonance, 10.0, 401);
    std::vector<double> qi_err, qc_err;
    int converged = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto trace = generate_trace(truth, grid, {1e-3, seed});
        const auto fit = fit_linear_resonance(trace);
        if (!fit.converged) continue;
        ++converged;
        qi_err.push_back(rel_err(fit.param("q_i"), 13805.0));
        qc_err.push_back(rel_err(fit.param("q_c"), 28241.0));
    }
    REQUIRE(converged >= 99);
    std::sort(qi_err.begin(), qi_err.end());
    std::sort(qc_err.begin(), qc_err.end());
    CHECK(qi_err[qi_err.size() / 2] < 0.01);
    CHECK(qc_err[qc_err.size() / 2] < 0.01);
}

TEST_CASE("noise consistency: median error below 2x median std_error") {
    const auto truth = table_truth();
    const auto grid = span_grid(truth.resonance, 10.0, 401);
    std::vector<double> err_qi, sig_qi, err_f0, sig_f0;
    for (std::uint64_t seed = 100; seed < 200; ++seed) {
        const auto trace = generate_trace(truth, grid, {1e-3, seed});
        const auto fit = fit_linear_resonance(trace);
        if (!fit.converged) continue;
        err_qi.push_back(std::abs(fit.param("q_i") - 13805.0));
        sig_qi.push_back(fit.std_error("q_i"));
        err_f0.push_back(std::abs(fit.param("f0_hz") - truth.resonance.f0_hz()));
        sig_f0.push_back(fit.std_error("f0_hz"));
    }
    auto median = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        return v[v.size() / 2];
    };
    CHECK(median(err_qi) < 2.0 * median(sig_qi));
    CHECK(median(err_f0) < 2.0 * median(sig_f0));
}

TEST_CASE("scale equivariance: a complex prefactor moves only a and alpha") {
    const auto truth = table_truth();
    auto trace = generate_trace(truth, span_grid(truth.resonance, 10.0, 401), {});
    const auto base = fit_linear_resonance(trace);

    const std::complex<double> c = 1.7 * std::polar(1.0, 0.9);
    for (auto& z : trace.samples) z *= c;
    const auto scaled = fit_linear_resonance(trace);

    REQUIRE(base.converged);
    REQUIRE(scaled.converged);
    for (const char* invariant : {"f0_hz", "kappa_hz", "gamma_hz", "phi", "tau_s"}) {
        CHECK(std::abs(scaled.param(invariant) - base.param(invariant)) <=
              1e-8 * std::max(1.0, std::abs(base.param(invariant))));
    }
    CHECK(scaled.param("a") == doctest::Approx(base.param("a") * 1.7).epsilon(1e-7));
    CHECK(scaled.param("alpha") ==
          doctest::Approx(base.param("alpha") + 0.9).epsilon(1e-6));
}

TEST_CASE("grid invariance: decimating a clean trace leaves parameters") {
    const auto truth = table_truth();
    const auto trace = generate_trace(truth, span_grid(truth.resonance, 10.0, 801), {});
    ComplexTrace decimated;
    for (std::size_t i = 0; i < trace.size(); i += 2) {
        decimated.freqs.push_back(trace.freqs[i]);
        decimated.samples.push_back(trace.samples[i]);
    }
    const auto full = fit_linear_resonance(trace);
    const auto half = fit_linear_resonance(decimated);
    REQUIRE(full.converged);
    REQUIRE(half.converged);
    for (const char* name : {"f0_hz", "kappa_hz", "gamma_hz", "a", "alpha", "tau_s", "phi"})
        CHECK(std::abs(half.param(name) - full.param(name)) <=
              1e-6 * std::max(1.0, std::abs(full.param(name))));
}

TEST_CASE("engine optimum is no worse than the oracle grid best") {
    const auto truth = table_truth();
    const auto trace = generate_trace(truth, span_grid(truth.resonance, 10.0, 401), {});
    const auto fit = fit_linear_resonance(trace);
    REQUIRE(fit.converged);

    GridFitBounds bounds;
    bounds.omega0_lo = truth.resonance.omega0 * (1.0 - 1e-5);
    bounds.omega0_hi = truth.resonance.omega0 * (1.0 + 1e-5);
    bounds.kappa_lo = truth.resonance.kappa_ext * 0.5;
    bounds.kappa_hi = truth.resonance.kappa_ext * 1.5;
    bounds.gamma_lo = truth.resonance.gamma_int * 0.5;
    bounds.gamma_hi = truth.resonance.gamma_int * 1.5;
    bounds.env = truth.env;
    const auto grid_best = oracle_grid_fit(trace, bounds);

    CHECK(fit.residual_norm <= grid_best.objective + 1e-18);
}

TEST_CASE("qc_filter") {
    FitResult fit;
    fit.converged = true;
    fit.params = {{"q_i", 13805.0}, {"q_c", 28241.0}};
    fit.std_errors = {{"q_i", 286.0}, {"q_c", 104.0}};
    CHECK(qc_filter(fit).accepted);

    SUBCASE("std_error above 1e3 rejects, naming the parameter") {
        fit.std_errors["q_i"] = 5e3;
        const auto decision = qc_filter(fit);
        CHECK_FALSE(decision.accepted);
        CHECK(decision.reason.find("q_i") != std::string::npos);
    }
    SUBCASE("not converged rejects") {
        fit.converged = false;
        CHECK_FALSE(qc_filter(fit).accepted);
    }
    SUBCASE("non-positive quality factor rejects") {
        fit.params["q_i"] = -2.0;
        CHECK_FALSE(qc_filter(fit).accepted);
    }
}
