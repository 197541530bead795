#include <doctest.h>

#include <cmath>

#include "resforge/fit.hpp"
#include "resforge/synth.hpp"

using namespace resforge;

namespace {

GeneratorTruth nbn_truth() {
    GeneratorTruth truth;
    truth.resonance = ResonanceParams::from_quality_factors(4.0743e9, 13805.0, 28241.0);
    truth.env = EnvironmentParams(0.93, 0.4, 30e-9, 0.12);
    return truth;
}

std::vector<double> linspace(double lo, double hi, int n) {
    std::vector<double> grid(n);
    for (int i = 0; i < n; ++i)
        grid[i] = lo + (hi - lo) * static_cast<double>(i) / (n - 1);
    return grid;
}

std::vector<double> span_grid(const ResonanceParams& res, double linewidths, int n) {
    const double half = linewidths / 2.0 * res.total_rate() / two_pi;
    return linspace(res.f0_hz() - half, res.f0_hz() + half, n);
}

}  // namespace

TEST_CASE("circle guess lands within 10% on a noise-free trace") {
    const auto truth = nbn_truth();
    const auto trace = generate_trace(truth, span_grid(truth.resonance, 10.0, 401), {});
    const auto guess = initial_guess_circle(trace);

    CHECK(std::abs(guess.resonance.omega0 - truth.resonance.omega0) <
          0.1 * truth.resonance.total_rate());
    CHECK(guess.resonance.total_rate() ==
          doctest::Approx(truth.resonance.total_rate()).epsilon(0.10));
    CHECK(guess.environment.amplitude_a ==
          doctest::Approx(truth.env.amplitude_a).epsilon(0.10));
}

TEST_CASE("circle guess holds at sigma = 1e-3") {
    auto truth = nbn_truth();
    NoiseSpec noise{1e-3, 97};
    const auto trace = generate_trace(truth, span_grid(truth.resonance, 10.0, 401), noise);
    const auto guess = initial_guess_circle(trace);
    CHECK(std::abs(guess.resonance.omega0 - truth.resonance.omega0) <
          0.1 * truth.resonance.total_rate());
    CHECK(guess.resonance.total_rate() ==
          doctest::Approx(truth.resonance.total_rate()).epsilon(0.10));
}

TEST_CASE("delay estimate within 5% with 10-linewidth wings") {
    auto truth = nbn_truth();
    // wings at least 10 linewidths from resonance: 25-linewidth span puts
    // the outer 20% beyond 10 linewidths
    const auto trace = generate_trace(truth, span_grid(truth.resonance, 25.0, 801), {});
    const auto guess = initial_guess_circle(trace);
    CHECK(guess.environment.delay_tau == doctest::Approx(30e-9).epsilon(0.05));
}

TEST_CASE("pure baseline raises NoDipFound") {
    GeneratorTruth truth = nbn_truth();
    ComplexTrace trace;
    trace.freqs = span_grid(truth.resonance, 10.0, 101);
    for (double f : trace.freqs)
        trace.samples.push_back(0.9 * std::polar(1.0, 0.2 - two_pi * f * 10e-9));
    CHECK_THROWS_AS(initial_guess_circle(trace), NoDipFound);
}

TEST_CASE("noisy flat trace raises NoDipFound") {
    GaussianSource rng(5);
    ComplexTrace trace;
    trace.freqs = linspace(4.0e9, 4.01e9, 401);
    for (std::size_t i = 0; i < trace.freqs.size(); ++i)
        trace.samples.push_back(1.0 + 1e-3 * std::complex<double>(rng.next(), rng.next()));
    CHECK_THROWS_AS(initial_guess_circle(trace), NoDipFound);
}

TEST_CASE("guess quality is stable across overcoupled and undercoupled dips") {
    for (double q_i : {5e3, 2e4, 3e5}) {
        for (double q_c : {8e3, 3e4}) {
            GeneratorTruth truth;
            truth.resonance = ResonanceParams::from_quality_factors(5.2e9, q_i, q_c);
            truth.env = EnvironmentParams(1.1, -0.7, 12e-9, -0.2);
            const auto trace =
                generate_trace(truth, span_grid(truth.resonance, 12.0, 501), {});
            const auto guess = initial_guess_circle(trace);
            CHECK(std::abs(guess.resonance.omega0 - truth.resonance.omega0) <
                  0.1 * truth.resonance.total_rate());
            CHECK(guess.resonance.total_rate() ==
                  doctest::Approx(truth.resonance.total_rate()).epsilon(0.10));
        }
    }
}
