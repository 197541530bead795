"""Smoke tests for the _resforge extension module."""

import cmath
import math

import pytest

import _resforge as rf


def nbn_res():
    return rf.ResonanceParams.from_quality_factors(4.0743e9, 13805.0, 28241.0)


def test_symmetric_dip():
    res = rf.ResonanceParams(2 * math.pi * 5e9, 2 * math.pi * 1e6, 2 * math.pi * 1e6)
    s = rf.s21_linear(5e9, res, rf.EnvironmentParams())
    assert abs(s - 0.5) < 1e-12


def test_occupation_roots():
    roots, stable = rf.solve_photon_occupation(0.0, 0.0)
    assert roots == [pytest.approx(2.0)]
    assert stable == pytest.approx(2.0)

    roots, stable = rf.solve_photon_occupation(2.0, 1.0)
    assert len(roots) == 3
    assert stable == min(roots)
    oracle = rf.oracle_cubic_roots(2.0, 1.0)
    assert len(oracle) == 3
    for fast, slow in zip(roots, oracle):
        assert fast == pytest.approx(slow, abs=1e-10)


def test_bifurcation_threshold():
    assert not rf.bifurcation_onset(-50.0, 50.0, 0.3)
    assert rf.bifurcation_onset(0.0, 5.0, 1.0)


def test_kerr_chain_matches_table_scale():
    lt = 89e-12 / 200e-9 * 376e-6
    k = rf.kerr_bcs(2 * math.pi * 4.0743e9, lt, 74e-6)
    assert k / (2 * math.pi) == pytest.approx(-4.506, rel=0.01)


def test_quarterwave_impedance_chain():
    geom = rf.ResonatorGeometry(200e-9, 376e-6, 89e-12 / 200e-9, 0.0)
    ctilde = rf.fit_ctilde_from_frequency(4.0743e9, geom)
    geom2 = rf.ResonatorGeometry(200e-9, 376e-6, 89e-12 / 200e-9, ctilde)
    assert rf.characteristic_impedance(geom2) == pytest.approx(2725.0, rel=0.01)
    assert rf.quarterwave_frequency(geom2) == pytest.approx(4.0743e9, rel=1e-9)


def test_fit_round_trip():
    res = nbn_res()
    env = rf.EnvironmentParams(0.93, 0.4, 3.0e-8, 0.12)
    half_span = 5.0 * res.total_rate() / (2 * math.pi)
    grid = [res.f0_hz() - half_span + 2 * half_span * i / 400 for i in range(401)]
    freqs, samples = rf.generate_trace(res, env, rf.KerrModelParams(0.0, 0.0), grid)
    fit = rf.fit_linear_resonance(freqs, samples)
    assert fit["converged"]
    assert fit["params"]["q_i"] == pytest.approx(13805.0, rel=1e-6)
    assert fit["params"]["q_c"] == pytest.approx(28241.0, rel=1e-6)
    assert fit["params"]["tau_s"] == pytest.approx(3.0e-8, rel=1e-6)


def test_fit_no_dip_raises():
    freqs = [4e9 + 1e5 * i for i in range(64)]
    samples = [1.0 + 0.0j] * 64
    with pytest.raises(rf.NoDipFound):
        rf.fit_linear_resonance(freqs, samples)


def test_field_sweep_fit():
    b = [0.25 * i for i in range(25)]
    shift = [rf.quadratic_shift_bc(x, 13.537) for x in b]
    fit = rf.fit_field_sweep_bc(b, shift)
    assert fit["params"]["b_c_t"] == pytest.approx(13.537, rel=1e-8)


def test_photon_number_scaling():
    res = nbn_res()
    assert rf.photon_number(-20.0, 60.0, res) * 10 == pytest.approx(
        rf.photon_number(-10.0, 60.0, res)
    )


def test_loss_model_limits():
    loss = rf.LossModelParams(2e-5, 50.0, 0.8, 3e-6, 1e-6, 0.0)
    assert rf.inverse_qi(1e12, loss, 2 * math.pi * 4e9) == pytest.approx(4e-6, rel=1e-5)
    assert rf.inverse_qi(0.0, loss, 2 * math.pi * 4e9) == pytest.approx(2.4e-5, rel=1e-9)
