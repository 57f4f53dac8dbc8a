import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

from rvo.calibration import calibrate_gain
from rvo.cavity import CavityGeometry
from rvo.medium import TWO_PI, VaporCell
from rvo.opo import (
    BELOW,
    BOTH_ABOVE,
    STOKES_ONLY,
    GainConfig,
    PumpConfig,
    classify_regime,
    coupled_map,
    detunings,
    gain_block,
    is_triple_resonant,
    operating_point,
    parametric_strength,
    regime_of,
    sideband_frequencies,
    spectral_radius,
    steady_state_output,
    threshold_gain,
    threshold_power,
    triple_resonance_search,
)


@pytest.fixture(scope="module")
def ref(cfg):
    return TWO_PI * cfg.pump.detuning_hz


def total(*args):
    return sum(steady_state_output(*args))


@pytest.mark.parametrize("iso, split", [(85, 3.0357e9), (87, 6.8347e9)])
def test_detuning_difference_is_ground_splitting(cell, iso, split):
    det = detunings(TWO_PI * 1.7e9, iso, cell)
    assert det.delta_a - det.delta_b == det.omega_12
    assert det.omega_12 / TWO_PI == pytest.approx(split, abs=1e6)


def test_symmetric_midpoint(cell):
    w12 = cell.isotope(87).ground_splitting
    line01 = max((ln for ln in cell.lines if ln.isotope == 87), key=lambda ln: ln.center_detuning)
    det = detunings(line01.center_detuning - w12 / 2, 87, cell)
    assert det.delta_b == pytest.approx(-w12 / 2, rel=1e-12)
    assert det.delta_a == pytest.approx(w12 / 2, rel=1e-12)
    assert det.mean == pytest.approx(0.0, abs=1e-3)


@settings(max_examples=200, deadline=None)
@given(st.floats(-TWO_PI * 20e9, TWO_PI * 20e9), st.sampled_from([85, 87]))
def test_energy_conservation(wp, iso):
    cell = VaporCell(378.15, 1.5e-21)
    ws, was = sideband_frequencies(wp, iso, cell)
    assert ws + was == pytest.approx(2 * wp, rel=0, abs=4 * np.spacing(abs(wp) + 1e11))
    assert math.isclose(was - wp, cell.isotope(iso).ground_splitting, rel_tol=1e-9)


def test_pump_config_invariant():
    with pytest.raises(ValueError):
        PumpConfig(0.0, -1.0, 87)


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 20), st.floats(-math.pi, math.pi))
def test_gain_block_unimodular(r, theta):
    assert abs(np.linalg.det(gain_block(r, theta)) - 1.0) < 1e-12 * math.cosh(r) ** 2


def test_passive_map_decays():
    m = coupled_map(0.0, 0.7, 0.3, 0.5, -1.1)
    assert m.spectral_radius == pytest.approx(max(math.sqrt(0.7), math.sqrt(0.5)), rel=1e-12)
    assert m.spectral_radius < 1


@settings(max_examples=50, deadline=None)
@given(st.floats(0, 5), st.floats(0.01, 1), st.floats(-math.pi, math.pi))
def test_raman_limit(r, rho_s, phi):
    # with the anti-Stokes fully absorbed the map is triangular
    m = coupled_map(r, rho_s, phi, 0.0, 0.4)
    assert m.spectral_radius == pytest.approx(math.cosh(r) * math.sqrt(rho_s), rel=1e-9)


@pytest.mark.parametrize("rho", [0.3, 0.73, 0.9])
def test_equal_loss_resonant_threshold_against_scalar_root(rho):
    # sqrt(rho) * G has eigenvalues sqrt(rho) * exp(+-r): scalar root of sqrt(rho) e^r = 1
    r_star = brentq(lambda r: math.sqrt(rho) * math.exp(r) - 1.0, 0.0, 10.0, xtol=1e-15)
    r = threshold_gain(rho, 0.0, rho, 0.0)
    assert r == pytest.approx(r_star, rel=1e-12)
    assert coupled_map(r, rho, 0.0, rho, 0.0).spectral_radius == pytest.approx(1.0, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.1, 0.95), st.floats(-3, 3), st.floats(-3, 3))
def test_equal_loss_threshold_depends_on_phase_sum(rho, a, b):
    assert threshold_gain(rho, a, rho, b) == pytest.approx(threshold_gain(rho, a + b, rho, 0.0), rel=1e-9)


def test_parametric_strength_shape(cell, gain):
    det = detunings(TWO_PI * 3.63e9, 87, cell)
    assert parametric_strength(det, cell, 0.0, gain) == 0.0
    full = parametric_strength(det, cell, 0.2, gain)
    half = parametric_strength(det, cell, 0.2, gain, two_photon_detuning=gain.two_photon_width)
    assert half == pytest.approx(full / 2, rel=1e-15)
    assert parametric_strength(det, cell, 0.4, gain) == pytest.approx(2 * full, rel=1e-15)


def test_no_coupling_no_threshold(cell, geom, gain, ref):
    assert threshold_power(ref, 87, geom, cell, replace(gain, coupling=0.0)) == math.inf


def test_threshold_defining_property(cell, geom, gain, ref):
    p = threshold_power(ref, 87, geom, cell, gain)
    assert p < 0.1
    assert spectral_radius(ref, 87, geom, cell, p, gain) == pytest.approx(1.0, abs=1e-6)


@settings(max_examples=20, deadline=None)
@given(st.floats(0, 0.3), st.floats(0, 0.3))
def test_sigma_nondecreasing_in_power(a, b):
    from rvo.config import parse_config

    cfg = parse_config({})
    lo, hi = sorted((a, b))
    args = (TWO_PI * cfg.pump.detuning_hz, 87, cfg.geometry(), cfg.vapor_cell())
    assert spectral_radius(*args, lo, cfg.gain_config()) <= spectral_radius(*args, hi, cfg.gain_config()) + 1e-12


def test_output_zero_below_and_positive_just_above(cell, geom, gain, ref):
    p_th = threshold_power(ref, 87, geom, cell, gain)
    for p in (0.0, 0.5 * p_th, p_th * (1 - 1e-6)):
        assert steady_state_output(ref, 87, geom, cell, p, gain) == (0.0, 0.0)
    s, a = steady_state_output(ref, 87, geom, cell, p_th * (1 + 1e-6), gain)
    assert s > 0 and a > 0


def test_output_monotone_and_saturating(cell, geom, gain, ref):
    p_th = threshold_power(ref, 87, geom, cell, gain)
    powers = np.linspace(p_th * 1.01, 0.15, 40)
    out = np.array([total(ref, 87, geom, cell, p, gain) for p in powers])
    assert np.all(np.diff(out) > 0)
    h = 0.02 * p_th
    o = [total(ref, 87, geom, cell, 3 * p_th + k * h, gain) for k in (-1, 0, 1)]
    assert o[0] - 2 * o[1] + o[2] < 0


def test_default_calibration_facts(cell, geom, gain, ref):
    assert threshold_power(ref, 87, geom, cell, gain) == pytest.approx(0.030, rel=1e-6)
    assert total(ref, 87, geom, cell, 0.1, gain) >= 1e-3


def test_stored_calibration_reproduces(cfg, cell, geom, gain, ref):
    cal = calibrate_gain(ref, geom, cell, replace(gain, coupling=4e-16, saturation_power=1e-3))
    assert cal.coupling == pytest.approx(cfg.gain.coupling, rel=1e-9)
    assert cal.saturation_power == pytest.approx(cfg.gain.saturation_power_w, rel=1e-6)


def test_regime_tags(cell, geom, gain, ref):
    assert classify_regime(ref, 87, geom, cell, 0.0, gain) == BELOW
    assert classify_regime(ref, 87, geom, cell, 0.1, gain) == BOTH_ABOVE
    assert regime_of(1e-3, 0.0, 1e-6) == STOKES_ONLY
    assert regime_of(0.0, 1e-3, 1e-6) == BELOW


def test_stokes_only_when_anti_stokes_absorbed(cell, geom, gain):
    # anti-Stokes inside the 85Rb F=3 band, Stokes far in the red wing
    op = operating_point(TWO_PI * -3.915e9, 85, geom, cell, 0.1, gain)
    assert op.anti_stokes_survival < 0.1
    assert op.regime == STOKES_ONLY


def test_vacuum_cell_has_no_triple_resonance(geom, gain):
    vacuum = VaporCell(378.15, 0.0)
    for iso in (85, 87):
        found = triple_resonance_search((-TWO_PI * 12e9, TWO_PI * 12e9), iso, geom, vacuum, 0.1, gain, TWO_PI * 5e6)
        assert found == []


def test_triple_resonance_search_postcondition(cell, geom, gain):
    found = triple_resonance_search((-TWO_PI * 12e9, TWO_PI * 12e9), 87, geom, cell, 0.1, gain)
    assert found
    sigmas = [p.sigma for p in found]
    assert sigmas == sorted(sigmas, reverse=True)
    # red of the 87Rb F=2 band as well as the blue side
    assert any(p.pump_detuning < -TWO_PI * 2.6e9 for p in found)
    for p in found[:: max(1, len(found) // 10)]:
        again = operating_point(p.pump_detuning, 87, geom, cell, 0.1, gain)
        assert is_triple_resonant(again)
        assert abs(again.stokes_cavity_detuning) < again.stokes_half_width


def test_operating_point_record_is_json_safe(cell, geom, gain, ref):
    import json

    rec = operating_point(ref, 87, geom, cell, 0.1, gain).to_record()
    json.dumps(rec, allow_nan=False)


def test_gain_config_validation():
    with pytest.raises(ValueError):
        GainConfig(coupling=-1.0, saturation_power=1.0)
    with pytest.raises(ValueError):
        GainConfig(coupling=1.0, saturation_power=0.0)


def test_unresolved_geometry_gives_inf_threshold(cell, gain, ref):
    lossy = CavityGeometry(R1=0.5, R2=0.5)
    assert threshold_power(ref, 87, lossy, cell, replace(gain, power_cap=0.05)) == math.inf
