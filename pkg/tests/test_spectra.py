import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rvo.cavity import empty_fsr
from rvo.medium import TWO_PI, absorption_coefficient
from rvo.spectra import (
    AnalyzerConfig,
    Emission,
    EmissionSet,
    SpectrumTrace,
    absorption_trace,
    analyzer_trace,
    cavity_trace,
    local_maxima,
    uniform_grid,
)


def test_trace_validation():
    with pytest.raises(ValueError):
        SpectrumTrace([0.0, 2.0, 3.0], [1.0, 1.0, 1.0])
    with pytest.raises(ValueError):
        SpectrumTrace([0.0, -1.0], [1.0, 1.0])
    with pytest.raises(ValueError):
        SpectrumTrace([0.0, 1.0], [1.0, np.nan])
    with pytest.raises(ValueError):
        uniform_grid(0.0, 1.0, 1)


def test_analyzer_config_invariants():
    with pytest.raises(ValueError):
        AnalyzerConfig(fsr=10e6, linewidth=30e6)
    with pytest.raises(ValueError):
        AnalyzerConfig(points=1)


def test_emission_invariants():
    with pytest.raises(ValueError):
        Emission(0.0, -1.0, "pump")
    with pytest.raises(ValueError):
        Emission(0.0, 1.0, "idler")
    with pytest.raises(ValueError):
        EmissionSet((Emission(1.0, 1.0, "stokes"), Emission(1.0, 1.0, "anti-stokes")))


def test_absorption_wings_and_minima(cell):
    wings = absorption_trace([-60e9, -59e9, -58e9], cell)
    assert np.allclose(wings.values, 1.0, atol=1e-6)
    grid = uniform_grid(-8e9, 8e9, 16001)
    # minima of the optical depth: each band gives one, even where the cell is opaque
    od = absorption_coefficient(TWO_PI * grid, cell)
    idx = np.flatnonzero((od[1:-1] > od[:-2]) & (od[1:-1] >= od[2:])) + 1
    centres = grid[idx]
    assert len(centres) == 4
    assert centres[2] - centres[1] == pytest.approx(3.0e9, abs=0.1e9)
    assert centres[3] - centres[0] == pytest.approx(6.8e9, abs=0.1e9)


def test_cavity_trace_empty_is_uniform_comb(geom, cell):
    grid = uniform_grid(-5e9, 5e9, 200001)
    trace = cavity_trace(grid, geom, cell, with_atoms=False)
    peaks = grid[local_maxima(trace, floor=0.5 * trace.values.max())]
    assert np.allclose(np.diff(peaks), empty_fsr(geom), atol=2 * (grid[1] - grid[0]))


def test_cavity_trace_suppressed_in_opaque_bands(geom, cell):
    grid = uniform_grid(-15e9, 15e9, 2**17)
    with_atoms = cavity_trace(grid, geom, cell, with_atoms=True)
    single = absorption_trace(grid, cell).values
    opaque = single < 1e-3
    assert opaque.any()
    assert with_atoms.values[opaque].max() < 1e-3 * with_atoms.values.max()


def test_empty_emission_set_gives_zero_trace():
    trace = analyzer_trace(EmissionSet(), AnalyzerConfig())
    assert np.all(trace.values == 0.0)


def test_pump_only_comb():
    an = AnalyzerConfig(span=35e9, points=35001)
    trace = analyzer_trace(EmissionSet((Emission(0.0, 1.0, "pump"),)), an)
    peaks = trace.grid[local_maxima(trace, 0.5)]
    assert np.allclose(peaks, [-10e9, 0.0, 10e9], atol=an.span / (an.points - 1))


def test_fig3_peak_structure():
    an = AnalyzerConfig()
    step = an.span / (an.points - 1)
    ems = EmissionSet((Emission(0.0, 1.0, "pump"), Emission(-6.835e9, 0.1, "stokes"), Emission(6.835e9, 0.1, "anti-stokes")))
    trace = analyzer_trace(ems, an)
    peaks = trace.grid[local_maxima(trace, 0.01)]
    expected = [-6.835e9, -3.165e9, 0.0, 3.165e9, 6.835e9]
    assert len(peaks) == len(expected)
    assert np.allclose(peaks, expected, atol=step)


@settings(max_examples=30, deadline=None)
@given(
    st.lists(st.tuples(st.floats(-9e9, 9e9), st.floats(0, 5)), min_size=1, max_size=4),
    st.lists(st.tuples(st.floats(-9e9, 9e9), st.floats(0, 5)), min_size=1, max_size=4),
)
def test_analyzer_linearity(a, b):
    an = AnalyzerConfig(points=2048)
    ea = EmissionSet(tuple(Emission(f, p, "stokes") for f, p in a))
    eb = EmissionSet(tuple(Emission(f, p, "anti-stokes") for f, p in b))
    try:
        both = ea.union(eb)
    except ValueError:
        return  # same offset drawn for two labels
    lhs = analyzer_trace(both, an).values
    rhs = analyzer_trace(ea, an).values + analyzer_trace(eb, an).values
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * max(1.0, np.max(np.abs(rhs)))


@settings(max_examples=30, deadline=None)
@given(st.floats(-9e9, 9e9), st.floats(1e-6, 10))
def test_peak_recovery_and_power_proportionality(offset, power):
    an = AnalyzerConfig()
    step = an.span / (an.points - 1)
    one = analyzer_trace(EmissionSet((Emission(offset, power, "stokes"),)), an)
    two = analyzer_trace(EmissionSet((Emission(offset, 2 * power, "stokes"),)), an)
    peak = one.grid[np.argmax(one.values)]
    d = (peak - offset) / an.fsr
    assert abs(d - round(d)) * an.fsr <= step
    assert two.values.max() == pytest.approx(2 * one.values.max(), rel=1e-12)


def test_trace_addition_requires_same_grid():
    a = SpectrumTrace([0.0, 1.0], [1.0, 2.0])
    b = SpectrumTrace([0.0, 2.0], [1.0, 2.0])
    assert np.allclose((a + a).values, [2.0, 4.0])
    with pytest.raises(ValueError):
        a + b
