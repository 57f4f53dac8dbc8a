"""Standing-wave cavity with the vapour cell inside.

Round-trip phase and amplitude survival, Airy transmission, resonance search
on the unwrapped phase, and the finesse / bandwidth / escape budget.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.constants import c
from scipy.optimize import brentq

from .medium import OMEGA_REF, TWO_PI, VaporCell, absorption_coefficient, refractive_index


@dataclass(frozen=True)
class CavityGeometry:
    total_length: float = 0.177
    cell_length: float = 0.075
    R1: float = 0.90  # input coupler
    R2: float = 0.995
    excess_survival: float = 1.0  # amplitude, per round trip
    pzt_offset: float = 0.0  # m

    def __post_init__(self):
        for name in ("R1", "R2"):
            value = getattr(self, name)
            if not 0 < value <= 1:
                raise ValueError(f"{name} must lie in (0, 1], got {value}")
        if not 0 < self.excess_survival <= 1:
            raise ValueError("excess_survival must lie in (0, 1]")
        if self.total_length <= 0 or self.cell_length <= 0:
            raise ValueError("lengths must be positive")
        if self.cell_length >= self.total_length:
            raise ValueError("cell must be shorter than the cavity")

    @property
    def T1(self) -> float:
        return 1.0 - self.R1

    @property
    def T2(self) -> float:
        return 1.0 - self.R2

    @property
    def bare_survival(self) -> float:
        """Round-trip amplitude survival without the atoms."""
        return math.sqrt(self.R1 * self.R2) * self.excess_survival


@dataclass(frozen=True)
class RoundTrip:
    phase: np.ndarray | float  # rad, unwrapped
    survival: np.ndarray | float  # amplitude


@dataclass(frozen=True)
class ModeList:
    frequencies: np.ndarray  # rad/s detuning
    linewidths: np.ndarray  # rad/s FWHM

    def __len__(self):
        return len(self.frequencies)

    def spacings(self) -> np.ndarray:
        return np.diff(self.frequencies)


def empty_fsr(geometry: CavityGeometry) -> float:
    """Free spectral range c/2L in Hz."""
    return c / (2.0 * geometry.total_length)


def finesse(survival):
    """Airy finesse pi*sqrt(rho)/(1-rho) for round-trip amplitude survival rho."""
    rho = np.asarray(survival, dtype=float)
    with np.errstate(divide="ignore"):
        f = np.where(rho < 1.0, math.pi * np.sqrt(rho) / (1.0 - rho), np.inf)
    return float(f) if f.ndim == 0 else f


def survival_for_finesse(target: float) -> float:
    # pi*s = F*(1 - s^2) with s = sqrt(rho)
    s = (-math.pi + math.sqrt(math.pi**2 + 4.0 * target**2)) / (2.0 * target)
    return s * s


def calibrate_excess_loss(R1: float, R2: float, target_finesse: float) -> float:
    """Excess amplitude survival a_x that brings the cavity finesse to ``target_finesse``."""
    if target_finesse <= 0:
        raise ValueError("target finesse must be positive")
    mirrors = math.sqrt(R1 * R2)
    if mirrors >= 1.0:
        raise ValueError("lossless mirrors: finesse is infinite at a_x = 1; target unattainable")
    if target_finesse > finesse(mirrors):
        raise ValueError(
            f"target finesse {target_finesse} exceeds the mirror-limited value {finesse(mirrors):.3f}"
        )
    return survival_for_finesse(target_finesse) / mirrors


def hwhm(geometry: CavityGeometry) -> float:
    """Empty-cavity half width at half maximum, FSR/(2F), in Hz."""
    return empty_fsr(geometry) / (2.0 * finesse(geometry.bare_survival))


def escape_efficiency(geometry: CavityGeometry) -> float:
    """Share of round-trip intensity loss leaving through the input coupler."""
    rho = geometry.bare_survival
    return geometry.T1 / (1.0 - rho * rho)


def _phase_constant(geometry: CavityGeometry) -> float:
    # large carrier phase reduced once so grid phases stay well conditioned
    return math.fmod(2.0 * OMEGA_REF * (geometry.total_length + geometry.pzt_offset) / c, TWO_PI)


def round_trip(detuning, geometry: CavityGeometry, cell: VaporCell | None) -> RoundTrip:
    """Round-trip phase and amplitude survival; ``cell=None`` is the empty cavity."""
    delta = np.asarray(detuning, dtype=float)
    length = geometry.total_length + geometry.pzt_offset
    phase = _phase_constant(geometry) + 2.0 * delta * length / c
    survival = np.full(delta.shape, geometry.bare_survival)
    if cell is not None:
        omega = OMEGA_REF + delta
        phase = phase + 2.0 * omega * (refractive_index(delta, cell) - 1.0) * geometry.cell_length / c
        survival = survival * np.exp(-absorption_coefficient(delta, cell) * geometry.cell_length)
    if delta.ndim == 0:
        return RoundTrip(float(phase), float(survival))
    return RoundTrip(phase, survival)


def airy_transmission(detuning, geometry: CavityGeometry, cell: VaporCell | None):
    """Intensity transmission through both mirrors."""
    rt = round_trip(detuning, geometry, cell)
    rho = np.asarray(rt.survival)
    single_pass = rho / math.sqrt(geometry.R1 * geometry.R2)  # a_x * exp(-alpha L)
    denom = (1.0 - rho) ** 2 + 4.0 * rho * np.sin(np.asarray(rt.phase) / 2.0) ** 2
    t = geometry.T1 * geometry.T2 * single_pass / denom
    return float(t) if t.ndim == 0 else t


def transmission_spectrum(grid_hz, geometry: CavityGeometry, cell: VaporCell | None):
    """Airy transmission sampled on a uniform grid of offsets (Hz) from the reference."""
    from .spectra import SpectrumTrace

    grid_hz = np.asarray(grid_hz, dtype=float)
    values = airy_transmission(TWO_PI * grid_hz, geometry, cell)
    return SpectrumTrace(grid_hz, values, quantity="cavity_transmission")


def lock_to(detuning: float, geometry: CavityGeometry, cell: VaporCell | None) -> CavityGeometry:
    """Return the geometry with pzt_offset in [0, lambda/2) making ``detuning`` resonant."""
    base = replace(geometry, pzt_offset=0.0)
    residual = float(np.mod(round_trip(detuning, base, cell).phase, TWO_PI))
    omega = OMEGA_REF + detuning
    pzt = (TWO_PI - residual) * c / (2.0 * omega) if residual > 0 else 0.0
    locked = replace(base, pzt_offset=pzt)
    # one refinement step absorbs the rounding in the phase constant
    residual = _wrap(float(round_trip(detuning, locked, cell).phase))
    return replace(locked, pzt_offset=locked.pzt_offset - residual * c / (2.0 * omega))


def _wrap(phase):
    return np.mod(np.asarray(phase) + math.pi, TWO_PI) - math.pi


def cavity_detuning(detuning, geometry: CavityGeometry, cell: VaporCell | None, pzt=0.0, step: float = TWO_PI * 1e4):
    """Offset (rad/s) of ``detuning`` above the nearest pulled resonance, linearised in phase.

    ``pzt`` is an extra length (scalar or per-point array) added on top of
    ``geometry.pzt_offset``.  Returns ``(offset, half_width)``; ``half_width``
    is the Airy HWHM at the local survival and group delay, or ``inf`` where
    the resonance has no half maximum (round-trip survival below ~0.17).
    """
    delta = np.asarray(detuning, dtype=float)
    pzt = np.asarray(pzt, dtype=float)
    rt = round_trip(delta, geometry, cell)
    slope = (
        np.asarray(round_trip(delta + step, geometry, cell).phase)
        - np.asarray(round_trip(delta - step, geometry, cell).phase)
    ) / (2.0 * step) + 2.0 * pzt / c
    wrapped = _wrap(np.asarray(rt.phase) + 2.0 * (OMEGA_REF + delta) * pzt / c)
    offset = wrapped / slope
    rho = np.asarray(rt.survival)
    arg = (1.0 - rho) / (2.0 * np.sqrt(rho))
    with np.errstate(invalid="ignore", divide="ignore"):
        half_phase = np.where(arg < 1.0, 2.0 * np.arcsin(np.minimum(arg, 1.0)), np.inf)
        half_width = half_phase / np.abs(slope)
    if delta.ndim == 0:
        return float(offset), float(half_width)
    return offset, half_width


def find_resonances(
    window,
    geometry: CavityGeometry,
    cell: VaporCell | None,
    grid_step: float = TWO_PI * 2e5,
    tol: float = 1e-9,
) -> ModeList:
    """All roots of phase = 2*pi*m inside ``window`` (rad/s detunings).

    The unwrapped phase is sampled on a grid fine enough to separate
    neighbouring roots even where anomalous dispersion folds it back; each
    integer crossing is then bracketed and polished with Brent's method.
    """
    lo, hi = float(window[0]), float(window[1])
    if hi <= lo:
        raise ValueError("empty window")
    n = max(int(math.ceil((hi - lo) / grid_step)) + 1, 3)
    grid = np.linspace(lo, hi, n)
    order = np.asarray(round_trip(grid, geometry, cell).phase) / TWO_PI

    def phase_at(x):
        return float(round_trip(x, geometry, cell).phase)

    roots = []
    for i in range(n - 1):
        q0, q1 = order[i], order[i + 1]
        lo_m, hi_m = sorted((q0, q1))
        for m in range(math.ceil(lo_m), math.floor(hi_m) + 1):
            target = TWO_PI * m
            f0 = phase_at(grid[i]) - target
            f1 = phase_at(grid[i + 1]) - target
            if f0 == 0.0:
                root = grid[i]
            elif f0 * f1 > 0:
                continue
            else:
                root = brentq(lambda x: phase_at(x) - target, grid[i], grid[i + 1], xtol=1e-6, rtol=1e-15)
            if abs(phase_at(root) - target) >= tol:
                raise RuntimeError(f"resonance at {root / TWO_PI:.6e} Hz misses tolerance")
            roots.append(root)
    if not roots:
        raise ValueError("no resonance found in window")
    freqs = np.unique(np.array(roots))
    # roots shared by two adjacent brackets land on the same grid node
    keep = np.concatenate(([True], np.diff(freqs) > 1e-3))
    freqs = freqs[keep]
    rt = round_trip(freqs, geometry, cell)
    rho = np.asarray(rt.survival)
    h = TWO_PI * 1e3
    slope = (np.asarray(round_trip(freqs + h, geometry, cell).phase) - np.asarray(round_trip(freqs - h, geometry, cell).phase)) / (2 * h)
    with np.errstate(divide="ignore"):
        widths = np.where(rho > 0, 2.0 * (1.0 - rho) / (np.sqrt(rho) * np.abs(slope)), np.inf)
    return ModeList(freqs, widths)
