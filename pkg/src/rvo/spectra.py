"""Synthetic versions of the displayed traces: vapour absorption, intracavity
transmission, and the scanned Fabry-Perot analyzer record of the output."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cavity import CavityGeometry, transmission_spectrum
from .medium import TWO_PI, VaporCell, absorption_coefficient

LABELS = ("pump", "stokes", "anti-stokes")


@dataclass(frozen=True)
class SpectrumTrace:
    grid: np.ndarray  # Hz
    values: np.ndarray
    quantity: str = "value"
    axis: str = "frequency_hz"

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)
        if grid.ndim != 1 or grid.shape != values.shape:
            raise ValueError("grid and values must be 1-D arrays of equal length")
        if len(grid) < 2:
            raise ValueError("a trace needs at least two points")
        steps = np.diff(grid)
        if np.any(steps <= 0):
            raise ValueError("grid must be strictly increasing")
        mean = (grid[-1] - grid[0]) / (len(grid) - 1)
        slack = 1e-9 * mean + 8 * np.finfo(float).eps * np.max(np.abs(grid))
        if np.max(np.abs(steps - mean)) > slack:
            raise ValueError("grid must be uniform")
        if not np.all(np.isfinite(values)):
            raise ValueError("trace values must be finite")

    @property
    def step(self) -> float:
        return (self.grid[-1] - self.grid[0]) / (len(self.grid) - 1)

    def __add__(self, other: "SpectrumTrace") -> "SpectrumTrace":
        if not np.array_equal(self.grid, other.grid):
            raise ValueError("traces live on different grids")
        return SpectrumTrace(self.grid, self.values + other.values, self.quantity, self.axis)


def uniform_grid(start: float, stop: float, points: int) -> np.ndarray:
    if points < 2:
        raise ValueError("points must be >= 2")
    return np.linspace(start, stop, points)


@dataclass(frozen=True)
class AnalyzerConfig:
    fsr: float = 10e9  # Hz
    linewidth: float = 30e6  # Hz, FWHM
    span: float = 18e9  # Hz, centred on the pump
    points: int = 8192

    def __post_init__(self):
        if not self.fsr > self.linewidth > 0:
            raise ValueError("analyzer needs fsr > linewidth > 0")
        if self.points < 2:
            raise ValueError("analyzer points must be >= 2")
        if self.span <= 0:
            raise ValueError("analyzer span must be positive")

    @property
    def grid(self) -> np.ndarray:
        return uniform_grid(-self.span / 2, self.span / 2, self.points)


@dataclass(frozen=True)
class Emission:
    offset: float  # Hz from pump
    power: float  # W
    label: str

    def __post_init__(self):
        if self.power < 0:
            raise ValueError("emission power must be non-negative")
        if self.label not in LABELS:
            raise ValueError(f"unknown emission label {self.label!r}")


@dataclass(frozen=True)
class EmissionSet:
    emissions: tuple[Emission, ...] = field(default_factory=tuple)

    def __post_init__(self):
        seen = {}
        for e in self.emissions:
            if seen.setdefault(e.offset, e.label) != e.label:
                raise ValueError(f"two labels at offset {e.offset} Hz")

    def __iter__(self):
        return iter(self.emissions)

    def __len__(self):
        return len(self.emissions)

    def union(self, other: "EmissionSet") -> "EmissionSet":
        return EmissionSet(self.emissions + other.emissions)


def absorption_trace(grid_hz, cell: VaporCell) -> SpectrumTrace:
    """Single-pass intensity transmission exp(-alpha L) of the bare cell."""
    grid_hz = np.asarray(grid_hz, dtype=float)
    alpha = absorption_coefficient(TWO_PI * grid_hz, cell)
    return SpectrumTrace(grid_hz, np.exp(-alpha * cell.length), quantity="single_pass_transmission")


def cavity_trace(grid_hz, geometry: CavityGeometry, cell: VaporCell, with_atoms: bool = True) -> SpectrumTrace:
    return transmission_spectrum(grid_hz, geometry, cell if with_atoms else None)


def analyzer_trace(emissions: EmissionSet, analyzer: AnalyzerConfig, grid_hz=None) -> SpectrumTrace:
    """Power-weighted Airy combs of an ideal scanned Fabry-Perot.

    Each emission contributes P * A(nu - nu_e) with A the unit-peak Airy
    function of the analyzer, so replicas sit at nu_e + k*FSR.
    """
    grid = analyzer.grid if grid_hz is None else np.asarray(grid_hz, dtype=float)
    coeff = (2.0 * analyzer.fsr / (math.pi * analyzer.linewidth)) ** 2
    values = np.zeros_like(grid)
    for e in emissions:
        s = np.sin(math.pi * (grid - e.offset) / analyzer.fsr)
        values = values + e.power / (1.0 + coeff * s * s)
    return SpectrumTrace(grid, values, quantity="analyzer_signal_w", axis="offset_from_pump_hz")


def local_maxima(trace: SpectrumTrace, floor: float = 0.0) -> np.ndarray:
    """Indices of strict interior local maxima above ``floor``."""
    v = trace.values
    idx = np.flatnonzero((v[1:-1] > v[:-2]) & (v[1:-1] >= v[2:])) + 1
    return idx[v[idx] > floor]
