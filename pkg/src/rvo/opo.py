"""Double-Lambda four-wave-mixing OPO: detunings, gain, round-trip map,
threshold, clamped steady state, regime tags and triple-resonance search.

The Stokes / conjugate anti-Stokes pair evolves per round trip under
M = G(r, theta) @ D, where D holds the passive round trip of each field and
G is the parametric (squeeze-like) gain block.  Oscillation starts where the
spectral radius of M reaches one.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.constants import c
from scipy.optimize import brentq

from .cavity import CavityGeometry, cavity_detuning, lock_to, round_trip
from .medium import OMEGA_REF, TWO_PI, VaporCell, number_density

log = logging.getLogger(__name__)

BOTH_ABOVE = "both-above"
STOKES_ONLY = "stokes-only"
BELOW = "below"
REGIMES = (BOTH_ABOVE, STOKES_ONLY, BELOW)


class SolverError(RuntimeError):
    """A steady-state or threshold solve failed to converge."""


@dataclass(frozen=True)
class GainConfig:
    coupling: float  # C_g, m^2/W
    saturation_power: float  # W, total sideband output that halves the gain
    one_photon_scale: float = TWO_PI * 1e9  # rad/s
    two_photon_width: float = TWO_PI * 1e6  # rad/s
    theta: float = 0.0
    power_cap: float = 2.0  # W, threshold search ceiling
    power_floor: float = 1e-6  # W, regime detection floor

    def __post_init__(self):
        if self.coupling < 0:
            raise ValueError("gain coupling must be non-negative")
        if self.saturation_power <= 0:
            raise ValueError("saturation power must be positive")
        if self.one_photon_scale <= 0 or self.two_photon_width <= 0:
            raise ValueError("gain widths must be positive")
        if self.power_cap <= 0 or self.power_floor <= 0:
            raise ValueError("power cap and floor must be positive")


@dataclass(frozen=True)
class PumpConfig:
    detuning: float  # rad/s from reference
    power: float  # W
    isotope: int

    def __post_init__(self):
        if self.power < 0:
            raise ValueError("pump power must be non-negative")


@dataclass(frozen=True)
class FwmDetunings:
    delta_b: float  # pump - omega_01
    delta_a: float  # pump - omega_02
    omega_12: float
    isotope: int

    @property
    def mean(self) -> float:
        return 0.5 * (self.delta_a + self.delta_b)


def _isotope_lines(cell: VaporCell, isotope: int):
    lines = [ln for ln in cell.lines if ln.isotope == int(isotope)]
    if len(lines) != 2:
        raise ValueError(f"isotope {isotope} not present in cell")
    return lines  # sorted: [upper ground level (omega_02), lower ground level (omega_01)]


def detunings(pump_detuning: float, isotope: int, cell: VaporCell) -> FwmDetunings:
    """One-photon detunings of the pump from both legs of the double Lambda.

    |1> is the lower ground level, so omega_01 is the higher-frequency band.
    delta_a is built as delta_b + omega_12, so the constraint holds exactly.
    """
    line_02, line_01 = _isotope_lines(cell, isotope)
    omega_12 = cell.isotope(isotope).ground_splitting
    delta_b = pump_detuning - line_01.center_detuning
    return FwmDetunings(delta_b, delta_b + omega_12, omega_12, int(isotope))


def sideband_frequencies(pump_detuning, isotope: int, cell: VaporCell):
    """(Stokes, anti-Stokes) detunings at -/+ omega_12 from the pump."""
    omega_12 = cell.isotope(isotope).ground_splitting
    return pump_detuning - omega_12, pump_detuning + omega_12


def pump_buildup(pump_detuning, geometry: CavityGeometry, cell: VaporCell | None, power_in):
    """Circulating pump power P_in * T1 / |1 - rho exp(i phi)|^2."""
    rt = round_trip(pump_detuning, geometry, cell)
    rho = np.asarray(rt.survival)
    denom = (1.0 - rho) ** 2 + 4.0 * rho * np.sin(np.asarray(rt.phase) / 2.0) ** 2
    out = np.asarray(power_in) * geometry.T1 / denom
    return float(out) if out.ndim == 0 else out


def parametric_strength(
    det: FwmDetunings,
    cell: VaporCell,
    circulating_power,
    gain: GainConfig,
    two_photon_detuning: float = 0.0,
):
    """Gain parameter r of the coupled map; linear in circulating pump power.

    r = C_g * N_iso * L_cell * P_circ / (1 + (mean/scale)^2) / (1 + (delta2/gamma12)^2),
    with N_iso the density of the driven isotope.
    """
    n_iso = number_density(cell.temperature) * cell.density_scale * cell.isotope(det.isotope).abundance
    one_photon = 1.0 / (1.0 + (det.mean / gain.one_photon_scale) ** 2)
    two_photon = 1.0 / (1.0 + (two_photon_detuning / gain.two_photon_width) ** 2)
    return gain.coupling * n_iso * cell.length * np.asarray(circulating_power) * one_photon * two_photon


@dataclass(frozen=True)
class CoupledModeMap:
    matrix: np.ndarray  # 2x2 complex, acts on (a_S, conj(a_AS))
    gain_block: np.ndarray
    passive_block: np.ndarray
    r: float

    @property
    def eigen(self):
        vals, vecs = np.linalg.eig(self.matrix)
        i = int(np.argmax(np.abs(vals)))
        return vals[i], vecs[:, i]

    @property
    def spectral_radius(self) -> float:
        return float(np.max(np.abs(np.linalg.eigvals(self.matrix))))


def gain_block(r: float, theta: float = 0.0) -> np.ndarray:
    ch, sh = math.cosh(r), math.sinh(r)
    return np.array([[ch, np.exp(1j * theta) * sh], [np.exp(-1j * theta) * sh, ch]], dtype=complex)


def coupled_map(r: float, rho_s: float, phi_s: float, rho_as: float, phi_as: float, theta: float = 0.0) -> CoupledModeMap:
    """Round-trip map M = G(r, theta) @ diag(sqrt(rho_s) e^{i phi_s}, sqrt(rho_as) e^{-i phi_as}).

    ``rho_s`` and ``rho_as`` are round-trip *intensity* survivals, i.e. the
    square of the cavity-model amplitude survival.
    """
    if r < 0:
        raise ValueError("gain parameter must be non-negative")
    passive = np.diag([math.sqrt(rho_s) * np.exp(1j * phi_s), math.sqrt(rho_as) * np.exp(-1j * phi_as)])
    g = gain_block(r, theta)
    return CoupledModeMap(g @ passive, g, passive, r)


def threshold_gain(rho_s, phi_s, rho_as, phi_as, theta=0.0, r_max: float = 50.0) -> float:
    """Smallest r with spectral radius one, or inf if none below ``r_max``."""

    def excess(r):
        return coupled_map(r, rho_s, phi_s, rho_as, phi_as, theta).spectral_radius - 1.0

    if excess(0.0) >= 0:
        return 0.0
    if excess(r_max) < 0:
        return math.inf
    return brentq(excess, 0.0, r_max, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)


@dataclass(frozen=True)
class OperatingPoint:
    pump_detuning: float  # rad/s
    isotope: int
    pump_power: float  # W
    stokes: float  # rad/s
    anti_stokes: float  # rad/s
    stokes_cavity_detuning: float  # rad/s from nearest pulled mode
    anti_stokes_cavity_detuning: float
    stokes_half_width: float  # rad/s, inf when unresolved
    anti_stokes_half_width: float
    stokes_survival: float  # round-trip amplitude survival
    anti_stokes_survival: float
    pump_survival: float
    sigma: float  # spectral radius at pump_power, undepleted
    regime: str
    threshold_power: float  # W, inf if none below the cap
    stokes_output: float  # W
    anti_stokes_output: float  # W
    pzt_offset: float  # m

    def __post_init__(self):
        if self.regime not in REGIMES:
            raise ValueError(f"unknown regime {self.regime!r}")
        if self.stokes_output < 0 or self.anti_stokes_output < 0:
            raise ValueError("output powers must be non-negative")

    @property
    def total_output(self) -> float:
        return self.stokes_output + self.anti_stokes_output

    def to_record(self) -> dict:
        inf_safe = lambda x: None if not math.isfinite(x) else x  # noqa: E731
        return {
            "isotope": self.isotope,
            "pump_offset_hz": self.pump_detuning / TWO_PI,
            "pump_power_w": self.pump_power,
            "stokes_offset_hz": self.stokes / TWO_PI,
            "anti_stokes_offset_hz": self.anti_stokes / TWO_PI,
            "stokes_cavity_detuning_hz": self.stokes_cavity_detuning / TWO_PI,
            "anti_stokes_cavity_detuning_hz": self.anti_stokes_cavity_detuning / TWO_PI,
            "stokes_half_width_hz": inf_safe(self.stokes_half_width / TWO_PI),
            "anti_stokes_half_width_hz": inf_safe(self.anti_stokes_half_width / TWO_PI),
            "stokes_survival": self.stokes_survival,
            "anti_stokes_survival": self.anti_stokes_survival,
            "pump_survival": self.pump_survival,
            "sigma": self.sigma,
            "regime": self.regime,
            "threshold_power_w": inf_safe(self.threshold_power),
            "stokes_output_w": self.stokes_output,
            "anti_stokes_output_w": self.anti_stokes_output,
            "pzt_offset_m": self.pzt_offset,
        }


@dataclass(frozen=True)
class _Fields:
    """Pump-locked round-trip data for one pump frequency."""

    geometry: CavityGeometry
    det: FwmDetunings
    stokes: float
    anti_stokes: float
    rho_p: float
    rho_s: float
    phi_s: float
    rho_as: float
    phi_as: float
    gain_per_watt: float  # dr/dP_circ

    @property
    def buildup(self) -> float:
        # pump is locked on resonance
        return self.geometry.T1 / (1.0 - self.rho_p) ** 2

    def coupled_map(self, r: float, theta: float) -> CoupledModeMap:
        return coupled_map(r, self.rho_s**2, self.phi_s, self.rho_as**2, self.phi_as, theta)


def _fields(pump_detuning: float, isotope: int, geometry: CavityGeometry, cell: VaporCell, gain: GainConfig) -> _Fields:
    locked = lock_to(pump_detuning, geometry, cell)
    det = detunings(pump_detuning, isotope, cell)
    w_s, w_as = sideband_frequencies(pump_detuning, isotope, cell)
    rt = round_trip(np.array([pump_detuning, w_s, w_as]), locked, cell)
    rho, phi = rt.survival, rt.phase
    return _Fields(
        geometry=locked,
        det=det,
        stokes=w_s,
        anti_stokes=w_as,
        rho_p=float(rho[0]),
        rho_s=float(rho[1]),
        phi_s=float(phi[1]),
        rho_as=float(rho[2]),
        phi_as=float(phi[2]),
        gain_per_watt=float(parametric_strength(det, cell, 1.0, gain)),
    )


def spectral_radius(pump_detuning: float, isotope: int, geometry: CavityGeometry, cell: VaporCell, power_in: float, gain: GainConfig) -> float:
    f = _fields(pump_detuning, isotope, geometry, cell, gain)
    r = f.gain_per_watt * f.buildup * power_in
    return f.coupled_map(r, gain.theta).spectral_radius


def _threshold(f: _Fields, gain: GainConfig) -> float:
    per_watt_in = f.gain_per_watt * f.buildup

    def excess(p):
        return f.coupled_map(per_watt_in * p, gain.theta).spectral_radius - 1.0

    if per_watt_in <= 0:
        return math.inf
    # past r = 50 cosh(r) ~ 1e21, so any map with finite losses is above one
    hi = min(gain.power_cap, 50.0 / per_watt_in)
    if excess(hi) < 0:
        return math.inf
    lo = 0.0
    if excess(lo) >= 0:
        return 0.0
    return brentq(excess, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)


def threshold_power(pump_detuning: float, isotope: int, geometry: CavityGeometry, cell: VaporCell, gain: GainConfig) -> float:
    """Input pump power at which the spectral radius reaches one.

    Bracketing search over [0, power_cap]; returns ``inf`` (no oscillation)
    when the cap is not enough.
    """
    return _threshold(_fields(pump_detuning, isotope, geometry, cell, gain), gain)


def _depleted_circulating(power_in: float, t1: float, rho_p: float, conversion: float) -> float:
    """Circulating pump when a fraction ``conversion`` of it is converted per round trip.

    The conversion acts as extra intensity loss on the locked pump:
    P = T1 P_in / (1 - rho_p sqrt(1 - eta))^2.
    """
    return t1 * power_in / (1.0 - rho_p * np.sqrt(1.0 - conversion)) ** 2


@dataclass(frozen=True)
class SteadyState:
    stokes_output: float
    anti_stokes_output: float
    circulating_sideband: float
    circulating_pump: float
    threshold_gain: float
    iterations: int

    @property
    def total_output(self) -> float:
        return self.stokes_output + self.anti_stokes_output


def _steady_state(f: _Fields, power_in: float, gain: GainConfig, maxiter: int = 10_000) -> SteadyState:
    t1 = f.geometry.T1
    p_circ0 = f.buildup * power_in
    r0 = f.gain_per_watt * p_circ0
    r_th = threshold_gain(f.rho_s**2, f.phi_s, f.rho_as**2, f.phi_as, gain.theta)
    zero = SteadyState(0.0, 0.0, 0.0, p_circ0, r_th, 0)
    if not math.isfinite(r_th) or r0 <= r_th:
        return zero

    m = f.coupled_map(r_th, gain.theta)
    _, v = m.eigen
    w = m.passive_block @ v  # field after the lossy pass, where it meets the coupler
    w_norm = float(np.vdot(w, w).real)
    if w_norm <= 0:
        return zero
    frac_s = abs(w[0]) ** 2 / w_norm
    frac_as = abs(w[1]) ** 2 / w_norm
    gain_ratio = float(np.vdot(v, v).real) / w_norm  # > 1 at threshold

    # eta is the pump fraction converted per round trip; X = eta * P_pump / (g - 1)
    # follows from photon bookkeeping at the coupler.  The gain sees the pump at
    # mid-pass, P_pump * sqrt(1 - eta), so it vanishes at full conversion and the
    # clamp always has a root; the first one from eta = 0 is taken.
    def sideband(eta):
        return eta * _depleted_circulating(power_in, t1, f.rho_p, eta) / (gain_ratio - 1.0)

    def clamp(eta):
        p_mid = _depleted_circulating(power_in, t1, f.rho_p, eta) * np.sqrt(1.0 - eta)
        return f.gain_per_watt * p_mid / (1.0 + t1 * sideband(eta) / gain.saturation_power) - r_th

    etas = np.concatenate(([0.0], np.geomspace(1e-12, 1.0, 1201)))
    values = clamp(etas)
    crossing = np.flatnonzero(values[1:] <= 0)
    if crossing.size == 0:
        raise SolverError(
            f"gain never clamps: P_in={power_in:.4g} W, r0={r0:.4g}, r_th={r_th:.4g}, "
            f"full-conversion excess {values[-1]:.4g}"
        )
    k = int(crossing[0])
    try:
        eta, info = brentq(lambda e: float(clamp(e)), etas[k], etas[k + 1], xtol=1e-300, rtol=1e-13, maxiter=maxiter, full_output=True)
    except RuntimeError as exc:
        raise SolverError(f"gain clamp did not converge in {maxiter} iterations (P_in={power_in:.4g} W)") from exc
    x = float(sideband(eta))
    p_circ = _depleted_circulating(power_in, t1, f.rho_p, eta)
    return SteadyState(t1 * x * frac_s, t1 * x * frac_as, x, float(p_circ), r_th, info.iterations)


def steady_state_output(
    pump_detuning: float, isotope: int, geometry: CavityGeometry, cell: VaporCell, power_in: float, gain: GainConfig
) -> tuple[float, float]:
    """(P_S, P_AS) leaving through the input coupler, W; zero below threshold.

    Above threshold the gain saturates with circulating sideband power and the
    pump is depleted by the converted power; the circulating sideband power X
    is the root of r(P_circ(X)) / (1 + T1*X/P_sat) = r_threshold.
    """
    if power_in < 0:
        raise ValueError("pump power must be non-negative")
    ss = _steady_state(_fields(pump_detuning, isotope, geometry, cell, gain), power_in, gain)
    return ss.stokes_output, ss.anti_stokes_output


def regime_of(p_s: float, p_as: float, floor: float) -> str:
    if p_s > floor and p_as > floor:
        return BOTH_ABOVE
    if p_s > floor:
        return STOKES_ONLY
    return BELOW


def classify_regime(pump_detuning: float, isotope: int, geometry: CavityGeometry, cell: VaporCell, power_in: float, gain: GainConfig) -> str:
    p_s, p_as = steady_state_output(pump_detuning, isotope, geometry, cell, power_in, gain)
    return regime_of(p_s, p_as, gain.power_floor)


def operating_point(pump_detuning: float, isotope: int, geometry: CavityGeometry, cell: VaporCell, power_in: float, gain: GainConfig) -> OperatingPoint:
    """Fully evaluated state of the OPO with the cavity locked to the pump."""
    f = _fields(pump_detuning, isotope, geometry, cell, gain)
    (d_s, d_as), (h_s, h_as) = cavity_detuning(np.array([f.stokes, f.anti_stokes]), f.geometry, cell)
    sigma = f.coupled_map(f.gain_per_watt * f.buildup * power_in, gain.theta).spectral_radius
    ss = _steady_state(f, power_in, gain)
    return OperatingPoint(
        pump_detuning=float(pump_detuning),
        isotope=int(isotope),
        pump_power=float(power_in),
        stokes=f.stokes,
        anti_stokes=f.anti_stokes,
        stokes_cavity_detuning=float(d_s),
        anti_stokes_cavity_detuning=float(d_as),
        stokes_half_width=float(h_s),
        anti_stokes_half_width=float(h_as),
        stokes_survival=f.rho_s,
        anti_stokes_survival=f.rho_as,
        pump_survival=f.rho_p,
        sigma=sigma,
        regime=regime_of(ss.stokes_output, ss.anti_stokes_output, gain.power_floor),
        threshold_power=_threshold(f, gain),
        stokes_output=ss.stokes_output,
        anti_stokes_output=ss.anti_stokes_output,
        pzt_offset=f.geometry.pzt_offset,
    )


def locked_sideband_detunings(pump_grid, isotope: int, geometry: CavityGeometry, cell: VaporCell):
    """Vectorised pump lock: sideband offsets from pulled modes and their half widths.

    Returns ``(d_s, h_s, d_as, h_as)`` arrays in rad/s.
    """
    wp = np.asarray(pump_grid, dtype=float)
    base = replace(geometry, pzt_offset=0.0)
    residual = np.mod(np.asarray(round_trip(wp, base, cell).phase), TWO_PI)
    pzt = np.where(residual > 0, (TWO_PI - residual) * c / (2.0 * (OMEGA_REF + wp)), 0.0)
    out = []
    for w in sideband_frequencies(wp, isotope, cell):
        d, h = cavity_detuning(w, base, cell, pzt=pzt)
        out.extend([d, h])
    return tuple(out)


def scan_pump(pump_grid, isotope: int, geometry: CavityGeometry, cell: VaporCell, power_in: float, gain: GainConfig, map_fn=map) -> list[OperatingPoint]:
    """Operating points along a pump-frequency grid, in grid order.

    ``map_fn`` may be a pool's ``map``; it must preserve input order.
    """

    def one(wp):
        return operating_point(float(wp), isotope, geometry, cell, power_in, gain)

    return list(map_fn(one, np.asarray(pump_grid, dtype=float)))


def is_triple_resonant(point: OperatingPoint) -> bool:
    return all(
        math.isfinite(h) and abs(d) < h
        for d, h in (
            (point.stokes_cavity_detuning, point.stokes_half_width),
            (point.anti_stokes_cavity_detuning, point.anti_stokes_half_width),
        )
    )


def triple_resonance_search(
    window,
    isotope: int,
    geometry: CavityGeometry,
    cell: VaporCell,
    power_in: float,
    gain: GainConfig,
    step: float = TWO_PI * 1e6,
    map_fn=map,
) -> list[OperatingPoint]:
    """Pump frequencies in ``window`` where both sidebands sit inside the
    half width of a pulled mode while the cavity is locked to the pump.

    A vectorised pass over the grid picks candidates; each one is then
    re-evaluated with the refined lock and kept only if the bound still
    holds.  Sorted by spectral radius, largest first.  May be empty.
    """
    lo, hi = float(window[0]), float(window[1])
    if not hi > lo:
        raise ValueError("empty pump window")
    grid = np.arange(lo, hi + 0.5 * step, step)
    d_s, h_s, d_as, h_as = locked_sideband_detunings(grid, isotope, geometry, cell)
    with np.errstate(invalid="ignore"):
        hit = np.isfinite(h_s) & np.isfinite(h_as) & (np.abs(d_s) < h_s) & (np.abs(d_as) < h_as)
    points = scan_pump(grid[hit], isotope, geometry, cell, power_in, gain, map_fn)
    points = [p for p in points if is_triple_resonant(p)]
    points.sort(key=lambda p: (-p.sigma, p.pump_detuning))
    return points
