"""Complex susceptibility of a natural-abundance Rb vapour near the D2 line.

Each ground hyperfine level contributes one Doppler-broadened (Voigt) band;
excited-state hyperfine structure is collapsed onto its centre of gravity.
Band offsets come from ``data/rb_d2_lines.json``, which names its source.

All frequencies are angular detunings (rad/s) from ``OMEGA_REF``, the 87Rb
D2 centroid.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources

import numpy as np
from scipy.constants import atomic_mass, c, k as k_B
from scipy.special import wofz

TWO_PI = 2.0 * math.pi
TORR = 133.322368421

_LINE_DATA = json.loads(resources.files("rvo.data").joinpath("rb_d2_lines.json").read_text())

OMEGA_REF = TWO_PI * _LINE_DATA["reference_frequency_hz"]
K_REF = OMEGA_REF / c

# liquid-phase alkali vapour-pressure fit, log10 P[torr] = A - B/T
VAPOR_A = 7.193
VAPOR_B = 4040.0
T_MIN, T_MAX = 250.0, 500.0


@dataclass(frozen=True)
class IsotopeSpec:
    name: int
    abundance: float
    mass: float  # kg
    ground_splitting: float  # rad/s
    d2_center_offset: float  # rad/s

    def __post_init__(self):
        if self.mass <= 0:
            raise ValueError(f"isotope {self.name}: mass must be positive")
        if self.ground_splitting <= 0:
            raise ValueError(f"isotope {self.name}: ground splitting must be positive")
        if not 0 <= self.abundance <= 1:
            raise ValueError(f"isotope {self.name}: abundance outside [0, 1]")


@dataclass(frozen=True)
class AtomicLine:
    isotope: int
    lower_state: int  # ground F
    center_detuning: float  # rad/s
    relative_strength: float
    natural_width: float  # rad/s, FWHM

    def __post_init__(self):
        if self.natural_width <= 0:
            raise ValueError("natural width must be positive")
        if self.relative_strength < 0:
            raise ValueError("relative strength must be non-negative")


def _isotope_record(name) -> dict:
    try:
        return _LINE_DATA["isotopes"][str(int(name))]
    except (KeyError, ValueError, TypeError):
        raise ValueError(f"unknown isotope tag {name!r}; expected 85 or 87") from None


def isotope(name, abundance: float | None = None) -> IsotopeSpec:
    """Build an IsotopeSpec from the bundled table (85 or 87)."""
    rec = _isotope_record(name)
    shifts = [lvl["hyperfine_shift_hz"] for lvl in rec["ground_levels"].values()]
    return IsotopeSpec(
        name=int(name),
        abundance=rec["abundance"] if abundance is None else abundance,
        mass=rec["mass_u"] * atomic_mass,
        ground_splitting=TWO_PI * (max(shifts) - min(shifts)),
        d2_center_offset=TWO_PI * rec["d2_centroid_offset_hz"],
    )


def natural_rubidium() -> tuple[IsotopeSpec, ...]:
    return (isotope(85), isotope(87))


def line_table(isotopes, natural_width: float = TWO_PI * 6.07e6) -> list[AtomicLine]:
    """One effective line per ground hyperfine level, sorted by frequency.

    ``isotopes`` may hold IsotopeSpec objects or bare tags (85, 87).
    Relative strengths are the ground-level statistical weights
    (2F+1)/(2(2I+1)), which sum to one within an isotope.
    """
    isotopes = list(isotopes)
    if not isotopes:
        raise ValueError("isotope list is empty")
    lines = []
    for iso in isotopes:
        name = iso.name if isinstance(iso, IsotopeSpec) else iso
        rec = _isotope_record(name)
        levels = rec["ground_levels"]
        total = sum(lvl["degeneracy"] for lvl in levels.values())
        for f_label, lvl in levels.items():
            center = rec["d2_centroid_offset_hz"] - lvl["hyperfine_shift_hz"]
            lines.append(
                AtomicLine(
                    isotope=int(name),
                    lower_state=int(f_label),
                    center_detuning=TWO_PI * center,
                    relative_strength=lvl["degeneracy"] / total,
                    natural_width=natural_width,
                )
            )
    lines.sort(key=lambda ln: ln.center_detuning)
    return lines


def find_line(lines, isotope_name: int, lower_state: int) -> AtomicLine:
    for ln in lines:
        if ln.isotope == isotope_name and ln.lower_state == lower_state:
            return ln
    raise KeyError(f"no line {isotope_name}Rb F={lower_state}")


def line_table_json(isotopes=None, natural_width: float = TWO_PI * 6.07e6) -> str:
    lines = line_table(isotopes or natural_rubidium(), natural_width)
    rows = [
        {
            "isotope": ln.isotope,
            "lower_F": ln.lower_state,
            "center_offset_hz": ln.center_detuning / TWO_PI,
            "relative_strength": ln.relative_strength,
            "natural_width_hz": ln.natural_width / TWO_PI,
        }
        for ln in lines
    ]
    return json.dumps({"source": _LINE_DATA["source"], "lines": rows}, indent=2)


def number_density(temperature):
    """Total Rb number density (m^-3) from the liquid-phase vapour-pressure fit."""
    t = np.asarray(temperature, dtype=float)
    if np.any((t <= T_MIN) | (t >= T_MAX)):
        raise ValueError(f"temperature outside vapour-pressure fit window ({T_MIN}, {T_MAX}) K")
    pressure = TORR * 10.0 ** (VAPOR_A - VAPOR_B / t)
    n = pressure / (k_B * t)
    return float(n) if n.ndim == 0 else n


def thermal_speed(temperature: float, mass: float) -> float:
    """Most probable speed sqrt(2 k_B T / m)."""
    return math.sqrt(2.0 * k_B * temperature / mass)


def faddeeva_w(z):
    """w(z) = exp(-z^2) erfc(-iz) on the closed upper half plane."""
    z = np.asarray(z, dtype=complex)
    if np.any(z.imag < 0):
        raise ValueError("faddeeva_w is only defined here for Im(z) >= 0")
    out = wofz(z)
    return complex(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class VaporCell:
    temperature: float  # K
    chi_prefactor: float  # m^4/s, overall susceptibility scale
    length: float = 0.075
    isotopes: tuple[IsotopeSpec, ...] = field(default_factory=natural_rubidium)
    density_scale: float = 1.0
    natural_width: float = TWO_PI * 6.07e6  # rad/s

    def __post_init__(self):
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")
        if self.length <= 0:
            raise ValueError("cell length must be positive")
        if self.density_scale <= 0:
            raise ValueError("density_scale must be positive")
        if self.chi_prefactor < 0:
            raise ValueError("chi_prefactor must be non-negative")
        total = sum(iso.abundance for iso in self.isotopes)
        if not self.isotopes or abs(total - 1.0) > 1e-12:
            raise ValueError(f"isotope abundances sum to {total!r}, expected 1")

    @property
    def lines(self) -> list[AtomicLine]:
        return line_table(self.isotopes, self.natural_width)

    def isotope(self, name: int) -> IsotopeSpec:
        for iso in self.isotopes:
            if iso.name == int(name):
                return iso
        raise ValueError(f"isotope {name} not present in cell")


@dataclass(frozen=True)
class SusceptibilitySample:
    detuning: float
    chi: complex


def susceptibility(detuning, cell: VaporCell):
    """Complex susceptibility chi(detuning) of the cell vapour.

    Sum over lines of abundance * strength * sqrt(pi) * w(z) / u, with
    z = (detuning - line_center + i*Gamma/2) / (k u), scaled by
    i * chi_prefactor * density.  Accepts scalars or arrays.
    """
    delta = np.asarray(detuning, dtype=float)
    n_total = number_density(cell.temperature) * cell.density_scale
    acc = np.zeros(delta.shape, dtype=complex)
    for iso in cell.isotopes:
        u = thermal_speed(cell.temperature, iso.mass)
        ku = K_REF * u
        for ln in line_table([iso], cell.natural_width):
            z = (delta - ln.center_detuning + 0.5j * ln.natural_width) / ku
            acc += (iso.abundance * ln.relative_strength * math.sqrt(math.pi) / u) * wofz(z)
    chi = 1j * cell.chi_prefactor * n_total * acc
    return complex(chi) if chi.ndim == 0 else chi


def absorption_coefficient(detuning, cell: VaporCell):
    """Intensity absorption coefficient alpha (1/m)."""
    delta = np.asarray(detuning, dtype=float)
    alpha = (OMEGA_REF + delta) / c * np.imag(susceptibility(delta, cell))
    return float(alpha) if np.ndim(alpha) == 0 else alpha


def refractive_index(detuning, cell: VaporCell):
    n = 1.0 + 0.5 * np.real(susceptibility(detuning, cell))
    return float(n) if np.ndim(n) == 0 else n


def calibrate_chi_prefactor(
    temperature: float,
    target_transmission: float,
    line: tuple[int, int] = (87, 2),
    length: float = 0.075,
    natural_width: float = TWO_PI * 6.07e6,
) -> float:
    """Prefactor giving single-pass transmission ``target_transmission`` at a band centre.

    chi is linear in the prefactor, so one evaluation at unit scale suffices.
    """
    if not 0 < target_transmission < 1:
        raise ValueError("target transmission must lie in (0, 1)")
    unit = VaporCell(temperature, 1.0, length=length, natural_width=natural_width)
    center = find_line(unit.lines, *line).center_detuning
    od_unit = absorption_coefficient(center, unit) * length
    return -math.log(target_transmission) / od_unit
