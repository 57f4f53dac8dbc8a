"""Run configuration: a nested JSON tree merged over the packaged defaults.

Every key is either consumed or rejected; errors carry the dotted key path
(``cavity.R1``).  Frequencies in the file are in Hz and temperatures in
degrees Celsius; the builders below convert to the rad/s and kelvin used by
the physics modules.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, fields
from importlib import resources
from pathlib import Path

from .cavity import CavityGeometry, calibrate_excess_loss
from .medium import TWO_PI, VaporCell
from .opo import REGIMES, GainConfig
from .spectra import AnalyzerConfig

SCENARIOS = ("fig2a", "fig2b", "fig3", "fig4", "scan")
SEARCH_MODES = ("triple", "regime")


class ConfigError(ValueError):
    """Invalid configuration; ``key`` is the dotted path of the offender."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


def default_tree() -> dict:
    text = resources.files("rvo.data").joinpath("default_config.json").read_text(encoding="utf-8")
    return json.loads(text)


def _number(value, key, *, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(key, f"expected a number, got {value!r}")
    if integer:
        if isinstance(value, float) and not value.is_integer():
            raise ConfigError(key, f"expected an integer, got {value!r}")
        return int(value)
    if not math.isfinite(value):
        raise ConfigError(key, "must be finite")
    return float(value)


def _require(ok: bool, key: str, message: str):
    if not ok:
        raise ConfigError(key, message)


@dataclass(frozen=True)
class CellSection:
    temperature_c: float
    length_m: float
    density_scale: float
    natural_width_hz: float
    chi_prefactor: float

    def validate(self, p):
        _require(-20.0 < self.temperature_c < 220.0, f"{p}.temperature_c", "outside the vapour-pressure fit window")
        _require(self.length_m > 0, f"{p}.length_m", "must be positive")
        _require(self.density_scale > 0, f"{p}.density_scale", "must be positive")
        _require(self.natural_width_hz > 0, f"{p}.natural_width_hz", "must be positive")
        _require(self.chi_prefactor >= 0, f"{p}.chi_prefactor", "must be non-negative")


@dataclass(frozen=True)
class CavitySection:
    total_length_m: float
    R1: float
    R2: float
    finesse: float
    pzt_offset_m: float

    def validate(self, p):
        for name in ("R1", "R2"):
            v = getattr(self, name)
            _require(0 < v < 1, f"{p}.{name}", f"reflectivity must lie in (0, 1), got {v}")
        _require(self.total_length_m > 0, f"{p}.total_length_m", "must be positive")
        _require(self.finesse > 0, f"{p}.finesse", "must be positive")


@dataclass(frozen=True)
class GainSection:
    coupling: float
    saturation_power_w: float
    one_photon_scale_hz: float
    two_photon_width_hz: float
    theta_rad: float
    power_cap_w: float
    power_floor_w: float

    def validate(self, p):
        _require(self.coupling >= 0, f"{p}.coupling", "must be non-negative")
        for name in ("saturation_power_w", "one_photon_scale_hz", "two_photon_width_hz", "power_cap_w", "power_floor_w"):
            _require(getattr(self, name) > 0, f"{p}.{name}", "must be positive")


@dataclass(frozen=True)
class PumpSection:
    isotope: int
    detuning_hz: float
    power_w: float

    def validate(self, p):
        _require(self.isotope in (85, 87), f"{p}.isotope", "must be 85 or 87")
        _require(self.power_w >= 0, f"{p}.power_w", "must be non-negative")


@dataclass(frozen=True)
class AnalyzerSection:
    fsr_hz: float
    linewidth_hz: float
    span_hz: float
    points: int

    def validate(self, p):
        _require(self.linewidth_hz > 0, f"{p}.linewidth_hz", "must be positive")
        _require(self.fsr_hz > self.linewidth_hz, f"{p}.fsr_hz", "must exceed the linewidth")
        _require(self.span_hz > 0, f"{p}.span_hz", "must be positive")
        _require(self.points >= 2, f"{p}.points", "must be >= 2")


@dataclass(frozen=True)
class GridSection:
    start_hz: float
    stop_hz: float
    points: int

    def validate(self, p):
        _require(self.stop_hz > self.start_hz, f"{p}.stop_hz", "must exceed start_hz")
        _require(self.points >= 2, f"{p}.points", "must be >= 2")


@dataclass(frozen=True)
class PanelSection:
    label: str
    isotope: int
    window_hz: tuple
    step_hz: float
    search: str
    regime: str

    def validate(self, p):
        _require(bool(self.label) and self.label.isidentifier(), f"{p}.label", "must be a non-empty identifier")
        _require(self.isotope in (85, 87), f"{p}.isotope", "must be 85 or 87")
        _require(len(self.window_hz) == 2 and self.window_hz[1] > self.window_hz[0], f"{p}.window_hz", "must be [low, high] with high > low")
        _require(self.step_hz > 0, f"{p}.step_hz", "must be positive")
        _require(self.search in SEARCH_MODES, f"{p}.search", f"must be one of {SEARCH_MODES}")
        _require(self.regime in REGIMES, f"{p}.regime", f"must be one of {REGIMES}")


@dataclass(frozen=True)
class ScanSection:
    spectrum: GridSection
    pump: GridSection
    fig3: tuple
    fig4_power_max_w: float
    fig4_points: int
    opaque_survival: float

    def validate(self, p):
        _require(self.fig4_power_max_w > 0, f"{p}.fig4_power_max_w", "must be positive")
        _require(self.fig4_points >= 3, f"{p}.fig4_points", "must be >= 3")
        _require(0 < self.opaque_survival < 1, f"{p}.opaque_survival", "must lie in (0, 1)")
        labels = [panel.label for panel in self.fig3]
        _require(len(set(labels)) == len(labels), f"{p}.fig3", "panel labels must be unique")


@dataclass(frozen=True)
class RunConfig:
    scenario: str
    output_dir: str
    threads: int
    cell: CellSection
    cavity: CavitySection
    gain: GainSection
    pump: PumpSection
    analyzer: AnalyzerSection
    scan: ScanSection

    def validate(self, p=""):
        _require(self.scenario in SCENARIOS, "scenario", f"must be one of {SCENARIOS}, got {self.scenario!r}")
        _require(self.threads >= 1, "threads", "must be >= 1")

    # physics objects ---------------------------------------------------

    def vapor_cell(self) -> VaporCell:
        c = self.cell
        return VaporCell(
            temperature=c.temperature_c + 273.15,
            chi_prefactor=c.chi_prefactor,
            length=c.length_m,
            density_scale=c.density_scale,
            natural_width=TWO_PI * c.natural_width_hz,
        )

    def geometry(self) -> CavityGeometry:
        k = self.cavity
        try:
            a_x = calibrate_excess_loss(k.R1, k.R2, k.finesse)
        except ValueError as exc:
            raise ConfigError("cavity.finesse", str(exc)) from None
        try:
            return CavityGeometry(k.total_length_m, self.cell.length_m, k.R1, k.R2, a_x, k.pzt_offset_m)
        except ValueError as exc:
            raise ConfigError("cavity", str(exc)) from None

    def gain_config(self) -> GainConfig:
        g = self.gain
        return GainConfig(
            coupling=g.coupling,
            saturation_power=g.saturation_power_w,
            one_photon_scale=TWO_PI * g.one_photon_scale_hz,
            two_photon_width=TWO_PI * g.two_photon_width_hz,
            theta=g.theta_rad,
            power_cap=g.power_cap_w,
            power_floor=g.power_floor_w,
        )

    def analyzer_config(self) -> AnalyzerConfig:
        a = self.analyzer
        return AnalyzerConfig(a.fsr_hz, a.linewidth_hz, a.span_hz, a.points)

    def to_dict(self) -> dict:
        return _to_tree(self)


_SECTIONS = {
    "cell": CellSection,
    "cavity": CavitySection,
    "gain": GainSection,
    "pump": PumpSection,
    "analyzer": AnalyzerSection,
    "scan": ScanSection,
}
_SCAN_GRIDS = {"spectrum", "pump"}


def _to_tree(obj):
    if hasattr(obj, "__dataclass_fields__"):
        return {f.name: _to_tree(getattr(obj, f.name)) for f in fields(obj)}
    if isinstance(obj, tuple):
        return [_to_tree(x) for x in obj]
    return obj


def _merge(base: dict, override: dict, prefix: str) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        path = f"{prefix}{key}"
        if key not in base:
            raise ConfigError(path, "unknown key")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(path, "expected an object")
            out[key] = _merge(base[key], value, path + ".")
        else:
            out[key] = value
    return out


def _build(cls, tree: dict, prefix: str):
    if not isinstance(tree, dict):
        raise ConfigError(prefix, "expected an object")
    names = [f.name for f in fields(cls)]
    for key in tree:
        if key not in names:
            raise ConfigError(f"{prefix}.{key}", "unknown key")
    values = {}
    for f in fields(cls):
        key = f"{prefix}.{f.name}"
        if f.name not in tree:
            raise ConfigError(key, "missing")
        raw = tree[f.name]
        if cls is ScanSection and f.name in _SCAN_GRIDS:
            values[f.name] = _build(GridSection, raw, key)
        elif cls is ScanSection and f.name == "fig3":
            if not isinstance(raw, list):
                raise ConfigError(key, "expected a list of panels")
            values[f.name] = tuple(_build(PanelSection, panel, f"{key}[{i}]") for i, panel in enumerate(raw))
        elif f.name == "window_hz":
            if not isinstance(raw, list):
                raise ConfigError(key, "expected [low, high]")
            values[f.name] = tuple(_number(x, key) for x in raw)
        elif f.type == "str":
            if not isinstance(raw, str):
                raise ConfigError(key, f"expected a string, got {raw!r}")
            values[f.name] = raw
        else:
            values[f.name] = _number(raw, key, integer=(f.type == "int"))
    obj = cls(**values)
    obj.validate(prefix)
    return obj


def parse_config(data: dict) -> RunConfig:
    """Validate a (possibly partial) config tree against the defaults."""
    if not isinstance(data, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    tree = _merge(default_tree(), data, "")
    for key in ("scenario", "output_dir"):
        if not isinstance(tree[key], str):
            raise ConfigError(key, f"expected a string, got {tree[key]!r}")
    sections = {name: _build(cls, tree[name], name) for name, cls in _SECTIONS.items()}
    cfg = RunConfig(
        scenario=tree["scenario"],
        output_dir=tree["output_dir"],
        threads=_number(tree["threads"], "threads", integer=True),
        **sections,
    )
    cfg.validate()
    cfg.geometry()  # surfaces finesse / geometry conflicts at load time
    return cfg


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError("<file>", f"config file not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError("<file>", f"invalid JSON: {exc}") from None
    return parse_config(data)
