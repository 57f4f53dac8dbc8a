"""Named scenarios that reproduce the figures, plus a generic pump sweep.

Each scenario writes its CSV outputs into the run directory and returns the
manifest dictionary; ``run_scenario`` adds the config echo and timing.
"""

from __future__ import annotations

import datetime as _dt
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .cavity import empty_fsr, escape_efficiency, find_resonances, finesse, hwhm
from .config import RunConfig
from .medium import TWO_PI
from .opo import (
    STOKES_ONLY,
    SolverError,
    operating_point,
    scan_pump,
    steady_state_output,
    threshold_power,
    triple_resonance_search,
)
from .output import write_json, write_table, write_trace
from .spectra import Emission, EmissionSet, absorption_trace, analyzer_trace, cavity_trace, uniform_grid

VOLATILE_KEYS = ("timestamp", "duration_s")


class ScenarioError(RuntimeError):
    """Solver fault raised inside a scenario, with the scenario named."""


def _budget(cfg: RunConfig) -> dict:
    geom = cfg.geometry()
    return {
        "fsr_hz": empty_fsr(geom),
        "finesse": finesse(geom.bare_survival),
        "hwhm_hz": hwhm(geom),
        "escape_efficiency": escape_efficiency(geom),
        "round_trip_survival": geom.bare_survival,
        "excess_survival": geom.excess_survival,
    }


def _spectrum_grid(cfg: RunConfig) -> np.ndarray:
    s = cfg.scan.spectrum
    return uniform_grid(s.start_hz, s.stop_hz, s.points)


def fig2a(cfg: RunConfig, out: Path, pool_map) -> dict:
    trace = absorption_trace(_spectrum_grid(cfg), cfg.vapor_cell())
    write_trace(trace, out / "fig2a_absorption.csv")
    return {"files": ["fig2a_absorption.csv"], "min_transmission": float(trace.values.min())}


def fig2b(cfg: RunConfig, out: Path, pool_map) -> dict:
    grid = _spectrum_grid(cfg)
    geom, cell = cfg.geometry(), cfg.vapor_cell()
    write_trace(cavity_trace(grid, geom, cell, with_atoms=True), out / "fig2b_cavity_atoms.csv")
    write_trace(cavity_trace(grid, geom, cell, with_atoms=False), out / "fig2b_cavity_empty.csv")
    window = (TWO_PI * grid[0], TWO_PI * grid[-1])
    modes = find_resonances(window, geom, cell)
    write_table(
        out / "fig2b_modes.csv",
        ("frequency_hz", "linewidth_hz"),
        zip(modes.frequencies / TWO_PI, modes.linewidths / TWO_PI),
    )
    spacings = modes.spacings() / TWO_PI
    fsr = empty_fsr(geom)
    return {
        "files": ["fig2b_cavity_atoms.csv", "fig2b_cavity_empty.csv", "fig2b_modes.csv"],
        "mode_count": len(modes),
        "max_spacing_deviation": float(np.max(np.abs(spacings - fsr)) / fsr),
    }


def _emissions(point) -> EmissionSet:
    ems = [Emission(0.0, point.pump_power, "pump")]
    ems.append(Emission((point.stokes - point.pump_detuning) / TWO_PI, point.stokes_output, "stokes"))
    ems.append(Emission((point.anti_stokes - point.pump_detuning) / TWO_PI, point.anti_stokes_output, "anti-stokes"))
    return EmissionSet(tuple(ems))


def fig3(cfg: RunConfig, out: Path, pool_map) -> dict:
    geom, cell, gain = cfg.geometry(), cfg.vapor_cell(), cfg.gain_config()
    power = cfg.pump.power_w
    analyzer = cfg.analyzer_config()
    panels, files = {}, []
    for panel in cfg.scan.fig3:
        lo, hi = (TWO_PI * x for x in panel.window_hz)
        step = TWO_PI * panel.step_hz
        if panel.search == "triple":
            found = triple_resonance_search((lo, hi), panel.isotope, geom, cell, power, gain, step, pool_map)
        else:
            grid = np.arange(lo, hi + 0.5 * step, step)
            found = scan_pump(grid, panel.isotope, geom, cell, power, gain, pool_map)
            if panel.regime == STOKES_ONLY:
                found = [p for p in found if p.anti_stokes_survival < cfg.scan.opaque_survival]
            found.sort(key=lambda p: (-p.sigma, p.pump_detuning))
        matching = [p for p in found if p.regime == panel.regime]
        name = f"fig3_{panel.label}_points.csv"
        records = [p.to_record() for p in found]
        header = tuple(records[0]) if records else ("pump_offset_hz",)
        write_table(out / name, header, [[r[k] if r[k] is not None else float("inf") for k in header] for r in records])
        files.append(name)
        summary = {"isotope": panel.isotope, "search": panel.search, "wanted": panel.regime, "candidates": len(found), "matching": len(matching)}
        if matching:
            chosen = matching[0]
            trace_name = f"fig3_{panel.label}_analyzer.csv"
            write_trace(analyzer_trace(_emissions(chosen), analyzer), out / trace_name)
            files.append(trace_name)
            summary["chosen"] = chosen.to_record()
        panels[panel.label] = summary
    return {"files": files, "panels": panels}


def fig4(cfg: RunConfig, out: Path, pool_map) -> dict:
    geom, cell, gain = cfg.geometry(), cfg.vapor_cell(), cfg.gain_config()
    wp, iso = TWO_PI * cfg.pump.detuning_hz, cfg.pump.isotope
    powers = np.linspace(0.0, cfg.scan.fig4_power_max_w, cfg.scan.fig4_points)
    outputs = list(pool_map(lambda p: steady_state_output(wp, iso, geom, cell, float(p), gain), powers))
    total = [s + a for s, a in outputs]
    write_table(out / "fig4_threshold.csv", ("pump_power_w", "total_output_w"), zip(powers, total))
    point = operating_point(wp, iso, geom, cell, cfg.pump.power_w, gain)
    return {
        "files": ["fig4_threshold.csv"],
        "threshold_power_w": threshold_power(wp, iso, geom, cell, gain),
        "operating_point": point.to_record(),
    }


def scan(cfg: RunConfig, out: Path, pool_map) -> dict:
    geom, cell, gain = cfg.geometry(), cfg.vapor_cell(), cfg.gain_config()
    g = cfg.scan.pump
    grid = TWO_PI * uniform_grid(g.start_hz, g.stop_hz, g.points)
    points = scan_pump(grid, cfg.pump.isotope, geom, cell, cfg.pump.power_w, gain, pool_map)
    records = [p.to_record() for p in points]
    header = tuple(records[0])
    write_table(out / "scan_points.csv", header, [[r[k] if r[k] is not None else float("inf") for k in header] for r in records])
    counts = {}
    for p in points:
        counts[p.regime] = counts.get(p.regime, 0) + 1
    return {"files": ["scan_points.csv"], "regime_counts": counts}


SCENARIO_FUNCS = {"fig2a": fig2a, "fig2b": fig2b, "fig3": fig3, "fig4": fig4, "scan": scan}


def run_scenario(cfg: RunConfig, out_dir=None, threads: int | None = None) -> dict:
    """Run ``cfg.scenario``, write outputs and the manifest, return the manifest."""
    out = Path(out_dir if out_dir is not None else cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    workers = threads or cfg.threads
    start = time.perf_counter()
    with ThreadPoolExecutor(max_workers=workers) as pool:
        # Executor.map yields in submission order, so outputs do not depend on scheduling
        pool_map = pool.map if workers > 1 else map
        try:
            results = SCENARIO_FUNCS[cfg.scenario](cfg, out, pool_map)
        except SolverError as exc:
            raise ScenarioError(f"scenario {cfg.scenario}: {exc}") from exc
    manifest = {
        "scenario": cfg.scenario,
        "version": __version__,
        "config": cfg.to_dict(),
        "derived": _budget(cfg),
        "results": results,
        "duration_s": time.perf_counter() - start,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
    }
    write_json(out / f"{cfg.scenario}_manifest.json", manifest)
    return manifest
