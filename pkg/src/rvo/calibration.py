"""Calibration of the free model constants.

Three constants have no printed value and are fixed here against printed
facts, then frozen into ``data/default_config.json`` by ``scripts/calibrate.py``:

* the susceptibility prefactor, from a chosen single-pass transmission at the
  centre of the 87Rb F=2 band at the calibration temperature;
* the gain coupling, from a target threshold at the reference 87Rb point;
* the gain saturation power, from a target total output at 100 mW pump.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from scipy.optimize import brentq

from .cavity import CavityGeometry
from .medium import TWO_PI, VaporCell
from .opo import GainConfig, operating_point, steady_state_output, threshold_power, triple_resonance_search


@dataclass(frozen=True)
class GainCalibration:
    pump_detuning: float  # rad/s, reference point
    coupling: float
    saturation_power: float
    threshold_power: float
    output_at_reference: float


def reference_point(window, geometry: CavityGeometry, cell: VaporCell, gain: GainConfig, step: float = TWO_PI * 1e6) -> float:
    """Lowest-threshold 87Rb triple-resonance pump detuning in ``window``.

    Thresholds scale as 1/coupling, so the choice does not depend on it.
    """
    points = triple_resonance_search(window, 87, geometry, cell, 0.0, gain, step)
    points = [p for p in points if math.isfinite(p.threshold_power)]
    if not points:
        raise ValueError("no 87Rb triple resonance with a finite threshold in the window")
    return min(points, key=lambda p: (p.threshold_power, p.pump_detuning)).pump_detuning


def calibrate_gain(
    pump_detuning: float,
    geometry: CavityGeometry,
    cell: VaporCell,
    base: GainConfig,
    target_threshold: float = 0.030,
    reference_power: float = 0.100,
    target_output: float = 0.002,
) -> GainCalibration:
    trial = threshold_power(pump_detuning, 87, geometry, cell, base)
    if not math.isfinite(trial):
        raise ValueError("trial coupling gives no threshold below the cap")
    coupling = base.coupling * trial / target_threshold
    tuned = replace(base, coupling=coupling)

    def excess(log_psat):
        g = replace(tuned, saturation_power=math.exp(log_psat))
        return sum(steady_state_output(pump_detuning, 87, geometry, cell, reference_power, g)) - target_output

    log_psat = brentq(excess, math.log(1e-6), math.log(10.0), xtol=1e-12)
    final = replace(tuned, saturation_power=math.exp(log_psat))
    op = operating_point(pump_detuning, 87, geometry, cell, reference_power, final)
    return GainCalibration(pump_detuning, coupling, final.saturation_power, op.threshold_power, op.total_output)
