"""Recompute the calibrated constants and write them into the packaged defaults.

    python3 scripts/calibrate.py [--dry-run]

Targets: single-pass transmission 2e-4 at the 87Rb F=2 band centre at 105 C;
threshold 30 mW and total output 2 mW at 100 mW input for the lowest-threshold
87Rb triple-resonance point.
"""

import argparse
import json
import math
from dataclasses import replace
from pathlib import Path

from rvo.calibration import calibrate_gain, reference_point
from rvo.config import parse_config
from rvo.medium import TWO_PI, calibrate_chi_prefactor
from rvo.opo import GainConfig

DEFAULTS = Path(__file__).resolve().parents[1] / "src" / "rvo" / "data" / "default_config.json"

CHI_TARGET = 2e-4
THRESHOLD_TARGET = 0.030
OUTPUT_TARGET = 0.002


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dry-run", action="store_true", help="print the values without writing")
    args = ap.parse_args()

    tree = json.loads(DEFAULTS.read_text(encoding="utf-8"))
    cfg = parse_config({})
    kelvin = cfg.cell.temperature_c + 273.15
    chi = calibrate_chi_prefactor(kelvin, CHI_TARGET, length=cfg.cell.length_m, natural_width=TWO_PI * cfg.cell.natural_width_hz)
    tree["cell"]["chi_prefactor"] = float(f"{chi:.12g}")
    cfg = parse_config({"cell": {"chi_prefactor": tree["cell"]["chi_prefactor"]}})

    cell, geom = cfg.vapor_cell(), cfg.geometry()
    panel = next(p for p in cfg.scan.fig3 if p.isotope == 87 and p.search == "triple")
    trial = replace(cfg.gain_config(), coupling=4e-16, saturation_power=1e-3)
    window = (TWO_PI * panel.window_hz[0], TWO_PI * panel.window_hz[1])
    wp = reference_point(window, geom, cell, trial, TWO_PI * panel.step_hz)
    detuning_hz = round(wp / TWO_PI)
    cal = calibrate_gain(TWO_PI * detuning_hz, geom, cell, trial, THRESHOLD_TARGET, 0.100, OUTPUT_TARGET)

    tree["pump"].update(isotope=87, detuning_hz=float(detuning_hz))
    tree["gain"]["coupling"] = float(f"{cal.coupling:.12g}")
    tree["gain"]["saturation_power_w"] = float(f"{cal.saturation_power:.12g}")
    print(f"chi_prefactor       {tree['cell']['chi_prefactor']:.6e} m^4/s")
    print(f"reference pump      {detuning_hz / 1e6:.3f} MHz")
    print(f"gain coupling       {tree['gain']['coupling']:.6e}")
    print(f"saturation power    {tree['gain']['saturation_power_w'] * 1e3:.4f} mW")
    print(f"threshold           {cal.threshold_power * 1e3:.3f} mW")
    print(f"output at 100 mW    {cal.output_at_reference * 1e3:.3f} mW")
    assert math.isfinite(cal.threshold_power)
    if not args.dry_run:
        DEFAULTS.write_text(json.dumps(tree, indent=2) + "\n", encoding="utf-8")
        print(f"wrote {DEFAULTS}")


if __name__ == "__main__":
    main()
