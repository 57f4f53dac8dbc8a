"""CSV and JSON writers for traces, tables and run manifests."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .spectra import SpectrumTrace

TRACE_HEADER = "frequency_hz,value"


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    x = float(x)
    if not math.isfinite(x):
        return "inf" if x > 0 else ("-inf" if x < 0 else "nan")
    return f"{x:.12g}"


def write_trace(trace: SpectrumTrace, path) -> Path:
    """CSV with header ``frequency_hz,value`` and 12 significant digits."""
    if not trace.axis.endswith("_hz"):
        raise ValueError(f"write_trace needs a frequency axis, got {trace.axis!r}")
    path = Path(path)
    lines = [TRACE_HEADER] + [f"{_fmt(f)},{_fmt(v)}" for f, v in zip(trace.grid, trace.values)]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    return path


def read_trace(path, quantity: str = "value") -> SpectrumTrace:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or ",".join(rows[0]) != TRACE_HEADER:
        raise ValueError(f"{path}: not a trace file")
    data = np.array(rows[1:], dtype=float)
    return SpectrumTrace(data[:, 0], data[:, 1], quantity=quantity)


def write_table(path, header, rows) -> Path:
    """Plain CSV for non-spectral outputs (power sweeps, point lists)."""
    path = Path(path)
    lines = [",".join(header)] + [",".join(_fmt(x) for x in row) for row in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    return path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def write_json(path, payload) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path
