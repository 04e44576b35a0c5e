"""Structured experiment records with deterministic serialization."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

__all__ = ["ExperimentReport", "format_float", "normalize"]


def format_float(v: float) -> Any:
    """Round to 12 significant digits; non-finite values become strings."""
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return float(f"{v:.12g}")


def normalize(obj: Any) -> Any:
    """Convert numpy scalars/arrays and tuples into plain JSON values."""
    if isinstance(obj, dict):
        return {str(k): normalize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [normalize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [normalize(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return format_float(obj)
    return obj


@dataclass
class ExperimentReport:
    """Inputs, measurements, reference bounds and pass/fail verdicts of one check.

    ``series`` holds plot-ready ``(x, y)`` pairs keyed by series name.
    """

    command: str
    inputs: dict = field(default_factory=dict)
    measured: dict = field(default_factory=dict)
    bounds: dict = field(default_factory=dict)
    verdicts: dict = field(default_factory=dict)
    series: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    runtime: float = 0.0
    version: str = ""

    @property
    def passed(self) -> bool:
        return all(bool(v) for v in self.verdicts.values())

    def to_dict(self, include_runtime: bool = True) -> dict:
        from . import __version__

        out = {
            "command": self.command,
            "inputs": normalize(self.inputs),
            "measured": normalize(self.measured),
            "bounds": normalize(self.bounds),
            "verdicts": normalize(self.verdicts),
            "passed": self.passed,
            "notes": list(self.notes),
            "version": self.version or __version__,
        }
        if self.series:
            out["series"] = normalize(self.series)
        if include_runtime:
            out["runtime_s"] = format_float(self.runtime)
        return out

    def to_json(self, include_runtime: bool = True) -> str:
        return json.dumps(self.to_dict(include_runtime), sort_keys=True, indent=2) + "\n"

    def csv_rows(self):
        for name in sorted(self.series):
            for x, y in self.series[name]:
                yield name, format_float(x), format_float(y)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["series", "x", "y"])
        for row in self.csv_rows():
            writer.writerow(row)
        return buf.getvalue()

    def to_table(self) -> str:
        lines = [f"== {self.command} =="]
        sections = (("input", self.inputs), ("measured", self.measured), ("bound", self.bounds))
        rows = [(kind, k, _short(v)) for kind, d in sections for k, v in sorted(d.items())]
        rows += [("verdict", k, "PASS" if v else "FAIL") for k, v in sorted(self.verdicts.items())]
        if rows:
            w0 = max(len(r[0]) for r in rows)
            w1 = max(len(r[1]) for r in rows)
            lines += [f"{a:<{w0}}  {b:<{w1}}  {c}" for a, b, c in rows]
        lines += [f"note: {n}" for n in self.notes]
        lines.append(f"overall: {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines)


def _short(v: Any) -> str:
    v = normalize(v)
    text = json.dumps(v, sort_keys=True) if not isinstance(v, str) else v
    return text if len(text) <= 100 else text[:97] + "..."
