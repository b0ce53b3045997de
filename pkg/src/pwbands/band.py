"""Interval and band containers plus their CSV / JSON serialisation."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, NamedTuple

import numpy as np

from .errors import ValidationError

EMPTY_LOWER, EMPTY_UPPER = 1.0, -1.0


class IntervalPair(NamedTuple):
    """Endpoints (lower, upper); the empty interval is exactly (1, -1)."""

    lower: float
    upper: float

    @property
    def empty(self) -> bool:
        return self.lower == EMPTY_LOWER and self.upper == EMPTY_UPPER

    def contains(self, value: float, tol: float = 0.0) -> bool:
        return (not self.empty) and self.lower - tol <= value <= self.upper + tol


EMPTY = IntervalPair(EMPTY_LOWER, EMPTY_UPPER)


def check_grid(grid) -> np.ndarray:
    g = np.array(grid, dtype=float).ravel()
    if g.size == 0:
        raise ValidationError("grid is empty")
    if np.any(g < 0.0) or np.any(g > 1.0):
        raise ValidationError("grid points must lie in [0, 1]")
    if np.any(np.diff(g) <= 0):
        raise ValidationError("grid must be strictly increasing")
    return g


def uniform_grid(size: int) -> np.ndarray:
    if size < 2:
        raise ValidationError("grid needs at least two points")
    return np.linspace(0.0, 1.0, int(size))


@dataclass
class Band:
    grid: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    risk: float
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if not (self.grid.shape == self.lower.shape == self.upper.shape):
            raise ValidationError("grid, lower and upper must have equal length")

    def __len__(self):
        return self.grid.size

    @property
    def empty(self) -> np.ndarray:
        return (self.lower == EMPTY_LOWER) & (self.upper == EMPTY_UPPER)

    @property
    def intervals(self) -> list[IntervalPair]:
        return [IntervalPair(float(a), float(b)) for a, b in zip(self.lower, self.upper)]

    def covers(self, values, tol: float = 0.0) -> np.ndarray:
        """Pointwise membership of ``values`` (one per grid point); empty never covers."""
        values = np.asarray(values, dtype=float)
        inside = (self.lower - tol <= values) & (values <= self.upper + tol)
        return inside & ~self.empty

    def widths(self) -> np.ndarray:
        w = self.upper - self.lower
        return np.where(self.empty, 0.0, w)

    def contained_in(self, other: "Band", tol: float = 0.0) -> np.ndarray:
        """Pointwise test that each interval of self lies inside other's."""
        if not np.array_equal(self.grid, other.grid):
            raise ValidationError("bands live on different grids")
        inside = (other.lower - tol <= self.lower) & (self.upper <= other.upper + tol)
        return self.empty | (inside & ~other.empty)


def _fmt(v: float) -> str:
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return format(v, ".17g")


def band_to_csv(band: Band) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "lower", "upper", "empty"])
    for x, lo, hi, e in zip(band.grid, band.lower, band.upper, band.empty):
        w.writerow([_fmt(x), _fmt(lo), _fmt(hi), int(e)])
    return buf.getvalue()


def band_to_json(band: Band) -> str:
    doc = {
        "risk": band.risk,
        "meta": band.meta,
        "band": {
            "x": band.grid.tolist(),
            "lower": band.lower.tolist(),
            "upper": band.upper.tolist(),
            "empty": band.empty.astype(int).tolist(),
        },
    }
    return json.dumps(doc, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"not JSON serialisable: {type(obj).__name__}")


def write_band(band: Band, csv_path) -> tuple[Path, Path]:
    """Write ``csv_path`` and a sibling ``.json`` file with the same stem."""
    csv_path = Path(csv_path)
    json_path = csv_path.with_suffix(".json")
    csv_path.write_text(band_to_csv(band), encoding="utf-8")
    json_path.write_text(band_to_json(band), encoding="utf-8")
    return csv_path, json_path


def read_band_csv(path) -> Band:
    rows = list(csv.DictReader(Path(path).read_text(encoding="utf-8").splitlines()))
    grid = np.array([float(r["x"]) for r in rows])
    lower = np.array([float(r["lower"]) for r in rows])
    upper = np.array([float(r["upper"]) for r in rows])
    return Band(grid, lower, upper, risk=float("nan"))
