"""Real-deployment ingestion: read BS coordinates and normalise to the unit square."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from ..errors import InputFileError
from ..hexgrid import HexGrid
from ..voronoi import PointField


@dataclass
class Deployment:
    field: PointField
    mu: float
    d: float
    n: int
    scale: tuple  # original bounding box (xmin, ymin, xmax, ymax)

    @property
    def guard_margin(self) -> float:
        return self.field.guard_margin

    @property
    def query_window(self) -> tuple:
        return self.field.window


def default_deployment_guard(n: int) -> float:
    """``2 / sqrt(n)``, about two mean BS spacings, capped at a quarter side."""
    return min(2.0 / math.sqrt(n), 0.25)


def read_points(path) -> np.ndarray:
    """Parse ``x,y`` rows; a non-numeric first row is taken as a header."""
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise InputFileError(f"cannot open deployment file: {exc.strerror}", path) from None
    rows = []
    with fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) < 2:
                raise InputFileError("expected two columns x,y", path, lineno)
            try:
                x, y = float(row[0]), float(row[1])
            except ValueError:
                if lineno == 1:
                    continue
                raise InputFileError(f"unparseable row {','.join(row)!r}", path, lineno) from None
            if not (math.isfinite(x) and math.isfinite(y)):
                raise InputFileError("non-finite coordinate", path, lineno)
            rows.append((x, y))
    if len(rows) < 2:
        raise InputFileError("a deployment needs at least 2 points", path)
    return np.array(rows)


def normalize_points(pts: np.ndarray, path=None):
    """Anisotropic rescaling of the bounding box onto ``[0, 1]^2``."""
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    span = hi - lo
    if not np.all(span > 0):
        raise InputFileError("degenerate bounding box (all points on an axis-parallel line)", path)
    return (pts - lo) / span, (float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1]))


def ingest_deployment(path, guard_margin: float = None) -> Deployment:
    """Read a deployment, normalise it and derive matched model parameters.

    After rescaling, the BS density is ``mu = N`` per unit area and the
    hexagon side ``d`` solves ``3 sqrt(3) d^2 / 2 = 1 / N``.  Queries are
    restricted to the unit square shrunk by the guard margin.
    """
    pts = read_points(path)
    unit, box = normalize_points(pts, path)
    n = len(unit)
    g = default_deployment_guard(n) if guard_margin is None else float(guard_margin)
    if not 0 <= g < 0.5:
        raise InputFileError("guard margin must lie in [0, 0.5)", path)
    field = PointField(unit, (g, g, 1.0 - g, 1.0 - g), guard_margin=g, mu=float(n))
    d = HexGrid.from_density(float(n)).d
    return Deployment(field, float(n), d, n, box)
