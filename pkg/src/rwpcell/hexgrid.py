"""Hexagonal cells: exact geometry plus handover and sojourn analytics.

Orientation is fixed: the cell at the origin has vertices at ``(+-d, 0)``
and ``(+-d/2, +-sqrt(3) d/2)``.  Cells are indexed with axial coordinates
``(q, r)``; the centre of ``(q, r)`` is ``(1.5 d q, sqrt(3) d (r + q/2))``.
Single-segment crossing counts depend on this orientation; expectations
over an isotropic direction law do not.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import erf

from .analytics import mean_period_time, mean_transition_time
from .errors import DomainError, InternalError
from .models import MobilityParams
from .numerics import QuadSpec, integrate_1d, q_function

SQRT3 = math.sqrt(3.0)
_NUDGE = 1e-9

# axial offsets of the 6 neighbours, ordered by outward edge normal at 30 + 60k degrees
_NEIGHBOURS = np.array([(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)])
# written out exactly: cos(90 deg) from libm is 6e-17, which would make a
# segment running along a horizontal edge appear to cross it
_NORMALS = np.array([(SQRT3 / 2, 0.5), (0.0, 1.0), (-SQRT3 / 2, 0.5),
                     (-SQRT3 / 2, -0.5), (0.0, -1.0), (SQRT3 / 2, -0.5)])
_CANDIDATES = np.vstack([[0, 0], _NEIGHBOURS])


@dataclass(frozen=True)
class HexGrid:
    d: float

    def __post_init__(self):
        if not (self.d > 0 and math.isfinite(self.d)):
            raise DomainError("hexagon side must be a positive finite length")

    @property
    def apothem(self) -> float:
        return SQRT3 * self.d / 2.0

    @property
    def cell_area(self) -> float:
        return 3.0 * SQRT3 * self.d**2 / 2.0

    @property
    def ring_radius(self) -> float:
        """Radius of the disc with the same area as one cell."""
        return math.sqrt(self.cell_area / math.pi)

    @classmethod
    def from_cell_area(cls, area: float) -> "HexGrid":
        return cls(math.sqrt(2.0 * area / (3.0 * SQRT3)))

    @classmethod
    def from_density(cls, mu: float) -> "HexGrid":
        """Grid whose cell area is ``1 / mu``."""
        return cls.from_cell_area(1.0 / mu)

    def cell_center(self, q, r):
        q = np.asarray(q, dtype=float)
        r = np.asarray(r, dtype=float)
        return np.stack([1.5 * self.d * q, SQRT3 * self.d * (r + 0.5 * q)], axis=-1)

    def point_to_cell(self, p):
        """Axial index of the cell containing ``p`` (shape ``(2,)`` or ``(n, 2)``).

        A point on an edge or vertex belongs to the lexicographically
        smallest ``(q, r)`` among the cells whose closure contains it.
        """
        p = np.asarray(p, dtype=float)
        single = p.ndim == 1
        pts = np.atleast_2d(p)
        cells = _locate(self.d, pts)
        if single:
            return (int(cells[0, 0]), int(cells[0, 1]))
        return cells


def _locate(d, pts):
    x = pts[:, 0]
    y = pts[:, 1]
    fq = (2.0 / 3.0) * x / d
    fr = (-x / 3.0 + y / SQRT3) / d
    # cube rounding gives the nearest centre up to boundary ties
    fs = -fq - fr
    rq, rr, rs = np.round(fq), np.round(fr), np.round(fs)
    dq, dr, ds = np.abs(rq - fq), np.abs(rr - fr), np.abs(rs - fs)
    fix_q = (dq > dr) & (dq > ds)
    fix_r = ~fix_q & (dr > ds)
    rq = np.where(fix_q, -rr - rs, rq)
    rr = np.where(fix_r, -rq - rs, rr)
    cq = rq[:, None] + _CANDIDATES[None, :, 0]
    cr = rr[:, None] + _CANDIDATES[None, :, 1]
    cx = 1.5 * d * cq
    cy = SQRT3 * d * (cr + 0.5 * cq)
    dist = (cx - x[:, None]) ** 2 + (cy - y[:, None]) ** 2
    tol = 1e-12 * (d * d + x * x + y * y)
    near = dist <= dist.min(axis=1)[:, None] + tol[:, None]
    qs = np.where(near, cq, np.inf)
    best_q = qs.min(axis=1)
    best_r = np.where(near & (qs == best_q[:, None]), cr, np.inf).min(axis=1)
    return np.column_stack([best_q, best_r]).astype(np.int64)


def count_crossings(grid: HexGrid, start, end) -> int:
    """Number of cell-boundary crossings along the open segment ``start -> end``."""
    out = count_crossings_batch(grid, np.asarray(start, float)[None, :],
                                np.asarray(end, float)[None, :])
    return int(out[0])


def count_crossings_batch(grid: HexGrid, starts, ends, max_steps=1_000_000):
    """Vectorised exact cell walk for many segments at once.

    From the current cell the walk finds the earliest exit through one of
    the six edges, then locates the next cell with a probe at parametric
    offset ``+1e-9`` beyond the exit.  A vertex hit therefore counts once,
    into the cell that contains the continuation of the segment.  The
    start and end cells are located with the same inward probe, so
    crossings exactly at the endpoints are not counted.
    """
    a = np.asarray(starts, dtype=float)
    b = np.asarray(ends, dtype=float)
    D = b - a
    n = len(a)
    d = grid.d
    h = grid.apothem
    counts = np.zeros(n, dtype=np.int64)
    moving = np.hypot(D[:, 0], D[:, 1]) > 0
    if not np.any(moving):
        return counts

    cell = _locate(d, a + _NUDGE * D)
    t = np.full(n, _NUDGE)
    proj_d = D @ _NORMALS.T  # (n, 6)
    active = np.flatnonzero(moving)
    for _ in range(max_steps):
        if active.size == 0:
            return counts
        c = grid.cell_center(cell[active, 0], cell[active, 1])
        rel = (a[active] - c) @ _NORMALS.T
        pd = proj_d[active]
        with np.errstate(divide="ignore", invalid="ignore"):
            tau = np.where(pd > 0, (h - rel) / pd, np.inf)
        k = np.argmin(tau, axis=1)
        t_exit = tau[np.arange(active.size), k]
        t_exit = np.maximum(t_exit, t[active])
        done = t_exit >= 1.0 - _NUDGE
        going = ~done
        idx = active[going]
        if idx.size:
            t_new = t_exit[going] + _NUDGE
            probe = a[idx] + t_new[:, None] * D[idx]
            nxt = _locate(d, probe)
            same = np.all(nxt == cell[idx], axis=1)
            if np.any(same):
                # probe rounded back into the cell: step across the exit edge
                nxt[same] = cell[idx][same] + _NEIGHBOURS[k[going][same]]
            cell[idx] = nxt
            t[idx] = t_new
            counts[idx] += 1
        active = idx
    raise InternalError("hexagonal cell walk exceeded the step limit")


# --------------------------------------------------------------------------
# Handover analytics
# --------------------------------------------------------------------------

_C_HEX = 3.0 * SQRT3 / 2.0
_BUFFON = 4.0 * SQRT3 / (3.0 * math.pi)


class HexApprox(NamedTuple):
    value: float
    lower: float
    upper: float


def _ring_sum(x):
    # sum_{n>=0} exp(-c (2n+1)^2 x) until the newest term is below 1e-16 of the total
    total = 0.0
    n0 = 0
    chunk = 64
    while True:
        n = np.arange(n0, n0 + chunk)
        terms = np.exp(-_C_HEX * (2 * n + 1) ** 2 * x)
        for term in terms:
            total += term
            if term < 1e-16 * total or term == 0.0:
                return total
        n0 += chunk
        chunk *= 2


def expected_handovers_approx(lam: float, d: float) -> HexApprox:
    """Ring approximation of the expected handovers per period, with bounds.

    The n-th neighbour layer is replaced by the annulus
    ``[(2n-1)R, (2n+1)R]`` with ``R`` the equal-area radius, which gives
    ``sum_{n>=0} exp(-(3 sqrt(3)/2) (2n+1)^2 lam d^2)``.  Lower and upper
    bounds compare the sum with the integral of its summand.
    """
    if not (lam > 0 and d > 0):
        raise DomainError("lambda and d must be > 0")
    x = lam * d * d
    value = _ring_sum(x)
    pref = math.sqrt(math.pi / (6.0 * SQRT3 * x))
    q = q_function(math.sqrt(3.0 * SQRT3 * x))
    return HexApprox(value, pref * q, pref * (1.0 - q))


def approx_bound_gap(x):
    """Upper minus lower ring-approximation bound as a function of ``lam d^2``.

    Equal to ``sqrt(pi/2) (1 - 2 Q(t)) / t`` with ``t = sqrt(3 sqrt(3) x)``;
    it decreases from 1 (``x -> 0``) to 0 (``x -> inf``).
    """
    x = np.asarray(x, dtype=float)
    t = np.sqrt(3.0 * SQRT3 * x)
    # 1 - 2Q(t) = erf(t/sqrt2) keeps full precision for small t
    val = math.sqrt(math.pi / 2.0) * erf(t / math.sqrt(2.0)) / t
    return float(val) if val.ndim == 0 else val


def expected_handovers_exact(params: MobilityParams, d: float) -> float:
    """``E[N] = E[T] * (4 sqrt(3) / (3 pi)) * E[V] / d``.

    This is the boundary-length argument for a uniformly placed mobile.
    For a constant velocity it equals ``E[L] * 4 sqrt(3) / (3 pi d)``; a
    random velocity adds the factor ``E[V] E[1/V] >= 1``.
    """
    if not d > 0:
        raise DomainError("d must be > 0")
    return mean_transition_time(params) * _BUFFON * params.velocity.mean / d


def boundary_crossing_intensity(d: float) -> float:
    """Expected boundary crossings per unit path length, ``4 sqrt(3) / (3 pi d)``."""
    return _BUFFON / d


def handover_rate_exact(params: MobilityParams, d: float) -> float:
    return expected_handovers_exact(params, d) / mean_period_time(params)


def handover_rate_approx(params: MobilityParams, d: float) -> HexApprox:
    tp = mean_period_time(params)
    v = expected_handovers_approx(params.lam, d)
    return HexApprox(v.value / tp, v.lower / tp, v.upper / tp)


def handover_rate_asymptotic(params: MobilityParams, d: float) -> float:
    """Small ``lam d^2`` limit of the approximate handover rate.

    ``sqrt(pi / (6 sqrt(3) lam)) / (2 d (E[T] + E[S]))``; meaningful only
    when ``lam d^2`` is small.
    """
    if not d > 0:
        raise DomainError("d must be > 0")
    return math.sqrt(math.pi / (6.0 * SQRT3 * params.lam)) / (2.0 * d * mean_period_time(params))


# --------------------------------------------------------------------------
# Sojourn time
# --------------------------------------------------------------------------

class HexSojourn(NamedTuple):
    value: float
    lower: float
    upper: float


def hex_radius(d, theta):
    """Distance from the centre to the boundary in direction ``theta``."""
    phi = np.mod(theta, math.pi / 3.0) - math.pi / 6.0
    return (SQRT3 * d / 2.0) / np.cos(phi)


def sojourn_time_hex(lam: float, d: float, mean_T: float, spec: QuadSpec = None) -> HexSojourn:
    """Expected time spent in the serving cell by a mobile starting at its BS.

    Polar form of the occupancy integral over the hexagon:
    ``S_T = E[T]/(2 pi) * int_0^{2 pi} (1 - 2 Q(sqrt(2 pi lam) r_hex(theta))) dtheta``,
    integrated over one of the twelve symmetric sectors.  Bounds use the
    inscribed and circumscribed discs.
    """
    if not (lam > 0 and d > 0):
        raise DomainError("lambda and d must be > 0")
    spec = spec or QuadSpec(rel_tol=1e-8)
    c = math.sqrt(2.0 * math.pi * lam)

    def inner(theta):
        # 1 - 2Q(z) = erf(z / sqrt 2), exact for small z
        return erf(c * hex_radius(d, theta) / math.sqrt(2.0))

    sector = integrate_1d(inner, 0.0, math.pi / 6.0, spec=spec)
    value = mean_T * 12.0 * sector / (2.0 * math.pi)
    lower = mean_T * float(erf(math.sqrt(0.75 * math.pi * lam) * d))
    upper = mean_T * float(erf(math.sqrt(math.pi * lam) * d))
    # the disc bracket is exact; once erf saturates the quadrature sum can
    # land an ulp outside it
    value = min(max(value, lower), upper)
    return HexSojourn(value, lower, upper)


def sojourn_limit_constant() -> float:
    """``lim_{lam -> 0} S_T nu / d = 3 sqrt(3) ln 3 / (2 pi)``."""
    return 3.0 * SQRT3 * math.log(3.0) / (2.0 * math.pi)


__all__ = [
    "HexGrid", "count_crossings", "count_crossings_batch", "expected_handovers_approx",
    "approx_bound_gap", "expected_handovers_exact", "handover_rate_exact",
    "handover_rate_approx", "handover_rate_asymptotic", "sojourn_time_hex",
    "sojourn_limit_constant", "hex_radius", "boundary_crossing_intensity", "HexApprox",
    "HexSojourn",
]
