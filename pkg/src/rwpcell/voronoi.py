"""Poisson-Voronoi cells: sampling, exact cell walks and sojourn analytics.

Mobiles attach to the nearest base station, so cells are the Voronoi
cells of the station set.  Handover counts are exact bisector walks on a
finite station field; the field is generated over the region of interest
plus a guard margin so that cells intersecting the region are the same
as in the infinite tessellation with high probability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.spatial import cKDTree

from .analytics import mean_period_time, mean_transition_time
from .errors import DomainError, InternalError
from .models import MobilityParams
from .numerics import QuadSpec, RandomStream, integrate_1d, integrate_2d, q_inverse

_NUDGE = 1e-9
_MAX_STEPS = 1_000_000


def default_guard(mu: float) -> float:
    """Guard margin ``6 / sqrt(mu)``: a few mean nearest-neighbour distances."""
    return 6.0 / math.sqrt(mu)


@dataclass(eq=False)
class PointField:
    """Finite set of base stations with an observation window.

    ``window`` is ``(xmin, ymin, xmax, ymax)``; queries and walked segments
    must lie inside it.  Stations cover the window expanded by
    ``guard_margin``.
    """

    points: np.ndarray
    window: tuple
    guard_margin: float = 0.0
    mu: Optional[float] = None
    _tree: Optional[cKDTree] = field(default=None, init=False, repr=False)

    def __post_init__(self):
        self.points = np.ascontiguousarray(self.points, dtype=float).reshape(-1, 2)
        if len(self.points) == 0:
            raise DomainError("a point field needs at least one point")
        self.window = tuple(float(v) for v in self.window)
        self._sq = np.einsum("ij,ij->i", self.points, self.points)

    def __len__(self):
        return len(self.points)

    @property
    def generation_region(self) -> tuple:
        g = self.guard_margin
        x0, y0, x1, y1 = self.window
        return (x0 - g, y0 - g, x1 + g, y1 + g)

    def contains(self, p, tol=1e-12) -> bool:
        x0, y0, x1, y1 = self.window
        x, y = float(p[0]), float(p[1])
        return x0 - tol <= x <= x1 + tol and y0 - tol <= y <= y1 + tol

    def build_index(self) -> "PointField":
        """Build the KD-tree used by :meth:`nearest` for large fields."""
        if self._tree is None:
            self._tree = cKDTree(self.points)
        return self

    def nearest(self, p, use_index=None):
        """Index of the nearest station to ``p``; ties go to the smallest index.

        ``p`` is a point or an ``(n, 2)`` array.
        """
        p = np.asarray(p, dtype=float)
        single = p.ndim == 1
        q = np.atleast_2d(p)
        if use_index is None:
            use_index = self._tree is not None
        if use_index:
            self.build_index()
            k = min(2, len(self.points))
            dist, idx = self._tree.query(q, k=k)
            if k == 1:
                out = np.asarray(idx).reshape(-1)
            else:
                out = idx[:, 0].copy()
                tie = dist[:, 1] <= dist[:, 0]
                out[tie] = np.minimum(idx[tie, 0], idx[tie, 1])
        else:
            out = np.array([_nearest_scan(self.points, row) for row in q])
        return int(out[0]) if single else out


def _nearest_scan(points, p):
    d2 = (points[:, 0] - p[0]) ** 2 + (points[:, 1] - p[1]) ** 2
    return int(np.argmin(d2))  # argmin returns the first minimum


def nearest_bs(field: PointField, p) -> int:
    """Nearest base station by linear scan."""
    return field.nearest(p, use_index=False)


def sample_ppp(mu: float, region, stream: RandomStream, guard_margin: float = None) -> PointField:
    """Homogeneous PPP of intensity ``mu`` over ``region`` plus a guard band.

    ``region`` is ``(xmin, ymin, xmax, ymax)`` and becomes the observation
    window.  The (vanishingly rare) empty draw is repeated.
    """
    if not mu > 0:
        raise DomainError("mu must be > 0")
    x0, y0, x1, y1 = (float(v) for v in region)
    if not (x1 >= x0 and y1 >= y0):
        raise DomainError("region must be a nonempty rectangle")
    g = default_guard(mu) if guard_margin is None else float(guard_margin)
    gx0, gy0, gx1, gy1 = x0 - g, y0 - g, x1 + g, y1 + g
    w, h = gx1 - gx0, gy1 - gy0
    if not w * h > 0:
        raise DomainError("generation region has zero area")
    while True:
        n = int(stream.poisson(mu * w * h))
        if n > 0:
            break
    u = stream.uniform((n, 2))
    pts = np.column_stack([gx0 + w * u[:, 0], gy0 + h * u[:, 1]])
    return PointField(pts, (x0, y0, x1, y1), g, mu)


# --------------------------------------------------------------------------
# Cell walks
# --------------------------------------------------------------------------

def count_voronoi_crossings(field: PointField, start, end, check_window=True) -> int:
    """Exact number of Voronoi-boundary crossings along the open segment.

    From the current station ``s`` the segment leaves the cell of ``s``
    through the earliest bisector it meets among stations it moves
    towards.  The next station is found with a nearest-station probe at
    parametric offset ``+1e-9`` past that point.
    """
    a = np.asarray(start, dtype=float)
    b = np.asarray(end, dtype=float)
    if check_window and not (field.contains(a) and field.contains(b)):
        raise DomainError("segment must lie inside the observation window")
    D = b - a
    if not np.any(D):
        return 0
    y = field.points - a
    ysq = np.einsum("ij,ij->i", y, y)
    w = y @ D  # projections of the station offsets on the direction
    pts = field.points

    s = _nearest_scan(pts, a + _NUDGE * D)
    t = _NUDGE
    count = 0
    for _ in range(_MAX_STEPS):
        dw = w - w[s]
        ahead = dw > 0
        ahead[s] = False
        if not np.any(ahead):
            return count
        tau = (ysq[ahead] - ysq[s]) / (2.0 * dw[ahead])
        j = int(np.argmin(tau))
        t_exit = max(float(tau[j]), t)
        if t_exit >= 1.0 - _NUDGE:
            return count
        t = t_exit + _NUDGE
        nxt = _nearest_scan(pts, a + t * D)
        if nxt == s:
            nxt = int(np.flatnonzero(ahead)[j])
        s = nxt
        count += 1
    raise InternalError("Voronoi cell walk exceeded 1e6 steps; degenerate input")


def ray_exit_distance(field: PointField, origin, direction) -> float:
    """Distance from ``origin`` to the boundary of its cell along ``direction``."""
    o = np.asarray(origin, dtype=float)
    u = np.asarray(direction, dtype=float)
    u = u / math.hypot(u[0], u[1])
    y = field.points - o
    ysq = np.einsum("ij,ij->i", y, y)
    s = int(np.argmin(ysq))
    w = y @ u
    dw = w - w[s]
    ahead = dw > 0
    ahead[s] = False
    if not np.any(ahead):
        return math.inf
    return float(np.min((ysq[ahead] - ysq[s]) / (2.0 * dw[ahead])))


# --------------------------------------------------------------------------
# Handover analytics
# --------------------------------------------------------------------------

def line_crossing_intensity(mu: float) -> float:
    """Boundary crossings per unit length of a line, ``4 sqrt(mu) / pi``."""
    return 4.0 * math.sqrt(mu) / math.pi


def expected_handovers_pvt(mu: float, lam: float) -> float:
    """``E[N] = (2/pi) sqrt(mu / lam)``."""
    if not (mu > 0 and lam > 0):
        raise DomainError("mu and lambda must be > 0")
    return 2.0 / math.pi * math.sqrt(mu / lam)


def handover_rate_pvt(params: MobilityParams, mu: float) -> float:
    """``H = E[N] / (E[T] + E[S])``; ``(4/pi) nu sqrt(mu)`` without pauses."""
    return expected_handovers_pvt(mu, params.lam) / mean_period_time(params)


# --------------------------------------------------------------------------
# Linear contact distribution
# --------------------------------------------------------------------------

_CONTACT_SPEC = QuadSpec(rel_tol=1e-7, abs_tol=1e-13, max_subdivisions=20_000)
_CORNER_POWER = 4
_CHUNK = 32


def _a0(t):
    return 1.0 - t / math.pi


def _a1(t):
    return np.sin(2.0 * t) / (2.0 * math.pi)


def _b0(b):
    return ((math.pi - b) * np.cos(b) + np.sin(b)) / math.pi


def _contact_integrand(mu, r):
    """Integrand of the linear contact density on the (alpha, beta) triangle.

    ``r`` may be an array, in which case the integrand is vector-valued.
    """
    r = np.atleast_1d(np.asarray(r, dtype=float))

    def f(alpha, beta):
        # sin(alpha + beta) equals sin of the third triangle angle
        gamma = math.pi - alpha - beta
        sg = np.sin(gamma)
        sa = np.sin(alpha)
        sb = np.sin(beta)
        R = r[None, :]
        # the graded map can round beta onto the edge gamma = 0, where the
        # integrand vanishes; silence the resulting inf/nan and zero it below
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            rho = R * (sb / sg)[:, None]
            sigma2 = R**2 + rho**2 - 2.0 * R * rho * np.cos(alpha)[:, None]
            V2 = math.pi * (rho**2 * (_a0(alpha) + _a1(alpha))[:, None]
                            + sigma2 * (_a0(beta) + _a1(beta))[:, None])
            ang = sa**2 * sb / sg**4 * _b0(beta)
            val = 4.0 * math.pi * mu**2 * R**3 * ang[:, None] * np.exp(-mu * V2)
        return np.where(np.isfinite(val), val, 0.0)

    return f


def linear_contact_density(mu: float, r, spec: QuadSpec = None):
    """Density ``h_l(r)`` of the distance to the cell boundary along a line.

    Double integral over the triangle ``0 < alpha < pi``,
    ``0 < beta < pi - alpha`` of
    ``4 pi mu^2 r^3 sin^2(a) sin(b) / sin^4(a+b) b0(b) exp(-mu V2)``.
    ``h_l(0) = 0`` exactly (the ``r^3`` factor), while the right limit is
    the line crossing intensity ``4 sqrt(mu) / pi``; the integrand
    concentrates along ``alpha + beta -> pi`` as ``r -> 0`` and a corner
    grading keeps the cost bounded there.
    """
    if not mu > 0:
        raise DomainError("mu must be > 0")
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < 0):
        raise DomainError("r must be >= 0")
    spec = spec or _CONTACT_SPEC
    flat = r_arr.ravel()
    out = np.zeros_like(flat)
    pos = np.flatnonzero(flat > 0)
    for k in range(0, len(pos), _CHUNK):
        idx = pos[k:k + _CHUNK]
        out[idx] = integrate_2d(_contact_integrand(mu, flat[idx]), spec=spec,
                                corner_power=_CORNER_POWER)
    if r_arr.ndim == 0:
        return float(out[0])
    return out.reshape(r_arr.shape)


def linear_contact_cdf(mu: float, r, spec: QuadSpec = None, inner_spec: QuadSpec = None):
    """``H_l(r) = int_0^r h_l``, accumulated interval by interval over sorted ``r``."""
    r_arr = np.asarray(r, dtype=float)
    flat = r_arr.ravel()
    order = np.argsort(flat)
    spec = spec or QuadSpec(rel_tol=1e-6, abs_tol=1e-9)
    out = np.zeros_like(flat)
    acc = 0.0
    prev = 0.0
    for i in order:
        ri = flat[i]
        if ri < 0:
            raise DomainError("r must be >= 0")
        if ri > prev:
            acc += integrate_1d(lambda x: linear_contact_density(mu, x, inner_spec),
                                prev, ri, spec=spec)
            prev = ri
        out[i] = acc
    if r_arr.ndim == 0:
        return float(out[0])
    return out.reshape(r_arr.shape)


# --------------------------------------------------------------------------
# Sojourn time distribution
# --------------------------------------------------------------------------

@dataclass
class SojournDistribution:
    """Sojourn-time pdf and cdf on a grid; support is ``[0, mean_T]``."""

    mean_T: float
    lam: float
    mu: float
    t: np.ndarray
    pdf: np.ndarray
    cdf: np.ndarray

    def cdf_at(self, t):
        """Monotone (PCHIP) interpolation of the cdf, pinned to 1 at ``mean_T``."""
        tt = np.append(self.t, self.mean_T)
        cc = np.maximum.accumulate(np.append(self.cdf, 1.0))
        keep = np.append(np.diff(tt) > 0, True)
        interp = PchipInterpolator(tt[keep], cc[keep], extrapolate=False)
        t = np.asarray(t, dtype=float)
        out = np.where(t >= self.mean_T, 1.0, np.where(t <= 0, 0.0, interp(np.clip(t, 0, self.mean_T))))
        return float(out) if out.ndim == 0 else out


def sojourn_radius(lam: float, mean_T: float, t):
    """Distance ``x`` whose radial occupancy equals the sojourn fraction ``t / E[T]``."""
    p = 0.5 * (1.0 - np.asarray(t, dtype=float) / mean_T)
    q = q_inverse(p)
    return q / math.sqrt(2.0 * math.pi * lam)


def sojourn_from_radius(lam: float, mean_T: float, r):
    """``E[T] (1 - 2 Q(sqrt(2 pi lam) r))``, the sojourn for a cell radius ``r``."""
    from scipy.special import erf
    return mean_T * erf(math.sqrt(math.pi * lam) * np.asarray(r, dtype=float))


def sojourn_distribution_pvt(params: MobilityParams, mu: float, t_grid,
                             spec: QuadSpec = None) -> SojournDistribution:
    """Sojourn time in the cell of a typical point for one movement period.

    The mobile starts at a typical location (not at a station).  With
    ``x(t) = Q^{-1}((1 - t/E[T]) / 2) / sqrt(2 pi lam)`` the cdf is
    ``H_l(x(t))`` and the pdf ``exp(Q^{-1}(.)^2 / 2) h_l(x) / (2 sqrt(lam) E[T])``.
    """
    mean_T = mean_transition_time(params)
    t = np.asarray(t_grid, dtype=float)
    if np.any(t < 0) or np.any(t >= mean_T):
        raise DomainError("sojourn grid must lie in [0, E[T])")
    lam = params.lam
    x = np.where(t > 0, sojourn_radius(lam, mean_T, np.where(t > 0, t, 0.5 * mean_T)), 0.0)
    qv = math.sqrt(2.0 * math.pi * lam) * x
    h = linear_contact_density(mu, x)
    pdf = np.exp(0.5 * qv**2) * h / (2.0 * math.sqrt(lam) * mean_T)
    cdf = linear_contact_cdf(mu, x, spec=spec)
    return SojournDistribution(mean_T, lam, mu, t, pdf, np.asarray(cdf))


def sample_sojourn_pvt(params: MobilityParams, mu: float, n: int, stream: RandomStream,
                       half_width: float = None):
    """Monte-Carlo sojourn fractions from fresh tessellations.

    Each draw places a PPP around the origin, picks a uniform direction and
    measures the distance ``r`` to the boundary of the origin's cell along
    it; the sojourn is ``E[T] (1 - 2 Q(sqrt(2 pi lam) r))``.  A draw whose
    exit point comes within the guard margin of the sampled square is
    repeated with a larger square.
    """
    mean_T = mean_transition_time(params)
    g = default_guard(mu)
    base = half_width if half_width is not None else 2.0 * g
    radii = np.empty(n)
    for i in range(n):
        hw = base
        while True:
            fld = sample_ppp(mu, (-hw + g, -hw + g, hw - g, hw - g), stream, guard_margin=g)
            phi = 2.0 * math.pi * stream.uniform()
            r = ray_exit_distance(fld, (0.0, 0.0), (math.cos(phi), math.sin(phi)))
            if r <= hw - g:
                break
            hw *= 2.0
        radii[i] = r
    return sojourn_from_radius(params.lam, mean_T, radii), radii


__all__ = [
    "PointField", "sample_ppp", "nearest_bs", "count_voronoi_crossings", "ray_exit_distance",
    "expected_handovers_pvt", "handover_rate_pvt", "line_crossing_intensity",
    "linear_contact_density", "linear_contact_cdf", "SojournDistribution",
    "sojourn_distribution_pvt", "sample_sojourn_pvt", "sojourn_radius", "sojourn_from_radius",
    "default_guard",
]
