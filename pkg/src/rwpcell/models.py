"""Mobility models and trace generation.

Three movement models share one trace representation:

* the infinite-plane random waypoint model, whose transition lengths are
  Rayleigh distributed with ``P(L <= l) = 1 - exp(-lam * pi * l**2)``;
* the classical random waypoint model, with waypoints uniform on a finite
  window;
* a truncated Levy walk, with power-law transition lengths and pauses.

Finite windows fold the path back by specular reflection.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence, Union

import numpy as np

from .errors import DivergenceError, DomainError
from .numerics import RandomStream

# --------------------------------------------------------------------------
# Velocity and pause laws
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ConstantVelocity:
    nu: float

    def __post_init__(self):
        if not self.nu > 0:
            raise DomainError("constant velocity must be > 0")

    def sample(self, stream: RandomStream, n: int) -> np.ndarray:
        return np.full(n, float(self.nu))

    @property
    def mean(self) -> float:
        return float(self.nu)

    @property
    def mean_inverse(self) -> float:
        return 1.0 / self.nu

    def __str__(self):
        return f"const:{self.nu:g}"


@dataclass(frozen=True)
class UniformVelocity:
    """Velocity uniform on ``[v_min, v_max]``.

    ``v_min`` must be positive: with ``v_min = 0`` the mean transition time
    ``E[L] * E[1/V]`` is infinite.
    """

    v_min: float
    v_max: float

    def __post_init__(self):
        if self.v_min <= 0:
            raise DivergenceError(
                "uniform velocity needs v_min > 0; E[1/V] (and so E[T]) diverges otherwise")
        if self.v_max < self.v_min:
            raise DomainError("uniform velocity needs v_min <= v_max")

    def sample(self, stream: RandomStream, n: int) -> np.ndarray:
        if self.v_max == self.v_min:
            return np.full(n, float(self.v_min))
        return stream.uniform(n, self.v_min, self.v_max)

    @property
    def mean(self) -> float:
        return 0.5 * (self.v_min + self.v_max)

    @property
    def mean_inverse(self) -> float:
        if self.v_max == self.v_min:
            return 1.0 / self.v_min
        return (math.log(self.v_max) - math.log(self.v_min)) / (self.v_max - self.v_min)

    def __str__(self):
        return f"uniform:{self.v_min:g}:{self.v_max:g}"


VelocityLaw = Union[ConstantVelocity, UniformVelocity]


@dataclass(frozen=True)
class NoPause:
    def sample(self, stream: RandomStream, n: int) -> np.ndarray:
        return np.zeros(n)

    @property
    def mean(self) -> float:
        return 0.0

    def __str__(self):
        return "none"


@dataclass(frozen=True)
class ConstantPause:
    s: float

    def __post_init__(self):
        if not self.s >= 0:
            raise DomainError("pause time must be >= 0")

    def sample(self, stream: RandomStream, n: int) -> np.ndarray:
        return np.full(n, float(self.s))

    @property
    def mean(self) -> float:
        return float(self.s)

    def __str__(self):
        return f"const:{self.s:g}"


def _check_power_law(exponent, lo, hi, what):
    if not 0 < exponent < 2:
        raise DomainError(f"{what} exponent must lie in (0, 2)")
    if not lo > 0:
        raise DomainError(f"{what} lower truncation must be > 0")
    if not hi >= lo:
        raise DomainError(f"{what} upper truncation must be >= the lower one")


def truncated_pareto_sample(u, exponent, lo, hi):
    """Inverse-cdf map from uniforms to the density ``~ x**(-1-exponent)`` on ``[lo, hi]``."""
    if hi == lo:
        return np.full(np.shape(u), float(lo))
    a = lo ** (-exponent)
    b = hi ** (-exponent)
    return (a - np.asarray(u) * (a - b)) ** (-1.0 / exponent)


def truncated_pareto_mean(exponent, lo, hi):
    """First moment of the truncated power law on ``[lo, hi]``."""
    if hi == lo:
        return float(lo)
    c = exponent / (lo ** (-exponent) - hi ** (-exponent))
    if exponent == 1.0:
        return c * math.log(hi / lo)
    return c * (hi ** (1.0 - exponent) - lo ** (1.0 - exponent)) / (1.0 - exponent)


@dataclass(frozen=True)
class PowerLawPause:
    """Pause with density proportional to ``s**(-1-beta)`` on ``[s_min, s_max]``."""

    beta: float
    s_min: float
    s_max: float

    def __post_init__(self):
        _check_power_law(self.beta, self.s_min, self.s_max, "pause")

    def sample(self, stream: RandomStream, n: int) -> np.ndarray:
        return truncated_pareto_sample(stream.uniform(n), self.beta, self.s_min, self.s_max)

    def pdf(self, s):
        s = np.asarray(s, dtype=float)
        c = self.beta / (self.s_min ** (-self.beta) - self.s_max ** (-self.beta))
        inside = (s >= self.s_min) & (s <= self.s_max)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(inside, c * s ** (-1.0 - self.beta), 0.0)

    @property
    def mean(self) -> float:
        return truncated_pareto_mean(self.beta, self.s_min, self.s_max)

    def __str__(self):
        return f"power:{self.beta:g}:{self.s_min:g}:{self.s_max:g}"


PauseLaw = Union[NoPause, ConstantPause, PowerLawPause]


# --------------------------------------------------------------------------
# Parameters
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class MobilityParams:
    """Parameters of the infinite-plane RWP model.

    ``lam`` is the waypoint intensity (per unit area); the mean
    transition length is ``1 / (2 sqrt(lam))``.
    """

    lam: float
    velocity: VelocityLaw = field(default_factory=lambda: ConstantVelocity(1.0))
    pause: PauseLaw = field(default_factory=NoPause)

    def __post_init__(self):
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise DomainError("lambda must be a positive finite number")

    @property
    def mean_length(self) -> float:
        return 0.5 / math.sqrt(self.lam)


@dataclass(frozen=True)
class LevyParams:
    """Truncated Levy walk parameters.

    ``l_max=None`` resolves to half the window diagonal when the trace is
    generated.
    """

    alpha: float = 1.0
    beta: float = 1.0
    l_min: float = 0.1
    l_max: Optional[float] = None
    s_min: float = 1.0
    s_max: float = 1000.0
    velocity: VelocityLaw = field(default_factory=lambda: ConstantVelocity(1.0))

    def __post_init__(self):
        if not 0 < self.alpha < 2:
            raise DomainError("alpha must lie in (0, 2)")
        if self.l_max is not None and not self.l_min < self.l_max:
            raise DomainError("l_min must be < l_max")
        _check_power_law(self.beta, self.s_min, self.s_max, "pause")
        if not self.l_min > 0:
            raise DomainError("l_min must be > 0")

    def resolve_l_max(self, window: "Window") -> float:
        if self.l_max is not None:
            return float(self.l_max)
        if not window.finite:
            raise DomainError("l_max must be given for an infinite window")
        l_max = 0.5 * math.hypot(window.width, window.height)
        if not self.l_min < l_max:
            raise DomainError("l_min must be < l_max")
        return l_max

    def pause_law(self) -> PowerLawPause:
        return PowerLawPause(self.beta, self.s_min, self.s_max)

    def mean_length(self, window: "Window" = None) -> float:
        l_max = self.l_max if self.l_max is not None else self.resolve_l_max(window)
        return truncated_pareto_mean(self.alpha, self.l_min, l_max)


# --------------------------------------------------------------------------
# Window and reflection
# --------------------------------------------------------------------------


def _fold(x, size):
    # Specular reflection into [0, size]: the image of the unfolded coordinate.
    m = np.mod(x, 2.0 * size)
    return size - np.abs(m - size)


@dataclass(frozen=True)
class Window:
    """Rectangle ``[0, width] x [0, height]`` with a boundary policy.

    ``policy`` is ``"infinite"`` (no boundary) or ``"reflect"``.
    """

    width: float = math.inf
    height: float = math.inf
    policy: str = "infinite"

    def __post_init__(self):
        if self.policy not in ("infinite", "reflect"):
            raise DomainError(f"unknown boundary policy {self.policy!r}")
        if self.policy == "reflect" and not (
            0 < self.width < math.inf and 0 < self.height < math.inf
        ):
            raise DomainError("a reflecting window needs finite positive width and height")

    @classmethod
    def infinite(cls) -> "Window":
        return cls()

    @classmethod
    def reflecting(cls, width: float, height: float) -> "Window":
        return cls(width, height, "reflect")

    @property
    def finite(self) -> bool:
        return math.isfinite(self.width) and math.isfinite(self.height)

    def contains(self, p, tol=0.0) -> bool:
        x, y = p
        return -tol <= x <= self.width + tol and -tol <= y <= self.height + tol

    def fold(self, p):
        """Image of an unfolded point under reflection into the window."""
        p = np.asarray(p, dtype=float)
        if self.policy != "reflect":
            return p.copy()
        out = np.empty_like(p)
        out[..., 0] = _fold(p[..., 0], self.width)
        out[..., 1] = _fold(p[..., 1], self.height)
        return out


def reflect_path(start, displacement, lower, upper):
    """Split a straight move into the polyline it traces inside a box.

    The box is ``[lower[0], upper[0]] x [lower[1], upper[1]]``; each wall
    hit flips the corresponding velocity component.  Returns the list of
    vertices, starting at ``start`` and ending at the folded end point.
    The total polyline length equals ``|displacement|``.
    """
    p = np.array(start, dtype=float)
    rem = np.array(displacement, dtype=float)
    lo = np.asarray(lower, dtype=float)
    hi = np.asarray(upper, dtype=float)
    vertices = [p.copy()]
    for _ in range(1_000_000):
        # fraction of the remaining move before the first wall hit
        frac = 1.0
        axis = -1
        for k in range(2):
            with np.errstate(over="ignore"):  # subnormal components give inf, i.e. no hit
                if rem[k] > 0:
                    f = (hi[k] - p[k]) / rem[k]
                elif rem[k] < 0:
                    f = (lo[k] - p[k]) / rem[k]
                else:
                    continue
            if f < frac:
                frac, axis = max(f, 0.0), k
        if axis < 0:
            p = p + rem
            vertices.append(p)
            return vertices
        p = p + frac * rem
        p[axis] = hi[axis] if rem[axis] > 0 else lo[axis]
        rem = (1.0 - frac) * rem
        rem[axis] = -rem[axis]
        vertices.append(p.copy())
    raise DomainError("reflection did not terminate; box too small for the move")


# --------------------------------------------------------------------------
# Trace
# --------------------------------------------------------------------------


class MovementPeriod(NamedTuple):
    start: tuple
    end: tuple
    velocity: float
    pause: float
    length: float


@dataclass(frozen=True, eq=False)
class Trace:
    """A sequence of movement periods stored column-wise.

    ``length`` is the travelled path length of each period; it equals the
    distance between ``start`` and ``end`` unless the path was reflected.
    Period ``n`` starts exactly where period ``n - 1`` ended.
    """

    start: np.ndarray
    end: np.ndarray
    velocity: np.ndarray
    pause: np.ndarray
    length: np.ndarray

    def __len__(self):
        return len(self.velocity)

    def __getitem__(self, i) -> MovementPeriod:
        return MovementPeriod(
            tuple(self.start[i]), tuple(self.end[i]),
            float(self.velocity[i]), float(self.pause[i]), float(self.length[i]),
        )

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    @property
    def transition_time(self) -> np.ndarray:
        return self.length / self.velocity

    @property
    def period_time(self) -> np.ndarray:
        return self.transition_time + self.pause

    @property
    def switch_rate(self) -> np.ndarray:
        return 1.0 / self.period_time

    def points(self) -> np.ndarray:
        """Waypoints ``X_0, X_1, ..., X_n`` as an ``(n + 1, 2)`` array."""
        return np.vstack([self.start[:1], self.end])

    def to_csv(self, fh):
        """Write ``period,x0,y0,x1,y1,velocity,pause`` rows to an open text file."""
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["period", "x0", "y0", "x1", "y1", "velocity", "pause"])
        for i in range(len(self)):
            w.writerow([
                i, repr(float(self.start[i, 0])), repr(float(self.start[i, 1])),
                repr(float(self.end[i, 0])), repr(float(self.end[i, 1])),
                repr(float(self.velocity[i])), repr(float(self.pause[i])),
            ])

    @classmethod
    def from_csv(cls, fh) -> "Trace":
        rows = list(csv.DictReader(fh))
        arr = lambda k: np.array([float(r[k]) for r in rows])  # noqa: E731
        start = np.column_stack([arr("x0"), arr("y0")])
        end = np.column_stack([arr("x1"), arr("y1")])
        return cls(start, end, arr("velocity"), arr("pause"),
                   np.hypot(*(end - start).T))


def _assemble(start0, steps, lengths, velocity, pause, window: Window) -> Trace:
    n = len(lengths)
    start0 = np.asarray(start0, dtype=float)
    if window.policy == "reflect":
        if not window.contains(start0):
            raise DomainError("start point lies outside the reflecting window")
        ends = np.empty((n, 2))
        p = start0
        for i in range(n):
            p = window.fold(p + steps[i])
            ends[i] = p
    else:
        ends = start0 + np.cumsum(steps, axis=0)
    starts = np.vstack([start0[None, :], ends[:-1]])
    return Trace(starts, ends, velocity, pause, lengths)


# --------------------------------------------------------------------------
# Generators
# --------------------------------------------------------------------------


def rayleigh_from_uniform(u, lam):
    """Inverse transform of the transition-length cdf."""
    return np.sqrt(-np.log1p(-np.asarray(u, dtype=float)) / (lam * math.pi))


def sample_transition_length(params: MobilityParams, stream: RandomStream, size=None):
    """Rayleigh transition lengths with mean ``1 / (2 sqrt(lam))``."""
    out = rayleigh_from_uniform(stream.uniform(size), params.lam)
    return float(out) if size is None else out


def generate_rwp_trace(params: MobilityParams, n_periods: int, stream: RandomStream,
                       start=(0.0, 0.0), window: Window = Window()) -> Trace:
    """Trace of the infinite-plane RWP model.

    Each period draws, independently and in this order for the whole
    trace: a uniform direction, a Rayleigh length, a velocity and a pause.
    """
    if n_periods < 1:
        raise DomainError("n_periods must be >= 1")
    theta = 2.0 * math.pi * stream.uniform(n_periods)
    lengths = sample_transition_length(params, stream, n_periods)
    velocity = params.velocity.sample(stream, n_periods)
    pause = params.pause.sample(stream, n_periods)
    steps = lengths[:, None] * np.column_stack([np.cos(theta), np.sin(theta)])
    return _assemble(start, steps, lengths, velocity, pause, window)


def generate_classical_rwp_trace(window: Window, velocity: VelocityLaw, pause: PauseLaw,
                                 n_periods: int, stream: RandomStream, start=None) -> Trace:
    """Trace of the classical RWP model: waypoints i.i.d. uniform on the window.

    Without ``start`` the initial position is itself a uniform draw.
    """
    if not window.finite:
        raise DomainError("the classical RWP model needs a finite window")
    if n_periods < 1:
        raise DomainError("n_periods must be >= 1")
    size = np.array([window.width, window.height])
    pts = stream.uniform((n_periods + 1, 2)) * size
    if start is not None:
        pts[0] = start
    v = velocity.sample(stream, n_periods)
    s = pause.sample(stream, n_periods)
    steps = np.diff(pts, axis=0)
    return Trace(pts[:-1].copy(), pts[1:].copy(), v, s, np.hypot(steps[:, 0], steps[:, 1]))


def generate_levy_trace(params: LevyParams, n_periods: int, stream: RandomStream,
                        start=(0.0, 0.0), window: Window = Window()) -> Trace:
    """Truncated Levy walk: power-law lengths and pauses, uniform direction."""
    if n_periods < 1:
        raise DomainError("n_periods must be >= 1")
    l_max = params.resolve_l_max(window)
    theta = 2.0 * math.pi * stream.uniform(n_periods)
    lengths = truncated_pareto_sample(stream.uniform(n_periods), params.alpha, params.l_min, l_max)
    velocity = params.velocity.sample(stream, n_periods)
    pause = params.pause_law().sample(stream, n_periods)
    steps = lengths[:, None] * np.column_stack([np.cos(theta), np.sin(theta)])
    return _assemble(start, steps, lengths, velocity, pause, window)


# --------------------------------------------------------------------------
# Empirical statistics
# --------------------------------------------------------------------------


@dataclass
class EmpiricalStats:
    length_grid: np.ndarray
    length_ccdf: np.ndarray
    rate_grid: np.ndarray
    switch_rate_ccdf: np.ndarray
    radial_edges: np.ndarray
    radial_mass: np.ndarray
    radial_mass_se: np.ndarray
    n_periods: int

    @property
    def radial_density(self) -> np.ndarray:
        """Occupancy per unit area in each annulus."""
        e = self.radial_edges
        return self.radial_mass / (math.pi * (e[1:] ** 2 - e[:-1] ** 2))


def _ccdf(samples, grid):
    s = np.sort(samples)
    return 1.0 - np.searchsorted(s, grid, side="right") / len(s)


def radial_occupancy(trace: Trace, edges):
    """Fraction of time spent in each radial annulus around the period start.

    Distances are measured along the path from the period's own starting
    waypoint; pause time is spent at distance ``length``.  Returns
    ``(mass, se)``: the ratio estimator of the time fraction in each bin
    and its delta-method standard error.
    """
    edges = np.asarray(edges, dtype=float)
    nb = len(edges) - 1
    L = trace.length
    w = 1.0 / trace.velocity
    S = trace.pause
    tp = L * w + S
    total = tp.sum()

    # bin index of each period's far end; nb means beyond the last edge
    m = np.searchsorted(edges, L, side="right") - 1
    m = np.clip(m, -1, nb)
    widths = np.diff(edges)
    idx = np.where(m < 0, 0, m)

    # a_ik = w_i*widths_k for k < m_i ; w_i*(L_i-edges_k)+S_i*[L_i<edges_last] at k = m_i
    partial_len = np.where(m < nb, L - edges[np.minimum(idx, nb - 1)], 0.0)
    partial = np.where(m < nb, partial_len * w + S, 0.0)
    partial = np.where(m < 0, 0.0, partial)
    mm = np.where(m < 0, 0, m)

    def beyond_sum(weights):
        # sum over periods whose end lies strictly beyond bin k
        cnt = np.bincount(mm, weights=weights, minlength=nb + 1)
        csum = np.cumsum(cnt[::-1])[::-1]
        return csum[1:nb + 1]

    def at_sum(weights):
        return np.bincount(mm, weights=weights, minlength=nb + 1)[:nb]

    sa = beyond_sum(w) * widths + at_sum(partial)
    saa = beyond_sum(w * w) * widths**2 + at_sum(partial**2)
    sab = beyond_sum(w * tp) * widths + at_sum(partial * tp)
    sbb = (tp * tp).sum()
    ratio = sa / total
    resid = saa - 2.0 * ratio * sab + ratio**2 * sbb
    se = np.sqrt(np.maximum(resid, 0.0)) / total
    return ratio, se


def empirical_stats(trace: Trace, length_grid=None, rate_grid=None, radial_edges=None,
                    lam: float = None) -> EmpiricalStats:
    """Length and switch-rate CCDFs plus radial time occupancy of a trace.

    Default radial bins: 200 uniform bins on ``[0, 3/sqrt(lam)]``; without
    ``lam`` the upper edge is six mean transition lengths, the same point
    for a Rayleigh law.
    """
    if len(trace) == 0:
        raise DomainError("empirical_stats needs a nonempty trace")
    L = trace.length
    D = trace.switch_rate
    if length_grid is None:
        length_grid = np.linspace(0.0, L.max(), 101)
    if rate_grid is None:
        rate_grid = np.quantile(D, np.linspace(0.0, 1.0, 101))
    if radial_edges is None:
        top = 3.0 / math.sqrt(lam) if lam is not None else 6.0 * L.mean()
        radial_edges = np.linspace(0.0, top, 201)
    length_grid = np.asarray(length_grid, dtype=float)
    rate_grid = np.asarray(rate_grid, dtype=float)
    mass, se = radial_occupancy(trace, radial_edges)
    return EmpiricalStats(
        length_grid, _ccdf(L, length_grid), rate_grid, _ccdf(D, rate_grid),
        np.asarray(radial_edges, dtype=float), mass, se, len(trace),
    )


__all__: Sequence[str] = [
    "ConstantVelocity", "UniformVelocity", "NoPause", "ConstantPause", "PowerLawPause",
    "MobilityParams", "LevyParams", "Window", "Trace", "MovementPeriod", "EmpiricalStats",
    "sample_transition_length", "generate_rwp_trace", "generate_classical_rwp_trace",
    "generate_levy_trace", "empirical_stats", "radial_occupancy", "reflect_path",
    "rayleigh_from_uniform", "truncated_pareto_sample", "truncated_pareto_mean",
]
