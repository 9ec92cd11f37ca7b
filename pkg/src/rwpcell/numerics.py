"""Numeric primitives: Gaussian tail, adaptive quadrature, random streams.

The Gaussian tail ``Q`` is evaluated through ``erfc`` (Cody's rational
Chebyshev approximations as shipped in SciPy), which is accurate to a few
ulps over the whole real line.  Adaptive quadrature is delegated to
:func:`scipy.integrate.cubature` with a Gauss-Kronrod product rule; the
subdivision order there is deterministic, so results are bit-stable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special
from scipy.integrate import cubature

from .errors import ConvergenceError, DomainError

_SQRT2 = math.sqrt(2.0)
_MASK64 = (1 << 64) - 1


# --------------------------------------------------------------------------
# Gaussian tail
# --------------------------------------------------------------------------

def q_function(x):
    """Gaussian tail probability ``Q(x) = P(Z > x)`` for a standard normal Z.

    Accepts scalars or arrays; returns the same shape.  Non-finite input
    raises :class:`DomainError`.
    """
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("q_function requires finite input")
    out = 0.5 * special.erfc(arr / _SQRT2)
    if out.ndim == 0:
        return float(out)
    return out


def _q_inverse_scalar(p):
    # Starting point from the rational inverse-normal approximation, then a
    # safeguarded Newton iteration inside a bracket [lo, hi] with Q(lo) > p > Q(hi).
    x = -float(special.ndtri(p))
    lo, hi = x - 1.0, x + 1.0
    while q_function(lo) <= p:
        lo -= 2.0 * (hi - lo)
    while q_function(hi) >= p:
        hi += 2.0 * (hi - lo)
    for _ in range(100):
        fx = q_function(x) - p
        if fx == 0.0:
            return x
        if fx > 0.0:
            lo = x
        else:
            hi = x
        # dQ/dx = -phi(x)
        dens = math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
        step = fx / dens if dens > 0.0 else math.inf
        x_new = x + step
        if not (lo < x_new < hi):
            x_new = 0.5 * (lo + hi)
        if abs(x_new - x) <= 4e-16 * max(1.0, abs(x)):
            return x_new
        x = x_new
    return x


def q_inverse(p):
    """Inverse of :func:`q_function`: the ``x`` with ``Q(x) = p``.

    ``p`` must lie strictly inside (0, 1).  Arrays are handled elementwise.
    """
    arr = np.asarray(p, dtype=float)
    if not np.all((arr > 0.0) & (arr < 1.0)):
        raise DomainError("q_inverse requires 0 < p < 1")
    if arr.ndim == 0:
        return _q_inverse_scalar(float(arr))
    flat = np.array([_q_inverse_scalar(v) for v in arr.ravel()])
    return flat.reshape(arr.shape)


# --------------------------------------------------------------------------
# Quadrature
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadSpec:
    """Tolerances for the adaptive integrators.

    The target is ``error <= max(abs_tol, rel_tol * |result|)``.
    """

    rel_tol: float = 1e-8
    abs_tol: float = 1e-12
    max_subdivisions: int = 10_000

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise DomainError("rel_tol must be > 0")
        if not self.abs_tol >= 0:
            raise DomainError("abs_tol must be >= 0")
        if int(self.max_subdivisions) < 1:
            raise DomainError("max_subdivisions must be >= 1")


DEFAULT_1D = QuadSpec()
DEFAULT_2D = QuadSpec(rel_tol=1e-6)


def _run_cubature(g, lo, hi, spec, rule):
    # cubature stops at atol + rtol*|est|; halving both keeps that below
    # max(abs_tol, rel_tol*|est|).
    res = cubature(
        g, lo, hi, rule=rule,
        rtol=spec.rel_tol / 2.0, atol=spec.abs_tol / 2.0,
        max_subdivisions=int(spec.max_subdivisions),
    )
    est = res.estimate
    err = res.error
    if res.status != "converged":
        raise ConvergenceError(
            f"adaptive quadrature did not converge after {res.subdivisions} "
            f"subdivisions (error estimate {np.max(err):.3g})",
            estimate=est, error=err,
        )
    if np.ndim(est) == 0:
        return float(est), float(err)
    return est, err


def integrate_1d(f, a, b, spec=None, full_output=False):
    """Adaptive Gauss-Kronrod (21-point) integral of ``f`` over ``[a, b]``.

    ``f`` must be vectorised: it receives a 1-D array of abscissae and
    returns an array of the same length (or shape ``(n, ...)`` for
    vector-valued integrands).  The rule never evaluates the endpoints, so
    integrable endpoint singularities such as ``x**-0.5`` at 0 are handled
    by subdivision.  With singularities at both ends the error estimate
    can come out optimistic; substitute those away first.  Infinite limits
    are not accepted; map them first (see
    :func:`integrate_semi_infinite`).

    Returns the estimate, or ``(estimate, error)`` when ``full_output``.
    Raises :class:`ConvergenceError` if ``spec.max_subdivisions`` is
    exhausted.
    """
    spec = spec or DEFAULT_1D
    a = float(a)
    b = float(b)
    if not (math.isfinite(a) and math.isfinite(b)):
        raise DomainError("integrate_1d requires finite limits")
    if not a < b:
        raise DomainError("integrate_1d requires a < b")

    def g(x):
        return np.asarray(f(x[:, 0]), dtype=float)

    est, err = _run_cubature(g, [a], [b], spec, "gk21")
    return (est, err) if full_output else est


def integrate_semi_infinite(f, a=0.0, spec=None, full_output=False):
    """Integral of ``f`` over ``[a, inf)`` via ``t = a + u / (1 - u)``."""

    def g(u):
        one_minus = 1.0 - u
        t = a + u / one_minus
        vals = np.asarray(f(t), dtype=float)
        jac = 1.0 / one_minus**2
        if vals.ndim > 1:
            jac = jac.reshape((-1,) + (1,) * (vals.ndim - 1))
        return vals * jac

    return integrate_1d(g, 0.0, 1.0, spec=spec, full_output=full_output)


def integrate_2d(f, spec=None, corner_power=1, full_output=False):
    """Integral of ``f(alpha, beta)`` over the triangle
    ``{0 < alpha < pi, 0 < beta < pi - alpha}``.

    The triangle is mapped to the unit-height strip with
    ``beta = (pi - alpha) * u``.  Integrands that concentrate near the
    degenerate edge ``alpha + beta -> pi`` can additionally request a
    polynomial grading ``u = 1 - (1 - v)**corner_power`` which spreads that
    edge layer over a wider band of ``v``.

    ``f`` is called with two equal-length arrays and must return an array
    of the same length (or ``(n, ...)`` for vector-valued integrands).
    """
    spec = spec or DEFAULT_2D
    k = int(corner_power)
    if k < 1:
        raise DomainError("corner_power must be >= 1")

    def g(x):
        alpha = x[:, 0]
        v = x[:, 1]
        width = np.pi - alpha
        if k == 1:
            u = v
            du = 1.0
        else:
            w = 1.0 - v
            u = 1.0 - w**k
            du = k * w ** (k - 1)
        beta = width * u
        vals = np.asarray(f(alpha, beta), dtype=float)
        jac = width * du
        if vals.ndim > 1:
            jac = np.reshape(jac, (-1,) + (1,) * (vals.ndim - 1))
        return vals * jac

    est, err = _run_cubature(g, [0.0, 0.0], [np.pi, 1.0], spec, "gk15")
    return (est, err) if full_output else est


# --------------------------------------------------------------------------
# Random streams
# --------------------------------------------------------------------------

class RandomStream:
    """Reproducible random stream keyed by ``(master_seed, stream_index)``.

    Backed by the Philox4x64 counter-based generator: the pair of 64-bit
    integers is the Philox key and the draw counter is its internal
    counter, so a stream's output depends only on its key and on how many
    numbers were drawn before.  Streams are cheap to create; give each
    replication (or replication block) its own.
    """

    __slots__ = ("master_seed", "stream_index", "_gen")

    def __init__(self, master_seed: int, stream_index: int = 0):
        self.master_seed = int(master_seed) & _MASK64
        self.stream_index = int(stream_index) & _MASK64
        key = np.array([self.master_seed, self.stream_index], dtype=np.uint64)
        self._gen = np.random.Generator(np.random.Philox(key=key))

    def __repr__(self):
        return f"RandomStream(master_seed={self.master_seed}, stream_index={self.stream_index})"

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    def uniform(self, size=None, low=0.0, high=1.0):
        """Uniform draws on ``[low, high)``."""
        if low == 0.0 and high == 1.0:
            return self._gen.random(size)
        return self._gen.uniform(low, high, size)

    def normal(self, size=None):
        return self._gen.standard_normal(size)

    def poisson(self, lam, size=None):
        return self._gen.poisson(lam, size)

    def integers(self, low, high=None, size=None):
        return self._gen.integers(low, high, size)

    def substream(self, index: int) -> "RandomStream":
        """A stream that shares the master seed but uses another index."""
        return RandomStream(self.master_seed, index)
