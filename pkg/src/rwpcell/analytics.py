"""Closed-form stochastic properties of the infinite-plane RWP model.

All functions accept scalar or array arguments for the length/time
variable and return the same shape.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DomainError, SingularityError
from .models import ConstantPause, ConstantVelocity, MobilityParams, NoPause, PowerLawPause
from .numerics import QuadSpec, integrate_1d, q_function


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def _speed_survival(params: MobilityParams, tau):
    """``P(T > tau)`` for the transition time ``T = L / V``."""
    lam = params.lam
    tau = np.asarray(tau, dtype=float)
    vel = params.velocity
    if isinstance(vel, ConstantVelocity) or vel.v_min == vel.v_max:
        v = vel.nu if isinstance(vel, ConstantVelocity) else vel.v_min
        return np.exp(-lam * math.pi * v * v * tau * tau)
    # E_V[exp(-lam pi V^2 tau^2)] for V ~ U[a, b], written with Q
    a, b = vel.v_min, vel.v_max
    c = math.sqrt(2.0 * math.pi * lam)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = (q_function(c * tau * a) - q_function(c * tau * b)) / (
            math.sqrt(lam) * tau * (b - a))
    return np.where(tau > 0, val, 1.0)


def transition_time_cdf(params: MobilityParams, t):
    """``P(T <= t) = 1 - E_V[exp(-lam pi V^2 t^2)]``."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("transition time must be >= 0")
    return _out(1.0 - _speed_survival(params, t))


def _g(params: MobilityParams, x, t):
    # helper of the uniform-velocity transition-time density; non-increasing in x
    lam = params.lam
    return x * np.exp(-lam * math.pi * t * t * x * x) + q_function(
        math.sqrt(2.0 * math.pi * lam) * t * x) / (math.sqrt(lam) * t)


def transition_time_pdf(params: MobilityParams, t):
    """Density of the transition time for constant or uniform velocity."""
    lam = params.lam
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("transition time must be >= 0")
    vel = params.velocity
    if isinstance(vel, ConstantVelocity) or vel.v_min == vel.v_max:
        nu = vel.nu if isinstance(vel, ConstantVelocity) else vel.v_min
        return _out(2.0 * math.pi * lam * nu * nu * t * np.exp(-lam * math.pi * nu * nu * t * t))
    a, b = vel.v_min, vel.v_max
    safe = np.where(t > 0, t, 1.0)
    val = (_g(params, a, safe) - _g(params, b, safe)) / ((b - a) * safe)
    return _out(np.where(t > 0, val, 0.0))


def mean_transition_time(params: MobilityParams) -> float:
    """``E[T] = E[L] * E[1/V]``.

    Constant ``nu`` gives ``1 / (2 nu sqrt(lam))``; uniform on
    ``[v_min, v_max]`` gives ``ln(v_max/v_min) / (2 sqrt(lam) (v_max - v_min))``.
    """
    return params.mean_length * params.velocity.mean_inverse


def mean_period_time(params: MobilityParams) -> float:
    return mean_transition_time(params) + params.pause.mean


def switch_rate_cdf(params: MobilityParams, d, spec: QuadSpec = None):
    """``P(D <= d)`` for the direction switch rate ``D = 1 / (T + S)``.

    Computed from the definition: ``P(T + S >= 1/d) =
    E_S[P(T >= max(1/d - S, 0))]``.  Power-law pauses are integrated
    numerically, split at the kink ``s = 1/d``.
    """
    d_arr = np.asarray(d, dtype=float)
    if np.any(d_arr <= 0):
        raise DomainError("switch rate must be > 0")
    pause = params.pause
    inv = 1.0 / d_arr

    if isinstance(pause, NoPause):
        return _out(_speed_survival(params, inv))
    if isinstance(pause, ConstantPause):
        return _out(_speed_survival(params, np.maximum(inv - pause.s, 0.0)))
    if not isinstance(pause, PowerLawPause):
        raise DomainError(f"unsupported pause law {pause!r}")

    def one(tau):
        # pauses >= tau always satisfy T + S >= tau
        lo, hi = pause.s_min, pause.s_max
        tail = 0.0
        if tau <= lo:
            return 1.0
        total = 0.0
        cut = min(tau, hi)
        if cut > lo:
            total += integrate_1d(
                lambda s: pause.pdf(s) * _speed_survival(params, tau - s), lo, cut, spec=spec)
        if hi > tau:
            tail = _pause_cdf_complement(pause, tau)
        return min(1.0, total + tail)

    vals = np.array([one(float(x)) for x in np.ravel(inv)]).reshape(inv.shape)
    return _out(vals)


def _pause_cdf_complement(pause: PowerLawPause, s):
    a = pause.s_min ** (-pause.beta)
    b = pause.s_max ** (-pause.beta)
    return (s ** (-pause.beta) - b) / (a - b)


def waypoint_pdf(lam: float, r):
    """Planar density of the next waypoint at distance ``r``: ``lam exp(-lam pi r^2)``."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise DomainError("r must be >= 0")
    return _out(lam * np.exp(-lam * math.pi * r * r))


def spatial_pdf(lam: float, r):
    """Time-occupancy density during one pause-free transition.

    ``sqrt(lam) / (pi r) * exp(-lam pi r^2)``; the pole at ``r = 0`` is
    integrable in polar coordinates but cannot be evaluated.
    """
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise SingularityError("spatial_pdf has a pole at r = 0")
    return _out(math.sqrt(lam) / (math.pi * r) * np.exp(-lam * math.pi * r * r))


def moving_fraction(params: MobilityParams) -> float:
    """``E[T] / (E[T] + E[S])``, the long-run fraction of time spent moving."""
    et = mean_transition_time(params)
    return et / (et + params.pause.mean)


def spatial_pdf_with_pause(params: MobilityParams, r):
    """Occupancy density including pauses at the waypoint.

    Mixture ``p * spatial_pdf + (1 - p) * waypoint_pdf`` with ``p`` the
    moving fraction.
    """
    p = moving_fraction(params)
    return _out(p * spatial_pdf(params.lam, r) + (1.0 - p) * waypoint_pdf(params.lam, r))


def spatial_radial_cdf(lam: float, r):
    """Fraction of moving time spent within distance ``r`` of the start."""
    r = np.asarray(r, dtype=float)
    return _out(1.0 - 2.0 * q_function(math.sqrt(2.0 * math.pi * lam) * r))


def waypoint_radial_cdf(lam: float, r):
    """``P(L <= r)`` for the transition length."""
    r = np.asarray(r, dtype=float)
    return _out(-np.expm1(-lam * math.pi * r * r))


def transition_length_cdf(lam: float, l):
    return waypoint_radial_cdf(lam, l)


def occupancy_radial_cdf(params: MobilityParams, r):
    """Radial cdf of the paused occupancy mixture."""
    p = moving_fraction(params)
    return _out(p * np.asarray(spatial_radial_cdf(params.lam, r))
                + (1.0 - p) * np.asarray(waypoint_radial_cdf(params.lam, r)))


__all__ = [
    "transition_time_cdf", "transition_time_pdf", "mean_transition_time", "mean_period_time",
    "switch_rate_cdf", "waypoint_pdf", "spatial_pdf", "spatial_pdf_with_pause",
    "moving_fraction", "spatial_radial_cdf", "waypoint_radial_cdf", "transition_length_cdf",
    "occupancy_radial_cdf",
]
