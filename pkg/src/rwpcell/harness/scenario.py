"""Scenario description, run reports and command-line value parsers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

from ..errors import DomainError
from ..models import (ConstantPause, ConstantVelocity, MobilityParams, NoPause,
                      PowerLawPause, UniformVelocity)


@dataclass(frozen=True)
class HexSpec:
    d: float

    def __post_init__(self):
        if not self.d > 0:
            raise DomainError("hexagon side d must be > 0")


@dataclass(frozen=True)
class PppSpec:
    mu: float

    def __post_init__(self):
        if not self.mu > 0:
            raise DomainError("BS intensity mu must be > 0")


@dataclass(frozen=True)
class DeploymentSpec:
    path: str
    guard_margin: Optional[float] = None


NetworkSpec = Union[HexSpec, PppSpec, DeploymentSpec]


@dataclass(frozen=True)
class Scenario:
    mobility: MobilityParams
    network: NetworkSpec
    replications: int = 1000
    master_seed: int = 0
    outputs: tuple = ("handovers",)
    workers: int = 1

    def __post_init__(self):
        if int(self.replications) < 1:
            raise DomainError("replications must be >= 1")
        if not isinstance(self.network, (HexSpec, PppSpec, DeploymentSpec)):
            raise DomainError("scenario needs exactly one network spec")
        if int(self.workers) < 1:
            raise DomainError("workers must be >= 1")


@dataclass
class RunReport:
    """Monte-Carlo estimate with its normal-approximation 95% interval.

    ``ci95 = 1.96 sqrt(var / reps)``; not meaningful below ~30 replications.
    ``wall_time`` is informational and left out of serialised output so
    that reports are a pure function of the scenario and seed.
    """

    metric: str
    mean: float
    var: float
    reps: int
    ci95: float
    seed: int
    analytic: dict = field(default_factory=dict)
    wall_time: float = 0.0

    def to_dict(self) -> dict:
        return {
            "metric": self.metric,
            "mean": self.mean,
            "var": self.var,
            "reps": self.reps,
            "ci95": self.ci95,
            "seed": self.seed,
            "analytic": dict(self.analytic),
        }

    def covers(self, value: float, z: float = 1.96) -> bool:
        half = z * math.sqrt(self.var / self.reps)
        return abs(self.mean - value) <= half


def _floats(parts, spec):
    try:
        return [float(p) for p in parts]
    except ValueError:
        raise DomainError(f"bad number in {spec!r}") from None


def parse_velocity(spec: str):
    """``const:<v>`` or ``uniform:<lo>:<hi>``."""
    kind, _, rest = spec.partition(":")
    parts = rest.split(":") if rest else []
    if kind == "const" and len(parts) == 1:
        return ConstantVelocity(*_floats(parts, spec))
    if kind == "uniform" and len(parts) == 2:
        return UniformVelocity(*_floats(parts, spec))
    raise DomainError(f"velocity must be const:<v> or uniform:<lo>:<hi>, got {spec!r}")


def parse_pause(spec: str):
    """``none``, ``const:<s>`` or ``power:<beta>:<smin>:<smax>``."""
    kind, _, rest = spec.partition(":")
    parts = rest.split(":") if rest else []
    if kind == "none" and not parts:
        return NoPause()
    if kind == "const" and len(parts) == 1:
        return ConstantPause(*_floats(parts, spec))
    if kind == "power" and len(parts) == 3:
        return PowerLawPause(*_floats(parts, spec))
    raise DomainError(f"pause must be none, const:<s> or power:<beta>:<smin>:<smax>, got {spec!r}")
