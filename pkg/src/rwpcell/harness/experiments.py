"""Monte-Carlo experiments paired with their analytic companions."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..analytics import mean_transition_time
from ..errors import DomainError
from ..hexgrid import (SQRT3, HexGrid, boundary_crossing_intensity, count_crossings_batch,
                       expected_handovers_approx, expected_handovers_exact,
                       handover_rate_asymptotic, handover_rate_exact, hex_radius,
                       sojourn_time_hex)
from ..models import (ConstantVelocity, LevyParams, MobilityParams, NoPause, Window,
                      generate_classical_rwp_trace, generate_levy_trace, generate_rwp_trace,
                      reflect_path, _ccdf)
from ..numerics import RandomStream
from ..voronoi import (count_voronoi_crossings, expected_handovers_pvt, handover_rate_pvt,
                       sample_ppp, sample_sojourn_pvt, sojourn_distribution_pvt)
from .deploy import Deployment, ingest_deployment
from .engine import DEFAULT_BLOCK, estimate, run_blocks, summarize
from .scenario import DeploymentSpec, HexSpec, PppSpec, RunReport, Scenario

# --------------------------------------------------------------------------
# Handover counts
# --------------------------------------------------------------------------


def _hex_block(mobility: MobilityParams, grid: HexGrid):
    # Start uniform on a lattice fundamental cell; the boundary-length
    # argument behind the exact count assumes a uniformly placed mobile.
    a1 = np.array([1.5 * grid.d, 0.5 * SQRT3 * grid.d])
    a2 = np.array([0.0, SQRT3 * grid.d])

    def fn(stream: RandomStream, n: int):
        u = stream.uniform((n, 2))
        starts = u[:, :1] * a1 + u[:, 1:] * a2
        tr = generate_rwp_trace(mobility, n, stream)
        return count_crossings_batch(grid, starts, starts + (tr.end - tr.start))

    return fn


def _segment_region(a, b):
    return (min(a[0], b[0]), min(a[1], b[1]), max(a[0], b[0]), max(a[1], b[1]))


def _pvt_block(mobility: MobilityParams, mu: float):
    # one fresh tessellation per replication, covering the segment plus the guard
    def fn(stream: RandomStream, n: int):
        tr = generate_rwp_trace(mobility, n, stream)
        out = np.empty(n)
        origin = np.zeros(2)
        for i in range(n):
            a, b = origin, tr.end[i] - tr.start[i]
            field = sample_ppp(mu, _segment_region(a, b), stream)
            out[i] = count_voronoi_crossings(field, a, b)
        return out

    return fn


def deployment_crossings(dep: Deployment, start, displacement) -> int:
    """Crossings of one move reflected inside the deployment's query window."""
    x0, y0, x1, y1 = dep.query_window
    verts = reflect_path(start, displacement, (x0, y0), (x1, y1))
    return sum(count_voronoi_crossings(dep.field, p, q) for p, q in zip(verts[:-1], verts[1:]))


def _deploy_block(mobility: MobilityParams, dep: Deployment):
    x0, y0, x1, y1 = dep.query_window
    size = np.array([x1 - x0, y1 - y0])

    def fn(stream: RandomStream, n: int):
        starts = np.array([x0, y0]) + stream.uniform((n, 2)) * size
        tr = generate_rwp_trace(mobility, n, stream)
        disp = tr.end - tr.start
        return np.array([deployment_crossings(dep, starts[i], disp[i]) for i in range(n)])

    return fn


def handover_analytics(mobility: MobilityParams, network) -> dict:
    """Analytic companion values for the handover count of one period."""
    if isinstance(network, HexSpec):
        d = network.d
        approx = expected_handovers_approx(mobility.lam, d)
        return {
            "expected_exact": expected_handovers_exact(mobility, d),
            "expected_path_length": mobility.mean_length * boundary_crossing_intensity(d),
            "expected_approx": float(approx.value),
            "expected_approx_lower": float(approx.lower),
            "expected_approx_upper": float(approx.upper),
            "rate_exact": handover_rate_exact(mobility, d),
            "rate_asymptotic": handover_rate_asymptotic(mobility, d),
        }
    if isinstance(network, PppSpec):
        return {
            "expected": expected_handovers_pvt(network.mu, mobility.lam),
            "rate": handover_rate_pvt(mobility, network.mu),
        }
    raise DomainError("no analytic companion for this network")


def run_handover_experiment(scenario: Scenario, block: int = DEFAULT_BLOCK) -> RunReport:
    """Handovers per movement period, by simulation and in closed form."""
    mob = scenario.mobility
    net = scenario.network
    if isinstance(net, HexSpec):
        fn = _hex_block(mob, HexGrid(net.d))
        analytic = handover_analytics(mob, net)
    elif isinstance(net, PppSpec):
        fn = _pvt_block(mob, net.mu)
        analytic = handover_analytics(mob, net)
    elif isinstance(net, DeploymentSpec):
        dep = ingest_deployment(net.path, net.guard_margin)
        fn = _deploy_block(mob, dep)
        analytic = {"mu": dep.mu, "d": dep.d, "n_bs": dep.n}
        analytic.update({"pvt_" + k: v for k, v in handover_analytics(mob, PppSpec(dep.mu)).items()})
        analytic.update({"hex_" + k: v for k, v in handover_analytics(mob, HexSpec(dep.d)).items()})
    else:
        raise DomainError("unknown network spec")
    return estimate("handovers", fn, scenario.replications, scenario.master_seed,
                    workers=scenario.workers, analytic=analytic, block=block)


# --------------------------------------------------------------------------
# Sojourn time
# --------------------------------------------------------------------------


def _check_sojourn_scope(mobility: MobilityParams):
    if not (isinstance(mobility.pause, NoPause) and isinstance(mobility.velocity, ConstantVelocity)):
        raise DomainError(
            "sojourn analysis covers the simplified model only: no pause and constant velocity")


@dataclass
class SojournResult:
    report: RunReport
    rows: list  # (t, pdf, cdf, empirical_cdf); empty for hexagonal cells


def ks_distance(samples, cdf) -> float:
    """Two-sided Kolmogorov-Smirnov distance between samples and a cdf callable."""
    s = np.sort(np.asarray(samples, dtype=float))
    n = len(s)
    F = np.asarray(cdf(s), dtype=float)
    upper = np.arange(1, n + 1) / n - F
    lower = F - np.arange(n) / n
    return float(max(upper.max(), lower.max()))


def _hex_sojourn_block(mobility: MobilityParams, d: float):
    # start at the serving BS; a straight move leaves a convex cell at most once
    nu = mobility.velocity.nu

    def fn(stream: RandomStream, n: int):
        tr = generate_rwp_trace(mobility, n, stream)
        disp = tr.end - tr.start
        theta = np.arctan2(disp[:, 1], disp[:, 0])
        return np.minimum(tr.length, hex_radius(d, theta)) / nu

    return fn


def _pvt_sojourn_block(mobility: MobilityParams, mu: float):
    def fn(stream: RandomStream, n: int):
        return sample_sojourn_pvt(mobility, mu, n, stream)[0]

    return fn


def default_sojourn_grid(mean_T: float, n: int = 41) -> np.ndarray:
    return np.linspace(0.0, mean_T, n + 1)[:-1]


def run_sojourn_experiment(scenario: Scenario, t_grid=None, block: int = DEFAULT_BLOCK) -> SojournResult:
    mob = scenario.mobility
    _check_sojourn_scope(mob)
    net = scenario.network
    mean_T = mean_transition_time(mob)
    if isinstance(net, HexSpec):
        st = sojourn_time_hex(mob.lam, net.d, mean_T)
        rep = estimate("sojourn", _hex_sojourn_block(mob, net.d), scenario.replications,
                       scenario.master_seed, workers=scenario.workers, block=block,
                       analytic={"sojourn": st.value, "sojourn_lower": st.lower,
                                 "sojourn_upper": st.upper, "mean_T": mean_T})
        return SojournResult(rep, [])
    if not isinstance(net, PppSpec):
        raise DomainError("sojourn experiments need a hexagonal or Poisson-Voronoi network")
    grid = default_sojourn_grid(mean_T) if t_grid is None else np.asarray(t_grid, dtype=float)
    dist = sojourn_distribution_pvt(mob, net.mu, grid)
    samples = run_blocks(_pvt_sojourn_block(mob, net.mu), scenario.replications,
                         scenario.master_seed, workers=scenario.workers, block=block)
    s = np.sort(samples)
    emp = np.searchsorted(s, grid, side="right") / len(s)
    rep = summarize("sojourn", samples, scenario.master_seed,
                    {"mean_T": mean_T, "ks_distance": ks_distance(samples, dist.cdf_at)})
    rows = [(float(t), float(f), float(c), float(e))
            for t, f, c, e in zip(grid, dist.pdf, dist.cdf, emp)]
    return SojournResult(rep, rows)


# --------------------------------------------------------------------------
# Model comparison and sweeps
# --------------------------------------------------------------------------


def calibrate_lambda(mean_length: float) -> float:
    """Waypoint intensity whose mean transition length is ``mean_length``."""
    if not mean_length > 0:
        raise DomainError("mean length must be > 0")
    return 1.0 / (4.0 * mean_length**2)


@dataclass
class ComparisonResult:
    lam: float
    mean_length: dict
    length_rows: list  # (l, proposed, classical, levy)
    rate_rows: list    # (d, proposed, classical, levy)


def run_model_comparison(levy: LevyParams = None, window: Window = None, n_periods: int = 100_000,
                         seed: int = 0, length_grid=None, rate_grid=None) -> ComparisonResult:
    """CCDFs of transition length and switch rate for the three models.

    The proposed model's ``lam`` is matched to the Levy walk's mean
    transition length; all three share the Levy walk's velocity and pause
    laws and run in the same reflecting window.
    """
    levy = levy or LevyParams()
    window = window or Window.reflecting(1000.0, 1000.0)
    lam = calibrate_lambda(levy.mean_length(window))
    pause = levy.pause_law()
    proposed = MobilityParams(lam, levy.velocity, pause)
    centre = (0.5 * window.width, 0.5 * window.height)
    traces = {
        "proposed": generate_rwp_trace(proposed, n_periods, RandomStream(seed, 0), centre, window),
        "classical": generate_classical_rwp_trace(window, levy.velocity, pause, n_periods,
                                                  RandomStream(seed, 1), centre),
        "levy": generate_levy_trace(levy, n_periods, RandomStream(seed, 2), centre, window),
    }
    if length_grid is None:
        length_grid = np.geomspace(levy.l_min, math.hypot(window.width, window.height), 60)
    if rate_grid is None:
        rate_grid = np.geomspace(1.0 / (levy.s_max + 10.0 * math.hypot(window.width, window.height)),
                                 10.0 / levy.s_min, 60)
    names = ("proposed", "classical", "levy")
    lc = {k: _ccdf(traces[k].length, length_grid) for k in names}
    rc = {k: _ccdf(traces[k].switch_rate, rate_grid) for k in names}
    length_rows = [(float(x),) + tuple(float(lc[k][i]) for k in names) for i, x in enumerate(length_grid)]
    rate_rows = [(float(x),) + tuple(float(rc[k][i]) for k in names) for i, x in enumerate(rate_grid)]
    means = {k: float(traces[k].length.mean()) for k in names}
    return ComparisonResult(lam, means, length_rows, rate_rows)


@dataclass
class SweepResult:
    reports: list  # RunReport per grid point
    mus: list
    slope: float
    analytic_slope: float


def loglog_slope(x, y) -> float:
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def run_sweep(mobility: MobilityParams, mus, network: str = "pvt", reps: int = 1000, seed: int = 0,
              workers: int = 1, block: int = DEFAULT_BLOCK) -> SweepResult:
    """Handover counts over a BS-density grid.

    For hexagonal cells each density maps to the side with cell area
    ``1 / mu``.  Every grid point uses its own seed ``seed + k``.
    """
    reports = []
    analytic = []
    for k, mu in enumerate(mus):
        if network == "pvt":
            net = PppSpec(float(mu))
        elif network == "hex":
            net = HexSpec(HexGrid.from_density(float(mu)).d)
        else:
            raise DomainError("sweep network must be 'pvt' or 'hex'")
        sc = Scenario(mobility, net, reps, seed + k, workers=workers)
        rep = run_handover_experiment(sc, block=block)
        rep.analytic["mu"] = float(mu)
        reports.append(rep)
        analytic.append(rep.analytic["expected"] if network == "pvt" else rep.analytic["expected_exact"])
    mus = [float(m) for m in mus]
    return SweepResult(reports, mus, loglog_slope(mus, [r.mean for r in reports]),
                       loglog_slope(mus, analytic))


__all__ = [
    "run_handover_experiment", "run_sojourn_experiment", "run_model_comparison", "run_sweep",
    "handover_analytics", "deployment_crossings", "calibrate_lambda", "ks_distance",
    "SojournResult", "ComparisonResult", "SweepResult", "loglog_slope",
]
