"""Acceptance criteria, each run at its stated tolerance.

Every test reports one ``[PASS]`` or ``[FAIL]`` line through the ``record``
fixture; the lines are repeated in the terminal summary.
"""
import math
import time

import numpy as np

from rwpcell.analytics import (occupancy_radial_cdf, spatial_radial_cdf, switch_rate_cdf,
                               transition_length_cdf, transition_time_cdf)
from rwpcell.harness import cli
from rwpcell.harness.experiments import run_handover_experiment, run_sojourn_experiment, run_sweep
from rwpcell.harness.scenario import HexSpec, PppSpec, Scenario
from rwpcell.hexgrid import (HexGrid, approx_bound_gap, expected_handovers_approx,
                             expected_handovers_exact, sojourn_time_hex)
from rwpcell.models import (ConstantPause, ConstantVelocity, MobilityParams, UniformVelocity,
                            generate_rwp_trace, radial_occupancy)
from rwpcell.numerics import RandomStream
from rwpcell.voronoi import count_voronoi_crossings, line_crossing_intensity, sample_ppp

SEED = 12345
PERIODS = 10**6
GRID_X = np.geomspace(1e-3, 10.0, 20)
# 20 radial bins, all populated at 10^6 periods (beyond 2/sqrt(lam) the mass is < 1e-5)
RADIAL_EDGES = np.linspace(0.0, 2.0, 21)


def test_hex_exact_handovers(record):
    t0 = time.perf_counter()
    rep = run_handover_experiment(Scenario(MobilityParams(1.0), HexSpec(1.0), 10**5, SEED))
    wall = time.perf_counter() - t0
    target = 0.367553
    rel = abs(rep.mean - target) / target
    ok = rep.covers(target) and rel < 0.01 and wall < 30
    assert record("1 hex exact handovers", ok,
                  f"mean={rep.mean:.6f} ci95={rep.ci95:.6f} rel={rel:.4f} time={wall:.1f}s")


def test_pvt_handovers(record):
    t0 = time.perf_counter()
    rep = run_handover_experiment(Scenario(MobilityParams(1.0), PppSpec(50.0), 10**4, SEED))
    wall = time.perf_counter() - t0
    target = 2 / math.pi * math.sqrt(50.0)
    rel = abs(rep.mean - target) / target
    ok = rel < 0.02 and wall < 60
    assert record("2 pvt handovers", ok,
                  f"mean={rep.mean:.4f} target={target:.4f} rel={rel:.4f} time={wall:.1f}s")


def test_sqrt_density_scaling(record):
    mus = [1.0, 4.0, 16.0, 64.0]
    mob = MobilityParams(1.0)
    sweep = run_sweep(mob, mus, "pvt", reps=10**4, seed=SEED)
    hex_vals = [expected_handovers_exact(mob, HexGrid.from_density(m).d) for m in mus]
    hex_slope = np.polyfit(np.log(mus), np.log(hex_vals), 1)[0]
    ok = abs(sweep.slope - 0.5) <= 0.02 and abs(hex_slope - 0.5) <= 0.02
    assert record("3 sqrt density scaling", ok,
                  f"pvt_mc_slope={sweep.slope:.4f} hex_analytic_slope={hex_slope:.6f}")


def test_approximation_underestimates(record):
    mob_d = 1.0
    worst = -np.inf
    ok = True
    for x in GRID_X:
        approx = expected_handovers_approx(x, mob_d).value
        exact = expected_handovers_exact(MobilityParams(x), mob_d)
        ok &= approx < exact
        worst = max(worst, approx - exact)
    assert record("4 approx < exact", bool(ok), f"max(approx-exact)={worst:.3e} on 20 points")


def test_ring_bound_sandwich(record):
    ok = True
    for x in GRID_X:
        a = expected_handovers_approx(x, 1.0)
        ok &= a.lower <= a.value <= a.upper
    assert record("5a ring bound sandwich", bool(ok), "L <= app <= U on 20 points")


def test_ring_bound_gap_law(record):
    # stated law: strictly increasing, gap(1e-4) > 0.999, gap(1e2) < 1e-30
    g = approx_bound_gap(GRID_X)
    increasing = bool(np.all(np.diff(g) > 0))
    lo, hi = approx_bound_gap(1e-4), approx_bound_gap(1e2)
    ok = increasing and lo > 0.999 and hi < 1e-30
    assert record("5b ring bound gap law", ok,
                  f"increasing={increasing} gap(1e-4)={lo:.6f} gap(1e2)={hi:.6e}")


def test_hex_sojourn(record):
    t0 = time.perf_counter()
    inside = True
    for lam in np.geomspace(1e-3, 10, 5):
        for d in np.geomspace(0.1, 10, 5):
            mob = MobilityParams(float(lam))
            s = sojourn_time_hex(mob.lam, float(d), mob.mean_length)
            inside &= s.lower <= s.value <= s.upper
    small = sojourn_time_hex(1e-6, 1.0, MobilityParams(1e-6).mean_length).value
    wall = time.perf_counter() - t0
    ok = bool(inside) and abs(small - 0.908633) <= 1e-3 and wall < 5
    assert record("6 hex sojourn", ok,
                  f"in_bounds={bool(inside)} S_T(1e-6)={small:.6f} time={wall:.2f}s")


def test_pvt_sojourn_distribution(record):
    t0 = time.perf_counter()
    mob = MobilityParams(0.01)
    mean_T = mob.mean_length
    grid = np.linspace(0.0, mean_T * (1 - 1e-9), 41)
    res = run_sojourn_experiment(Scenario(mob, PppSpec(1.0), 10**4, SEED), t_grid=grid)
    wall = time.perf_counter() - t0
    pdf = np.array([row[1] for row in res.rows])
    cdf_end = res.rows[-1][2]
    ks = res.report.analytic["ks_distance"]
    ok = bool(np.all(pdf >= 0)) and abs(cdf_end - 1) <= 1e-3 and ks < 0.03 and wall < 600
    assert record("7 pvt sojourn distribution", ok,
                  f"min_pdf={pdf.min():.3g} cdf(E[T])={cdf_end:.6f} ks={ks:.4f} time={wall:.0f}s")


def _cdf_within(samples, grid, analytic, k=3.0):
    n = len(samples)
    emp = np.array([np.mean(samples <= g) for g in grid])
    se = np.sqrt(emp * (1 - emp) / n)
    dev = np.abs(emp - analytic)
    return bool(np.all(dev <= k * np.maximum(se, 1.0 / n))), float(np.max(dev / np.maximum(se, 1.0 / n)))


def _radial_within(trace, edges, cdf, k=3.0):
    mass, se = radial_occupancy(trace, edges)
    expect = np.diff(cdf(edges))
    z = np.abs(mass - expect) / se
    return bool(np.all(z <= k)), float(z.max())


def test_stochastic_property_oracles(record):
    lam = 1.0
    q = np.linspace(0.05, 0.95, 10)

    tr = generate_rwp_trace(MobilityParams(lam), PERIODS, RandomStream(SEED, 0))
    grid = np.quantile(tr.length, q)
    ok_len, z_len = _cdf_within(tr.length, grid, transition_length_cdf(lam, grid))
    edges = RADIAL_EDGES / math.sqrt(lam)
    ok_rad, z_rad = _radial_within(tr, edges, lambda r: spatial_radial_cdf(lam, r))

    uni = MobilityParams(lam, UniformVelocity(1.0, 2.0))
    tr = generate_rwp_trace(uni, PERIODS, RandomStream(SEED, 1))
    grid = np.quantile(tr.transition_time, q)
    ok_T, z_T = _cdf_within(tr.transition_time, grid, transition_time_cdf(uni, grid))

    paused = MobilityParams(lam, UniformVelocity(0.5, 1.5), ConstantPause(0.4))
    tr = generate_rwp_trace(paused, PERIODS, RandomStream(SEED, 2))
    grid = np.quantile(tr.switch_rate, q)
    ok_D, z_D = _cdf_within(tr.switch_rate, grid, switch_rate_cdf(paused, grid))

    ok = ok_len and ok_T and ok_D and ok_rad
    assert record("8 stochastic property oracles", ok,
                  f"max z: length={z_len:.2f} time={z_T:.2f} rate={z_D:.2f} radial={z_rad:.2f}")


def test_paused_mixture_occupancy(record):
    lam = 1.0
    mean_T = MobilityParams(lam).mean_length
    mob = MobilityParams(lam, ConstantVelocity(1.0), ConstantPause(mean_T))
    tr = generate_rwp_trace(mob, PERIODS, RandomStream(SEED, 3))
    edges = RADIAL_EDGES / math.sqrt(lam)
    ok, z = _radial_within(tr, edges, lambda r: occupancy_radial_cdf(mob, r))
    assert record("9 paused mixture occupancy", ok, f"max z={z:.2f} over 20 bins")


def test_line_crossing_intensity(record):
    mu, length, n = 1.0, 50.0, 1000
    s = RandomStream(SEED, 4)
    counts = np.empty(n)
    for i in range(n):
        phi = 2 * math.pi * s.uniform()
        b = length * np.array([math.cos(phi), math.sin(phi)])
        f = sample_ppp(mu, (min(0, b[0]), min(0, b[1]), max(0, b[0]), max(0, b[1])), s)
        counts[i] = count_voronoi_crossings(f.build_index(), (0.0, 0.0), b)
    est = counts.mean() / length
    target = line_crossing_intensity(mu)
    rel = abs(est - target) / target
    assert record("10 pvt line intensity", rel < 0.02,
                  f"est={est:.4f} target={target:.4f} rel={rel:.4f}")


def test_thread_count_determinism(record, tmp_path):
    runs = [
        ["hex", "--reps", "20000"],
        ["pvt", "--mu", "9", "--reps", "3000", "--format", "json"],
        ["pvt", "--metric", "sojourn", "--lambda", "0.01", "--reps", "2000", "--t-grid", "9"],
        ["sweep", "--network", "pvt", "--reps", "2000"],
    ]
    same = True
    for k, args in enumerate(runs):
        blobs = []
        for w in (1, 4):
            out = tmp_path / f"run{k}_w{w}.out"
            assert cli.main(args + ["--seed", str(SEED), "--workers", str(w), "--out", str(out)]) == 0
            blobs.append(out.read_bytes())
        same &= blobs[0] == blobs[1]
    assert record("11 thread-count determinism", bool(same),
                  f"{len(runs)} CLI runs byte-identical for workers 1 vs 4")
