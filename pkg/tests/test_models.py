import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial import cKDTree

from rwpcell.errors import DivergenceError, DomainError
from rwpcell.models import (ConstantPause, ConstantVelocity, LevyParams, MobilityParams,
                            NoPause, PowerLawPause, Trace, UniformVelocity, Window,
                            empirical_stats, generate_classical_rwp_trace, generate_levy_trace,
                            generate_rwp_trace, rayleigh_from_uniform, reflect_path,
                            sample_transition_length, truncated_pareto_mean,
                            truncated_pareto_sample)
from rwpcell.numerics import RandomStream


def test_rayleigh_mean_quarter_lambda():
    l = sample_transition_length(MobilityParams(0.25), RandomStream(1), 10**6)
    assert abs(l.mean() - 1.0) < 0.002


def test_rayleigh_inverse_transform_fixed_point():
    assert abs(rayleigh_from_uniform(1 - math.exp(-1), 1 / math.pi) - 1.0) < 1e-15


def test_rayleigh_cdf_at_one():
    l = sample_transition_length(MobilityParams(1.0), RandomStream(2), 10**6)
    assert abs(np.mean(l <= 1.0) - (1 - math.exp(-math.pi))) < 0.002


def test_rayleigh_ks():
    n = 10**5
    l = np.sort(sample_transition_length(MobilityParams(1.0), RandomStream(3), n))
    F = -np.expm1(-math.pi * l * l)
    ks = max(np.max(np.arange(1, n + 1) / n - F), np.max(F - np.arange(n) / n))
    assert ks < 1.63 / math.sqrt(n)


def test_nearest_point_construction_matches_rayleigh():
    # the next waypoint as the nearest point of a lam-PPP: same law as the inverse transform
    lam = 2.0
    st_ = RandomStream(4)
    n = 20_000
    half = 4.0
    dist = np.empty(n)
    for i in range(n):
        k = st_.poisson(lam * (2 * half) ** 2)
        pts = st_.uniform((k, 2)) * 2 * half - half
        dist[i] = np.min(np.hypot(pts[:, 0], pts[:, 1]))
    d = np.sort(dist)
    F = -np.expm1(-lam * math.pi * d * d)
    ks = max(np.max(np.arange(1, n + 1) / n - F), np.max(F - np.arange(n) / n))
    assert ks < 1.63 / math.sqrt(n)


def test_duration_equals_length_over_velocity():
    tr = generate_rwp_trace(MobilityParams(1.0, ConstantVelocity(2.5)), 1000, RandomStream(5))
    assert np.array_equal(tr.period_time, tr.length / 2.5)
    assert np.array_equal(tr.transition_time, tr.length / 2.5)


def test_mean_length_scaling():
    a = generate_rwp_trace(MobilityParams(100.0), 10**5, RandomStream(6)).length.mean()
    b = generate_rwp_trace(MobilityParams(0.01), 10**5, RandomStream(7)).length.mean()
    assert abs(a / b / 1e-2 - 1) < 0.02


def test_trace_continuity_and_determinism():
    p = MobilityParams(1.0, UniformVelocity(1, 3), PowerLawPause(1.2, 1, 50))
    a = generate_rwp_trace(p, 500, RandomStream(8))
    b = generate_rwp_trace(p, 500, RandomStream(8))
    assert np.array_equal(a.start[1:], a.end[:-1])
    fa, fb = io.StringIO(), io.StringIO()
    a.to_csv(fa)
    b.to_csv(fb)
    assert fa.getvalue() == fb.getvalue()
    assert fa.getvalue().splitlines()[0] == "period,x0,y0,x1,y1,velocity,pause"
    assert np.all(a.velocity > 0) and np.all(a.pause >= 0)


def test_trace_csv_round_trip():
    tr = generate_rwp_trace(MobilityParams(1.0, pause=ConstantPause(0.5)), 50, RandomStream(9))
    buf = io.StringIO()
    tr.to_csv(buf)
    buf.seek(0)
    back = Trace.from_csv(buf)
    assert np.array_equal(back.start, tr.start)
    assert np.array_equal(back.end, tr.end)
    assert np.array_equal(back.pause, tr.pause)


def test_reflection_stays_in_unit_square():
    tr = generate_rwp_trace(MobilityParams(1.0), 10**5, RandomStream(10), (0.5, 0.5),
                            Window.reflecting(1, 1))
    pts = tr.points()
    assert pts.min() >= 0.0 and pts.max() <= 1.0
    assert np.array_equal(tr.start[1:], tr.end[:-1])


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 1), st.floats(0, 1), st.floats(-20, 20), st.floats(-20, 20))
def test_reflect_path_preserves_length(x, y, dx, dy):
    verts = np.array(reflect_path((x, y), (dx, dy), (0, 0), (1, 1)))
    assert verts.min() >= 0.0 and verts.max() <= 1.0
    seg = np.hypot(*np.diff(verts, axis=0).T).sum()
    total = math.hypot(dx, dy)
    assert abs(seg - total) <= 1e-12 * max(total, 1.0)


def test_reflect_endpoint_matches_fold():
    w = Window.reflecting(2.0, 3.0)
    s = RandomStream(11)
    for _ in range(200):
        p = s.uniform(2) * [2.0, 3.0]
        dvec = s.normal(2) * 5
        verts = reflect_path(p, dvec, (0, 0), (2, 3))
        assert np.allclose(verts[-1], w.fold(p + dvec), atol=1e-12)


def test_window_validation():
    with pytest.raises(DomainError):
        Window.reflecting(0, 1)
    with pytest.raises(DomainError):
        generate_rwp_trace(MobilityParams(1.0), 3, RandomStream(0), (2, 2), Window.reflecting(1, 1))


def test_classical_waypoints_uniform():
    tr = generate_classical_rwp_trace(Window.reflecting(1, 1), ConstantVelocity(1), NoPause(),
                                      10**6, RandomStream(12))
    assert np.all(np.abs(tr.end.mean(axis=0) - 0.5) < 0.002)
    assert tr.length.max() <= math.sqrt(2)


def test_classical_mean_length(frozen):
    tr = generate_classical_rwp_trace(Window.reflecting(1, 1), ConstantVelocity(1), NoPause(),
                                      10**6, RandomStream(13))
    assert abs(tr.length.mean() - frozen["square_mean_distance"]) < 0.002


def test_classical_requires_finite_window():
    with pytest.raises(DomainError):
        generate_classical_rwp_trace(Window(), ConstantVelocity(1), NoPause(), 10, RandomStream(0))


def test_levy_lengths_truncated():
    lev = LevyParams(alpha=1.5, l_min=0.1, l_max=50.0)
    tr = generate_levy_trace(lev, 10**5, RandomStream(14), (500, 500), Window.reflecting(1000, 1000))
    assert tr.length.min() >= 0.1 and tr.length.max() <= 50.0
    assert tr.pause.min() >= lev.s_min and tr.pause.max() <= lev.s_max


def test_levy_mean_length(frozen):
    assert abs(truncated_pareto_mean(1.0, 0.1, 100.0) - frozen["pareto_mean_a1"]) < 1e-12
    u = RandomStream(15).uniform(4 * 10**6)
    l = truncated_pareto_sample(u, 1.0, 0.1, 100.0)
    assert abs(l.mean() / frozen["pareto_mean_a1"] - 1) < 0.01


def test_levy_pause_ccdf_slope():
    s = PowerLawPause(1.0, 1.0, 1000.0).sample(RandomStream(16), 10**6)
    grid = np.geomspace(3, 30, 10)
    ccdf = np.array([np.mean(s > g) for g in grid])
    slope = np.polyfit(np.log(grid), np.log(ccdf), 1)[0]
    assert abs(slope + 1) < 0.05


def test_levy_default_l_max_is_half_diagonal():
    assert LevyParams().resolve_l_max(Window.reflecting(30, 40)) == 25.0


def test_parameter_validation():
    with pytest.raises(DomainError):
        MobilityParams(0.0)
    with pytest.raises(DivergenceError):
        UniformVelocity(0.0, 1.0)
    with pytest.raises(DomainError):
        PowerLawPause(2.5, 1, 10)
    with pytest.raises(DomainError):
        LevyParams(alpha=2.0)
    with pytest.raises(DomainError):
        LevyParams(l_min=1.0, l_max=0.5)


def test_empirical_stats_single_period():
    tr = Trace(np.array([[0.0, 0.0]]), np.array([[1.0, 0.0]]), np.array([2.0]), np.array([0.0]),
               np.array([1.0]))
    es = empirical_stats(tr, length_grid=[0.5, 1.5], rate_grid=[1.0, 3.0])
    assert list(es.length_ccdf) == [1.0, 0.0]
    assert list(es.switch_rate_ccdf) == [1.0, 0.0]


def test_switch_rate_is_velocity_over_length():
    tr = generate_rwp_trace(MobilityParams(1.0, ConstantVelocity(3.0)), 1000, RandomStream(17))
    assert np.allclose(tr.switch_rate, 3.0 / tr.length, rtol=1e-15)


def test_radial_occupancy_mass_sums_to_one():
    p = MobilityParams(1.0, pause=ConstantPause(0.3))
    tr = generate_rwp_trace(p, 10**4, RandomStream(18))
    es = empirical_stats(tr, radial_edges=np.linspace(0, 100, 51))
    assert abs(es.radial_mass.sum() - 1.0) < 1e-12
    assert len(empirical_stats(tr, lam=1.0).radial_mass) == 200


def test_radial_occupancy_matches_direct_time_sampling():
    # independent route: sample a uniform time instant in each period and bin its distance
    p = MobilityParams(1.0, UniformVelocity(0.5, 2.0), ConstantPause(0.4))
    tr = generate_rwp_trace(p, 2 * 10**5, RandomStream(19))
    edges = np.linspace(0, 1.5, 11)
    es = empirical_stats(tr, radial_edges=edges)
    s = RandomStream(20)
    tp = tr.period_time
    pick = np.searchsorted(np.cumsum(tp) / tp.sum(), s.uniform(10**6))
    tau = s.uniform(10**6) * tp[pick]
    r = np.minimum(tau * tr.velocity[pick], tr.length[pick])
    hist = np.histogram(r, bins=edges)[0] / 10**6
    assert np.all(np.abs(hist - es.radial_mass) < 4 * (es.radial_mass_se + np.sqrt(hist / 10**6)))
