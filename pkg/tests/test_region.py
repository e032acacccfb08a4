import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bcshaping.channel_model import DomainError, channel_from_snr
from bcshaping.optimizer import OptimizerOptions
from bcshaping.region import (
    FrontierPoint,
    RegionFrontier,
    parse_strategy,
    region_contains,
    strategy_frontier,
    sweep_frontier,
    union_frontier,
    upper_envelope,
)
from bcshaping.strategies import general_sc, superposition_modulation, ts_frontier

CH = channel_from_snr(10.0, 8.0)


def pts(pairs, tag="x"):
    return [FrontierPoint(rt, r2, None, tag) for rt, r2 in pairs]


def frontier(pairs, tag="x", channel=CH):
    return RegionFrontier.from_points(pts(pairs, tag), channel, tag)


def coords(env):
    return [(p.r_total, p.r2) for p in env.points]


def test_envelope_drops_interior_point():
    env = upper_envelope(frontier([(2.0, 0.0), (1.0, 0.5), (1.0, 1.0)]))
    assert coords(env) == [(2.0, 0.0), (1.0, 1.0)]


def test_envelope_keeps_collinear_and_convex_points():
    env = upper_envelope(frontier([(2.0, 0.0), (1.5, 0.5), (1.0, 1.0)]))
    assert coords(env) == [(2.0, 0.0), (1.5, 0.5), (1.0, 1.0)]
    env = upper_envelope(frontier([(2.0, 0.0), (1.8, 0.5), (1.0, 1.0)]))
    assert len(env) == 3


def test_envelope_starts_at_largest_total():
    # a point of smaller total at r2 = 0 is dominated
    env = upper_envelope(frontier([(1.0, 0.0), (1.5, 0.2), (1.0, 1.0)]))
    assert coords(env)[0] == (1.5, 0.2)
    assert env.value_at(0.0) == pytest.approx(1.5)


def test_envelope_near_duplicates_cannot_hide_a_dent():
    # two copies of a dented point, equal up to rounding
    raw = [(1.4091, 0.9661), (0.976, 0.976), (0.976 - 1e-16, 0.976 + 1e-16), (1.4043, 0.993)]
    env = upper_envelope(frontier(raw))
    assert coords(env) == [(1.4091, 0.9661), (1.4043, 0.993)]


def test_envelope_single_point_and_empty():
    env = upper_envelope(frontier([(1.0, 0.5)]))
    assert coords(env) == [(1.0, 0.5)]
    with pytest.raises(DomainError):
        upper_envelope([])


def test_value_at_nan_beyond_max():
    env = upper_envelope(frontier([(2.0, 0.0), (1.0, 1.0)]))
    assert env.value_at(0.5) == pytest.approx(1.5)
    assert np.isnan(env.value_at(1.2))


def test_contains():
    f = frontier([(2.0, 0.0), (1.0, 1.0)])
    assert region_contains(f, (1.5, 0.5))
    assert region_contains(f, (1.0, 0.2))
    assert region_contains(f, (0.0, 0.0))
    assert not region_contains(f, (1.6, 0.5))
    assert not region_contains(f, (1.0, 1.01))
    assert region_contains(f, (1.5 + 1e-10, 0.5))


pairs = st.lists(st.tuples(st.floats(0.0, 3.0), st.floats(0.0, 2.0)), min_size=1, max_size=12)


@given(pairs)
def test_envelope_properties(raw):
    raw = [(max(rt, r2), r2) for rt, r2 in raw]
    f = frontier(raw)
    env = upper_envelope(f)
    # every input point is inside, envelope points are inputs, the boundary is decreasing and concave
    for rt, r2 in raw:
        assert region_contains(env, (rt, r2), tol=1e-9)
    assert set(coords(env)) <= set(raw)
    r2s, rts = env.r2, env.r_total
    assert np.all(np.diff(r2s) > 0)
    assert np.all(np.diff(rts) <= 1e-12)
    if len(env) >= 3:
        slopes = np.diff(rts) / np.diff(r2s)
        assert np.all(np.diff(slopes) <= 1e-9)
    assert coords(upper_envelope(env)) == coords(env)


@given(pairs, pairs)
def test_union_properties(a_raw, b_raw):
    a = frontier([(max(rt, r2), r2) for rt, r2 in a_raw], "a")
    b = frontier([(max(rt, r2), r2) for rt, r2 in b_raw], "b")
    u = union_frontier(a, b)
    assert coords(union_frontier(a, a)) == coords(upper_envelope(a))
    assert coords(u) == coords(union_frontier(b, a))
    for p in a.points + b.points:
        assert region_contains(u, (p.r_total, p.r2), tol=1e-9)


def test_union_rejects_mixed_channels():
    with pytest.raises(DomainError):
        union_frontier(frontier([(1.0, 0.0)]), frontier([(1.0, 0.0)], channel=channel_from_snr(9.0, 8.0)))


def test_parse_strategy():
    assert parse_strategy("SC", 4) == [general_sc(4)]
    assert [c.tag for c in parse_strategy("sm-opt", 8)] == ["sm-opt:4x2", "sm-opt:2x4"]
    assert parse_strategy("sm-uniform:2x2", 4) == [superposition_modulation(2, 2, probs_free=False)]
    assert parse_strategy("sm-opt-sum:4x2", 8)[0].sum_positions
    for bad in ("foo", "sm-opt:3x3", "sm-opt:2x2x1", "sm-opt:axb"):
        with pytest.raises(DomainError):
            parse_strategy(bad, 4)


def test_ts_frontier_is_a_segment():
    env = upper_envelope(ts_frontier(CH, 4))
    slopes = np.diff(env.r_total) / np.diff(env.r2)
    np.testing.assert_allclose(slopes, slopes[0], rtol=1e-9)
    assert env.r2[0] == 0.0
    assert env.r_total[-1] == pytest.approx(env.r2[-1])


def test_union_tag_pools_parts():
    f = strategy_frontier(CH, "ts+sm-uniform", 4, theta_grid=(0.0, 0.5),
                          opts=OptimizerOptions(restarts=1), alpha_points=3)
    assert len(f) == 5
    assert f.strategy == "ts+sm-uniform"


def test_sweep_rejects_bad_grid():
    with pytest.raises(DomainError):
        sweep_frontier(CH, general_sc(4), 4, theta_grid=(0.6,))
    with pytest.raises(DomainError):
        sweep_frontier(CH, general_sc(4), 4, theta_grid=(0.3, 0.1))


def test_higher_snr_region_dominates():
    grid = (0.0, 0.25, 0.5)
    opts = OptimizerOptions(restarts=1)
    low = sweep_frontier(CH, superposition_modulation(2, 2), 4, grid, opts)
    high = sweep_frontier(CH.shifted(1.0), superposition_modulation(2, 2), 4, grid, opts)
    for p in low.points:
        assert region_contains(high, (p.r_total, p.r2), tol=1e-6)
    assert all(p.converged for p in low.points)
