import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bcshaping.channel_model import channel_from_snr
from bcshaping.metrics import (
    INF_GAIN,
    FrontierCache,
    SearchOptions,
    max_rate_gain,
    max_shaping_gain,
    shaping_gain_at,
)
from bcshaping.region import FrontierPoint, RegionFrontier, upper_envelope
from bcshaping.strategies import ts_frontier

CH = channel_from_snr(10.0, 8.0)


def ts_builder(channel):
    return ts_frontier(channel, 4, np.linspace(0.0, 1.0, 11))


def test_identical_strategies_have_zero_gain():
    a = ts_builder(CH)
    rep = max_shaping_gain(a, ts_builder, CH)
    assert rep.mg_snr_db == 0.0
    assert np.all(rep.delta_snr_db == 0.0)
    rate = max_rate_gain(a, a)
    assert rate.mg_r1_percent == 0.0
    assert np.all(rate.g_r1_percent[~np.isnan(rate.g_r1_percent)] == 0.0)


@pytest.mark.parametrize("shift", [0.37, 1.0, 2.5])
def test_constructed_shift_is_recovered(shift):
    # A is B itself on a channel `shift` dB better: the gain is the shift
    a = ts_builder(CH.shifted(shift))
    opts = SearchOptions(tolerance_db=0.01)
    rep = max_shaping_gain(a, ts_builder, CH, search_opts=opts)
    assert rep.mg_snr_db == pytest.approx(shift, abs=0.01)
    assert rep.mg_snr_db >= shift - 1e-9
    single = shaping_gain_at((float(upper_envelope(a).r_total[-1]), float(a.max_r2)), ts_builder, CH, opts)
    assert single == pytest.approx(shift, abs=0.01)


def test_global_max_matches_per_target_bisection():
    a = ts_builder(CH.shifted(1.2))
    cache = FrontierCache(ts_builder, CH)
    rep = max_shaping_gain(a, cache, CH)
    env = upper_envelope(a)
    direct = [shaping_gain_at((float(env.value_at(r)), float(r)), ts_builder, CH) for r in rep.r2]
    assert rep.mg_snr_db == pytest.approx(max(direct), abs=0.01)
    finite = np.isfinite(rep.delta_snr_db)
    assert np.all(rep.delta_snr_db[finite] <= rep.mg_snr_db + 1e-12)


def test_refinement_tightens():
    a = ts_builder(CH.shifted(0.8))
    coarse = max_shaping_gain(a, ts_builder, CH, search_opts=SearchOptions(tolerance_db=0.1)).mg_snr_db
    fine = max_shaping_gain(a, ts_builder, CH, search_opts=SearchOptions(tolerance_db=0.001)).mg_snr_db
    assert fine <= coarse + 1e-12
    assert fine == pytest.approx(0.8, abs=0.001)


def test_out_of_bracket_is_infinite():
    a = ts_builder(CH.shifted(3.0))
    opts = SearchOptions(bracket=(0.0, 1.0))
    rep = max_shaping_gain(a, ts_builder, CH, search_opts=opts)
    assert rep.mg_snr_db == INF_GAIN
    assert "bracket_exhausted" in rep.flags
    assert shaping_gain_at((float(a.r_total.max()), 0.0), ts_builder, CH, opts) == INF_GAIN


def test_rate_gain_of_scaled_frontier():
    # A = B with every total rate up by 10 percent
    b = ts_builder(CH)
    a = RegionFrontier.from_points(
        [FrontierPoint(1.1 * p.r_total, p.r2, p.theta, "a") for p in b.points], CH, "a")
    rep = max_rate_gain(a, b, r2_grid=np.linspace(0.0, 0.95 * b.max_r2, 21))
    np.testing.assert_allclose(rep.g_r1_percent, 10.0, rtol=1e-12)
    assert rep.mg_r1_percent == pytest.approx(10.0)


def test_rate_gain_restriction_and_skips():
    b = ts_builder(CH)
    a = RegionFrontier.from_points(
        [FrontierPoint(0.9 * p.r_total, p.r2, p.theta, "a") for p in b.points], CH, "a")
    rep = max_rate_gain(a, b)
    assert rep.mg_r1_percent == 0.0 and math.isnan(rep.argmax_r2_rate)
    raw = max_rate_gain(a, b, restrict_to_a_better=False)
    assert raw.mg_r1_percent == pytest.approx(-10.0)
    grid = np.array([0.0, 10.0])
    rep = max_rate_gain(b, b, r2_grid=grid)
    assert np.isnan(rep.g_r1_percent[1])
    assert "skipped_samples=1" in rep.flags


@settings(max_examples=10)
@given(st.floats(0.05, 2.0), st.floats(0.05, 2.0))
def test_gain_antisymmetry(s1, s2):
    # the better of two shifted copies gains, the worse does not
    lo, hi = sorted((s1, s2))
    a = ts_builder(CH.shifted(hi))
    rep = max_shaping_gain(a, lambda ch: ts_builder(ch.shifted(lo)), CH)
    back = max_shaping_gain(ts_builder(CH.shifted(lo)), lambda ch: ts_builder(ch.shifted(hi)), CH)
    assert rep.mg_snr_db == pytest.approx(hi - lo, abs=0.011)
    assert back.mg_snr_db == 0.0
