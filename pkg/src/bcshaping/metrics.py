"""Comparing two strategies: SNR savings and user-1 rate gains.

Shaping gain of A over B at a target pair: the smallest common SNR increase
``delta`` (dB, applied to both users) after which B's region contains the
pair. Rate gain at a common rate ``r2``: the relative increase, in percent, of
the total rate of user 1 on A's boundary over B's boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .region import region_contains, upper_envelope

INF_GAIN = math.inf


@dataclass(frozen=True)
class SearchOptions:
    bracket: tuple = (0.0, 6.0)
    tolerance_db: float = 0.01
    contain_tol: float = 1e-9


@dataclass(frozen=True)
class GainReport:
    r2: np.ndarray
    delta_snr_db: np.ndarray
    g_r1_percent: np.ndarray
    mg_snr_db: float
    mg_r1_percent: float
    argmax_r2_snr: float
    argmax_r2_rate: float
    strategy_a: str
    strategy_b: str
    channel: object
    flags: tuple = field(default=())

    @property
    def delta_snr_gap_db(self):
        return self.channel.snr1_db - self.channel.snr2_db


class FrontierCache:
    """Memoizes B's enveloped frontier per SNR shift."""

    def __init__(self, builder, channel):
        self.builder = builder
        self.channel = channel
        self.store = {}

    def __call__(self, delta_db):
        key = round(float(delta_db), 12)
        if key not in self.store:
            env = upper_envelope(self.builder(self.channel.shifted(key)))
            self.store[key] = env
        return self.store[key]

    @property
    def probes(self):
        return sorted(self.store)


def _as_cache(builder, channel):
    return builder if isinstance(builder, FrontierCache) else FrontierCache(builder, channel)


def shaping_gain_at(target, frontier_builder_b, channel, search_opts=SearchOptions()):
    """Smallest shift (dB) after which B's region contains ``target = (r_total, r2)``.

    Bisection on ``search_opts.bracket``; returns the upper end of the final
    bracket, ``0.0`` when B already contains the target, and ``inf`` when even
    the top of the bracket is not enough.
    """
    cache = _as_cache(frontier_builder_b, channel)
    tol = search_opts.contain_tol
    lo, hi = search_opts.bracket
    if region_contains(cache(lo), target, tol):
        return 0.0 if lo == 0 else lo
    if not region_contains(cache(hi), target, tol):
        return INF_GAIN
    while hi - lo > search_opts.tolerance_db:
        mid = 0.5 * (lo + hi)
        if region_contains(cache(mid), target, tol):
            hi = mid
        else:
            lo = mid
    return hi


def default_r2_grid(frontier, points=101):
    env = frontier if frontier.enveloped else upper_envelope(frontier)
    return np.linspace(0.0, env.max_r2, points)


def max_shaping_gain(a_frontier, b_builder, channel, r2_grid=None, search_opts=SearchOptions()):
    """Maximum over ``r2_grid`` of the shaping gain at A's boundary points.

    Containment only grows with the shift, so the maximum is the smallest shift
    at which B contains every target; it is found with one bisection whose B
    frontiers are shared by all targets. Each target then gets its own shift,
    bracketed by the probes already made and refined by linear interpolation of
    the reach deficit inside its bracket.
    """
    a_env = upper_envelope(a_frontier)
    grid = default_r2_grid(a_env) if r2_grid is None else np.asarray(r2_grid, dtype=float)
    targets = [(float(a_env.value_at(r)), float(r)) for r in grid]
    cache = _as_cache(b_builder, channel)
    tol = search_opts.contain_tol
    flags = []

    def all_in(delta):
        env = cache(delta)
        return all(region_contains(env, t, tol) for t in targets)

    lo, hi = search_opts.bracket
    if not all_in(lo):
        if not all_in(hi):
            flags.append("bracket_exhausted")
        else:
            while hi - lo > search_opts.tolerance_db:
                mid = 0.5 * (lo + hi)
                if all_in(mid):
                    hi = mid
                else:
                    lo = mid

    deltas = np.array([_sample_shift(cache, t, search_opts) for t in targets])
    finite = np.isfinite(deltas)
    k = int(np.argmax(np.where(finite, deltas, -np.inf))) if finite.any() else 0
    mg = float(np.max(deltas)) if deltas.size else 0.0
    return GainReport(
        r2=grid,
        delta_snr_db=deltas,
        g_r1_percent=np.full(grid.shape, np.nan),
        mg_snr_db=mg,
        mg_r1_percent=float("nan"),
        argmax_r2_snr=float(grid[k]) if grid.size else float("nan"),
        argmax_r2_rate=float("nan"),
        strategy_a=a_frontier.strategy,
        strategy_b=cache(0.0).strategy,
        channel=channel,
        flags=tuple(flags),
    )


def _deficit(env, target):
    r_total, r2 = target
    return r_total - float(env.value_at(min(max(r2, 0.0), env.max_r2)))


def _sample_shift(cache, target, search_opts):
    """Shift for one target from the probes already in ``cache``.

    Within the final bisection tolerance this is the upper probe, as in
    ``shaping_gain_at``; wider brackets are refined by interpolating the reach
    deficit linearly in the shift.
    """
    tol = search_opts.contain_tol
    lo_b, hi_b = search_opts.bracket
    below, above = lo_b, None
    for d in cache.probes:
        if region_contains(cache(d), target, tol):
            if above is None or d < above:
                above = d
        elif d > below:
            below = d
    if above is None:
        return INF_GAIN
    if above <= lo_b:
        return float(above)
    if above - below <= search_opts.tolerance_db + 1e-12:
        return float(above)
    if below not in cache.store or target[1] > cache(below).max_r2:
        return float(above)
    # enclosing probes may be far apart for targets other than the maximizer
    d_lo = _deficit(cache(below), target)
    d_hi = _deficit(cache(above), target)
    if d_lo > 0 >= d_hi:
        return float(below + (above - below) * d_lo / (d_lo - d_hi))
    return float(above)


def max_rate_gain(a_frontier, b_frontier, r2_grid=None, restrict_to_a_better=True):
    """Relative user-1 gains ``100 ((R1A+R2) - (R1B+R2)) / (R1B+R2)`` along ``r2``.

    Samples where ``r2`` exceeds either boundary are skipped (NaN). With
    ``restrict_to_a_better`` samples where A is below B are floored at 0 and the
    maximum only looks where A is not below B; otherwise the raw signed samples
    are reported. The unrestricted maximum is in the flags either way.
    """
    a_env = upper_envelope(a_frontier)
    b_env = upper_envelope(b_frontier)
    if a_env.channel is not None and b_env.channel is not None and a_env.channel != b_env.channel:
        from .channel_model import DomainError

        raise DomainError("rate gain needs frontiers for the same channel")
    grid = default_r2_grid(a_env) if r2_grid is None else np.asarray(r2_grid, dtype=float)
    ra = a_env.value_at(grid)
    rb = b_env.value_at(grid)
    with np.errstate(invalid="ignore", divide="ignore"):
        g = 100.0 * (ra - rb) / rb
    g = np.where(np.isfinite(g), g, np.nan)
    flags = []
    if np.isnan(g).any():
        flags.append(f"skipped_samples={int(np.isnan(g).sum())}")
    valid = ~np.isnan(g)
    unrestricted = float(np.nanmax(g)) if valid.any() else float("nan")
    pick = valid & (g >= 0) if restrict_to_a_better else valid
    if pick.any():
        k = int(np.flatnonzero(pick)[np.argmax(g[pick])])
        mg, arg = float(g[k]), float(grid[k])
    else:
        mg, arg = 0.0, float("nan")
    if restrict_to_a_better:
        g = np.where(valid, np.maximum(g, 0.0), np.nan)
    flags.append(f"unrestricted_max={unrestricted!r}")
    return GainReport(
        r2=grid,
        delta_snr_db=np.full(grid.shape, np.nan),
        g_r1_percent=g,
        mg_snr_db=float("nan"),
        mg_r1_percent=mg,
        argmax_r2_snr=float("nan"),
        argmax_r2_rate=arg,
        strategy_a=a_frontier.strategy,
        strategy_b=b_frontier.strategy,
        channel=a_env.channel,
        flags=tuple(flags),
    )
