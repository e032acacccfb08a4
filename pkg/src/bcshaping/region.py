"""Rate-region frontiers in the (R2, R1 + R2) plane.

User 2's message is common, so user 1 decodes it too and an operating point is
reported as ``(r_total, r2) = (R1 + R2, R2)``. A region is closed under
lowering either coordinate and under time sharing, so its boundary is the
decreasing part of the upper concave hull of the operating points.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .channel_model import DomainError
from .optimizer import BracketError, OptimizerOptions, optimize_rates

log = logging.getLogger(__name__)

DEFAULT_THETA_GRID = tuple(np.linspace(0.0, 0.5, 51))
_SAME_R2 = 1e-12


@dataclass(frozen=True)
class FrontierPoint:
    r_total: float
    r2: float
    theta: float | None
    strategy: str
    converged: bool = True
    alpha: float | None = None
    result: object = None

    @property
    def r1(self):
        return self.r_total - self.r2


@dataclass(frozen=True)
class RegionFrontier:
    points: tuple
    channel: object
    strategy: str
    enveloped: bool = False

    @classmethod
    def from_points(cls, points, channel, strategy, enveloped=False):
        pts = sorted(points, key=lambda pt: (pt.r2, pt.r_total))
        return cls(tuple(pts), channel, strategy, enveloped)

    @property
    def r2(self):
        return np.array([pt.r2 for pt in self.points])

    @property
    def r_total(self):
        return np.array([pt.r_total for pt in self.points])

    @property
    def max_r2(self):
        return float(self.r2.max())

    def __len__(self):
        return len(self.points)

    def value_at(self, r2):
        """Largest ``r_total`` the (enveloped) region reaches at common rate ``r2``.

        NaN beyond the largest common rate of the frontier.
        """
        env = self if self.enveloped else upper_envelope(self)
        xs, ys = env.r2, env.r_total
        r2 = np.asarray(r2, dtype=float)
        out = np.interp(r2, xs, ys, left=ys[0])
        return np.where(r2 > xs[-1] + 1e-12, np.nan, out)


def sweep_frontier(channel, constraint, m, theta_grid=DEFAULT_THETA_GRID, opts=OptimizerOptions(),
                   chain=True):
    """One optimized operating point per ``theta`` in ``[0, 1/2]``.

    With ``chain`` the solution at the previous ``theta`` is tried as an extra
    start. A point whose solve fails is kept with ``converged=False``.
    """
    thetas = np.asarray(theta_grid, dtype=float)
    if thetas.size == 0 or np.any(thetas < 0) or np.any(thetas > 0.5) or np.any(np.diff(thetas) < 0):
        raise DomainError("theta grid must be ascending within [0, 1/2]")
    points = []
    prev = None
    for th in thetas:
        warm = (prev,) if chain and prev is not None else ()
        try:
            res = optimize_rates(channel, float(th), constraint, m, opts, warm_starts=warm)
        except BracketError as err:
            log.warning("theta=%.4f failed: %s", th, err)
            points.append(FrontierPoint(0.0, 0.0, float(th), constraint.tag, converged=False))
            continue
        prev = res
        points.append(
            FrontierPoint(
                r_total=res.r1 + res.r2,
                r2=res.r2,
                theta=float(th),
                strategy=constraint.tag,
                converged=res.converged,
                result=res,
            )
        )
    return RegionFrontier.from_points(points, channel, constraint.tag)


def _upper_hull(pts, tol):
    """Monotone-chain upper hull; collinear points are kept.

    The turn test is relative to the lengths of the two edges, so nearly
    coincident points cannot hide a dent.
    """
    hull = []
    for p in pts:
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            u = (b.r2 - a.r2, b.r_total - a.r_total)
            v = (p.r2 - a.r2, p.r_total - a.r_total)
            cross = u[0] * v[1] - u[1] * v[0]
            if cross > tol * np.hypot(*u) * np.hypot(*v):
                hull.pop()
            else:
                break
        hull.append(p)
    return hull


def upper_envelope(frontier, tol=1e-12):
    """Boundary of the region generated by the frontier's points.

    Keeps the decreasing branch of the upper concave hull in the
    ``(r2, r_total)`` plane, from the point of largest ``r_total`` to the point
    of largest ``r2``.
    """
    if isinstance(frontier, RegionFrontier):
        pts, channel, tag = frontier.points, frontier.channel, frontier.strategy
    else:
        pts, channel, tag = tuple(frontier), None, "points"
    if not pts:
        raise DomainError("envelope needs at least one point")
    ordered = sorted(pts, key=lambda pt: (pt.r2, -pt.r_total))
    # one point per r2 (equal up to rounding): the highest
    dedup = []
    for pt in ordered:
        if dedup and pt.r2 - dedup[-1].r2 <= _SAME_R2 * max(1.0, abs(pt.r2)):
            if pt.r_total > dedup[-1].r_total:
                dedup[-1] = pt
            continue
        dedup.append(pt)
    hull = _upper_hull(dedup, tol)
    top = max(range(len(hull)), key=lambda k: (hull[k].r_total, hull[k].r2))
    return RegionFrontier(tuple(hull[top:]), channel, tag, enveloped=True)


def region_contains(frontier, point, tol=1e-9):
    """True when ``(r_total, r2)`` is dominated by the region of ``frontier``."""
    r_total, r2 = point
    if r2 <= 0 and r_total <= 0:
        return True
    env = frontier if frontier.enveloped else upper_envelope(frontier)
    if r2 > env.max_r2 + tol:
        return False
    reach = float(env.value_at(min(max(r2, 0.0), env.max_r2)))
    return r_total <= reach + tol


def union_frontier(a, b):
    """Envelope of the union of two regions computed for the same channel."""
    if a.channel is not None and b.channel is not None and a.channel != b.channel:
        raise DomainError("cannot unite frontiers computed for different channels")
    tag = a.strategy if a.strategy == b.strategy else f"{a.strategy}|{b.strategy}"
    merged = RegionFrontier.from_points(a.points + b.points, a.channel or b.channel, tag)
    return upper_envelope(merged)


def parse_strategy(tag, m):
    """Constraints behind a strategy tag.

    ``sc``, ``ts``, ``sm-opt`` and ``sm-uniform`` (every SM factorization of M),
    or a single configuration such as ``sm-opt:2x4`` (m1 x m2).
    """
    from .strategies import enumerate_sm_configs, general_sc, superposition_modulation, time_sharing

    tag = tag.strip().lower()
    if tag == "sc":
        return [general_sc(m)]
    if tag == "ts":
        return [time_sharing(m)]
    base, _, cfg = tag.partition(":")
    if base not in ("sm-opt", "sm-uniform", "sm-opt-sum", "sm-uniform-sum"):
        raise DomainError(f"unknown strategy tag {tag!r}")
    free = base.startswith("sm-opt")
    summed = base.endswith("-sum")
    if cfg:
        try:
            m1, m2 = (int(v) for v in cfg.split("x"))
        except ValueError:
            raise DomainError(f"bad SM configuration in {tag!r}") from None
        if m1 * m2 != m:
            raise DomainError(f"{tag!r} does not factor M = {m}")
        return [superposition_modulation(m1, m2, probs_free=free, sum_positions=summed)]
    configs = enumerate_sm_configs(m)
    if not configs:
        raise DomainError(f"no SM configuration for M = {m}")
    return [superposition_modulation(m1, m2, probs_free=free, sum_positions=summed) for m1, m2 in configs]


def strategy_frontier(channel, tag, m, theta_grid=DEFAULT_THETA_GRID, opts=OptimizerOptions(),
                      alpha_points=51):
    """Raw frontier of a strategy tag; several SM configurations are pooled.

    Tags joined with ``+`` (``ts+sm-opt``) pool the points of every part, so the
    envelope is that of the union of the regions.
    """
    from .strategies import ts_frontier

    if "+" in tag:
        parts = [strategy_frontier(channel, t, m, theta_grid, opts, alpha_points) for t in tag.split("+")]
        return RegionFrontier.from_points(tuple(pt for fr in parts for pt in fr.points), channel, tag)
    constraints = parse_strategy(tag, m)
    if constraints[0].kind == "TS":
        return ts_frontier(channel, m, np.linspace(0.0, 1.0, alpha_points), opts.quad)
    frontiers = [sweep_frontier(channel, c, m, theta_grid, opts) for c in constraints]
    points = tuple(pt for fr in frontiers for pt in fr.points)
    return RegionFrontier.from_points(points, channel, tag)


def frontier_builder(tag, m, theta_grid=DEFAULT_THETA_GRID, opts=OptimizerOptions()):
    """``channel -> frontier`` closure for shaping-gain searches."""

    def build(channel):
        return strategy_frontier(channel, tag, m, theta_grid, opts)

    build.strategy = tag
    return build
