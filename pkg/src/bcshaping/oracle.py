"""Slow, independent reference computations for testing.

Monte Carlo mutual information
------------------------------
Draws come from NumPy's Philox-4x64-10 bit generator keyed with
``key = (seed, 0)`` and counter starting at zero. Every sample consumes three
doubles from ``Generator.random`` (53-bit, ``(u64 >> 11) * 2**-53``):
``u0`` picks the (u, x) pair by inverse CDF over the row-major joint table,
``u1, u2`` give the noise by Box-Muller, ``z = sqrt(-2 log(1 - u1)) cos(2 pi u2)``.
The standard error is the batch-means estimate over ``n_batches`` contiguous
batches.

Exhaustive search
-----------------
All joint tables on the lattice ``{0, step, 2 step, ...}`` of the allowed
support, times all symmetric constellations on the same lattice, are scored
with a plain NumPy evaluation of the two rates.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .channel_model import Constellation, DomainError, JointDistribution, standard_pam
from .mutual_info import DEFAULT_QUAD, LN2, rates_batch
from .optimizer import OptResult
from .strategies import GENERAL_SC, SUPERPOSITION_MODULATION, uniform_sm_joint

MI_KINDS = ("U;Y", "X;Y|U", "X;Y")
MAX_GRID_POINTS = 10**8


@dataclass(frozen=True)
class McEstimate:
    value: float
    std_error: float
    samples: int
    seed: int


def _philox(seed):
    return np.random.Generator(np.random.Philox(key=np.array([seed, 0], dtype=np.uint64)))


def _joint_and_symbols(joint, constellation):
    p = joint.probs if isinstance(joint, JointDistribution) else np.asarray(joint, dtype=float)
    x = np.asarray(getattr(constellation, "symbols", constellation), dtype=float)
    if p.ndim != 2 or p.shape[1] != x.size:
        raise DomainError(f"joint of shape {p.shape} does not match {x.size} symbols")
    if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
        raise DomainError("joint must be a probability table")
    return p, x


def mc_mutual_info(joint, constellation, sigma_sq, which="X;Y", samples=10**6, seed=0,
                   n_batches=100, chunk=1 << 16):
    """Sample-mean estimate (bits) of one of ``U;Y``, ``X;Y|U``, ``X;Y``."""
    if which not in MI_KINDS:
        raise DomainError(f"which must be one of {MI_KINDS}, got {which!r}")
    if samples < 10**4:
        raise DomainError(f"need at least 1e4 samples, got {samples}")
    if not sigma_sq > 0:
        raise DomainError(f"noise variance must be positive, got {sigma_sq!r}")
    p, x = _joint_and_symbols(joint, constellation)
    k_size, m_size = p.shape
    sigma = math.sqrt(sigma_sq)
    flat_cdf = np.cumsum(p.ravel())
    flat_cdf[-1] = 1.0
    pi = p.sum(axis=1)
    q = p.sum(axis=0)
    with np.errstate(divide="ignore"):
        log_p = np.log(p)
        log_pi = np.log(pi)
        log_q = np.log(q)

    # deterministic terms are exactly zero, not zero up to rounding
    single_row = np.count_nonzero(p, axis=1) == 1
    single_symbol = np.count_nonzero(q) == 1
    single_cloud = np.count_nonzero(pi) == 1
    rng = _philox(seed)
    values = np.empty(samples)
    done = 0
    while done < samples:
        n = min(chunk, samples - done)
        u = rng.random((n, 3))
        idx = np.minimum(np.searchsorted(flat_cdf, u[:, 0], side="right"), p.size - 1)
        ui, xi = np.divmod(idx, m_size)
        z = np.sqrt(-2.0 * np.log1p(-u[:, 1])) * np.cos(2.0 * np.pi * u[:, 2])
        y = x[xi] + sigma * z
        log_g = -0.5 * ((y[:, None] - x[None, :]) / sigma) ** 2  # (n, M)
        own = log_g[np.arange(n), xi]
        if which == "X;Y":
            val = own - logsumexp(log_g + log_q, axis=1)
        else:
            cloud = logsumexp(log_g + log_p[ui], axis=1) - log_pi[ui]
            if which == "U;Y":
                val = cloud - logsumexp(log_g + log_q, axis=1)
            else:
                val = own - cloud
        if which == "X;Y|U":
            val[single_row[ui]] = 0.0
        elif single_symbol or (which == "U;Y" and single_cloud):
            val[:] = 0.0
        values[done:done + n] = val / LN2
        done += n

    batches = np.array_split(values, n_batches)
    means = np.array([b.mean() for b in batches])
    se = float(means.std(ddof=1) / math.sqrt(n_batches))
    return McEstimate(float(values.mean()), se, int(samples), int(seed))


def _lattice(n_parts, steps):
    """All compositions of ``steps`` into ``n_parts`` nonnegative parts, lexicographic."""
    out = []
    for bars in itertools.combinations(range(steps + n_parts - 1), n_parts - 1):
        edges = (-1,) + bars + (steps + n_parts - 1,)
        out.append([edges[i + 1] - edges[i] - 1 for i in range(n_parts)])
    return np.array(out[::-1], dtype=float)


def _position_halves(half, step, limit):
    """Strictly increasing positive ``half``-tuples on the step lattice up to ``limit``."""
    levels = step * np.arange(1, int(math.floor(limit / step + 1e-9)) + 1)
    combos = list(itertools.combinations(levels, half))
    return np.array(combos, dtype=float).reshape(len(combos), half)


def grid_search_optimize(channel, theta, constraint, m, grid_step=0.01, power_tolerance=1e-4,
                         saturate_power=False, quad=DEFAULT_QUAD, max_points=MAX_GRID_POINTS,
                         batch=4096):
    """Exhaustive maximum of ``theta R1 + (1 - theta) R2`` for tiny instances.

    With ``saturate_power`` the lattice magnitudes, with the outermost one set
    to 1, only fix the shape of the constellation, which is then scaled onto the budget for every joint.
    Both rates are nondecreasing under scaling up (less noise is a less
    degraded channel), so this gives the same maximum at a fraction of the
    cost. Ties keep the first candidate in (joint, positions) lexicographic
    order.
    """
    if m > 4 or m % 2:
        raise DomainError(f"grid search supports M in {{2, 4}}, got {m}")
    if constraint.kind not in (GENERAL_SC, SUPERPOSITION_MODULATION) or constraint.m != m:
        raise DomainError("grid search needs an SC or SM constraint matching M")
    if not 0.0 <= theta <= 1.0:
        raise DomainError(f"theta must lie in [0, 1], got {theta!r}")
    steps = int(round(1.0 / grid_step))
    if abs(steps * grid_step - 1.0) > 1e-9:
        raise DomainError("grid_step must divide 1")
    budget = channel.power
    mask = constraint.support_mask

    n_tables = math.comb(steps + int(mask.sum()) - 1, int(mask.sum()) - 1) if constraint.probs_free else 1
    if n_tables > max_points:
        raise DomainError(f"grid has over {max_points} joint tables, above the guard")
    if constraint.probs_free:
        free = _lattice(int(mask.sum()), steps) / steps
        tables = np.zeros((free.shape[0],) + mask.shape)
        tables[:, mask] = free
    else:
        tables = uniform_sm_joint(constraint.m1, constraint.m2, m).probs[None]

    if constraint.positions_free:
        if saturate_power:
            # shapes only: outermost magnitude pinned to 1
            inner = _position_halves(m // 2 - 1, grid_step, 1.0 - 0.5 * grid_step)
            halves = np.hstack([inner, np.ones((inner.shape[0], 1))])
        else:
            halves = _position_halves(m // 2, grid_step, math.sqrt(budget + power_tolerance))
    else:
        halves = standard_pam(m, budget)[0].symbols[m // 2:][None]
    total = tables.shape[0] * halves.shape[0]
    if total > max_points:
        raise DomainError(f"grid has {total} points, above the guard of {max_points}")

    best = (-np.inf, None)
    for h in halves:
        x = np.concatenate([-h[::-1], h])
        for start in range(0, tables.shape[0], batch):
            p = tables[start:start + batch]
            power = p.sum(axis=1) @ (x * x)
            if saturate_power and constraint.positions_free:
                scales = np.sqrt(budget / power)
                r1, r2 = rates_batch(p, scales[:, None] * x, channel.sigma1_sq, channel.sigma2_sq, quad)
                feasible = np.ones(len(p), dtype=bool)
            else:
                r1, r2 = rates_batch(p, x, channel.sigma1_sq, channel.sigma2_sq, quad)
                feasible = power <= budget + power_tolerance
            obj = np.where(feasible, theta * r1 + (1.0 - theta) * r2, -np.inf)
            k = int(np.argmax(obj))
            if obj[k] > best[0]:
                xk = x * scales[k] if saturate_power and constraint.positions_free else x
                best = (float(obj[k]), (p[k].copy(), xk, float(r1[k]), float(r2[k]), float(power[k])))
    if best[1] is None:
        raise DomainError("no grid point meets the power budget")
    f, (p, x, r1, r2, _) = best
    return OptResult(
        joint=JointDistribution(p),
        constellation=Constellation(x),
        r1=max(r1, 0.0),
        r2=max(r2, 0.0),
        objective=f,
        multiplier_s=0.0,
        achieved_power=float(p.sum(axis=0) @ (x * x)),
        converged=True,
        iterations=int(total),
        theta=float(theta),
    )
