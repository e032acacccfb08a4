"""Transmission strategies as structural restrictions on the joint table P_UX.

* general superposition coding (SC): |U| = M, any joint table;
* superposition modulation (SM) with sub-alphabet sizes (m1, m2): |U| = m2 and
  cloud ``i`` may only use the contiguous block of symbols
  ``[i*m1, (i+1)*m1)``; taps either optimized or pinned to 1/M;
* time sharing (TS) between two point-to-point standard M-PAM links.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel_model import DomainError, JointDistribution, _is_power_of_two, standard_pam
from .mutual_info import DEFAULT_QUAD, mi_x_y

GENERAL_SC = "SC"
SUPERPOSITION_MODULATION = "SM"
TIME_SHARING = "TS"


def _check_factorization(m1, m2, m=None):
    if m1 < 2 or m2 < 2:
        raise DomainError(f"SM needs m1, m2 >= 2, got ({m1}, {m2})")
    if m is not None and m1 * m2 != m:
        raise DomainError(f"m1 * m2 = {m1 * m2} does not factor M = {m}")


def sm_support(m1, m2):
    """Boolean (m2, m1*m2) mask with row ``i`` set on columns ``[i*m1, (i+1)*m1)``."""
    _check_factorization(m1, m2)
    return np.kron(np.eye(m2, dtype=bool), np.ones((1, m1), dtype=bool))


@dataclass(frozen=True)
class StrategyConstraint:
    """Which joint tables (and positions) a strategy may use.

    ``positions_free`` is False only for fully pinned baselines, where the
    symbols stay on the power-normalised standard grid.
    """

    kind: str
    m: int
    m1: int | None = None
    m2: int | None = None
    probs_free: bool = True
    positions_free: bool = True
    sum_positions: bool = False

    def __post_init__(self):
        if self.kind == SUPERPOSITION_MODULATION:
            _check_factorization(self.m1, self.m2, self.m)
            if self.sum_positions and (self.m1 % 2 or self.m2 % 2):
                raise DomainError("sum-structured SM needs even m1 and m2")
        elif self.kind == GENERAL_SC:
            if self.m < 2:
                raise DomainError("SC needs M >= 2")
        elif self.kind == TIME_SHARING:
            if not _is_power_of_two(self.m) or self.m < 2:
                raise DomainError(f"TS needs M a power of two, got {self.m}")
        else:
            raise DomainError(f"unknown strategy kind {self.kind!r}")

    @property
    def u_size(self):
        if self.kind == SUPERPOSITION_MODULATION:
            return self.m2
        if self.kind == GENERAL_SC:
            return self.m
        return None

    @property
    def support_mask(self):
        if self.kind == SUPERPOSITION_MODULATION:
            return sm_support(self.m1, self.m2)
        if self.kind == GENERAL_SC:
            return np.ones((self.m, self.m), dtype=bool)
        return None

    @property
    def tag(self):
        if self.kind == SUPERPOSITION_MODULATION:
            base = "sm-opt" if self.probs_free else "sm-uniform"
            if self.sum_positions:
                base += "-sum"
            if not self.positions_free:
                base += "-fixed"
            return f"{base}:{self.m1}x{self.m2}"
        if self.kind == GENERAL_SC:
            return "sc"
        return "ts"


def general_sc(m):
    return StrategyConstraint(GENERAL_SC, m)


def superposition_modulation(m1, m2, probs_free=True, positions_free=True, sum_positions=False):
    return StrategyConstraint(SUPERPOSITION_MODULATION, m1 * m2, m1, m2, probs_free, positions_free,
                              sum_positions)


def time_sharing(m):
    return StrategyConstraint(TIME_SHARING, m, probs_free=False, positions_free=False)


def uniform_sm_joint(m1, m2, m):
    """Taps fixed at 1/M on the SM support."""
    _check_factorization(m1, m2, m)
    return JointDistribution(sm_support(m1, m2) / float(m))


def enumerate_sm_configs(m):
    """All (m1, m2) with m1, m2 >= 2 and m1*m2 = M, ordered by m2 ascending."""
    if m < 4:
        return []
    return [(m // m2, m2) for m2 in range(2, m // 2 + 1) if m % m2 == 0]


def ts_rates(channel, m, quad=DEFAULT_QUAD):
    """Point-to-point rates of power-normalised standard M-PAM at both SNRs."""
    constellation, joint = standard_pam(m, channel.power)
    q = joint.probs.sum(axis=0)
    return (
        mi_x_y(constellation, q, channel.sigma1_sq, quad),
        mi_x_y(constellation, q, channel.sigma2_sq, quad),
    )


def ts_frontier(channel, m, alpha_grid=None, quad=DEFAULT_QUAD):
    """Time-sharing segment: fraction ``alpha`` of channel uses goes to user 1.

    Points are ``(R1 + R2, R2) = (alpha R1bar + (1-alpha) R2bar, (1-alpha) R2bar)``;
    user 2's rate is a common message so user 1 also receives it.
    """
    from .region import FrontierPoint, RegionFrontier

    if not _is_power_of_two(int(m)) or m < 2:
        raise DomainError(f"M must be a power of two >= 2, got {m}")
    alphas = np.linspace(0.0, 1.0, 51) if alpha_grid is None else np.asarray(alpha_grid, float)
    if np.any(alphas < 0) or np.any(alphas > 1):
        raise DomainError("alpha grid must lie in [0, 1]")
    r1bar, r2bar = ts_rates(channel, m, quad)
    tag = time_sharing(m).tag
    points = [
        FrontierPoint(
            r_total=float(a * r1bar + (1.0 - a) * r2bar),
            r2=float((1.0 - a) * r2bar),
            theta=None,
            strategy=tag,
            alpha=float(a),
        )
        for a in alphas
    ]
    return RegionFrontier.from_points(points, channel, tag)
