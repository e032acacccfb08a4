"""Degraded two-user AWGN broadcast channel and the shared probability types.

Everything here is an immutable value. Arrays handed to the constructors are
copied and frozen (``writeable = False``) so they can be shared freely between
optimizer restarts and sweep points.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class DomainError(ValueError):
    """An argument lies outside the domain of an operation."""


class DegradednessError(DomainError):
    """User 1 must be the strictly less noisy receiver."""


def _frozen(a, dtype=float):
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


def _is_power_of_two(m):
    return m >= 1 and (m & (m - 1)) == 0


@dataclass(frozen=True)
class BroadcastChannel:
    """Power budget and per-user noise variances (user 1 is the strong user)."""

    power: float
    snr1_db: float
    snr2_db: float
    sigma1_sq: float
    sigma2_sq: float

    @property
    def delta_snr_db(self):
        return self.snr1_db - self.snr2_db

    def shifted(self, delta_db):
        """Same power budget with both SNRs raised by ``delta_db``."""
        return channel_from_snr(self.snr1_db + delta_db, self.snr2_db + delta_db, self.power)


@dataclass(frozen=True, eq=False)
class Constellation:
    symbols: np.ndarray

    def __post_init__(self):
        sym = _frozen(self.symbols)
        if sym.ndim != 1 or sym.size < 1:
            raise DomainError("constellation needs at least one symbol")
        if np.any(np.diff(sym) <= 0):
            raise DomainError("constellation symbols must be strictly increasing")
        object.__setattr__(self, "symbols", sym)

    def __len__(self):
        return self.symbols.size

    def __eq__(self, other):
        return isinstance(other, Constellation) and np.array_equal(self.symbols, other.symbols)

    __hash__ = None

    def is_symmetric(self, tol=1e-9):
        return bool(np.allclose(-self.symbols[::-1], self.symbols, rtol=0.0, atol=tol))


@dataclass(frozen=True, eq=False)
class JointDistribution:
    """Joint table ``probs[i, j] = Pr{U = u_i, X = x_j}``."""

    probs: np.ndarray

    def __post_init__(self):
        p = _frozen(self.probs)
        if p.ndim != 2:
            raise DomainError("joint distribution must be a 2-D table")
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise DomainError("joint probabilities must be finite and nonnegative")
        if abs(p.sum() - 1.0) > 1e-12:
            raise DomainError(f"joint probabilities sum to {p.sum()!r}, not 1")
        if p.shape[0] > p.shape[1]:
            raise DomainError("|U| may not exceed the input alphabet size")
        object.__setattr__(self, "probs", p)

    @property
    def u_size(self):
        return self.probs.shape[0]

    @property
    def x_size(self):
        return self.probs.shape[1]

    def __eq__(self, other):
        return isinstance(other, JointDistribution) and np.array_equal(self.probs, other.probs)

    __hash__ = None

    @classmethod
    def normalized(cls, table):
        """Build from a nonnegative table, rescaling it to unit mass."""
        t = np.asarray(table, dtype=float)
        return cls(t / t.sum())


def channel_from_snr(snr1_db, snr2_db, power=1.0):
    """Noise variances ``sigma_i^2 = P * 10^(-SNR_i/10)`` for the two users."""
    if not power > 0:
        raise DomainError(f"power must be positive, got {power!r}")
    if not snr1_db > snr2_db:
        raise DegradednessError(
            f"user 1 must be the stronger receiver (snr1_db={snr1_db}, snr2_db={snr2_db})"
        )
    return BroadcastChannel(
        power=float(power),
        snr1_db=float(snr1_db),
        snr2_db=float(snr2_db),
        sigma1_sq=float(power * 10.0 ** (-snr1_db / 10.0)),
        sigma2_sq=float(power * 10.0 ** (-snr2_db / 10.0)),
    )


def standard_pam(m, power=1.0):
    """Equiprobable M-PAM on the odd-integer grid, scaled to average energy ``power``.

    The returned joint is the identity coupling ``p_ij = [i == j] / M``.
    """
    if not isinstance(m, (int, np.integer)) or m < 2 or not _is_power_of_two(int(m)):
        raise DomainError(f"M must be a power of two >= 2, got {m!r}")
    if not power > 0:
        raise DomainError(f"power must be positive, got {power!r}")
    m = int(m)
    raw = np.arange(-(m - 1), m, 2, dtype=float)
    # mean of the squared odd integers is (M^2 - 1)/3
    scale = np.sqrt(power * 3.0 / (m * m - 1))
    return Constellation(raw * scale), JointDistribution(np.eye(m) / m)


@dataclass(frozen=True)
class Marginals:
    u_marginal: np.ndarray
    x_marginal: np.ndarray
    x_given_u: np.ndarray
    empty_rows: tuple


def marginals(joint):
    """Marginals of U and X and the conditional rows ``Pr{X | U = u_i}``.

    Rows of zero mass get a row of NaN in ``x_given_u`` and are listed in
    ``empty_rows`` instead of raising.
    """
    p = joint.probs if isinstance(joint, JointDistribution) else np.asarray(joint, dtype=float)
    pu = p.sum(axis=1)
    px = p.sum(axis=0)
    cond = np.full_like(p, np.nan)
    live = pu > 0
    cond[live] = p[live] / pu[live, None]
    empty = tuple(int(i) for i in np.flatnonzero(~live))
    return Marginals(_frozen(pu), _frozen(px), _frozen(cond), empty)


def average_power(joint, constellation):
    """``sum_ij p_ij x_j^2``."""
    p = joint.probs
    x = constellation.symbols
    if p.shape[1] != x.size:
        raise DomainError(f"joint has {p.shape[1]} columns but constellation has {x.size} symbols")
    return float(p.sum(axis=0) @ (x * x))
