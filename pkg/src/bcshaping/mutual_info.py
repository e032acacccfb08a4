"""Mutual information of finite inputs over real AWGN, by Gauss-Hermite quadrature.

Every Gaussian expectation ``E[h(x_j + sigma Z)]`` is replaced by the
probabilists' Gauss-Hermite rule ``sum_n w_n h(x_j + sigma t_n)`` centred on
the symbol itself. All sums are carried in nats and converted to bits once,
on the way out.

For a joint table ``p[i, j]`` with U-marginal ``pi`` and X-marginal ``q`` let

    A_i(y) = sum_k p[i, k] g(y - x_k),   B(y) = sum_k q[k] g(y - x_k)

with the unnormalised kernel ``g(d) = exp(-d^2 / 2 sigma^2)`` (normalising
constants cancel in every ratio below). Then

    I(U;Y)   = sum_ij p_ij E_j[log A_i - log pi_i - log B]
    I(X;Y|U) = sum_ij p_ij E_j[log g(y - x_j) - log A_i + log pi_i]

so ``I(U;Y) + I(X;Y|U) = I(X;Y)`` holds exactly for the discretised sums too.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ._kernels import mixture_grads, mixture_sums
from .channel_model import DomainError, JointDistribution, marginals

LN2 = np.log(2.0)
TINY = 1e-300


@lru_cache(maxsize=None)
def _hermite_rule(order):
    t, w = np.polynomial.hermite_e.hermegauss(order)
    w = w / w.sum()
    t.setflags(write=False)
    w.setflags(write=False)
    return t, w


# NumPy's Hermite weights overflow a little above order 370
MAX_QUAD_ORDER = 300


@dataclass(frozen=True)
class QuadratureSpec:
    """Fixed-order Gauss-Hermite rule for expectations under N(0, 1)."""

    order: int = 96
    scheme: str = "gauss-hermite"

    def __post_init__(self):
        if not 8 <= self.order <= MAX_QUAD_ORDER:
            raise DomainError(f"quadrature order must lie in [8, {MAX_QUAD_ORDER}], got {self.order}")
        if self.scheme != "gauss-hermite":
            raise DomainError(f"unknown quadrature scheme {self.scheme!r}")

    @property
    def nodes(self):
        return _hermite_rule(self.order)[0]

    @property
    def weights(self):
        return _hermite_rule(self.order)[1]

    @property
    def mean_log_kernel(self):
        """``E[log g(sigma Z)] = -E[Z^2]/2`` under the discrete rule."""
        return _mean_log_kernel(self.order)


@lru_cache(maxsize=None)
def _mean_log_kernel(order):
    t, w = _hermite_rule(order)
    return float(-0.5 * (w @ (t * t)))


DEFAULT_QUAD = QuadratureSpec()


def _check_sigma(sigma_sq):
    if not sigma_sq > 0:
        raise DomainError(f"noise variance must be positive, got {sigma_sq!r}")


def _log_floor(a):
    return np.log(np.maximum(a, TINY))


class _Terms:
    """Discretised log-mixture sums shared by the MI values and their gradients."""

    def __init__(self, p, x, sigma_sq, quad):
        self.p = np.ascontiguousarray(p, dtype=float)
        self.x = np.ascontiguousarray(x, dtype=float)
        self.quad = quad
        self.sigma = float(np.sqrt(sigma_sq))
        self.c0 = _mean_log_kernel(quad.order)
        self.pi = self.p.sum(axis=1)
        self.q = self.p.sum(axis=0)
        self.logA_w, self.logB_w = mixture_sums(self.p, self.x, self.sigma, quad.nodes, quad.weights)
        live = self.pi > 0
        self.log_pi = np.where(live, np.log(np.where(live, self.pi, 1.0)), 0.0)
        # a mixture with a single component is known in closed form at its own symbol
        for i in np.flatnonzero(np.count_nonzero(self.p, axis=1) == 1):
            j = int(np.flatnonzero(self.p[i])[0])
            self.logA_w[i, j] = self.c0 + self.log_pi[i]
        if np.count_nonzero(self.q) == 1:
            j = int(np.flatnonzero(self.q)[0])
            self.logB_w[j] = self.c0 + np.log(self.q[j])

    def cloud_term(self):
        """sum_ij p_ij E_j[log A_i - log pi_i] (nats)."""
        return float(np.sum(self.p * (self.logA_w - self.log_pi[:, None])))

    def _deterministic_x(self):
        return np.count_nonzero(self.q) == 1

    def i_uy(self):
        if self._deterministic_x() or np.count_nonzero(self.pi) == 1:
            return 0.0
        return self.cloud_term() - float(self.q @ self.logB_w)

    def i_xy_given_u(self):
        if np.all(np.count_nonzero(self.p, axis=1) <= 1):
            return 0.0
        return self.c0 * float(self.q.sum()) - self.cloud_term()

    def i_xy(self):
        if self._deterministic_x():
            return 0.0
        return self.c0 * float(self.q.sum()) - float(self.q @ self.logB_w)

    def gradients(self):
        """Partials (nats) of I(U;Y) and I(X;Y|U) w.r.t. p_ab and x_b.

        Moving x_b shifts both the nodes of symbol b and kernel b in every
        mixture, hence the two contributions ``move`` and ``shift``.
        """
        p, q = self.p, self.q
        ra, sa, rb, sb, move_a, move_b = mixture_grads(
            p, self.x, self.sigma, self.quad.nodes, self.quad.weights
        )
        d_cloud = self.logA_w - self.log_pi[:, None] + ra - 1.0
        empty = self.pi <= 0
        if np.any(empty):
            # limit along a single-tap direction into an empty row
            d_cloud[empty] = self.c0
        d_out = self.logB_w + rb

        gp_uy = d_cloud - d_out[None, :]
        gp_xgu = self.c0 - d_cloud

        dx_cloud = (move_a + np.sum(p * sa, axis=0)) / self.sigma
        dx_out = (move_b + q * sb) / self.sigma
        return gp_uy, gp_xgu, dx_cloud - dx_out, -dx_cloud


def _clamp_bits(nats, size):
    return float(min(max(nats / LN2, 0.0), np.log2(size) if size > 1 else 0.0))


def _prob_vector(x_marginal, size):
    q = np.asarray(x_marginal, dtype=float)
    if q.shape != (size,):
        raise DomainError(f"marginal has shape {q.shape}, expected ({size},)")
    if np.any(q < 0) or abs(q.sum() - 1.0) > 1e-9:
        raise DomainError("marginal must be a probability vector")
    return q


def _symbols(constellation):
    return np.asarray(getattr(constellation, "symbols", constellation), dtype=float)


def mi_x_y(constellation, x_marginal, sigma_sq, quad=DEFAULT_QUAD):
    """Point-to-point I(X;Y) in bits for input pmf ``x_marginal`` on ``constellation``."""
    _check_sigma(sigma_sq)
    x = _symbols(constellation)
    q = _prob_vector(x_marginal, x.size)
    terms = _Terms(q[None, :], x, sigma_sq, quad)
    return _clamp_bits(terms.i_xy(), x.size)


def _joint_terms(joint, constellation, sigma_sq, quad):
    _check_sigma(sigma_sq)
    x = _symbols(constellation)
    p = joint.probs if isinstance(joint, JointDistribution) else np.asarray(joint, dtype=float)
    if p.shape[1] != x.size:
        raise DomainError(f"joint has {p.shape[1]} columns, constellation {x.size} symbols")
    return _Terms(p, x, sigma_sq, quad), p


def mi_u_y(joint, constellation, sigma_sq, quad=DEFAULT_QUAD):
    """I(U;Y) in bits: how much the cloud index is visible at noise ``sigma_sq``."""
    terms, p = _joint_terms(joint, constellation, sigma_sq, quad)
    return _clamp_bits(terms.i_uy(), p.shape[0])


def mi_x_y_given_u(joint, constellation, sigma_sq, quad=DEFAULT_QUAD):
    """I(X;Y|U) in bits; empty rows of the joint contribute nothing."""
    terms, p = _joint_terms(joint, constellation, sigma_sq, quad)
    return _clamp_bits(terms.i_xy_given_u(), p.shape[1])


def conditional_row_mi(joint, constellation, sigma_sq, quad=DEFAULT_QUAD):
    """Per-cloud I(X;Y|U=u_i) in bits (NaN for empty rows)."""
    m = marginals(joint)
    out = np.full(joint.u_size, np.nan)
    for i, row in enumerate(m.x_given_u):
        if i not in m.empty_rows:
            out[i] = mi_x_y(constellation, row, sigma_sq, quad)
    return out


@dataclass(frozen=True)
class ObjectiveValue:
    f: float
    grad_p: np.ndarray
    grad_x: np.ndarray
    r1: float
    r2: float


def objective_and_gradients(joint, constellation, channel, theta, quad=DEFAULT_QUAD):
    """Weighted rate ``theta I(X;Y1|U) + (1-theta) I(U;Y2)`` (bits) and its gradients.

    The gradients are exact partials of the discretised objective, treating every
    ``p_ij`` as an independent coordinate (no simplex projection).
    """
    if not 0.0 <= theta <= 1.0:
        raise DomainError(f"theta must lie in [0, 1], got {theta!r}")
    t1, p = _joint_terms(joint, constellation, channel.sigma1_sq, quad)
    t2, _ = _joint_terms(joint, constellation, channel.sigma2_sq, quad)
    r1 = _clamp_bits(t1.i_xy_given_u(), p.shape[1])
    r2 = _clamp_bits(t2.i_uy(), p.shape[0])
    _, gp_xgu, _, gx_xgu = t1.gradients()
    gp_uy, _, gx_uy, _ = t2.gradients()
    grad_p = (theta * gp_xgu + (1.0 - theta) * gp_uy) / LN2
    grad_x = (theta * gx_xgu + (1.0 - theta) * gx_uy) / LN2
    return ObjectiveValue(theta * r1 + (1.0 - theta) * r2, grad_p, grad_x, r1, r2)


def rates_batch(probs, x, sigma1_sq, sigma2_sq, quad=DEFAULT_QUAD):
    """Unclamped (I(X;Y1|U), I(U;Y2)) in bits for a stack of joints.

    ``probs`` has shape (batch, K, M); ``x`` is either shared, shape (M,), or
    per joint, shape (batch, M). Used by the exhaustive-search oracle.
    """
    probs = np.asarray(probs, dtype=float)
    x = np.asarray(x, dtype=float)
    xs = np.broadcast_to(x, (probs.shape[0], probs.shape[2]))
    t, w = quad.nodes, quad.weights
    c0 = _mean_log_kernel(quad.order)
    pi = probs.sum(axis=2)
    q = probs.sum(axis=1)
    log_pi = np.log(np.maximum(pi, TINY))
    out = []
    for sigma_sq in (sigma1_sq, sigma2_sq):
        sigma = np.sqrt(sigma_sq)
        d = (xs[:, :, None, None] - xs[:, None, None, :]) / sigma + t[None, None, :, None]
        e = np.exp(-0.5 * d * d)
        a = np.einsum("bik,bjnk->bijn", probs, e)
        b = np.einsum("bk,bjnk->bjn", q, e)
        cloud = np.sum(probs * (_log_floor(a) @ w - log_pi[:, :, None]), axis=(1, 2))
        out_term = np.sum(q * (_log_floor(b) @ w), axis=1)
        out.append((cloud, out_term, q.sum(axis=1)))
    (cloud1, _, mass), (cloud2, outer2, _) = out
    r1 = (c0 * mass - cloud1) / LN2
    r2 = (cloud2 - outer2) / LN2
    return r1, r2
