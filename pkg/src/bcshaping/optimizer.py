"""Weighted-rate maximization over joint tables and symbol positions.

For a weight ``theta`` the problem is

    maximize   theta I(X;Y1|U) + (1 - theta) I(U;Y2)
    subject to sum_ij p_ij x_j^2 <= P  and the strategy's support mask.

It is attacked through the Lagrangian ``L = f + s (P - sum_ij p_ij x_j^2)``:
for a fixed multiplier ``s`` the probabilities and the positions are improved
alternately until ``L`` stalls, and an outer bracketing search on ``s`` drives
the achieved power onto the budget. The objective is not concave, so the whole
procedure is restarted from several seeded initial points.

Rates and ``L`` are in bits; ``s`` is in bits per unit of energy.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .channel_model import Constellation, DomainError, JointDistribution, standard_pam
from .mutual_info import DEFAULT_QUAD, LN2, QuadratureSpec, _Terms
from .strategies import GENERAL_SC, SUPERPOSITION_MODULATION

log = logging.getLogger(__name__)

MIN_SEPARATION = 1e-9


class BracketError(RuntimeError):
    """The power budget is still exceeded at the top of the multiplier bracket."""


@dataclass(frozen=True)
class OptimizerOptions:
    max_outer_iters: int = 40
    max_alt_iters: int = 2000
    prob_step_rule: str = "eg"
    pos_step_rule: str = "adaptive"
    multiplier_bracket: tuple = (0.0, 10.0)
    power_tolerance: float = 1e-4
    objective_tolerance: float = 1e-8
    restarts: int = 8
    seed: int = 0
    quad: QuadratureSpec = DEFAULT_QUAD
    init_prob_step: float = 1.0
    init_pos_step: float = 0.1
    position_jitter: float = 0.25

    def __post_init__(self):
        lo, hi = self.multiplier_bracket
        if lo < 0 or hi <= lo:
            raise DomainError(f"bad multiplier bracket {self.multiplier_bracket!r}")
        if self.power_tolerance <= 0 or self.objective_tolerance <= 0:
            raise DomainError("tolerances must be positive")
        if self.restarts < 1:
            raise DomainError("need at least one restart")
        if self.prob_step_rule not in ("eg",):
            raise DomainError(f"unknown probability step rule {self.prob_step_rule!r}")
        if self.pos_step_rule not in ("adaptive", "backtracking"):
            raise DomainError(f"unknown position step rule {self.pos_step_rule!r}")


@dataclass(frozen=True)
class OptResult:
    joint: JointDistribution
    constellation: Constellation
    r1: float
    r2: float
    objective: float
    multiplier_s: float
    achieved_power: float
    converged: bool
    iterations: int
    theta: float = 0.0
    restart: int = 0
    flags: tuple = field(default=())


# -- internal problem representation -----------------------------------------------------


def _mirror(z):
    return np.concatenate([-z[::-1], z])


def _mirror_basis(m):
    """``x = B z`` for an origin-symmetric constellation with nonnegative half ``z``."""
    h = m // 2
    eye = np.eye(h)
    return np.vstack([-eye[::-1], eye])


def _sum_basis(m1, m2):
    """``x[i*m1 + k] = c_i + v_k`` with symmetric centers ``c`` and offsets ``v``.

    The free coordinates are the positive halves of ``c`` (m2/2 of them)
    followed by the positive halves of ``v`` (m1/2).
    """
    centers = np.kron(_mirror_basis(m2), np.ones((m1, 1)))
    offsets = np.kron(np.ones((m2, 1)), _mirror_basis(m1))
    return np.hstack([centers, offsets])


def _sum_gaps(m1, m2):
    """Gaps ``g = A z`` between neighbouring symbols of a sum constellation, and their floors.

    Rows: innermost offset, offset increments, innermost center minus the
    largest offset, then center increments minus twice the largest offset.
    Symbols are strictly ordered exactly when every gap is positive.
    """
    h1, h2 = m1 // 2, m2 // 2
    a = np.zeros((h2 + h1, h2 + h1))
    floor = np.full(h2 + h1, MIN_SEPARATION)
    # coordinates: centers 0..h2-1, offsets h2..h2+h1-1
    a[0, h2] = 1.0
    floor[0] = 0.5 * MIN_SEPARATION
    for k in range(1, h1):
        a[k, h2 + k] = 1.0
        a[k, h2 + k - 1] = -1.0
    a[h1, 0] = 1.0
    a[h1, h2 + h1 - 1] = -1.0
    floor[h1] = 0.5 * MIN_SEPARATION
    for i in range(1, h2):
        a[h1 + i, i] = 1.0
        a[h1 + i, i - 1] = -1.0
        a[h1 + i, h2 + h1 - 1] = -2.0
    return a, floor


def _position_basis(constraint, m):
    if getattr(constraint, "sum_positions", False):
        return _sum_basis(constraint.m1, constraint.m2)
    return _mirror_basis(m)


def _enforce_order(z):
    """Keep the nonnegative half strictly increasing with the minimum separation."""
    out = z.copy()
    clamped = False
    floor = 0.5 * MIN_SEPARATION
    for k in range(out.size):
        if out[k] < floor:
            out[k] = floor
            clamped = True
        floor = out[k] + MIN_SEPARATION
    return out, clamped


class _State:
    """A point (p, z) with its Lagrangian; gradients are filled in on demand."""

    __slots__ = ("p", "z", "s", "lagr", "f", "r1", "r2", "power", "_problem", "_terms", "_grads")

    def __init__(self, problem, p, z, s):
        x = problem.positions(z)
        ch, th = problem.channel, problem.theta
        t1 = _Terms(p, x, ch.sigma1_sq, problem.quad)
        t2 = _Terms(p, x, ch.sigma2_sq, problem.quad)
        self.p, self.z, self.s = p, z, s
        self.r1 = t1.i_xy_given_u() / LN2
        self.r2 = t2.i_uy() / LN2
        self.power = float(t1.q @ (x * x))
        self.f = th * self.r1 + (1.0 - th) * self.r2
        self.lagr = self.f + s * (ch.power - self.power)
        self._problem = problem
        self._terms = (t1, t2, x)
        self._grads = None

    def _compute(self):
        t1, t2, x = self._terms
        th, s = self._problem.theta, self.s
        _, gp1, _, gx1 = t1.gradients()
        gp2, _, gx2, _ = t2.gradients()
        gp = (th * gp1 + (1.0 - th) * gp2) / LN2 - s * (x * x)[None, :]
        gx = (th * gx1 + (1.0 - th) * gx2) / LN2 - 2.0 * s * t1.q * x
        gz = self._problem.basis.T @ gx if self._problem.fixed_x is None else None
        self._grads = (gp, gz)
        self._terms = None

    @property
    def gp(self):
        if self._grads is None:
            self._compute()
        return self._grads[0]

    @property
    def gz(self):
        if self._grads is None:
            self._compute()
        return self._grads[1]


class _Problem:
    """Lagrangian pieces for one (channel, theta, support mask)."""

    def __init__(self, channel, theta, mask, quad, fixed_positions=None, basis=None, gaps=None):
        if not 0.0 <= theta <= 1.0:
            raise DomainError(f"theta must lie in [0, 1], got {theta!r}")
        self.channel = channel
        self.theta = float(theta)
        self.mask = np.asarray(mask, dtype=bool)
        self.quad = quad
        self.fixed_x = fixed_positions
        self.basis = _mirror_basis(self.mask.shape[1]) if basis is None else basis
        self.mirrored = basis is None
        self.gaps = gaps

    def positions(self, z):
        return self.fixed_x if self.fixed_x is not None else self.basis @ z

    def evaluate(self, p, z, s):
        return _State(self, p, z, s)


def _eg_step(problem, st, s, eta, max_halvings=40):
    """One exponentiated-gradient step on the masked simplex, backtracking on L."""
    mask = problem.mask
    if np.count_nonzero(mask & (st.p > 0)) <= 1:
        return st, eta, False
    g = np.where(mask, st.gp, -np.inf)
    g = g - g[mask].max()
    for _ in range(max_halvings):
        p = np.where(mask, st.p * np.exp(eta * g), 0.0)
        p /= p.sum()
        cand = problem.evaluate(p, st.z, s)
        if cand.lagr >= st.lagr:
            return cand, eta * 1.5, cand.lagr > st.lagr
        eta *= 0.5
    return st, eta, False


def _pos_step(problem, st, s, alpha, rule, max_halvings=40):
    """One ascent step on the free position coordinates, backtracking on L.

    Steps that would merge symbols are clamped: on the mirrored half directly,
    on a structured basis by a projected step in the gap coordinates, where
    the ordering constraints are simple bounds.
    """
    clamped_any = False
    if not problem.mirrored:
        a, floor = problem.gaps
        gap0 = a @ st.z
        g_gap = np.linalg.solve(a.T, st.gz)
    for _ in range(max_halvings):
        if problem.mirrored:
            z, clamped = _enforce_order(st.z + alpha * st.gz)
        else:
            gap = gap0 + alpha * g_gap
            clamped = bool(np.any(gap < floor))
            z = np.linalg.solve(a, np.maximum(gap, floor))
        cand = problem.evaluate(st.p, z, s)
        if cand.lagr >= st.lagr:
            grow = 1.5 if rule == "adaptive" else 1.0
            return cand, alpha * grow, cand.lagr > st.lagr, clamped_any or clamped
        clamped_any = clamped_any or clamped
        alpha *= 0.5
    return st, alpha, False, False


@dataclass
class _InnerResult:
    state: _State
    iterations: int
    converged: bool
    clamped: bool


def _maximize_lagrangian(problem, p, z, s, opts, free_p, free_x):
    st = problem.evaluate(p, z, s)
    eta, alpha = opts.init_prob_step, opts.init_pos_step
    clamped = False
    for it in range(1, opts.max_alt_iters + 1):
        before = st.lagr
        if free_p:
            st, eta, _ = _eg_step(problem, st, s, eta)
        if free_x:
            st, alpha, _, c = _pos_step(problem, st, s, alpha, opts.pos_step_rule)
            clamped = clamped or c
        if abs(st.lagr - before) < opts.objective_tolerance:
            return _InnerResult(st, it, True, clamped)
    return _InnerResult(st, opts.max_alt_iters, False, clamped)


# -- public single-step operations -------------------------------------------------------


def _free_half(constellation):
    x = constellation.symbols
    if x.size % 2 or not constellation.is_symmetric():
        raise DomainError("position steps need an even, origin-symmetric constellation")
    return x[x.size // 2 :].copy()


def ascend_probabilities(joint, constellation, channel, theta, s, mask, opts=OptimizerOptions()):
    """One monotone exponentiated-gradient step on ``L`` over the masked simplex.

    Returns the input unchanged when no trial step raises ``L``.
    """
    p = joint.probs
    mask = np.asarray(mask, dtype=bool)
    if np.any(p[~mask] != 0):
        raise DomainError("joint puts mass outside the support mask")
    problem = _Problem(channel, theta, mask, opts.quad, fixed_positions=constellation.symbols)
    st = problem.evaluate(p.copy(), None, s)
    new, _, moved = _eg_step(problem, st, s, opts.init_prob_step)
    return JointDistribution(new.p) if moved else joint


def ascend_positions(joint, constellation, channel, theta, s, opts=OptimizerOptions()):
    """One monotone ascent step on the nonnegative half of a symmetric constellation.

    Symbols that would merge are clamped ``1e-9`` apart (logged, not raised).
    """
    z = _free_half(constellation)
    problem = _Problem(channel, theta, joint.probs > 0, opts.quad)
    st = problem.evaluate(joint.probs, z, s)
    new, _, moved, clamped = _pos_step(problem, st, s, opts.init_pos_step, opts.pos_step_rule)
    if clamped:
        log.debug("position step clamped merging symbols at separation %g", MIN_SEPARATION)
    return Constellation(_mirror(new.z)) if moved else constellation


# -- multiplier search -------------------------------------------------------------------


def _kkt_multiplier(problem, st):
    """Multiplier making the radial derivative of L vanish at ``st``."""
    if st.gz is None or st.power <= 0:
        return None
    # st is evaluated at s = 0, so gz is grad f; d f/d(scale) = z . grad f = 2 s P
    s = float(st.z @ st.gz) / (2.0 * st.power)
    return s if s > 0 else None


def _scale_to_power(problem, p, z, power):
    x = problem.positions(z)
    cur = float(p.sum(axis=0) @ (x * x))
    return z * np.sqrt(power / cur) if cur > 0 else z


def _finish(problem, st, s, converged, iterations, restart, flags):
    """Package a state; free positions are scaled onto the budget exactly.

    Rates never decrease with the scale of the constellation, so the rescale
    only removes the slack left by the multiplier search.
    """
    budget = problem.channel.power
    p, z = st.p, st.z
    if problem.fixed_x is None and st.power > 0 and abs(st.power - budget) > 1e-12 * budget:
        z = z * np.sqrt(budget / st.power)
        st = problem.evaluate(p, z, s)
        flags = list(flags) + ["rescaled_to_budget"]
    x = problem.positions(z)
    return OptResult(
        joint=JointDistribution(p / p.sum()),
        constellation=Constellation(x),
        r1=max(st.r1, 0.0),
        r2=max(st.r2, 0.0),
        objective=st.f,
        multiplier_s=float(s),
        achieved_power=float(st.power),
        converged=bool(converged),
        iterations=int(iterations),
        theta=problem.theta,
        restart=restart,
        flags=tuple(flags),
    )


def _default_start(constraint, m, power):
    """Uniform taps on the mask and standard PAM in the constraint's position coordinates."""
    mask = constraint.support_mask
    p = mask / mask.sum()
    if getattr(constraint, "sum_positions", False):
        # standard PAM is itself a sum of an m2-PAM of centers and an m1-PAM of offsets
        m1, m2 = constraint.m1, constraint.m2
        scale = np.sqrt(3.0 * power / (m * m - 1.0))
        c = m1 * np.arange(1, m2, 2, dtype=float)
        v = np.arange(1, m1, 2, dtype=float)
        return p, scale * np.concatenate([c, v])
    constellation, _ = standard_pam(m, power)
    return p, constellation.symbols[m // 2 :].copy()


def _check_constraint(constraint, m):
    if constraint.kind not in (GENERAL_SC, SUPERPOSITION_MODULATION):
        raise DomainError(f"optimizer handles SC and SM constraints, not {constraint.kind!r}")
    if constraint.m != m:
        raise DomainError(f"constraint is for M = {constraint.m}, not {m}")
    if m % 2:
        raise DomainError("symmetric constellations need even M")


def solve_multiplier(channel, theta, constraint, m, opts=OptimizerOptions(), start=None, restart=0):
    """Search the power multiplier so the Lagrangian maximizer meets the budget.

    ``start`` is an optional ``(probs, nonnegative_half_positions)`` pair. Larger
    multipliers give lower power; the search keeps a bracket ``[lo, hi]`` with
    power above the budget at ``lo`` and within it at ``hi`` and shrinks it with
    Illinois false-position steps. Near a flat spot of the Lagrangian the power
    can jitter around the budget; once the bracket is narrower than ``1e-4 s``
    the feasible end is taken and scaled onto the budget.
    """
    _check_constraint(constraint, m)
    budget = channel.power
    tol = opts.power_tolerance
    free_p, free_x = constraint.probs_free, constraint.positions_free
    fixed_x = None if free_x else standard_pam(m, budget)[0].symbols
    summed = getattr(constraint, "sum_positions", False)
    basis = _position_basis(constraint, m) if summed else None
    gaps = _sum_gaps(constraint.m1, constraint.m2) if summed else None
    problem = _Problem(channel, theta, constraint.support_mask, opts.quad, fixed_positions=fixed_x,
                       basis=basis, gaps=gaps)
    p0, z0 = _default_start(constraint, m, budget) if start is None else start
    p0 = np.where(problem.mask, np.asarray(p0, dtype=float), 0.0)
    p0 = p0 / p0.sum()
    z0 = np.asarray(z0, dtype=float)
    s_lo, s_hi = opts.multiplier_bracket
    flags = []

    if not free_p and not free_x:
        st = problem.evaluate(p0, z0, s_lo)
        return _finish(problem, st, s_lo, True, 0, restart, flags)

    total_iters = 0
    evaluated = []  # (s, inner result)

    def solve_at(s, warm):
        nonlocal total_iters
        inner = _maximize_lagrangian(problem, warm.p, warm.z, s, opts, free_p, free_x)
        total_iters += inner.iterations
        if inner.clamped and "positions_clamped" not in flags:
            flags.append("positions_clamped")
        evaluated.append((s, inner))
        return inner

    def nearest(s):
        return min(evaluated, key=lambda e: abs(e[0] - s))[1].state

    start_state = problem.evaluate(p0, z0, 0.0)
    lo, hi = s_lo, None
    pw_lo, pw_hi = np.inf, None

    if s_lo > 0 or not free_x:
        inner = solve_at(s_lo, start_state)
        if inner.state.power <= budget + tol:
            return _finish(problem, inner.state, s_lo, inner.converged, total_iters, restart, flags)
        pw_lo = inner.state.power
        s = 2.0 * s_lo if s_lo > 0 else None
    else:
        s = None
    if s is None:
        if free_x:
            scaled = problem.evaluate(p0, _scale_to_power(problem, p0, z0, budget), 0.0)
            s = _kkt_multiplier(problem, scaled)
        if s is None:
            s = 0.5 * (s_lo + s_hi) if s_lo > 0 else min(1.0, s_hi)
        start_state = problem.evaluate(p0, _scale_to_power(problem, p0, z0, budget), 0.0)
    s = min(max(s, s_lo), s_hi)

    # Illinois false position on g(s) = power(s) - P, with g(lo) > 0 > g(hi)
    g_lo, g_hi = pw_lo - budget, None
    last_side = None
    hit = None
    for _ in range(opts.max_outer_iters):
        warm = nearest(s) if evaluated else start_state
        inner = solve_at(s, warm)
        g = inner.state.power - budget
        if abs(g) <= tol:
            hit = (s, inner)
            break
        if (g > 0 and hi is not None and s >= hi) or (g < 0 and s <= lo):
            flags.append("non_monotone_power")
            break
        if g > 0:
            lo, g_lo = s, g
            if last_side == "lo" and g_hi is not None:
                g_hi *= 0.5
            last_side = "lo"
        else:
            hi, g_hi = s, g
            if last_side == "hi" and np.isfinite(g_lo):
                g_lo *= 0.5
            last_side = "hi"
        if hi is None:
            if s >= s_hi:
                raise BracketError(
                    f"power {inner.state.power:.6g} exceeds budget {budget:.6g} at s_hi = {s_hi}"
                )
            s = min(2.0 * s if s > 0 else 1.0, s_hi)
            continue
        if hi - lo <= 1e-4 * hi:
            break
        s = lo + g_lo * (hi - lo) / (g_lo - g_hi) if np.isfinite(g_lo) else 0.5 * (lo + hi)
        if not lo < s < hi:
            s = 0.5 * (lo + hi)

    if hit is None and hi is not None and hi - lo <= 1e-4 * hi and "non_monotone_power" not in flags:
        hit = (hi, min(evaluated, key=lambda e: abs(e[0] - hi))[1])
    if hit is not None:
        s, inner = hit
        ok = inner.converged
    else:
        feasible = [(s_, r) for s_, r in evaluated if r.state.power <= budget + tol]
        if not feasible:
            raise BracketError("no multiplier in the bracket met the power budget")
        s, inner = max(feasible, key=lambda e: e[1].state.f)
        flags.append("multiplier_not_converged")
        ok = False
    return _finish(problem, inner.state, s, ok, total_iters, restart, flags)


def _starts(constraint, m, power, opts):
    mask = constraint.support_mask
    p_std, z_std = _default_start(constraint, m, power)
    yield p_std, z_std
    rng = np.random.default_rng(np.random.SeedSequence([opts.seed, m, constraint.u_size]))
    for _ in range(opts.restarts - 1):
        if constraint.probs_free:
            p = np.zeros(mask.shape)
            p[mask] = rng.dirichlet(np.ones(int(mask.sum())))
        else:
            p = p_std
        if constraint.positions_free and getattr(constraint, "sum_positions", False):
            # jitter the gaps, which keeps the symbols ordered
            a, _ = _sum_gaps(constraint.m1, constraint.m2)
            gap = (a @ z_std) * np.exp(opts.position_jitter * rng.standard_normal(z_std.size))
            z = np.linalg.solve(a, gap)
        elif constraint.positions_free:
            z = np.sort(z_std * np.exp(opts.position_jitter * rng.standard_normal(z_std.size)))
            z, _ = _enforce_order(z)
        else:
            z = z_std
        yield p, z


def optimize_rates(channel, theta, constraint, m, opts=OptimizerOptions(), warm_starts=()):
    """Best-over-restarts solution of the weighted-rate problem for one ``theta``.

    Restart 0 starts from uniform taps on the standard grid, the others from
    Dirichlet taps and jittered positions; ``warm_starts`` (``OptResult`` or
    ``(probs, position_coordinates)`` pairs) are tried first.
    """
    _check_constraint(constraint, m)
    starts = []
    basis = _position_basis(constraint, m)
    for w in warm_starts:
        if isinstance(w, OptResult):
            z = np.linalg.lstsq(basis, w.constellation.symbols, rcond=None)[0]
            starts.append((w.joint.probs, z))
        else:
            starts.append(w)
    if constraint.probs_free or constraint.positions_free:
        starts.extend(_starts(constraint, m, channel.power, opts))
    else:
        starts.append(_default_start(constraint, m, channel.power))

    best = None
    for k, start in enumerate(starts):
        try:
            res = solve_multiplier(channel, theta, constraint, m, opts, start=start, restart=k)
        except BracketError:
            if best is None and k == len(starts) - 1:
                raise
            continue
        if best is None or res.objective > best.objective:
            best = res
    if best is None:
        raise BracketError("no restart produced a feasible point")
    return replace(best, theta=float(theta))
