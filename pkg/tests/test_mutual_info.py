import numpy as np
import pytest
from conftest import fd_gradients, max_rel_error, random_joint, random_symmetric
from hypothesis import given
from hypothesis import strategies as st

from bcshaping.channel_model import Constellation, DomainError, JointDistribution, channel_from_snr, standard_pam
from bcshaping.mutual_info import (
    DEFAULT_QUAD,
    QuadratureSpec,
    _Terms,
    conditional_row_mi,
    mi_u_y,
    mi_x_y,
    mi_x_y_given_u,
    objective_and_gradients,
    rates_batch,
)
from bcshaping.oracle import mc_mutual_info
from bcshaping.strategies import sm_support, uniform_sm_joint

SNR10 = 0.1
SNR8 = 10 ** -0.8


def within_3se(quad_value, est):
    return abs(quad_value - est.value) <= 3 * est.std_error


def test_quadrature_spec():
    q = QuadratureSpec()
    assert q.order == 96
    assert np.all(q.weights > 0)
    assert q.weights.sum() == pytest.approx(1.0, abs=1e-12)
    assert q.mean_log_kernel == pytest.approx(-0.5, abs=1e-12)
    with pytest.raises(DomainError):
        QuadratureSpec(order=7)
    with pytest.raises(DomainError):
        QuadratureSpec(order=301)
    with pytest.raises(DomainError):
        QuadratureSpec(scheme="simpson")


def test_mi_x_y_examples():
    c, _ = standard_pam(4)
    assert mi_x_y(c, [0, 0, 1, 0], 0.3) == 0.0
    assert mi_x_y(Constellation([-1.0, 1.0]), [0.5, 0.5], 1e-6) == pytest.approx(1.0, abs=1e-9)
    value = mi_x_y(c, np.full(4, 0.25), SNR10)
    est = mc_mutual_info(np.eye(4) / 4, c, SNR10, "X;Y", 10**6, seed=11)
    assert within_3se(value, est)


def test_mi_u_y_examples():
    c, _ = standard_pam(4)
    same_rows = np.outer([0.3, 0.7], [0.1, 0.2, 0.3, 0.4])
    assert mi_u_y(same_rows, c, 0.2) == pytest.approx(0.0, abs=1e-12)
    q = np.array([0.1, 0.2, 0.3, 0.4])
    assert mi_u_y(np.diag(q), c, 0.2) == pytest.approx(mi_x_y(c, q, 0.2), abs=1e-12)
    j = uniform_sm_joint(2, 2, 4)
    est = mc_mutual_info(j, c, SNR8, "U;Y", 10**6, seed=12)
    assert within_3se(mi_u_y(j, c, SNR8), est)


def test_mi_x_y_given_u_examples():
    c, _ = standard_pam(4)
    assert mi_x_y_given_u(np.diag([0.1, 0.2, 0.3, 0.4]), c, 0.2) == 0.0
    q = np.array([[0.1, 0.2, 0.3, 0.4]])
    assert mi_x_y_given_u(q, c, 0.2) == pytest.approx(mi_x_y(c, q[0], 0.2), abs=1e-12)
    c8, _ = standard_pam(8)
    j = uniform_sm_joint(2, 4, 8)
    sigma_sq = 10 ** -1.6
    est = mc_mutual_info(j, c8, sigma_sq, "X;Y|U", 10**6, seed=13)
    assert within_3se(mi_x_y_given_u(j, c8, sigma_sq), est)


def test_empty_rows_contribute_nothing():
    c, _ = standard_pam(4)
    p = np.array([[0.0, 0.0, 0.0, 0.0], [0.1, 0.2, 0.3, 0.4]])
    assert mi_x_y_given_u(p, c, 0.2) == pytest.approx(mi_x_y(c, p[1], 0.2), abs=1e-12)
    rows = conditional_row_mi(JointDistribution(p), c, 0.2)
    assert np.isnan(rows[0])
    assert rows[1] == pytest.approx(mi_x_y(c, p[1], 0.2))


def test_domain_errors():
    c, j = standard_pam(2)
    for sigma_sq in (0.0, -1.0):
        with pytest.raises(DomainError):
            mi_x_y(c, [0.5, 0.5], sigma_sq)
        with pytest.raises(DomainError):
            mi_u_y(j, c, sigma_sq)
        with pytest.raises(DomainError):
            mi_x_y_given_u(j, c, sigma_sq)
    with pytest.raises(DomainError):
        mi_x_y(c, [0.5, 0.6], 1.0)
    with pytest.raises(DomainError):
        mi_u_y(np.eye(4) / 4, c, 1.0)


instances = st.tuples(
    st.sampled_from([(1, 2), (2, 2), (2, 4), (4, 4), (2, 8)]),
    st.integers(0, 2**31),
)


def _instance(case):
    (k, m), seed = case
    rng = np.random.default_rng(seed)
    return random_joint(rng, k, m), random_symmetric(rng, m), rng


@given(instances, st.floats(-5, 25), st.floats(0.1, 10))
def test_degradedness(case, snr_db, gap_db):
    p, x, _ = _instance(case)
    s1 = 10 ** (-snr_db / 10)
    s2 = s1 * 10 ** (gap_db / 10)
    assert mi_u_y(p, x, s2) <= mi_u_y(p, x, s1) + 1e-6


@given(instances)
def test_monotone_in_noise(case):
    p, x, _ = _instance(case)
    grid = 10 ** np.linspace(-2.5, 1.0, 12)
    q = p.sum(axis=0)
    for f in (lambda s: mi_u_y(p, x, s), lambda s: mi_x_y_given_u(p, x, s), lambda s: mi_x_y(x, q, s)):
        values = np.array([f(s) for s in grid])
        assert np.all(np.diff(values) <= 1e-6)


@given(instances, st.floats(1e-4, 100.0))
def test_bounds_and_chain(case, sigma_sq):
    p, x, _ = _instance(case)
    k, m = p.shape
    iu = mi_u_y(p, x, sigma_sq)
    ix_u = mi_x_y_given_u(p, x, sigma_sq)
    ix = mi_x_y(x, p.sum(axis=0), sigma_sq)
    assert -1e-9 <= iu <= np.log2(k) + 1e-9
    assert -1e-9 <= ix_u <= np.log2(m) + 1e-9
    assert -1e-9 <= ix <= np.log2(m) + 1e-9
    assert iu + ix_u <= ix + 1e-6
    assert iu + ix_u == pytest.approx(ix, abs=1e-6)


@given(instances, st.floats(1e-3, 10.0))
def test_kernels_match_numpy_reference(case, sigma_sq):
    p, x, _ = _instance(case)
    t = _Terms(p, x, sigma_sq, DEFAULT_QUAD)
    ref_r1, _ = rates_batch(p[None], x, sigma_sq, 2 * sigma_sq)
    _, ref_r2 = rates_batch(p[None], x, sigma_sq / 2, sigma_sq)
    assert t.i_xy_given_u() / np.log(2) == pytest.approx(ref_r1[0], abs=1e-11)
    assert t.i_uy() / np.log(2) == pytest.approx(ref_r2[0], abs=1e-11)


def test_quadrature_order_converged():
    c, _ = standard_pam(8)
    p = uniform_sm_joint(4, 2, 8)
    for sigma_sq in (10 ** -1.6, 10 ** -1.4, 1.0):
        lo = mi_u_y(p, c, sigma_sq, QuadratureSpec(order=96))
        hi = mi_u_y(p, c, sigma_sq, QuadratureSpec(order=200))
        assert lo == pytest.approx(hi, abs=1e-6)


def test_objective_endpoints_and_consistency(rng):
    ch = channel_from_snr(10.0, 8.0)
    p = random_joint(rng, 4, 4)
    x = random_symmetric(rng, 4)
    r1 = mi_x_y_given_u(p, x, ch.sigma1_sq)
    r2 = mi_u_y(p, x, ch.sigma2_sq)
    assert objective_and_gradients(p, x, ch, 1.0).f == pytest.approx(r1, abs=1e-12)
    assert objective_and_gradients(p, x, ch, 0.0).f == pytest.approx(r2, abs=1e-12)
    val = objective_and_gradients(p, x, ch, 0.3)
    assert val.f == pytest.approx(0.3 * r1 + 0.7 * r2, abs=1e-10)
    with pytest.raises(DomainError):
        objective_and_gradients(p, x, ch, 1.5)


def check_gradients(rng, m=4, k=4, mask=None, theta=None, snr=(10.0, 8.0)):
    ch = channel_from_snr(*snr)
    theta = rng.uniform(0, 1) if theta is None else theta
    p = random_joint(rng, k, m, mask)
    x = random_symmetric(rng, m) * rng.uniform(0.7, 1.3)
    val = objective_and_gradients(p, x, ch, theta)
    gp, gx = fd_gradients(lambda pp, xx: objective_and_gradients(pp, xx, ch, theta).f, p, x)
    # off-support taps sit on the boundary p = 0, where central differences are meaningless
    on = p > 0
    return max(max_rel_error(val.grad_p[on], gp[on]), max_rel_error(val.grad_x, gx))


def test_gradients_match_finite_differences(rng):
    assert check_gradients(rng) <= 1e-4
    assert check_gradients(rng, m=8, k=2, mask=sm_support(4, 2), snr=(16.0, 14.0)) <= 1e-4
    assert check_gradients(rng, m=2, k=2, theta=0.0) <= 1e-4
