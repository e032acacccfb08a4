import numpy as np
import pytest

from bcshaping.channel_model import DomainError, JointDistribution, channel_from_snr, standard_pam
from bcshaping.mutual_info import mi_u_y, mi_x_y, mi_x_y_given_u
from bcshaping.oracle import _lattice, grid_search_optimize, mc_mutual_info
from bcshaping.strategies import general_sc, superposition_modulation, time_sharing, uniform_sm_joint

CH = channel_from_snr(10.0, 8.0)


def test_mc_is_deterministic_per_seed():
    const, joint = standard_pam(4)
    a = mc_mutual_info(joint, const, 0.3, "X;Y", 20000, seed=7)
    b = mc_mutual_info(joint, const, 0.3, "X;Y", 20000, seed=7)
    c = mc_mutual_info(joint, const, 0.3, "X;Y", 20000, seed=8)
    assert a == b
    assert a.value != c.value


def test_mc_std_error_scales_as_inverse_root():
    const, _ = standard_pam(4)
    joint = uniform_sm_joint(2, 2, 4)
    small = mc_mutual_info(joint, const, 0.2, "U;Y", 40000, seed=1)
    large = mc_mutual_info(joint, const, 0.2, "U;Y", 640000, seed=1)
    assert large.std_error / small.std_error == pytest.approx(0.25, rel=0.3)


@pytest.mark.parametrize("which", ["U;Y", "X;Y|U", "X;Y"])
def test_mc_agrees_with_quadrature(which):
    const, _ = standard_pam(4)
    joint = JointDistribution(np.array([[0.1, 0.0, 0.3, 0.0], [0.0, 0.4, 0.0, 0.2]]))
    quad = {
        "U;Y": mi_u_y(joint, const, 0.25),
        "X;Y|U": mi_x_y_given_u(joint, const, 0.25),
        "X;Y": mi_x_y(const, joint.probs.sum(axis=0), 0.25),
    }[which]
    est = mc_mutual_info(joint, const, 0.25, which, 200000, seed=3)
    assert abs(est.value - quad) <= 3 * est.std_error


def test_mc_trivial_cases_are_exact():
    const, joint = standard_pam(4)
    assert mc_mutual_info(joint, const, 0.1, "X;Y|U", 10000).value == 0.0
    one_row = JointDistribution(np.full((1, 4), 0.25))
    assert mc_mutual_info(one_row, const, 0.1, "U;Y", 10000).value == 0.0
    one_cloud = JointDistribution(np.array([[0.0, 0.0, 0.0, 0.0], [0.1, 0.2, 0.3, 0.4]]))
    assert mc_mutual_info(one_cloud, const, 0.1, "U;Y", 10000).value == 0.0
    point = JointDistribution(np.array([[0.0, 1.0, 0.0, 0.0]]))
    assert mc_mutual_info(point, const, 0.1, "X;Y", 10000).value == 0.0


def test_mc_rejects_bad_inputs():
    const, joint = standard_pam(4)
    with pytest.raises(DomainError):
        mc_mutual_info(joint, const, 0.1, "Y;X", 10000)
    with pytest.raises(DomainError):
        mc_mutual_info(joint, const, 0.1, "X;Y", 100)
    with pytest.raises(DomainError):
        mc_mutual_info(joint, const, 0.0, "X;Y", 10000)
    with pytest.raises(DomainError):
        mc_mutual_info(np.full((2, 2), 0.25), const, 0.1, "X;Y", 10000)


def test_lattice_enumerates_compositions():
    lat = _lattice(3, 4)
    assert lat.shape == (15, 3)
    assert np.all(lat.sum(axis=1) == 4)
    assert len({tuple(r) for r in lat}) == 15
    assert tuple(lat[0]) == (4.0, 0.0, 0.0)


def test_grid_fixed_everything_is_the_uniform_value():
    c = superposition_modulation(2, 2, probs_free=False, positions_free=False)
    res = grid_search_optimize(CH, 0.5, c, 4, 0.5)
    const, _ = standard_pam(4)
    j = uniform_sm_joint(2, 2, 4)
    assert res.r1 == pytest.approx(mi_x_y_given_u(j, const, CH.sigma1_sq), abs=1e-12)
    assert res.r2 == pytest.approx(mi_u_y(j, const, CH.sigma2_sq), abs=1e-12)
    assert res.iterations == 1


def test_grid_saturation_agrees_with_plain_search():
    plain = grid_search_optimize(CH, 0.5, general_sc(2), 2, 0.05)
    sat = grid_search_optimize(CH, 0.5, general_sc(2), 2, 0.05, saturate_power=True)
    assert sat.objective >= plain.objective - 1e-12
    assert sat.achieved_power == pytest.approx(CH.power, abs=1e-12)


def test_grid_guards():
    with pytest.raises(DomainError):
        grid_search_optimize(CH, 0.5, general_sc(4), 4, 0.01, max_points=1000)
    with pytest.raises(DomainError):
        grid_search_optimize(CH, 0.5, general_sc(8), 8)
    with pytest.raises(DomainError):
        grid_search_optimize(CH, 0.5, time_sharing(4), 4)
    with pytest.raises(DomainError):
        grid_search_optimize(CH, 0.5, general_sc(2), 2, 0.03)
