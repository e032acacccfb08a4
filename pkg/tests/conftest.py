import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    deadline=None,
    max_examples=30,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_joint(rng, k, m, mask=None):
    """Strictly positive joint table on ``mask`` (full support by default)."""
    mask = np.ones((k, m), dtype=bool) if mask is None else mask
    p = np.zeros((k, m))
    p[mask] = rng.dirichlet(np.ones(int(mask.sum())))
    return p


def random_symmetric(rng, m, power=1.0):
    half = np.sort(rng.uniform(0.1, 1.0, m // 2))
    half = half + 0.05 * np.arange(m // 2)
    x = np.concatenate([-half[::-1], half])
    return x * np.sqrt(power / np.mean(x * x))


def fd_gradients(objective, p, x, h=1e-5):
    """Central differences of ``objective(p, x)`` in every p_ij and x_j."""
    gp = np.zeros_like(p)
    for idx in np.ndindex(p.shape):
        up, dn = p.copy(), p.copy()
        up[idx] += h
        dn[idx] -= h
        gp[idx] = (objective(up, x) - objective(dn, x)) / (2 * h)
    gx = np.zeros_like(x)
    for j in range(x.size):
        up, dn = x.copy(), x.copy()
        up[j] += h
        dn[j] -= h
        gx[j] = (objective(p, up) - objective(p, dn)) / (2 * h)
    return gp, gx


def max_rel_error(analytic, numeric, floor=1e-6):
    analytic, numeric = np.asarray(analytic), np.asarray(numeric)
    return float(np.max(np.abs(analytic - numeric) / np.maximum(np.abs(numeric), floor)))
