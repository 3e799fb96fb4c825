import numpy as np
import pytest

import cmbproj as cp
from cmbproj.engine2d import default_mu_points


class Problem:
    """One fully-constructed desk-scale problem instance."""

    def __init__(self, l_min, l_max, p_max, n_r, n_mu=None):
        self.l_min = l_min
        self.l_max = l_max
        self.p_max = p_max
        self.grid = cp.default_radial_grid(n_r)
        self.tables = cp.synthesize_basis(p_max, l_min, l_max, self.grid)
        self.mapping = cp.default_mode_mapping(p_max)
        self.rule = cp.gauss_legendre(n_mu or default_mu_points(l_max))
        self.legendre = cp.legendre_table(l_max, self.rule)


@pytest.fixture(scope="session")
def desk():
    """Small instance used by most engine tests."""
    return Problem(l_min=2, l_max=16, p_max=3, n_r=54)


@pytest.fixture(scope="session")
def desk32():
    """The acceptance-scale instance (l_max=32, p_max=4, R=216)."""
    return Problem(l_min=2, l_max=32, p_max=4, n_r=216, n_mu=50)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)
