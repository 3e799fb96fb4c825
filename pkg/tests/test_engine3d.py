import numpy as np
import pytest

import cmbproj as cp


def relative_gap(a, b):
    scale = max(np.max(np.abs(a)), np.max(np.abs(b)))
    return np.max(np.abs(a - b)) / scale


@pytest.fixture(scope="module")
def naive(desk):
    return cp.gamma3d_naive(desk.tables, desk.mapping, desk.grid)


class TestFactors:
    def test_x_equilateral_collapses(self, desk):
        # on an equilateral triple every permutation gives the same product
        t, g, m = desk.tables, desk.grid, desk.mapping
        ip, jp, kp = m.triple(5)
        f = t.q_tilde[ip, :, 0] * t.q_tilde[jp, :, 0] * t.q_tilde[kp, :, 0]
        direct = cp.integrate_trapezium(g.r, g.r**2 * 6.0 * f)
        got = cp.radial_integral_x(2, 2, 2, 5, t, m, g)
        assert got == pytest.approx(direct, rel=1e-13)

    def test_y_equilateral_collapses(self, desk):
        t, m = desk.tables, desk.mapping
        i, j, k = m.triple(7)
        expect = 6.0 * t.q[i, 0] * t.q[j, 0] * t.q[k, 0]
        assert cp.late_product_y(2, 2, 2, 7, t, m) \
            == pytest.approx(expect, rel=1e-14)

    def test_y_symmetric_under_l_permutation(self, desk):
        t, m = desk.tables, desk.mapping
        a = cp.late_product_y(2, 5, 7, 3, t, m)
        b = cp.late_product_y(5, 7, 2, 3, t, m)  # unordered input is fine
        assert a == pytest.approx(b, rel=1e-14)

    def test_x_symmetric_under_l_permutation(self, desk):
        t, g, m = desk.tables, desk.grid, desk.mapping
        a = cp.radial_integral_x(2, 5, 7, 3, t, m, g)
        b = cp.radial_integral_x(7, 2, 5, 3, t, m, g)
        assert a == pytest.approx(b, rel=1e-13)


class TestBlockedVsNaive:
    def test_default_block(self, desk, naive):
        blocked = cp.gamma3d_matrix(desk.tables, desk.mapping, desk.grid)
        assert relative_gap(blocked.values, naive.values) < 1e-12

    @pytest.mark.parametrize("block", [1, 7, 64, 256])
    def test_block_size_invariance(self, desk, naive, block):
        blocked = cp.gamma3d_matrix(desk.tables, desk.mapping, desk.grid,
                                    block=block)
        assert relative_gap(blocked.values, naive.values) < 1e-12

    @pytest.mark.parametrize("workers", [1, 2, 4, 8])
    def test_worker_count_invariance(self, desk, naive, workers):
        g = cp.gamma3d_matrix(desk.tables, desk.mapping, desk.grid,
                              workers=workers)
        assert relative_gap(g.values, naive.values) < 1e-12

    def test_fixed_config_is_bitwise_reproducible(self, desk):
        a = cp.gamma3d_matrix(desk.tables, desk.mapping, desk.grid,
                              workers=3, block=16)
        b = cp.gamma3d_matrix(desk.tables, desk.mapping, desk.grid,
                              workers=3, block=16)
        assert np.array_equal(a.values, b.values)

    @pytest.mark.parametrize("integrator", ["hermite", "spline"])
    def test_other_integrators(self, desk, integrator):
        blocked = cp.gamma3d_matrix(desk.tables, desk.mapping, desk.grid,
                                    integrator=integrator)
        naive = cp.gamma3d_naive(desk.tables, desk.mapping, desk.grid,
                                 integrator=integrator)
        assert relative_gap(blocked.values, naive.values) < 1e-12

    def test_exact_mode(self, desk):
        blocked = cp.gamma3d_matrix(desk.tables, desk.mapping, desk.grid,
                                    h2_mode="exact")
        naive = cp.gamma3d_naive(desk.tables, desk.mapping, desk.grid,
                                 h2_mode="exact")
        assert relative_gap(blocked.values, naive.values) < 1e-12

    def test_unknown_h2_mode(self, desk):
        with pytest.raises(ValueError):
            cp.gamma3d_matrix(desk.tables, desk.mapping, desk.grid,
                              h2_mode="asymptotic")

    def test_rejects_bad_block(self, desk):
        with pytest.raises(ValueError):
            cp.gamma3d_matrix(desk.tables, desk.mapping, desk.grid, block=0)


class TestOrderedEnumeration:
    def test_matches_unordered_reference(self):
        # ordered triples with multiplicity {1, 3, 6} must exactly equal
        # the full unordered sum; small l_max keeps the cube affordable
        import cmbproj as cp
        grid = cp.default_radial_grid(30)
        tables = cp.synthesize_basis(3, 2, 12, grid)
        mapping = cp.default_mode_mapping(3)
        ordered = cp.gamma3d_matrix(tables, mapping, grid)
        unordered = cp.gamma3d_unordered_reference(tables, mapping, grid)
        assert relative_gap(ordered.values, unordered.values) < 1e-12


class TestGosperVsExact:
    def test_within_h2_error_envelope(self, desk, naive):
        exact = cp.gamma3d_matrix(desk.tables, desk.mapping, desk.grid,
                                  h2_mode="exact")
        gosper = cp.gamma3d_matrix(desk.tables, desk.mapping, desk.grid,
                                   h2_mode="gosper")
        # worst h2 relative error over the domain bounds the entrywise
        # deviation only loosely (mixing of signs); check the rms level
        gap = relative_gap(gosper.values, exact.values)
        assert 0 < gap < 0.025
