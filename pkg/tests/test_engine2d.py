import numpy as np
import pytest

import cmbproj as cp
from cmbproj.engine2d import _l_weight, _permanent3, default_mu_points


def relative_gap(a, b):
    scale = max(np.max(np.abs(a)), np.max(np.abs(b)))
    return np.max(np.abs(a - b)) / scale


class TestDefaultMuPoints:
    @pytest.mark.parametrize("l_max,n", [(16, 27), (32, 51), (128, 195)])
    def test_values(self, l_max, n):
        assert default_mu_points(l_max) == n

    def test_rule_is_exact_for_triple_products(self):
        # an n-node rule integrates P_a P_b P_c exactly when
        # 2n-1 >= 3 l_max; compare against a much larger rule
        l_max = 16
        rules = [cp.gauss_legendre(default_mu_points(l_max)),
                 cp.gauss_legendre(4 * l_max)]
        tabs = [cp.legendre_table(l_max, rule) for rule in rules]
        for a, b, c in [(16, 16, 16), (15, 16, 16), (2, 7, 9)]:
            vals = [float((t[a] * t[b] * t[c]) @ rule.weights)
                    for rule, t in zip(rules, tabs)]
            assert vals[0] == pytest.approx(vals[1], abs=1e-14)


class TestPermanent3:
    def test_against_permutation_sum(self, rng):
        from itertools import permutations
        m = rng.standard_normal((3, 3))
        expected = sum(m[0, p[0]] * m[1, p[1]] * m[2, p[2]]
                       for p in permutations(range(3)))
        got = _permanent3([[m[a, b] for b in range(3)] for a in range(3)])
        assert got == pytest.approx(expected, rel=1e-15)

    def test_broadcasts_trailing_axes(self, rng):
        m = rng.standard_normal((3, 3, 5, 4))
        blk = [[m[a, b] for b in range(3)] for a in range(3)]
        out = _permanent3(blk)
        assert out.shape == (5, 4)
        single = _permanent3([[m[a, b, 2, 1] for b in range(3)]
                              for a in range(3)])
        assert out[2, 1] == pytest.approx(single, rel=1e-13)


class TestPTable:
    def test_shape(self, desk):
        pt = cp.build_ptable(desk.tables, desk.grid, desk.rule, desk.legendre)
        L = desk.l_max - desk.l_min + 1
        assert pt.values.shape == (desk.p_max, desk.p_max,
                                   len(desk.grid), desk.rule.n)
        assert L == 15

    def test_matches_direct_sum(self, desk):
        pt = cp.build_ptable(desk.tables, desk.grid, desk.rule, desk.legendre)
        t = desk.tables
        lw = _l_weight(t)
        pl = desk.legendre[t.l_min:t.l_max + 1]
        for a, b, x, m in [(0, 0, 0, 0), (1, 2, 10, 5), (2, 1, 53, 26)]:
            direct = float(np.sum(lw * t.q[a] * t.q_tilde[b, x] * pl[:, m]))
            assert pt.values[a, b, x, m] == pytest.approx(direct, rel=1e-12)

    def test_budget_enforced(self, desk):
        with pytest.raises(MemoryError):
            cp.build_ptable(desk.tables, desk.grid, desk.rule, desk.legendre,
                            budget_bytes=1024)

    def test_deterministic(self, desk):
        a = cp.build_ptable(desk.tables, desk.grid, desk.rule, desk.legendre)
        b = cp.build_ptable(desk.tables, desk.grid, desk.rule, desk.legendre)
        assert np.array_equal(a.values, b.values)


class TestEntry:
    def test_fast_matches_naive(self, desk):
        pt = cp.build_ptable(desk.tables, desk.grid, desk.rule, desk.legendre)
        for n, n_prime in [(0, 0), (0, 5), (3, 7), (9, 2)]:
            fast = cp.gamma2d_entry(n, n_prime, pt, desk.mapping, desk.grid,
                                    desk.rule)
            naive = cp.gamma2d_entry_naive(n, n_prime, desk.tables,
                                           desk.mapping, desk.grid, desk.rule,
                                           desk.legendre)
            assert fast == pytest.approx(naive, rel=1e-12)

    @pytest.mark.parametrize("integrator", ["trap", "hermite", "spline"])
    def test_integrator_passthrough(self, desk, integrator):
        pt = cp.build_ptable(desk.tables, desk.grid, desk.rule, desk.legendre)
        fast = cp.gamma2d_entry(2, 3, pt, desk.mapping, desk.grid, desk.rule,
                                integrator=integrator)
        naive = cp.gamma2d_entry_naive(2, 3, desk.tables, desk.mapping,
                                       desk.grid, desk.rule, desk.legendre,
                                       integrator=integrator)
        assert fast == pytest.approx(naive, rel=1e-12)

    def test_precomputed_radial_weights(self, desk):
        from cmbproj.quadrature import integration_weights
        pt = cp.build_ptable(desk.tables, desk.grid, desk.rule, desk.legendre)
        w = integration_weights(desk.grid.r, "trap")
        a = cp.gamma2d_entry(1, 4, pt, desk.mapping, desk.grid, desk.rule,
                             radial_weights=w)
        b = cp.gamma2d_entry(1, 4, pt, desk.mapping, desk.grid, desk.rule)
        assert a == b


class TestMatrix:
    def test_matches_naive_matrix(self, desk):
        fast = cp.gamma2d_matrix(desk.tables, desk.mapping, desk.grid,
                                 desk.rule, desk.legendre)
        naive = cp.gamma2d_matrix_naive(desk.tables, desk.mapping, desk.grid,
                                        desk.rule, desk.legendre)
        assert relative_gap(fast.values, naive.values) < 1e-12

    @pytest.mark.parametrize("workers", [2, 3, 5])
    def test_bitwise_identical_across_workers(self, desk, workers):
        base = cp.gamma2d_matrix(desk.tables, desk.mapping, desk.grid,
                                 desk.rule, desk.legendre, workers=1)
        multi = cp.gamma2d_matrix(desk.tables, desk.mapping, desk.grid,
                                  desk.rule, desk.legendre, workers=workers)
        assert np.array_equal(base.values, multi.values)

    def test_meta_records_provenance(self, desk):
        g = cp.gamma2d_matrix(desk.tables, desk.mapping, desk.grid,
                              desk.rule, desk.legendre, workers=2)
        assert g.meta["engine"] == "modal2d"
        assert g.meta["workers"] == 2
        assert g.meta["n_mu"] == desk.rule.n
        assert g.meta["tables"] == desk.tables.fingerprint()

    def test_nonzero_and_finite(self, desk):
        g = cp.gamma2d_matrix(desk.tables, desk.mapping, desk.grid,
                              desk.rule, desk.legendre)
        assert np.all(np.isfinite(g.values))
        assert np.max(np.abs(g.values)) > 0
