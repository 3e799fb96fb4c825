"""Separable projection engine.

The triple multipole sum collapses into products of 1D resummations
P[a,b](r, mu) once the geometric weight is written as a Legendre-product
integral over mu.  The fast path precomputes P for every (basis pair,
radial point, quadrature node); each matrix entry is then a six-term
permanent of a 3x3 block of the table, integrated over mu first (always)
and then radially.  The naive path recomputes the multipole sums per
entry, exactly like the original hotspot, and is kept permanently as the
oracle for the table-driven path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from multiprocessing import get_context

import numpy as np

from .basis import BasisTables, ModeMapping, RadialGrid
from .gamma import GammaMatrix
from .quadrature import QuadratureRule, integration_weights
from .scheduler import make_plan

__all__ = [
    "PTable",
    "default_mu_points",
    "build_ptable",
    "gamma2d_entry",
    "gamma2d_entry_naive",
    "gamma2d_matrix",
    "gamma2d_matrix_naive",
]

DEFAULT_PTABLE_BUDGET = 2 << 30   # bytes

# The mu integrand is a product of three Legendre expansions of degree
# <= l_max, so an n-node rule with 2n-1 >= 3*l_max is exact.
def default_mu_points(l_max: int) -> int:
    return math.ceil((3 * l_max + 1) / 2) + 2


def _l_weight(tables: BasisTables) -> np.ndarray:
    """(2l+1) / (v_l sqrt(C_l)) for every l in range."""
    ells = tables.ells().astype(np.float64)
    return (2.0 * ells + 1.0) / (tables.v * np.sqrt(tables.C))


@dataclass(frozen=True)
class PTable:
    """Precomputed resummations, values[a, b, x, m] with late index a,
    primordial index b, radial point x and mu node m."""

    values: np.ndarray

    @property
    def p_max(self) -> int:
        return self.values.shape[0]


def build_ptable(tables: BasisTables, grid: RadialGrid, rule: QuadratureRule,
                 legendre: np.ndarray,
                 budget_bytes: int = DEFAULT_PTABLE_BUDGET) -> PTable:
    """Precompute P[a, b, x, m] = sum_l lweight_l qtilde_b(r_x, l) q_a(l)
    P_l(mu_m).

    The multipole sum runs in ascending l with Kahan compensation, so the
    table is deterministic.  Construction is refused when the table would
    exceed ``budget_bytes``.
    """
    p = tables.p_max
    n_r = tables.n_radial
    n_mu = rule.n
    need = p * p * n_r * n_mu * 8
    if need > budget_bytes:
        raise MemoryError(
            f"P table needs {need} bytes but the budget allows "
            f"{budget_bytes}")
    if legendre.shape[0] < tables.l_max + 1:
        raise ValueError("legendre table does not reach l_max")
    lw = _l_weight(tables)
    pl = legendre[tables.l_min:tables.l_max + 1]     # [L, n_mu]
    acc = np.zeros((p, p, n_r, n_mu))
    comp = np.zeros_like(acc)
    for li in range(tables.l_max - tables.l_min + 1):
        term = np.einsum("a,bx,m->abxm",
                         lw[li] * tables.q[:, li],
                         tables.q_tilde[:, :, li],
                         pl[li])
        y = term - comp
        t = acc + y
        comp = (t - acc) - y
        acc = t
    return PTable(acc)


_PERMS3 = ((0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0))


def _permanent3(m):
    """Permanent of a 3x3 block m[a][b][...], the six-product sum of the
    original inner loop; vectorised over trailing axes."""
    return (m[0][0] * m[1][1] * m[2][2]
            + m[0][0] * m[1][2] * m[2][1]
            + m[0][1] * m[1][0] * m[2][2]
            + m[0][1] * m[1][2] * m[2][0]
            + m[0][2] * m[1][0] * m[2][1]
            + m[0][2] * m[1][1] * m[2][0])


def gamma2d_entry(n: int, n_prime: int, ptable: PTable, mapping: ModeMapping,
                  grid: RadialGrid, rule: QuadratureRule,
                  integrator: str = "trap",
                  radial_weights: np.ndarray | None = None) -> float:
    """One matrix entry from the precomputed table.

    The mu integral is evaluated first at every radial point, then the
    radial integral of r^2 I(r) is taken with the selected rule; this
    ordering is structural, there is no reordered fast path.
    """
    rows = mapping.triple(n)
    cols = mapping.triple(n_prime)
    m = [[ptable.values[rows[a], cols[b]] for b in range(3)] for a in range(3)]
    per = _permanent3(m)                      # [R, n_mu]
    inner = per @ rule.weights                # mu first -> I(r)
    if radial_weights is None:
        radial_weights = integration_weights(grid.r, integrator)
    return float((grid.r**2 * inner) @ radial_weights / (48.0 * np.pi))


def gamma2d_entry_naive(n: int, n_prime: int, tables: BasisTables,
                        mapping: ModeMapping, grid: RadialGrid,
                        rule: QuadratureRule, legendre: np.ndarray,
                        integrator: str = "trap") -> float:
    """Reference entry without the precomputed table.

    Recomputes the nine multipole sums at every (radial point, mu node)
    pair, mirroring the original per-entry hotspot.  Kept permanently as
    the oracle for ``gamma2d_entry``.
    """
    rows = mapping.triple(n)
    cols = mapping.triple(n_prime)
    lw = _l_weight(tables)
    pl = legendre[tables.l_min:tables.l_max + 1]        # [L, n_mu]
    factor = lw[:, None] * pl                           # [L, n_mu]
    q_rows = tables.q[list(rows)]                       # [3, L]
    inner = np.empty(tables.n_radial)
    for x in range(tables.n_radial):
        qt_cols = tables.q_tilde[list(cols), x]         # [3, L]
        m = np.einsum("lm,al,bl->abm", factor, q_rows, qt_cols)
        per = _permanent3(m)                            # [n_mu]
        inner[x] = per @ rule.weights
    w = integration_weights(grid.r, integrator)
    return float((grid.r**2 * inner) @ w / (48.0 * np.pi))


def _base_meta(tables, grid, mapping, engine, integrator, extra=None):
    meta = {
        "engine": engine,
        "l_min": tables.l_min,
        "l_max": tables.l_max,
        "p_max": tables.p_max,
        "n_max": mapping.n_max,
        "integrator": integrator,
        "tables": tables.fingerprint(),
        "grid": grid.fingerprint(),
        "mapping": mapping.fingerprint(),
    }
    if extra:
        meta.update(extra)
    return meta


def _cells_chunk(args):
    (start, stop, ptable, mapping, grid, rule, integrator) = args
    w = integration_weights(grid.r, integrator)
    n_max = mapping.n_max
    out = np.empty(stop - start)
    for flat in range(start, stop):
        n, n_prime = divmod(flat, n_max)
        out[flat - start] = gamma2d_entry(n, n_prime, ptable, mapping, grid,
                                          rule, integrator, radial_weights=w)
    return out


def gamma2d_matrix(tables: BasisTables, mapping: ModeMapping,
                   grid: RadialGrid, rule: QuadratureRule,
                   legendre: np.ndarray, integrator: str = "trap",
                   workers: int = 1,
                   ptable: PTable | None = None) -> GammaMatrix:
    """Full matrix via the precomputed-table path, cell-parallel.

    Every cell is computed independently with disjoint writes, so the
    result is bitwise identical for any worker count.
    """
    if ptable is None:
        ptable = build_ptable(tables, grid, rule, legendre)
    n_max = mapping.n_max
    plan = make_plan(n_max * n_max, workers)
    jobs = [(start, stop, ptable, mapping, grid, rule, integrator)
            for start, stop in plan.ranges]
    if workers == 1:
        chunks = [_cells_chunk(j) for j in jobs]
    else:
        with get_context("fork").Pool(workers) as pool:
            chunks = pool.map(_cells_chunk, jobs)
    values = np.concatenate(chunks).reshape(n_max, n_max)
    meta = _base_meta(tables, grid, mapping, "modal2d", integrator,
                      {"n_mu": rule.n, "workers": workers})
    return GammaMatrix(values, meta)


def gamma2d_matrix_naive(tables: BasisTables, mapping: ModeMapping,
                         grid: RadialGrid, rule: QuadratureRule,
                         legendre: np.ndarray,
                         integrator: str = "trap") -> GammaMatrix:
    """All-naive matrix (single-threaded oracle sweep)."""
    n_max = mapping.n_max
    values = np.empty((n_max, n_max))
    for n in range(n_max):
        for n_prime in range(n_max):
            values[n, n_prime] = gamma2d_entry_naive(
                n, n_prime, tables, mapping, grid, rule, legendre, integrator)
    meta = _base_meta(tables, grid, mapping, "modal2d-naive", integrator,
                      {"n_mu": rule.n, "workers": 1})
    return GammaMatrix(values, meta)
