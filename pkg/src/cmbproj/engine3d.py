"""Direct projection engine over the sparse triangular multipole domain.

Each valid ordered triple (l1, l2, l3) contributes a geometric prefactor
z, a symmetrised late-time product y(n) and a radially integrated
primordial product x(n').  The optimized sweep processes blocks of B
consecutive flattened triples, filling a late-time factor block P and a
primordial factor block X (multiplicity and z folded into X) and
accumulating the matrix as P X^T -- the blocked two-matrix reduction.
The naive path keeps the original loop structure (primordial mode outer,
triple loops, inner late-mode accumulation) and is the permanent oracle.
"""

from __future__ import annotations

from itertools import permutations
from multiprocessing import get_context

import numpy as np

from .basis import BasisTables, ModeMapping, RadialGrid
from .gamma import GammaMatrix
from .geometry import (TriangularDomain, enumerate_domain, geometric_prefactor,
                       h2_exact, permutation_multiplicity, theta_indicator)
from .quadrature import INTEGRATORS, integration_weights
from .scheduler import make_plan, merge_partials

__all__ = [
    "radial_integral_x",
    "late_product_y",
    "gamma3d_matrix",
    "gamma3d_naive",
    "gamma3d_unordered_reference",
    "DEFAULT_BLOCK",
]

DEFAULT_BLOCK = 64

_PERMS3 = tuple(permutations((0, 1, 2)))


def _triple_z(tables: BasisTables, l1, l2, l3, h2_mode: str):
    """Geometric prefactor of the direct sum for (arrays of) triples."""
    if h2_mode == "gosper":
        return geometric_prefactor(l1, l2, l3, tables.C, tables.v,
                                   l_min=tables.l_min)
    if h2_mode == "exact":
        i1 = np.asarray(l1) - tables.l_min
        i2 = np.asarray(l2) - tables.l_min
        i3 = np.asarray(l3) - tables.l_min
        v, C = tables.v, tables.C
        denom = 36.0 * v[i1] * v[i2] * v[i3] * np.sqrt(C[i1] * C[i2] * C[i3])
        return h2_exact(l1, l2, l3) / denom
    raise ValueError(f"unknown h2_mode {h2_mode!r}")


def radial_integral_x(l1: int, l2: int, l3: int, n_prime: int,
                      tables: BasisTables, mapping: ModeMapping,
                      grid: RadialGrid, integrator: str = "trap") -> float:
    """Radial integral of r^2 times the six-way symmetrised primordial
    product for one triple and one primordial mode."""
    ip, jp, kp = mapping.triple(n_prime)
    i1 = l1 - tables.l_min
    i2 = l2 - tables.l_min
    i3 = l3 - tables.l_min
    qt = tables.q_tilde
    f = np.zeros(tables.n_radial)
    for a, b, c in _PERMS3:
        idx = (ip, jp, kp)
        f += qt[idx[a], :, i1] * qt[idx[b], :, i2] * qt[idx[c], :, i3]
    return INTEGRATORS[integrator](grid.r, grid.r**2 * f)


def late_product_y(l1: int, l2: int, l3: int, n: int,
                   tables: BasisTables, mapping: ModeMapping) -> float:
    """Six-way symmetrised late-time product for one triple and mode."""
    i, j, k = mapping.triple(n)
    i1 = l1 - tables.l_min
    i2 = l2 - tables.l_min
    i3 = l3 - tables.l_min
    q = tables.q
    idx = (i, j, k)
    return float(sum(q[idx[a], i1] * q[idx[b], i2] * q[idx[c], i3]
                     for a, b, c in _PERMS3))


def _block_accumulate(gamma: np.ndarray, tables: BasisTables,
                      mapping: ModeMapping, wr2: np.ndarray,
                      l1: np.ndarray, l2: np.ndarray, l3: np.ndarray,
                      zm: np.ndarray) -> None:
    """Accumulate one triple block: gamma += P X^T.

    P[n, t] is the symmetrised late product, X[n', t] the radially
    integrated symmetrised primordial product scaled by zm (prefactor
    times permutation multiplicity).
    """
    i1 = l1 - tables.l_min
    i2 = l2 - tables.l_min
    i3 = l3 - tables.l_min
    im = mapping.entries[:, 0]
    jm = mapping.entries[:, 1]
    km = mapping.entries[:, 2]
    cols = (im, jm, km)

    q1 = tables.q[:, i1]                     # [p, B]
    q2 = tables.q[:, i2]
    q3 = tables.q[:, i3]
    p_blk = np.zeros((mapping.n_max, len(l1)))
    for a, b, c in _PERMS3:
        p_blk += q1[cols[a]] * q2[cols[b]] * q3[cols[c]]

    qt1 = tables.q_tilde[:, :, i1]           # [p, R, B]
    qt2 = tables.q_tilde[:, :, i2]
    qt3 = tables.q_tilde[:, :, i3]
    f = np.zeros((mapping.n_max, tables.n_radial, len(l1)))
    for a, b, c in _PERMS3:
        f += qt1[cols[a]] * qt2[cols[b]] * qt3[cols[c]]
    x_blk = np.einsum("r,nrb->nb", wr2, f)
    x_blk *= zm

    gamma += p_blk @ x_blk.T


def _sweep_chunk(args):
    (start, stop, tables, mapping, grid, domain, h2_mode, integrator,
     block) = args
    wr2 = integration_weights(grid.r, integrator) * grid.r**2
    gamma = np.zeros((mapping.n_max, mapping.n_max))
    for b0 in range(start, stop, block):
        b1 = min(b0 + block, stop)
        l1 = domain.l1[b0:b1]
        l2 = domain.l2[b0:b1]
        l3 = domain.l3[b0:b1]
        mult = permutation_multiplicity(l1, l2, l3)
        zm = _triple_z(tables, l1, l2, l3, h2_mode) * mult
        _block_accumulate(gamma, tables, mapping, wr2, l1, l2, l3, zm)
    return gamma


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


def gamma3d_matrix(tables: BasisTables, mapping: ModeMapping,
                   grid: RadialGrid, h2_mode: str = "gosper",
                   integrator: str = "trap", block: int = DEFAULT_BLOCK,
                   workers: int = 1,
                   domain: TriangularDomain | None = None) -> GammaMatrix:
    """Blocked sweep of the flattened triple space.

    The space is statically partitioned into contiguous per-worker chunks;
    each worker accumulates a private partial matrix block by block and
    the partials are merged once in worker order.  Bitwise reproducible
    for a fixed (workers, block) pair.
    """
    if block < 1:
        raise ValueError("block must be >= 1")
    if domain is None:
        domain = enumerate_domain(tables.l_min, tables.l_max)
    meta = _base_meta(tables, grid, mapping, "modal3d", integrator,
                      {"h2_mode": h2_mode, "block": block,
                       "workers": workers})
    plan = make_plan(domain.count, workers)
    jobs = [(start, stop, tables, mapping, grid, domain, h2_mode,
             integrator, block) for start, stop in plan.ranges]
    if workers == 1:
        partial_values = [_sweep_chunk(jobs[0])]
    else:
        with get_context("fork").Pool(workers) as pool:
            partial_values = pool.map(_sweep_chunk, jobs)
    partials = [GammaMatrix(v, dict(meta)) for v in partial_values]
    merged = merge_partials(partials)
    merged.meta = meta
    return merged


def gamma3d_naive(tables: BasisTables, mapping: ModeMapping,
                  grid: RadialGrid, h2_mode: str = "gosper",
                  integrator: str = "trap") -> GammaMatrix:
    """Literal original loop structure, kept permanently as the oracle.

    Primordial mode outer, triangular multipole loops with permutation
    multiplicity, inner late-mode loop accumulating a per-row vector.
    Single-threaded.
    """
    domain = enumerate_domain(tables.l_min, tables.l_max)
    n_max = mapping.n_max
    values = np.zeros((n_max, n_max))
    for n_prime in range(n_max):
        mvec = np.zeros(n_max)
        for t in range(domain.count):
            l1, l2, l3 = domain.triple(t)
            x = radial_integral_x(l1, l2, l3, n_prime, tables, mapping,
                                  grid, integrator)
            mult = permutation_multiplicity(l1, l2, l3)
            z = float(_triple_z(tables, l1, l2, l3, h2_mode)) * mult
            for m in range(n_max):
                y = late_product_y(l1, l2, l3, m, tables, mapping)
                mvec[m] += x * y * z
        values[:, n_prime] = mvec
    meta = _base_meta(tables, grid, mapping, "modal3d-naive", integrator,
                      {"h2_mode": h2_mode, "block": 1, "workers": 1})
    return GammaMatrix(values, meta)


def gamma3d_unordered_reference(tables: BasisTables, mapping: ModeMapping,
                                grid: RadialGrid, h2_mode: str = "gosper",
                                integrator: str = "trap") -> GammaMatrix:
    """Full unordered triple sum, no ordering and no multiplicity.

    Validates that the ordered enumeration with permutation multiplicity
    is exact.  Cost grows with the cube of the multipole range; intended
    for small validation runs only.
    """
    n_max = mapping.n_max
    values = np.zeros((n_max, n_max))
    lo, hi = tables.l_min, tables.l_max
    for l1 in range(lo, hi + 1):
        for l2 in range(lo, hi + 1):
            for l3 in range(lo, hi + 1):
                if not theta_indicator(l1, l2, l3):
                    continue
                z = float(_triple_z(tables, l1, l2, l3, h2_mode))
                x = np.array([radial_integral_x(l1, l2, l3, np_, tables,
                                                mapping, grid, integrator)
                              for np_ in range(n_max)])
                y = np.array([late_product_y(l1, l2, l3, m, tables, mapping)
                              for m in range(n_max)])
                values += z * np.outer(y, x)
    meta = _base_meta(tables, grid, mapping, "modal3d-unordered", integrator,
                      {"h2_mode": h2_mode, "block": 1, "workers": 1})
    return GammaMatrix(values, meta)
