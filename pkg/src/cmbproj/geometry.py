"""Geometric weights and the sparse triangular multipole domain.

The coupling of three multipoles (l1, l2, l3) on the sphere is weighted by
h^2, the squared (0,0,0)-column Wigner 3j symbol times (2l+1) factors.
h^2 vanishes unless the multipoles close into a triangle and their sum is
even.  Everything here is a pure function of the multipoles (plus optional
per-l weight tables), vectorised over numpy arrays where useful.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "theta_indicator",
    "h2_exact",
    "h2_gosper",
    "permutation_multiplicity",
    "geometric_prefactor",
    "TriangularDomain",
    "enumerate_domain",
]


# ----------------------------------------------------------------------
# log-factorial table, grown on demand (needed up to (l1+l2+l3+1)!)
# ----------------------------------------------------------------------

_LOG_FACT = np.zeros(1)


def _log_factorials(n_max: int) -> np.ndarray:
    """Return a table t with t[k] = log(k!) for 0 <= k <= n_max."""
    global _LOG_FACT
    if len(_LOG_FACT) <= n_max:
        size = max(n_max + 1, 2 * len(_LOG_FACT))
        t = np.zeros(size)
        t[1:] = np.cumsum(np.log(np.arange(1, size)))
        _LOG_FACT = t
    return _LOG_FACT


def theta_indicator(l1, l2, l3):
    """Top-hat indicator: 1 where (l1,l2,l3) closes a triangle and the sum
    is even, 0 elsewhere.  Accepts scalars or broadcastable arrays."""
    l1 = np.asarray(l1, dtype=np.int64)
    l2 = np.asarray(l2, dtype=np.int64)
    l3 = np.asarray(l3, dtype=np.int64)
    L = l1 + l2 + l3
    ok = (L % 2 == 0)
    ok &= (l3 <= l1 + l2) & (l2 <= l1 + l3) & (l1 <= l2 + l3)
    out = ok.astype(np.int64)
    return out if out.ndim else int(out)


def h2_exact(l1, l2, l3):
    """Exact geometric weight h^2 = (2l1+1)(2l2+1)(2l3+1)/(4pi) * 3j(l;000)^2.

    The squared 3j symbol is evaluated through the Racah closed form for
    zero magnetic quantum numbers, in the log-factorial domain so that
    multipoles up to several thousand stay in range.  Returns exactly 0
    where the triangle or parity condition fails.
    """
    l1 = np.asarray(l1, dtype=np.int64)
    l2 = np.asarray(l2, dtype=np.int64)
    l3 = np.asarray(l3, dtype=np.int64)
    scalar = l1.ndim == 0 and l2.ndim == 0 and l3.ndim == 0
    l1, l2, l3 = np.atleast_1d(l1, l2, l3)
    l1, l2, l3 = np.broadcast_arrays(l1, l2, l3)

    theta = np.asarray(theta_indicator(l1, l2, l3), dtype=bool)
    out = np.zeros(l1.shape)
    if np.any(theta):
        a, b, c = l1[theta], l2[theta], l3[theta]
        L = a + b + c
        g = L // 2
        lf = _log_factorials(int(L.max()) + 1)
        # 3j(a,b,c;0,0,0)^2 =
        #   (L-2a)!(L-2b)!(L-2c)!/(L+1)! * [g!/((g-a)!(g-b)!(g-c)!)]^2
        log3j2 = (
            lf[L - 2 * a] + lf[L - 2 * b] + lf[L - 2 * c] - lf[L + 1]
            + 2.0 * (lf[g] - lf[g - a] - lf[g - b] - lf[g - c])
        )
        pref = (2 * a + 1) * (2 * b + 1) * (2 * c + 1) / (4.0 * np.pi)
        out[theta] = pref * np.exp(log3j2)
    return float(out[0]) if scalar else out.reshape(np.shape(theta))


def h2_gosper(l1, l2, l3):
    """Gosper closed-form approximation to h^2.

    Evaluates the factorial-free formula unconditionally; the caller is
    responsible for gating on ``theta_indicator`` (the formula itself is
    finite and positive whenever the triangle condition holds, including
    the degenerate edges L_i = 0).
    """
    l1 = np.asarray(l1, dtype=np.float64)
    l2 = np.asarray(l2, dtype=np.float64)
    l3 = np.asarray(l3, dtype=np.float64)
    L = l1 + l2 + l3
    L1 = L - 2 * l1
    L2 = L - 2 * l2
    L3 = L - 2 * l3
    main = (
        (2 * l1 + 1) * (2 * l2 + 1) * (2 * l3 + 1) * (L + 1.0 / 3.0)
        / ((L + 1) * (L1 + 1.0 / 3.0) * (L2 + 1.0 / 3.0) * (L3 + 1.0 / 3.0))
    )
    root = np.sqrt((L1 + 1.0 / 6.0) * (L2 + 1.0 / 6.0) * (L3 + 1.0 / 6.0)
                   / (L + 1.0 / 6.0))
    out = main * root / (2.0 * np.pi**2)
    return float(out) if out.ndim == 0 else out


def permutation_multiplicity(l1, l2, l3):
    """Number of distinct orderings of an ordered triple l1 <= l2 <= l3:
    1 (all equal), 3 (one pair) or 6 (all distinct)."""
    l1 = np.asarray(l1, dtype=np.int64)
    l2 = np.asarray(l2, dtype=np.int64)
    l3 = np.asarray(l3, dtype=np.int64)
    if np.any(l1 > l2) or np.any(l2 > l3):
        raise ValueError("permutation_multiplicity requires l1 <= l2 <= l3")
    out = np.where(l1 == l3, 1, np.where((l1 == l2) | (l2 == l3), 3, 6))
    return int(out) if out.ndim == 0 else out


def geometric_prefactor(l1, l2, l3, C, v, l_min=0):
    """Per-triple prefactor z of the direct (3D) projection sum.

    This is the Gosper weight divided by 36 and by the per-multipole
    normalisations: z = h2_gosper / (36 v1 v2 v3 sqrt(C1 C2 C3)).
    ``C`` and ``v`` are tables indexed by physical l minus ``l_min``.
    """
    C = np.asarray(C, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if np.any(C <= 0):
        raise ValueError("power spectrum C_l must be strictly positive")
    i1 = np.asarray(l1) - l_min
    i2 = np.asarray(l2) - l_min
    i3 = np.asarray(l3) - l_min
    denom = 36.0 * v[i1] * v[i2] * v[i3] * np.sqrt(C[i1] * C[i2] * C[i3])
    out = h2_gosper(l1, l2, l3) / denom
    return float(out) if np.ndim(out) == 0 else out


class TriangularDomain:
    """Flattened enumeration of all ordered valid triples in [l_min, l_max].

    A triple (l1, l2, l3) is enumerated iff l1 <= l2 <= l3, l3 <= l1 + l2
    and l1+l2+l3 is even.  The order is lexicographic in (l1, l2, l3) and
    defines a bijection between [0, count) and the triples.
    """

    def __init__(self, l_min: int, l_max: int):
        if not 2 <= l_min <= l_max:
            raise ValueError("require 2 <= l_min <= l_max")
        self.l_min = l_min
        self.l_max = l_max
        parts_l1 = []
        parts_l2 = []
        parts_l3 = []
        for l1 in range(l_min, l_max + 1):
            for l2 in range(l1, l_max + 1):
                # first l3 >= l2 with even l1+l2+l3, stepping by 2
                start = l2 if (l1 + l2 + l2) % 2 == 0 else l2 + 1
                stop = min(l1 + l2, l_max)
                if start > stop:
                    continue
                l3 = np.arange(start, stop + 1, 2, dtype=np.int64)
                parts_l1.append(np.full(len(l3), l1, dtype=np.int64))
                parts_l2.append(np.full(len(l3), l2, dtype=np.int64))
                parts_l3.append(l3)
        if parts_l1:
            self.l1 = np.concatenate(parts_l1)
            self.l2 = np.concatenate(parts_l2)
            self.l3 = np.concatenate(parts_l3)
        else:
            self.l1 = np.zeros(0, dtype=np.int64)
            self.l2 = np.zeros(0, dtype=np.int64)
            self.l3 = np.zeros(0, dtype=np.int64)
        self.count = len(self.l1)

    def triple(self, index: int) -> tuple[int, int, int]:
        """Ordered triple at a global flattened index."""
        return int(self.l1[index]), int(self.l2[index]), int(self.l3[index])

    def multiplicities(self) -> np.ndarray:
        """Permutation multiplicity of every enumerated triple."""
        return permutation_multiplicity(self.l1, self.l2, self.l3)

    def __len__(self) -> int:
        return self.count

    def __repr__(self) -> str:
        return (f"TriangularDomain(l_min={self.l_min}, l_max={self.l_max}, "
                f"count={self.count})")


def enumerate_domain(l_min: int, l_max: int) -> TriangularDomain:
    """Build the flattened ordered-triple domain for [l_min, l_max]."""
    return TriangularDomain(l_min, l_max)
