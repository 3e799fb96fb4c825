"""1D integration machinery.

Gauss-Legendre rules are generated by Newton iteration on the Legendre
recurrence, starting from the Chebyshev-angle asymptotic guesses; this
gives node accuracy at the couple-of-ulp level, which the separable
projection path needs (its mu integral reconstructs a step function and is
extremely sensitive to quadrature error).

Radial integrals over the nonuniform grid come in three flavours:
trapezium, Hermite-cubic (trapezium plus a secant-slope correction term)
and a natural-cubic-spline gold standard.  All integrator sums are
accumulated with math.fsum so the result is independent of clever
re-association and correctly rounded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

__all__ = [
    "QuadratureRule",
    "gauss_legendre",
    "legendre_table",
    "integrate_trapezium",
    "integrate_hermite",
    "integrate_spline",
    "integration_weights",
    "INTEGRATORS",
]

_NEWTON_CAP = 100


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Legendre nodes and weights on [-1, 1]."""

    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "nodes",
                           np.asarray(self.nodes, dtype=np.float64))
        object.__setattr__(self, "weights",
                           np.asarray(self.weights, dtype=np.float64))

    @property
    def n(self) -> int:
        return len(self.nodes)


def _legendre_and_derivative(n: int, x: np.ndarray):
    """P_n(x) and P_n'(x) by the three-term recurrence."""
    p0 = np.ones_like(x)
    p1 = x.copy()
    if n == 0:
        return p0, np.zeros_like(x)
    for k in range(1, n):
        p0, p1 = p1, ((2 * k + 1) * x * p1 - k * p0) / (k + 1)
    dp = n * (x * p1 - p0) / (x * x - 1.0)
    return p1, dp


def gauss_legendre(n: int) -> QuadratureRule:
    """n-node Gauss-Legendre rule on [-1, 1].

    Nodes are the roots of P_n, converged by Newton iteration; weights are
    w = 2 / ((1 - x^2) P_n'(x)^2).  Raises RuntimeError if any node fails
    to converge within the iteration cap (must not happen for n <= 16384).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if n == 1:
        return QuadratureRule(np.zeros(1), np.full(1, 2.0))
    b = np.arange(n, dtype=np.float64)
    x = np.cos(np.pi * (4 * b + 3) / (4 * n + 2))
    for _ in range(_NEWTON_CAP):
        p, dp = _legendre_and_derivative(n, x)
        dx = p / dp
        x = x - dx
        if np.max(np.abs(dx)) < 1e-15:
            # one clean-up step past the convergence check
            p, dp = _legendre_and_derivative(n, x)
            x = x - p / dp
            break
    else:
        raise RuntimeError(f"Gauss-Legendre Newton iteration failed at n={n}")
    x = np.sort(x)
    # enforce the exact symmetry x_b = -x_{n-1-b}
    x = 0.5 * (x - x[::-1])
    _, dp = _legendre_and_derivative(n, x)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    w = 0.5 * (w + w[::-1])
    return QuadratureRule(x, w)


def legendre_table(l_max: int, rule: QuadratureRule) -> np.ndarray:
    """P_l at every node, shape [l_max+1, n], by the upward recurrence."""
    if l_max < 0:
        raise ValueError("l_max must be >= 0")
    x = rule.nodes
    table = np.empty((l_max + 1, len(x)))
    table[0] = 1.0
    if l_max >= 1:
        table[1] = x
    for l in range(1, l_max):
        table[l + 1] = ((2 * l + 1) * x * table[l] - l * table[l - 1]) / (l + 1)
    return table


def _check_lengths(r, y, minimum):
    r = np.asarray(r, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if r.shape != y.shape:
        raise ValueError(f"sample length {y.shape} != grid length {r.shape}")
    if len(r) < minimum:
        raise ValueError(f"need at least {minimum} samples")
    return r, y


def integrate_trapezium(r, y) -> float:
    """Trapezium rule on a (possibly nonuniform) increasing grid."""
    r, y = _check_lengths(r, y, 2)
    dr = np.diff(r)
    return math.fsum(0.5 * dr * (y[:-1] + y[1:]))


def integrate_hermite(r, y) -> float:
    """Hermite-cubic integrator with forward-secant slopes.

    Per interval k: (dr_k/2) [y_k + y_{k+1} + (dr_k/6)(s_k - s_{k+1})]
    with s_k the forward secant; the out-of-range slope at the final
    interval is clamped to the last in-range secant, so the final
    interval's correction is zero.
    """
    r, y = _check_lengths(r, y, 3)
    dr = np.diff(r)
    s = np.diff(y) / dr
    s_next = np.append(s[1:], s[-1])
    terms = 0.5 * dr * (y[:-1] + y[1:] + dr / 6.0 * (s - s_next))
    return math.fsum(terms)


def _natural_spline_moments(r, y) -> np.ndarray:
    """Second derivatives of the natural cubic spline through (r, y)."""
    n = len(r)
    h = np.diff(r)
    ab = np.zeros((3, n))
    ab[1, 0] = ab[1, -1] = 1.0
    ab[1, 1:-1] = 2.0 * (h[:-1] + h[1:])
    ab[0, 1] = 0.0
    ab[0, 2:] = h[1:]
    ab[2, :-2] = h[:-1]
    ab[2, -2] = 0.0
    rhs = np.zeros(n)
    rhs[1:-1] = 6.0 * ((y[2:] - y[1:-1]) / h[1:] - (y[1:-1] - y[:-2]) / h[:-1])
    return solve_banded((1, 1), ab, rhs)


def integrate_spline(r, y) -> float:
    """Natural cubic spline through all samples, integrated analytically.

    The gold standard for the integrator accuracy studies.
    """
    r, y = _check_lengths(r, y, 4)
    m = _natural_spline_moments(r, y)
    h = np.diff(r)
    terms = 0.5 * h * (y[:-1] + y[1:]) - h**3 / 24.0 * (m[:-1] + m[1:])
    return math.fsum(terms)


INTEGRATORS = {
    "trap": integrate_trapezium,
    "hermite": integrate_hermite,
    "spline": integrate_spline,
}


def integration_weights(r, method: str = "trap") -> np.ndarray:
    """Weight vector w with w . y == integrator(r, y) for every y.

    All three integrators are linear in the samples, so their action on a
    fixed grid is a dot product; the weights are extracted by applying the
    integrator to unit vectors.  Used by the engines' vectorised paths
    (cross-checked against the direct integrators by the oracle tests).
    """
    r = np.asarray(r, dtype=np.float64)
    try:
        integrate = INTEGRATORS[method]
    except KeyError:
        raise ValueError(f"unknown integrator {method!r}") from None
    n = len(r)
    w = np.empty(n)
    e = np.zeros(n)
    for i in range(n):
        e[i] = 1.0
        w[i] = integrate(r, e)
        e[i] = 0.0
    return w
