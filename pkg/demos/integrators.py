"""Radial integrator accuracy ladder on the peaked test function.

Reproduces the accuracy-vs-resolution trend for the three integrators
(trapezium, Hermite-cubic, natural spline) on the default multi-zone
radial grid family, using a dense uniform trapezium sweep as the oracle.
"""

import numpy as np

import cmbproj as cp
from cmbproj.basis import radial_peak_weight
from cmbproj.quadrature import INTEGRATORS


def main():
    def f(r):
        return r**2 * radial_peak_weight(r) ** 3

    dense = np.linspace(0.0, 16000.0, 100_000)
    oracle = cp.integrate_trapezium(dense, f(dense))
    print(f"oracle (100k-point trapezium): {oracle:.10e}\n")

    ladder = (54, 108, 216, 432, 864, 1768)
    names = ("trap", "hermite", "spline")
    print(f"{'R':>6} " + " ".join(f"{n:>12}" for n in names))
    for n_r in ladder:
        grid = cp.default_radial_grid(n_r)
        y = f(grid.r)
        errs = [abs(INTEGRATORS[n](grid.r, y) - oracle) / abs(oracle)
                for n in names]
        print(f"{n_r:>6} " + " ".join(f"{e:>12.3e}" for e in errs))

    print("\nGauss-Legendre sanity: 20-node rule on x^38 "
          "(degree 2n-2, still exact):")
    rule = cp.gauss_legendre(20)
    got = float(rule.weights @ rule.nodes**38)
    print(f"  rule = {got:.15f}   exact = {2 / 39:.15f}")


if __name__ == "__main__":
    main()
