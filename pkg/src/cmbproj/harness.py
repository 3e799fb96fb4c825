"""Run orchestration: configuration, comparisons, studies and matrix I/O.

This is the driver layer behind the command line: it owns the run
configuration, the RMSE comparison between unit-normalised matrices, the
integrator convergence study, the cross-check between the separable and
direct engines, the benchmark mode and the matrix file formats.
"""

from __future__ import annotations

import struct
import time
from dataclasses import dataclass, asdict, replace

import numpy as np

from .basis import (default_mode_mapping, default_radial_grid,
                    load_mode_mapping, synthesize_basis)
from .engine2d import (default_mu_points, gamma2d_entry_naive,
                       gamma2d_matrix)
from .engine3d import gamma3d_matrix
from .gamma import GammaMatrix
from .geometry import enumerate_domain, h2_exact, h2_gosper
from .quadrature import gauss_legendre, legendre_table

__all__ = [
    "ConfigError",
    "GammaFormatError",
    "RunConfig",
    "ComparisonReport",
    "rmse_percent",
    "max_rel_deviation",
    "serialize_gamma",
    "deserialize_gamma",
    "run_gamma",
    "run_crosscheck",
    "run_convergence_study",
    "run_bench",
    "CONVERGENCE_LADDER",
]

CONVERGENCE_LADDER = (54, 108, 216, 432, 864, 1768)
GOLD_R = 1768

MODES = ("gamma2d", "gamma3d", "crosscheck", "convergence", "bench")
INTEGRATOR_NAMES = ("trap", "hermite", "spline")
H2_MODES = ("gosper", "exact")
FORMATS = ("csv", "bin")


class ConfigError(ValueError):
    """Invalid run configuration."""


class GammaFormatError(ValueError):
    """Corrupt or inconsistent gamma matrix file."""


@dataclass
class RunConfig:
    mode: str = "crosscheck"
    l_min: int = 2
    l_max: int = 32
    p_max: int = 4
    mapping: str = "default"     # "default" or a file path
    r_samples: int = 216
    integrator: str = "trap"
    h2_mode: str = "gosper"
    mu_points: int | None = None    # None -> exactness rule for l_max
    block: int = 64
    workers: int = 1
    out: str | None = None
    fmt: str = "csv"
    bench_repeats: int = 5

    def validate(self) -> "RunConfig":
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}")
        if not 2 <= self.l_min <= self.l_max:
            raise ConfigError("require 2 <= lmin <= lmax")
        if self.p_max < 1:
            raise ConfigError("pmax must be >= 1")
        if self.r_samples < 12:
            raise ConfigError("r-samples must be >= 12")
        if self.integrator not in INTEGRATOR_NAMES:
            raise ConfigError(f"unknown integrator {self.integrator!r}")
        if self.h2_mode not in H2_MODES:
            raise ConfigError(f"unknown h2 mode {self.h2_mode!r}")
        if self.mu_points is not None and self.mu_points < 1:
            raise ConfigError("mu-points must be >= 1")
        if self.block < 1:
            raise ConfigError("block must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.fmt not in FORMATS:
            raise ConfigError(f"unknown output format {self.fmt!r}")
        if self.bench_repeats < 1:
            raise ConfigError("bench repeats must be >= 1")
        return self

    def resolved_mu_points(self) -> int:
        return self.mu_points if self.mu_points is not None \
            else default_mu_points(self.l_max)

    def header_lines(self) -> list[str]:
        """Fully resolved provenance header for every output."""
        d = asdict(self)
        d["mu_points"] = self.resolved_mu_points()
        return [f"# {k}={d[k]}" for k in sorted(d)]


def _problem(config: RunConfig):
    """Tables, mapping, grid and quadrature for a configuration."""
    grid = default_radial_grid(config.r_samples)
    tables = synthesize_basis(config.p_max, config.l_min, config.l_max, grid)
    if config.mapping == "default":
        mapping = default_mode_mapping(config.p_max)
    else:
        mapping = load_mode_mapping(config.mapping)
        if mapping.p_max > config.p_max:
            raise ConfigError(
                f"mapping file needs p_max={mapping.p_max} but run has "
                f"p_max={config.p_max}")
    rule = gauss_legendre(config.resolved_mu_points())
    legendre = legendre_table(config.l_max, rule)
    return tables, mapping, grid, rule, legendre


# ----------------------------------------------------------------------
# comparisons
# ----------------------------------------------------------------------

def rmse_percent(a: GammaMatrix | np.ndarray,
                 b: GammaMatrix | np.ndarray) -> float:
    """Percentage RMSE between the two unit-normalised matrices.

    Each matrix is scaled to unit Frobenius norm first, so the measure is
    invariant under global rescaling of either argument.
    """
    av = a.values if isinstance(a, GammaMatrix) else np.asarray(a, float)
    bv = b.values if isinstance(b, GammaMatrix) else np.asarray(b, float)
    if av.shape != bv.shape:
        raise ValueError(f"shape mismatch {av.shape} vs {bv.shape}")
    na = np.linalg.norm(av)
    nb = np.linalg.norm(bv)
    if na == 0.0 or nb == 0.0:
        raise ValueError("unit normalisation undefined for a zero matrix")
    diff = av / na - bv / nb
    return 100.0 * float(np.sqrt(np.mean(diff**2)))


def max_rel_deviation(a: GammaMatrix | np.ndarray,
                      b: GammaMatrix | np.ndarray) -> float:
    """Largest entrywise relative deviation |a-b| / max(|a|, |b|)."""
    av = a.values if isinstance(a, GammaMatrix) else np.asarray(a, float)
    bv = b.values if isinstance(b, GammaMatrix) else np.asarray(b, float)
    if av.shape != bv.shape:
        raise ValueError(f"shape mismatch {av.shape} vs {bv.shape}")
    denom = np.maximum(np.abs(av), np.abs(bv))
    num = np.abs(av - bv)
    with np.errstate(invalid="ignore", divide="ignore"):
        rel = np.where(denom > 0, num / denom, 0.0)
    return float(np.max(rel)) if rel.size else 0.0


@dataclass
class ComparisonReport:
    rmse_percent: float
    max_rel_dev: float
    gosper_max_rel_dev: float
    gosper_h2_error_bound: float
    runtime_2d: float
    runtime_3d: float

    def lines(self) -> list[str]:
        return [f"{k}={v:.17g}" for k, v in asdict(self).items()]


# ----------------------------------------------------------------------
# matrix serialization
# ----------------------------------------------------------------------

_BIN_MAGIC = b"MGAM"
_BIN_VERSION = 1


def serialize_gamma(gamma: GammaMatrix, path, fmt: str = "csv") -> None:
    """Write a matrix as full-precision CSV or the MGAM binary format."""
    meta = gamma.meta
    if fmt == "csv":
        header = (f"# modalgamma v1 engine={meta.get('engine', '?')} "
                  f"nmax={gamma.shape[0]} lmin={meta.get('l_min', 0)} "
                  f"lmax={meta.get('l_max', 0)} "
                  f"integrator={meta.get('integrator', '?')}")
        with open(path, "w", encoding="utf-8") as f:
            f.write(header + "\n")
            for row in gamma.values:
                f.write(",".join(f"{x:.17g}" for x in row) + "\n")
    elif fmt == "bin":
        rows, cols = gamma.shape
        with open(path, "wb") as f:
            f.write(_BIN_MAGIC)
            f.write(struct.pack("<III", _BIN_VERSION, rows, cols))
            f.write(gamma.values.astype("<f8").tobytes())
    else:
        raise ValueError(f"unknown format {fmt!r}")


def deserialize_gamma(path, fmt: str = "csv") -> GammaMatrix:
    """Read a matrix written by :func:`serialize_gamma`."""
    if fmt == "csv":
        with open(path, "r", encoding="utf-8") as f:
            lines = f.read().splitlines()
        if not lines or not lines[0].startswith("# modalgamma v1"):
            raise GammaFormatError("corrupt header")
        fields = dict(kv.split("=") for kv in lines[0][2:].split()[2:])
        try:
            n_max = int(fields["nmax"])
        except (KeyError, ValueError) as exc:
            raise GammaFormatError("corrupt header") from exc
        rows = [line for line in lines[1:] if line.strip()]
        if len(rows) != n_max:
            raise GammaFormatError(
                f"dimension mismatch: header says {n_max} rows, "
                f"found {len(rows)}")
        values = np.array([[float(x) for x in row.split(",")]
                           for row in rows])
        if values.shape != (n_max, n_max):
            raise GammaFormatError(
                f"dimension mismatch: expected {n_max}x{n_max}, "
                f"got {values.shape}")
        meta = {"engine": fields.get("engine"),
                "l_min": int(fields.get("lmin", 0)),
                "l_max": int(fields.get("lmax", 0)),
                "integrator": fields.get("integrator")}
        return GammaMatrix(values, meta)
    if fmt == "bin":
        with open(path, "rb") as f:
            blob = f.read()
        if len(blob) < 16 or blob[:4] != _BIN_MAGIC:
            raise GammaFormatError("corrupt header")
        version, rows, cols = struct.unpack("<III", blob[4:16])
        if version != _BIN_VERSION:
            raise GammaFormatError(f"unsupported version {version}")
        payload = blob[16:]
        if len(payload) != rows * cols * 8:
            raise GammaFormatError("truncated payload")
        values = np.frombuffer(payload, dtype="<f8").reshape(rows, cols)
        return GammaMatrix(values.copy(), {"engine": "file"})
    raise ValueError(f"unknown format {fmt!r}")


# ----------------------------------------------------------------------
# run modes
# ----------------------------------------------------------------------

def run_gamma(config: RunConfig) -> GammaMatrix:
    """Compute the matrix with the configured engine."""
    config.validate()
    tables, mapping, grid, rule, legendre = _problem(config)
    if config.mode == "gamma2d":
        return gamma2d_matrix(tables, mapping, grid, rule, legendre,
                              integrator=config.integrator,
                              workers=config.workers)
    if config.mode == "gamma3d":
        return gamma3d_matrix(tables, mapping, grid,
                              h2_mode=config.h2_mode,
                              integrator=config.integrator,
                              block=config.block, workers=config.workers)
    raise ConfigError(f"mode {config.mode!r} does not produce a matrix")


def run_crosscheck(config: RunConfig) -> ComparisonReport:
    """Separable vs direct engine on the same radial rule.

    The direct engine runs in exact-3j mode, where the two forms are
    algebraically identical under exact mu quadrature; the Gosper-mode
    deviation envelope is reported alongside.
    """
    config.validate()
    tables, mapping, grid, rule, legendre = _problem(config)

    t0 = time.perf_counter()
    g2 = gamma2d_matrix(tables, mapping, grid, rule, legendre,
                        integrator=config.integrator,
                        workers=config.workers)
    t1 = time.perf_counter()
    g3 = gamma3d_matrix(tables, mapping, grid, h2_mode="exact",
                        integrator=config.integrator,
                        block=config.block, workers=config.workers)
    t2 = time.perf_counter()
    g3_gosper = gamma3d_matrix(tables, mapping, grid, h2_mode="gosper",
                               integrator=config.integrator,
                               block=config.block, workers=config.workers)

    domain = enumerate_domain(config.l_min, config.l_max)
    exact = h2_exact(domain.l1, domain.l2, domain.l3)
    gosper = h2_gosper(domain.l1, domain.l2, domain.l3)
    h2_err = float(np.max(np.abs(gosper / exact - 1.0))) if domain.count \
        else 0.0

    return ComparisonReport(
        rmse_percent=rmse_percent(g2, g3),
        max_rel_dev=max_rel_deviation(g2, g3),
        gosper_max_rel_dev=max_rel_deviation(g3_gosper, g3),
        gosper_h2_error_bound=h2_err,
        runtime_2d=t1 - t0,
        runtime_3d=t2 - t1,
    )


def run_convergence_study(config: RunConfig,
                          ladder=CONVERGENCE_LADDER) -> list[dict]:
    """Integrator accuracy study against the dense-spline gold standard.

    The gold standard is the direct engine with the spline integrator on
    the densest grid; each (integrator, point count) pair reports its
    percentage RMSE against gold and its wall time.
    """
    config.validate()

    def matrix_for(integrator, n_r):
        cfg = replace(config, mode="gamma3d", integrator=integrator,
                      r_samples=n_r)
        tables, mapping, grid, _, _ = _problem(cfg)
        return gamma3d_matrix(tables, mapping, grid, h2_mode=config.h2_mode,
                              integrator=integrator, block=config.block,
                              workers=config.workers)

    gold = matrix_for("spline", GOLD_R)
    rows = []
    for integrator in INTEGRATOR_NAMES:
        for n_r in ladder:
            t0 = time.perf_counter()
            g = matrix_for(integrator, n_r)
            dt = time.perf_counter() - t0
            rows.append({"integrator": integrator, "r_samples": n_r,
                         "rmse_percent": rmse_percent(g, gold),
                         "seconds": dt})
    return rows


def _timeit(fn, repeats):
    times = []
    result = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - t0)
    return float(np.mean(times)), result


def run_bench(config: RunConfig, naive_cells: int = 8) -> list[dict]:
    """Benchmark optimized vs naive paths and worker scaling.

    Throughput is reported in the two iteration metrics: matrix cells per
    second for the separable engine and flattened triples per second for
    the direct engine.  Each measurement is repeated ``bench_repeats``
    times and averaged.  The naive separable path is timed on a subset of
    cells (it is far too slow for a full sweep) and reported per cell.
    """
    config.validate()
    tables, mapping, grid, rule, legendre = _problem(config)
    n_max = mapping.n_max
    cells = n_max * n_max
    rep = config.bench_repeats
    rows = []

    t_opt, _ = _timeit(
        lambda: gamma2d_matrix(tables, mapping, grid, rule, legendre,
                               integrator=config.integrator,
                               workers=config.workers), rep)
    rows.append({"path": "2d-optimized", "seconds": t_opt,
                 "iterations_per_s": cells / t_opt, "speedup": ""})

    sample = min(naive_cells, cells)
    def naive_sample():
        for flat in range(sample):
            n, n_prime = divmod(flat, n_max)
            gamma2d_entry_naive(n, n_prime, tables, mapping, grid, rule,
                                legendre, config.integrator)
    t_naive, _ = _timeit(naive_sample, rep)
    naive_its = sample / t_naive
    rows.append({"path": "2d-naive", "seconds": t_naive,
                 "iterations_per_s": naive_its, "speedup": ""})
    rows.append({"path": "2d-speedup", "seconds": "",
                 "iterations_per_s": "",
                 "speedup": (cells / t_opt) / naive_its})

    domain = enumerate_domain(config.l_min, config.l_max)
    t_w1, _ = _timeit(
        lambda: gamma3d_matrix(tables, mapping, grid,
                               h2_mode=config.h2_mode,
                               integrator=config.integrator,
                               block=config.block, workers=1,
                               domain=domain), rep)
    rows.append({"path": "3d-w1", "seconds": t_w1,
                 "iterations_per_s": domain.count / t_w1, "speedup": ""})
    if config.workers > 1:
        t_wn, _ = _timeit(
            lambda: gamma3d_matrix(tables, mapping, grid,
                                   h2_mode=config.h2_mode,
                                   integrator=config.integrator,
                                   block=config.block,
                                   workers=config.workers,
                                   domain=domain), rep)
        rows.append({"path": f"3d-w{config.workers}", "seconds": t_wn,
                     "iterations_per_s": domain.count / t_wn,
                     "speedup": t_w1 / t_wn})
    return rows


def write_rows_csv(rows: list[dict], config: RunConfig, path) -> None:
    """Emit study/bench rows as CSV with the full provenance header."""
    if not rows:
        raise ValueError("no rows to write")
    keys = list(rows[0])
    with open(path, "w", encoding="utf-8") as f:
        for line in config.header_lines():
            f.write(line + "\n")
        f.write(",".join(keys) + "\n")
        for row in rows:
            f.write(",".join(_cell(row[k]) for k in keys) + "\n")


def _cell(v) -> str:
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)
