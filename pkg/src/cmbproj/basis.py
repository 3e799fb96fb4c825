"""Mode mapping, basis-function tables and the nonuniform radial grid.

The projection matrix is indexed by flat mode numbers n, each standing for
an ordered triple (i, j, k) of 1D basis-function indices.  Real pipelines
read an optimised mapping from file; the default here enumerates all
ordered triples below ``p_max`` in k-major order.  The basis tables are
synthetic but shaped like their cosmological counterparts: a smooth
polynomial late-time basis, a Sachs-Wolfe-like power spectrum and a
projected basis sharply peaked near the radius of last scattering.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ModeMapping",
    "BasisTables",
    "RadialGrid",
    "MappingFormatError",
    "BasisFormatError",
    "default_mode_mapping",
    "load_mode_mapping",
    "save_mode_mapping",
    "default_radial_grid",
    "synthesize_basis",
    "save_basis",
    "load_basis",
]

# Radial peak parameters (plumbing constants; the physical input only pins
# the peak location near r ~ 14000).
R_PEAK = 14000.0
R_SIGMA = 150.0
W_FLOOR = 0.05
R_MAX_DEFAULT = 16000.0


class MappingFormatError(ValueError):
    """Malformed mode-mapping file."""


class BasisFormatError(ValueError):
    """Malformed basis-table file."""


def _sha256(*chunks: bytes) -> str:
    h = hashlib.sha256()
    for c in chunks:
        h.update(c)
    return h.hexdigest()[:16]


@dataclass(frozen=True)
class ModeMapping:
    """Injective map n -> (i, j, k) with i <= j <= k < p_max."""

    entries: np.ndarray          # int array [n_max, 3]
    p_max: int

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=np.int64).reshape(-1, 3)
        object.__setattr__(self, "entries", e)
        if len(e) == 0:
            raise ValueError("mode mapping must contain at least one entry")
        if np.any(e < 0) or np.any(e >= self.p_max):
            raise ValueError("mapping indices must lie in [0, p_max)")
        if np.any(e[:, 0] > e[:, 1]) or np.any(e[:, 1] > e[:, 2]):
            raise ValueError("mapping triples must satisfy i <= j <= k")
        if len({tuple(t) for t in e.tolist()}) != len(e):
            raise ValueError("mapping contains duplicate triples")

    @property
    def n_max(self) -> int:
        return len(self.entries)

    def triple(self, n: int) -> tuple[int, int, int]:
        i, j, k = self.entries[n]
        return int(i), int(j), int(k)

    def index_of(self, triple) -> int:
        i, j, k = triple
        hit = np.flatnonzero((self.entries[:, 0] == i)
                             & (self.entries[:, 1] == j)
                             & (self.entries[:, 2] == k))
        if len(hit) == 0:
            raise KeyError(f"triple {triple!r} not in mapping")
        return int(hit[0])

    def fingerprint(self) -> str:
        return _sha256(np.int64(self.p_max).tobytes(), self.entries.tobytes())


def default_mode_mapping(p_max: int) -> ModeMapping:
    """All ordered triples i <= j <= k < p_max, enumerated k-major
    (k ascending, then j, then i); n_max = C(p_max+2, 3)."""
    if p_max < 1:
        raise ValueError("p_max must be >= 1")
    entries = [(i, j, k)
               for k in range(p_max)
               for j in range(k + 1)
               for i in range(j + 1)]
    return ModeMapping(np.array(entries, dtype=np.int64), p_max)


def save_mode_mapping(mapping: ModeMapping, path) -> None:
    """Write the ``modalmap v1`` text format."""
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"modalmap v1 p_max={mapping.p_max} n_max={mapping.n_max}\n")
        for n, (i, j, k) in enumerate(mapping.entries):
            f.write(f"{n} {i} {j} {k}\n")


def load_mode_mapping(source) -> ModeMapping:
    """Parse a ``modalmap v1`` file (path or open text file).

    Raises MappingFormatError naming the offending line for malformed
    records, duplicate or unordered triples, out-of-range indices and
    non-ascending mode numbers.
    """
    if hasattr(source, "read"):
        lines = source.read().splitlines()
    else:
        with open(source, "r", encoding="utf-8") as f:
            lines = f.read().splitlines()
    if not lines:
        raise MappingFormatError("empty mapping file")
    header = lines[0].split()
    if (len(header) != 4 or header[0] != "modalmap" or header[1] != "v1"
            or not header[2].startswith("p_max=")
            or not header[3].startswith("n_max=")):
        raise MappingFormatError(f"bad header line: {lines[0]!r}")
    try:
        p_max = int(header[2][6:])
        n_max = int(header[3][6:])
    except ValueError as exc:
        raise MappingFormatError(f"bad header line: {lines[0]!r}") from exc

    entries = []
    seen = set()
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 4:
            raise MappingFormatError(f"malformed record at line {lineno}")
        try:
            n, i, j, k = (int(p) for p in parts)
        except ValueError as exc:
            raise MappingFormatError(
                f"malformed record at line {lineno}") from exc
        if n != len(entries):
            raise MappingFormatError(
                f"mode index not ascending at line {lineno}")
        if not (i <= j <= k):
            raise MappingFormatError(f"unordered triple at line {lineno}")
        if not (0 <= i and k < p_max):
            raise MappingFormatError(
                f"index out of range [0, p_max) at line {lineno}")
        if (i, j, k) in seen:
            raise MappingFormatError(f"duplicate triple at line {lineno}")
        seen.add((i, j, k))
        entries.append((i, j, k))
    if len(entries) != n_max:
        raise MappingFormatError(
            f"header says n_max={n_max} but file has {len(entries)} entries")
    return ModeMapping(np.array(entries, dtype=np.int64), p_max)


@dataclass(frozen=True)
class RadialGrid:
    """Strictly increasing radial samples with three resolution zones."""

    r: np.ndarray
    zone_bounds: tuple[float, float]   # (inner|peak, peak|outer) boundaries

    def __post_init__(self):
        r = np.asarray(self.r, dtype=np.float64)
        object.__setattr__(self, "r", r)
        if np.any(np.diff(r) <= 0) or r[0] < 0:
            raise ValueError("radial samples must be >= 0 and increasing")

    def __len__(self) -> int:
        return len(self.r)

    def fingerprint(self) -> str:
        return _sha256(self.r.tobytes())


def default_radial_grid(n_total: int = 216,
                        r_max: float = R_MAX_DEFAULT) -> RadialGrid:
    """Three-zone radial grid: 25% of the points before the peak window
    [r* - 5 sigma, r* + 5 sigma], 50% inside it, 25% after, uniform within
    each zone.  First sample is 0, last is r_max."""
    if n_total < 12:
        raise ValueError("n_total must be >= 12")
    lo = R_PEAK - 5 * R_SIGMA
    hi = R_PEAK + 5 * R_SIGMA
    if not 0 < lo < hi < r_max:
        raise ValueError("peak window must lie inside (0, r_max)")
    n1 = round(n_total / 4)
    n3 = round(n_total / 4)
    n2 = n_total - n1 - n3
    zone1 = lo * np.arange(n1) / n1                      # [0, lo)
    zone2 = np.linspace(lo, hi, n2)                      # [lo, hi]
    zone3 = hi + (r_max - hi) * np.arange(1, n3 + 1) / n3  # (hi, r_max]
    return RadialGrid(np.concatenate([zone1, zone2, zone3]), (lo, hi))


def radial_peak_weight(r) -> np.ndarray:
    """Peaked-plus-floor radial profile used by the synthetic basis."""
    r = np.asarray(r, dtype=np.float64)
    return np.exp(-((r - R_PEAK) ** 2) / (2.0 * R_SIGMA**2)) + W_FLOOR


@dataclass(frozen=True)
class BasisTables:
    """Sampled 1D basis functions and per-multipole weights.

    q[i, l-l_min] is the late-time basis, q_tilde[i, x, l-l_min] the
    projected primordial basis on the radial grid, C the power spectrum
    and v = (2l+1)^(1/6).  All tables index multipoles by l - l_min.
    """

    q: np.ndarray          # [p_max, L]
    q_tilde: np.ndarray    # [p_max, R, L]
    C: np.ndarray          # [L]
    v: np.ndarray          # [L]
    l_min: int
    l_max: int

    def __post_init__(self):
        for name in ("q", "q_tilde", "C", "v"):
            a = np.asarray(getattr(self, name), dtype=np.float64)
            object.__setattr__(self, name, a)
            if not np.all(np.isfinite(a)):
                raise ValueError(f"table {name} contains non-finite values")
        L = self.l_max - self.l_min + 1
        if self.q.shape[1] != L or self.q_tilde.shape[2] != L \
                or self.C.shape != (L,) or self.v.shape != (L,):
            raise ValueError("table shapes inconsistent with l range")
        if np.any(self.C <= 0):
            raise ValueError("power spectrum C_l must be strictly positive")

    @property
    def p_max(self) -> int:
        return self.q.shape[0]

    @property
    def n_radial(self) -> int:
        return self.q_tilde.shape[1]

    def ells(self) -> np.ndarray:
        return np.arange(self.l_min, self.l_max + 1)

    def fingerprint(self) -> str:
        return _sha256(self.q.tobytes(), self.q_tilde.tobytes(),
                       self.C.tobytes(), self.v.tobytes(),
                       np.int64([self.l_min, self.l_max]).tobytes())


def _shifted_legendre(p_max: int, l_min: int, l_max: int) -> np.ndarray:
    """Legendre polynomials of degree < p_max in x = 2(l-l_min)/span - 1."""
    ells = np.arange(l_min, l_max + 1, dtype=np.float64)
    span = max(l_max - l_min, 1)
    x = 2.0 * (ells - l_min) / span - 1.0
    q = np.empty((p_max, len(ells)))
    q[0] = 1.0
    if p_max > 1:
        q[1] = x
    for i in range(1, p_max - 1):
        q[i + 1] = ((2 * i + 1) * x * q[i] - i * q[i - 1]) / (i + 1)
    return q


def synthesize_basis(p_max: int, l_min: int, l_max: int,
                     grid: RadialGrid) -> BasisTables:
    """Deterministic synthetic basis tables.

    q_i is the shifted Legendre polynomial of degree i on the l range,
    C_l = 1/(l(l+1)), v_l = (2l+1)^(1/6), and q_tilde_i(r, l) =
    q_i(l) * w(r) with w peaked at the last-scattering radius plus a flat
    floor.  Bit-reproducible for fixed parameters.
    """
    if p_max < 1 or not 2 <= l_min <= l_max:
        raise ValueError("require p_max >= 1 and 2 <= l_min <= l_max")
    ells = np.arange(l_min, l_max + 1, dtype=np.float64)
    q = _shifted_legendre(p_max, l_min, l_max)
    C = 1.0 / (ells * (ells + 1.0))
    v = (2.0 * ells + 1.0) ** (1.0 / 6.0)
    w = radial_peak_weight(grid.r)
    q_tilde = q[:, None, :] * w[None, :, None]
    return BasisTables(q=q, q_tilde=q_tilde, C=C, v=v,
                       l_min=l_min, l_max=l_max)


# ----------------------------------------------------------------------
# basis-table file format ("modalbasis v1")
# ----------------------------------------------------------------------

def save_basis(tables: BasisTables, grid: RadialGrid, path) -> None:
    """Write tables plus the radial grid in the ``modalbasis v1`` format."""
    def emit(f, arr):
        np.savetxt(f, np.asarray(arr).reshape(1, -1), fmt="%.17g")

    with open(path, "w", encoding="utf-8") as f:
        f.write(f"modalbasis v1 p_max={tables.p_max} lmin={tables.l_min} "
                f"lmax={tables.l_max} R={tables.n_radial}\n")
        f.write("[C]\n")
        emit(f, tables.C)
        f.write("[v]\n")
        emit(f, tables.v)
        f.write("[q]\n")
        emit(f, tables.q)            # row-major, l fastest
        f.write("[r]\n")
        emit(f, grid.r)
        f.write("[qtilde]\n")
        emit(f, tables.q_tilde)      # row-major (i, x, l), l fastest


def load_basis(path) -> tuple[BasisTables, RadialGrid]:
    """Read a ``modalbasis v1`` file back into tables plus radial grid."""
    with open(path, "r", encoding="utf-8") as f:
        lines = f.read().splitlines()
    if not lines:
        raise BasisFormatError("empty basis file")
    header = lines[0].split()
    if len(header) != 6 or header[0] != "modalbasis" or header[1] != "v1":
        raise BasisFormatError(f"bad header line: {lines[0]!r}")
    try:
        fields = dict(kv.split("=") for kv in header[2:])
        p_max = int(fields["p_max"])
        l_min = int(fields["lmin"])
        l_max = int(fields["lmax"])
        n_r = int(fields["R"])
    except (ValueError, KeyError) as exc:
        raise BasisFormatError(f"bad header line: {lines[0]!r}") from exc

    sections: dict[str, list[str]] = {}
    current = None
    for line in lines[1:]:
        s = line.strip()
        if not s:
            continue
        if s.startswith("[") and s.endswith("]"):
            current = s[1:-1]
            sections[current] = []
        elif current is None:
            raise BasisFormatError(f"data before first section: {s!r}")
        else:
            sections[current].append(s)

    L = l_max - l_min + 1
    want = {"C": (L,), "v": (L,), "q": (p_max, L),
            "r": (n_r,), "qtilde": (p_max, n_r, L)}
    arrays = {}
    for name, shape in want.items():
        if name not in sections:
            raise BasisFormatError(f"missing section [{name}]")
        try:
            flat = np.array(" ".join(sections[name]).split(),
                            dtype=np.float64)
        except ValueError as exc:
            raise BasisFormatError(
                f"non-numeric value in section [{name}]") from exc
        if flat.size != int(np.prod(shape)):
            raise BasisFormatError(
                f"section [{name}] has {flat.size} values, "
                f"expected {int(np.prod(shape))}")
        arrays[name] = flat.reshape(shape)

    grid_r = arrays["r"]
    lo = R_PEAK - 5 * R_SIGMA
    hi = R_PEAK + 5 * R_SIGMA
    grid = RadialGrid(grid_r, (lo, hi))
    tables = BasisTables(q=arrays["q"], q_tilde=arrays["qtilde"],
                         C=arrays["C"], v=arrays["v"],
                         l_min=l_min, l_max=l_max)
    return tables, grid
