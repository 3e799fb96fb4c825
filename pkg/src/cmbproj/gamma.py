"""Dense projection-matrix container shared by both engines."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["GammaMatrix"]


@dataclass
class GammaMatrix:
    """Projection matrix: rows are late-time modes n, columns primordial
    modes n'.  ``meta`` records full provenance (engine id, l range,
    p_max, integrator, input fingerprints, engine knobs)."""

    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2:
            raise ValueError("gamma matrix must be 2-dimensional")
        if not np.all(np.isfinite(v)):
            raise ValueError("gamma matrix contains non-finite entries")
        self.values = v

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def same_inputs(self, other: "GammaMatrix") -> bool:
        """True when shapes and input fingerprints agree."""
        keys = ("tables", "grid", "mapping")
        return self.shape == other.shape and all(
            self.meta.get(k) == other.meta.get(k) for k in keys)
