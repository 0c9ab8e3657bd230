"""Points, point clouds and the Euclidean distance convention.

All coordinates are 64-bit floats in ambient dimension k in {1, 2, 3}. A cloud
records the stream key that generated it, so any cloud (and hence any CSV row
downstream) can be rebuilt bit-identically from (measure_id, m, seed).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def distance(a, b) -> float:
    """Euclidean distance between two points of equal ambient dimension.

    Computed as sqrt of the coordinatewise sum of squares; this exact
    formulation (same operation order) is reused everywhere distances are
    compared, so equalities like threshold == longest_edge/2 hold bitwise.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    d = a - b
    return float(np.sqrt(np.sum(d * d)))


def pairwise_distances(pts: np.ndarray, other: np.ndarray | None = None) -> np.ndarray:
    """Dense distance matrix with the same arithmetic as :func:`distance`."""
    q = pts if other is None else other
    diff = pts[:, None, :] - q[None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=-1))


@dataclass(frozen=True)
class PointCloud:
    """An ordered sample X_1..X_m; index i is the generation order.

    ``seed`` is the 64-bit stream key the coordinates were drawn from and
    ``measure_id`` names the generating measure.
    """

    points: np.ndarray
    seed: int = 0
    measure_id: str = ""
    ambient_dim: int = field(default=0)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2:
            raise ValueError("points must be an (m, k) array")
        if pts.size and not np.all(np.isfinite(pts)):
            raise ValueError("points must be finite")
        object.__setattr__(self, "points", pts)
        k = pts.shape[1] if pts.size else (self.ambient_dim or pts.shape[1])
        if self.ambient_dim and pts.size and self.ambient_dim != pts.shape[1]:
            raise ValueError(f"ambient_dim {self.ambient_dim} != coordinate width {pts.shape[1]}")
        object.__setattr__(self, "ambient_dim", int(k))
        self.points.setflags(write=False)

    @property
    def m(self) -> int:
        return self.points.shape[0]

    def __len__(self) -> int:
        return self.m
