"""Connectivity of the ball-union / r-graph view of a sample.

Closed-ball convention throughout: two radius-r balls touch (and their points
are adjacent in the 2r-graph) when the center distance is <= 2r. Under it the
connectivity threshold equals exactly half the longest MST edge, with no
boundary ambiguity, and that is how the threshold is computed; the O(m^2)
union-find sweep here exists for validation-scale queries and bisection
cross-checks.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .emst import mst_fast
from .geometry import PointCloud

_BLOCK = 512


@dataclass(frozen=True)
class ConnectivityReport:
    radius: float
    component_count: int

    @property
    def is_connected(self) -> bool:
        return self.component_count == 1


def _merge_edges(parent: np.ndarray, ii: np.ndarray, jj: np.ndarray) -> None:
    """Union the endpoint pairs into parent by repeated hook-and-compress.

    Each round hooks every still-split edge's larger root under the smaller
    one (collisions keep one arbitrary winner) and fully compresses, so the
    loop ends in O(log m) rounds.
    """
    while len(ii):
        r = parent
        while True:
            rr = r[r]
            if np.array_equal(rr, r):
                break
            r = rr
        parent[:] = r
        ri, rj = r[ii], r[jj]
        split = ri != rj
        if not split.any():
            return
        ii, jj = ii[split], jj[split]
        ri, rj = ri[split], rj[split]
        parent[np.maximum(ri, rj)] = np.minimum(ri, rj)


def is_connected_at(cloud: PointCloud, r: float) -> ConnectivityReport:
    """Union-find over all pairs at distance <= 2r; O(m^2), validation scale."""
    m = cloud.m
    if m == 0:
        raise ValueError("connectivity of an empty cloud is undefined")
    if r < 0:
        raise ValueError("radius must be >= 0")
    pts = cloud.points
    reach = 2.0 * r
    parent = np.arange(m, dtype=np.int64)
    for start in range(0, m, _BLOCK):
        rows = pts[start : start + _BLOCK]
        diff = rows[:, None, :] - pts[None, :, :]
        d = np.sqrt(np.sum(diff * diff, axis=-1))
        ii, jj = np.nonzero(d <= reach)
        ii += start
        above = jj > ii
        _merge_edges(parent, ii[above], jj[above])
    roots = parent[parent]
    while not np.array_equal(roots, parent):
        parent = roots
        roots = parent[parent]
    return ConnectivityReport(radius=float(r), component_count=int(len(np.unique(roots))))


def connectivity_threshold(cloud: PointCloud) -> float:
    """Minimal r making the 2r-graph connected: exactly longest MST edge / 2."""
    if cloud.m == 0:
        raise ValueError("connectivity of an empty cloud is undefined")
    return mst_fast(cloud).longest_edge / 2.0
