"""Ball packings, occupancy statistics, and ball-mass regularity estimation.

A maximal packing is built greedily over a dense reference cloud standing in
for the support: sweep the reference in index order and accept a point as a
center iff it is strictly farther than 2*delta from every accepted center.
Maximality forces the doubled balls to cover the reference, which the
`verify_packing` checker asserts with the package distance convention.

Occupancy of a packing against a fresh sample drives the two proof-shaped
statistics: full occupancy (every ball holds a sample point, which forces
connectivity at radius 3*delta) and the lonely-ball count Y (balls holding
exactly one point, which force disconnection at radius delta/2). The exact
expectations E(Y_i) = m q (1-q)^(m-1) and E(Y_i Y_j) = m(m-1) q_i q_j
(1-q_i-q_j)^(m-2) are exposed for cross-checking simulations.
"""
from __future__ import annotations

import os
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .geometry import PointCloud
from .measures import MeasureSpec, sample
from .rng import RandomStream

# safety inflation for k-d ball queries; final comparisons always use the
# package's own sqrt-of-sum-of-squares distances
_PAD = 1.0 + 1e-12


@dataclass(frozen=True)
class PackingResult:
    """Maximal set of disjoint delta-balls centered on reference points.

    ``occupancy`` counts reference points within delta of each center, i.e.
    reference_size times the empirical ball mass q_j.
    """

    delta: float
    center_indices: np.ndarray  # indices into the reference cloud, ascending
    centers: np.ndarray  # (n_delta, k) coordinates
    occupancy: np.ndarray  # (n_delta,) reference points within delta

    @property
    def n_delta(self) -> int:
        return len(self.center_indices)


@dataclass(frozen=True)
class LonelyBallStats:
    """Per-ball sample counts for one trial, with the lonely/empty tallies."""

    m: int
    delta: float
    n_delta: int
    counts: np.ndarray  # (n_delta,) sample points within delta of each center
    y: int  # balls containing exactly one sample point
    empty_balls: int

    def __post_init__(self):
        if not (0 <= self.y <= self.n_delta):
            raise ValueError("lonely-ball count out of range")


@dataclass(frozen=True)
class RegularityEstimate:
    """Fitted ball-mass law mass(x, delta) ~ C(x) * delta^d_hat.

    alpha_hat/beta_hat are the 1%/99% quantiles of mass/delta^d_hat over all
    (center, delta) cells (the headline numbers; the strict extremes
    alpha_min/beta_max are Monte Carlo noise magnets and reported alongside).
    """

    d_hat: float
    alpha_hat: float
    beta_hat: float
    alpha_min: float
    beta_max: float
    delta_range: tuple[float, float]
    n_centers: int
    fit_r2: float


def maximal_packing(reference: PointCloud, delta: float) -> PackingResult:
    """Greedy index-order packing: accept iff > 2*delta from accepted centers.

    Implemented as repeated lowest-index survivor selection with ball kills,
    which yields the identical center set near O(n log n).
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    if reference.m == 0:
        raise ValueError("reference cloud must be nonempty")
    pts = reference.points
    tree = cKDTree(pts)
    alive = np.ones(reference.m, dtype=bool)
    centers: list[int] = []
    reach = 2.0 * delta
    cursor = 0
    while True:
        while cursor < reference.m and not alive[cursor]:
            cursor += 1
        if cursor >= reference.m:
            break
        centers.append(cursor)
        near = tree.query_ball_point(pts[cursor], reach * _PAD)
        near = np.asarray(near, dtype=np.int64)
        diff = pts[near] - pts[cursor]
        kill = near[np.sqrt(np.sum(diff * diff, axis=1)) <= reach]
        alive[kill] = False

    idx = np.asarray(centers, dtype=np.int64)
    coords = pts[idx]
    counts = _ball_counts(coords, float(delta), pts)
    result = PackingResult(delta=float(delta), center_indices=idx, centers=coords, occupancy=counts)
    if os.environ.get("FRACTALMST_VERIFY_PACKINGS"):
        verify_packing(result, reference)
    return result


def _ball_counts(centers: np.ndarray, delta: float, sample_pts: np.ndarray) -> np.ndarray:
    """Points within delta of each center, counted with package distances.

    Centers are > 2*delta apart, so each point lies in at most one ball and a
    nearest-center query settles membership.
    """
    n = len(centers)
    if len(sample_pts) == 0:
        return np.zeros(n, dtype=np.int64)
    d_kd, j = cKDTree(centers).query(sample_pts, k=1)
    cap = delta * _PAD
    maybe = d_kd <= cap
    diff = sample_pts[maybe] - centers[j[maybe]]
    inside = np.sqrt(np.sum(diff * diff, axis=1)) <= delta
    return np.bincount(j[maybe][inside], minlength=n).astype(np.int64)


def occupancy(packing: PackingResult, sample_cloud: PointCloud) -> LonelyBallStats:
    """Count sample points per packing ball; tally lonely and empty balls."""
    if sample_cloud.m and sample_cloud.points.shape[1] != packing.centers.shape[1]:
        raise ValueError("sample and packing live in different ambient dimensions")
    counts = _ball_counts(packing.centers, packing.delta, sample_cloud.points)
    return LonelyBallStats(
        m=sample_cloud.m,
        delta=packing.delta,
        n_delta=packing.n_delta,
        counts=counts,
        y=int((counts == 1).sum()),
        empty_balls=int((counts == 0).sum()),
    )


def verify_packing(packing: PackingResult, reference: PointCloud) -> None:
    """Assert disjointness (pairwise center distance > 2*delta) and the
    2*delta cover of the reference; raises AssertionError on any violation."""
    centers = packing.centers
    reach = 2.0 * packing.delta
    n = len(centers)
    for start in range(0, n, 256):
        block = centers[start : start + 256]
        diff = block[:, None, :] - centers[None, :, :]
        d = np.sqrt(np.sum(diff * diff, axis=-1))
        ii, jj = np.nonzero(d <= reach)
        off_diag = (ii + start) != jj
        assert not off_diag.any(), "packing balls overlap"
    # cover: nearest center per reference point, re-measured with our metric
    k = min(2, n)
    _, j = cKDTree(centers).query(reference.points, k=k)
    j = j.reshape(reference.m, k)
    best = np.full(reference.m, np.inf)
    for col in range(k):
        diff = reference.points - centers[j[:, col]]
        best = np.minimum(best, np.sqrt(np.sum(diff * diff, axis=1)))
    assert (best <= reach).all(), "doubled balls fail to cover the reference"


def expected_singleton(m: int, q: float) -> float:
    """Exact probability-weighted count m*q*(1-q)^(m-1) of a lonely ball."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if not 0.0 <= q <= 1.0:
        raise ValueError("q must lie in [0, 1]")
    return m * q * (1.0 - q) ** (m - 1)


def expected_pair(m: int, q_i: float, q_j: float) -> float:
    """Exact cross moment m(m-1)*q_i*q_j*(1-q_i-q_j)^(m-2) of two lonely balls."""
    if m < 2:
        raise ValueError("m must be >= 2")
    if q_i < 0 or q_j < 0 or q_i + q_j > 1.0:
        raise ValueError("need q_i, q_j >= 0 and q_i + q_j <= 1")
    return m * (m - 1) * q_i * q_j * (1.0 - q_i - q_j) ** (m - 2)


def default_delta_grid(
    measure: MeasureSpec,
    reference_size: int,
    steps: int = 12,
    min_expected: float = 50.0,
) -> np.ndarray:
    """Geometric grid: top at diameter/8 (avoids saturation), bottom sized so
    a ball is expected to catch ~min_expected reference points."""
    d_max = measure.diameter / 8.0
    d_min = measure.diameter * (min_expected / reference_size) ** (1.0 / measure.nominal_dim)
    d_min = min(d_min, d_max / 2.0)
    return np.geomspace(d_min, d_max, steps)


def _outer_boundary_distance(measure: MeasureSpec, pts: np.ndarray) -> np.ndarray:
    """Distance from each point to the support's outer boundary.

    Internal structure (fractal holes, slab gaps) is deliberately ignored: the
    self-similar mass law holds across holes, whereas a ball crossing the
    outer boundary loses mass against empty space and bends the log-log curve.
    """
    if measure.kind == "unit_disk":
        return 1.0 - np.sqrt(np.sum(pts * pts, axis=1))
    lo, hi = measure.bounding_box
    return np.minimum(pts - lo[None, :], hi[None, :] - pts).min(axis=1)


def estimate_regularity(
    measure: MeasureSpec,
    reference_size: int,
    n_centers: int,
    stream: RandomStream,
    delta_grid: np.ndarray | None = None,
) -> RegularityEstimate:
    """Estimate (d, alpha, beta) of the ball-mass law from empirical masses.

    Draws a reference cloud and then the centers from the stream; the mass of
    B(x, delta) is the fraction of reference points within delta of x. The
    exponent is the median over centers of per-center least-squares slopes of
    log mass vs log delta. A center's fit skips radii beyond its distance to
    the outer boundary (the clipping transition bends the curve there); when
    fewer than 3 radii survive, all are used, since a fully clipped ball obeys
    a clean power law again. Centers with zero mass at the largest delta are
    excluded with a warning.
    """
    if delta_grid is None:
        delta_grid = default_delta_grid(measure, reference_size)
    delta_grid = np.asarray(sorted(float(d) for d in delta_grid))
    if len(delta_grid) < 3:
        raise ValueError("delta grid needs at least 3 points")

    ref = sample(measure, reference_size, stream)
    centers = sample(measure, n_centers, stream)
    tree = cKDTree(ref.points)
    mass = np.empty((n_centers, len(delta_grid)))
    for gi, delta in enumerate(delta_grid):
        counts = tree.query_ball_point(centers.points, float(delta), return_length=True)
        mass[:, gi] = counts / reference_size

    keep = mass[:, -1] > 0
    if not keep.all():
        warnings.warn(f"excluded {int((~keep).sum())} centers with zero mass at delta_max", stacklevel=2)
    mass = mass[keep]
    h_boundary = _outer_boundary_distance(measure, centers.points[keep])

    logd = np.log(delta_grid)
    slopes = []
    r2s = []
    for row, h in zip(mass, h_boundary):
        ok = (row > 0) & (delta_grid <= h)
        if ok.sum() < 3:
            ok = row > 0
        if ok.sum() < 3:
            continue
        x, y = logd[ok], np.log(row[ok])
        slope, intercept = np.polyfit(x, y, 1)
        resid = y - (slope * x + intercept)
        ss_tot = np.sum((y - y.mean()) ** 2)
        slopes.append(slope)
        r2s.append(1.0 - np.sum(resid**2) / ss_tot if ss_tot > 0 else 1.0)
    if not slopes:
        raise ValueError("no center had enough nonzero ball masses to fit")

    d_hat = float(np.median(slopes))
    ratios = (mass / np.power(delta_grid, d_hat)[None, :])[mass > 0]
    return RegularityEstimate(
        d_hat=d_hat,
        alpha_hat=float(np.quantile(ratios, 0.01)),
        beta_hat=float(np.quantile(ratios, 0.99)),
        alpha_min=float(ratios.min()),
        beta_max=float(ratios.max()),
        delta_range=(float(delta_grid[0]), float(delta_grid[-1])),
        n_centers=int(keep.sum()),
        fit_r2=float(np.median(r2s)),
    )
