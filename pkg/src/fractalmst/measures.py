"""Samplers for the supported probability measures, with membership oracles.

Supported kinds: the uniform unit shapes (interval, square, cube, disk), three
self-similar attractors sampled by drawing uniform contraction addresses
(Sierpinski carpet and triangle, Cantor dust), and the pathological slab-and-
bridge set ("set_F"): countably many vertical slabs of slowly shrinking width
joined near y=0 by horizontal bridges of exponentially shrinking height,
carrying normalized area measure. The set is connected but fails the
d-dimensional ball-mass regularity that the scaling law needs, which is what
the counterexample experiment demonstrates.

Address sampling gives exact i.i.d. draws from the equal-weight measure on IFS
addresses (no chaos-game burn-in). Membership tests for the IFS kinds walk the
digit expansion; they are exact in exact arithmetic and tolerant of floating
point near cell boundaries, accepting once cell size falls below the noise
floor (~1e-13 of the original scale).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .geometry import PointCloud
from .rng import RandomStream

# digit-descent boundary tolerance, as a fraction of the current cell size
_DIGIT_TOL = 1e-13

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1


def _fnv1a64(s: str) -> int:
    h = _FNV_OFFSET
    for byte in s.encode("utf-8"):
        h = ((h ^ byte) * _FNV_PRIME) & _MASK64
    return h


# IFS tables: (contraction ratio, integer cell offsets, default address depth).
# Depth defaults make ratio**depth < 2**-52, i.e. the point is pinned to full
# double precision.
_IFS = {
    "sierpinski_carpet": (
        1.0 / 3.0,
        np.array([(x, y) for x in range(3) for y in range(3) if (x, y) != (1, 1)], dtype=np.float64),
        33,
    ),
    "sierpinski_triangle": (
        0.5,
        np.array([(0, 0), (1, 0), (0, 1)], dtype=np.float64),
        53,
    ),
    "cantor_dust": (
        1.0 / 3.0,
        np.array([(0, 0), (0, 2), (2, 0), (2, 2)], dtype=np.float64),
        33,
    ),
}

_KINDS: dict[str, dict[str, Any]] = {
    "unit_interval": dict(ambient_dim=1, nominal_dim=1.0, connected=True, params={}),
    "unit_square": dict(ambient_dim=2, nominal_dim=2.0, connected=True, params={}),
    "unit_cube": dict(ambient_dim=3, nominal_dim=3.0, connected=True, params={}),
    "unit_disk": dict(ambient_dim=2, nominal_dim=2.0, connected=True, params={}),
    "sierpinski_carpet": dict(
        ambient_dim=2, nominal_dim=math.log(8) / math.log(3), connected=True, params={"depth": 33}
    ),
    "sierpinski_triangle": dict(
        ambient_dim=2, nominal_dim=math.log(3) / math.log(2), connected=True, params={"depth": 53}
    ),
    "cantor_dust": dict(
        ambient_dim=2, nominal_dim=math.log(4) / math.log(3), connected=False, params={"depth": 33}
    ),
    "set_F": dict(
        ambient_dim=2, nominal_dim=2.0, connected=True, pathological=True, params={"i_max": 40}
    ),
}


@dataclass(frozen=True)
class MeasureSpec:
    """Declarative description of a probability measure and how to sample it."""

    kind: str
    ambient_dim: int
    params: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown measure kind {self.kind!r}; known: {sorted(_KINDS)}")
        info = _KINDS[self.kind]
        if self.ambient_dim != info["ambient_dim"]:
            raise ValueError(f"{self.kind} lives in dimension {info['ambient_dim']}, got {self.ambient_dim}")
        merged = dict(info["params"])
        merged.update(self.params)
        extra = set(merged) - set(info["params"])
        if extra:
            raise ValueError(f"unknown params for {self.kind}: {sorted(extra)}")
        object.__setattr__(self, "params", merged)

    @classmethod
    def from_name(cls, name: str, **param_overrides) -> "MeasureSpec":
        if name not in _KINDS:
            raise ValueError(f"unknown measure kind {name!r}; known: {sorted(_KINDS)}")
        return cls(kind=name, ambient_dim=_KINDS[name]["ambient_dim"], params=param_overrides)

    @classmethod
    def from_json(cls, obj: str | dict) -> "MeasureSpec":
        if isinstance(obj, str):
            obj = json.loads(obj)
        return cls(kind=obj["kind"], ambient_dim=obj.get("ambient_dim", _KINDS.get(obj.get("kind"), {}).get("ambient_dim", 0)), params=dict(obj.get("params", {})))

    def to_json(self) -> dict:
        return {"kind": self.kind, "ambient_dim": self.ambient_dim, "params": dict(self.params)}

    @property
    def nominal_dim(self) -> float:
        return _KINDS[self.kind]["nominal_dim"]

    @property
    def connected(self) -> bool:
        return _KINDS[self.kind]["connected"]

    @property
    def pathological(self) -> bool:
        return bool(_KINDS[self.kind].get("pathological", False))

    @property
    def measure_id(self) -> str:
        """Short identifier used in CSV rows; parameters appended only when non-default."""
        if self.params == _KINDS[self.kind]["params"]:
            return self.kind
        inner = ",".join(f"{k}={v}" for k, v in sorted(self.params.items()))
        return f"{self.kind}[{inner}]"

    @property
    def stream_label(self) -> int:
        """64-bit label deterministically derived from the canonical JSON form."""
        return _fnv1a64(json.dumps(self.to_json(), sort_keys=True, separators=(",", ":")))

    @property
    def diameter(self) -> float:
        if self.kind == "unit_interval":
            return 1.0
        if self.kind == "unit_cube":
            return math.sqrt(3.0)
        if self.kind == "unit_disk":
            return 2.0
        if self.kind == "set_F":
            x_min = 1.0 / (2 * self.params["i_max"] + 1)
            return math.hypot(1.0 - x_min, 1.0)
        return math.sqrt(2.0)  # square, carpet, triangle, dust all span [0,1]^2

    @property
    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        if self.kind == "unit_disk":
            return np.array([-1.0, -1.0]), np.array([1.0, 1.0])
        if self.kind == "set_F":
            return np.array([1.0 / (2 * self.params["i_max"] + 1), 0.0]), np.ones(2)
        lo = np.zeros(self.ambient_dim)
        hi = np.ones(self.ambient_dim)
        return lo, hi


def available_kinds() -> list[str]:
    return sorted(_KINDS)


# ---------------------------------------------------------------------------
# set_F geometry


@dataclass(frozen=True)
class SetFGeometry:
    """Rectangles and areas of the truncated slab-and-bridge set.

    Regions are ordered [slab_1, bridge_1, slab_2, bridge_2, ...] going from
    x=1 toward x=0. Slab_i = [1/(2i), 1/(2i-1)] x [0, 1]; bridge_i =
    [1/(2i+1), 1/(2i)] x [0, 2^-i].
    """

    i_max: int
    rect_lo: np.ndarray  # (2*i_max, 2) lower corners
    rect_hi: np.ndarray  # (2*i_max, 2) upper corners
    areas: np.ndarray  # (2*i_max,)
    total_area: float

    @property
    def slab_areas(self) -> np.ndarray:
        return self.areas[0::2]

    @property
    def bridge_areas(self) -> np.ndarray:
        return self.areas[1::2]


def set_f_geometry(i_max: int) -> SetFGeometry:
    if i_max < 1:
        raise ValueError("i_max must be >= 1")
    lo, hi = [], []
    for i in range(1, i_max + 1):
        lo.append((1.0 / (2 * i), 0.0))
        hi.append((1.0 / (2 * i - 1), 1.0))
        lo.append((1.0 / (2 * i + 1), 0.0))
        hi.append((1.0 / (2 * i), 2.0 ** -i))
    rect_lo = np.array(lo)
    rect_hi = np.array(hi)
    sides = rect_hi - rect_lo
    areas = sides[:, 0] * sides[:, 1]
    return SetFGeometry(i_max=i_max, rect_lo=rect_lo, rect_hi=rect_hi, areas=areas, total_area=float(areas.sum()))


# ---------------------------------------------------------------------------
# sampling


def sample(measure: MeasureSpec, m: int, stream: RandomStream) -> PointCloud:
    """Draw m i.i.d. points from the measure, consuming the stream.

    Deterministic in (measure, m, stream key). Draw order: unit shapes take
    m*k uniforms point-major; IFS kinds take m*depth address symbols row by
    row; set_F takes three blocks of m uniforms (region, x, y); the disk takes
    candidate pairs in rejection batches.
    """
    if m < 0:
        raise ValueError("sample count must be >= 0")
    k = measure.ambient_dim
    kind = measure.kind

    if kind in ("unit_interval", "unit_square", "unit_cube"):
        pts = stream.uniform(m * k).reshape(m, k)
    elif kind == "unit_disk":
        pts = _sample_disk(m, stream)
    elif kind in _IFS:
        ratio, offsets, _ = _IFS[kind]
        depth = int(measure.params["depth"])
        symbols = stream.integers(m * depth, len(offsets)).reshape(m, depth)
        pts = _ifs_points(symbols, ratio, offsets)
    elif kind == "set_F":
        pts = _sample_set_f(measure, m, stream)
    else:  # unreachable: MeasureSpec validates kinds
        raise ValueError(f"unknown measure kind {kind!r}")

    return PointCloud(points=pts.reshape(m, k), seed=stream.key, measure_id=measure.measure_id)


def _sample_disk(m: int, stream: RandomStream) -> np.ndarray:
    """Uniform points in the radius-1 disk by rejection from [-1,1]^2."""
    out = np.empty((m, 2))
    got = 0
    while got < m:
        batch = (m - got) + max(16, (m - got) // 2)
        cand = 2.0 * stream.uniform(2 * batch).reshape(batch, 2) - 1.0
        good = cand[(cand * cand).sum(axis=1) <= 1.0]
        take = min(m - got, len(good))
        out[got : got + take] = good[:take]
        got += take
    return out


def _ifs_points(symbols: np.ndarray, ratio: float, offsets: np.ndarray) -> np.ndarray:
    """Apply the composed contractions of an address to the origin anchor."""
    m, depth = symbols.shape
    pts = np.zeros((m, offsets.shape[1]))
    w = 1.0
    for t in range(depth):
        w *= ratio
        pts += offsets[symbols[:, t]] * w
    return pts


def point_from_address(measure: MeasureSpec, symbols) -> np.ndarray:
    """Point of the attractor reached by one explicit address (testing hook)."""
    ratio, offsets, _ = _IFS[measure.kind]
    return _ifs_points(np.asarray([symbols], dtype=np.int64), ratio, offsets)[0]


def _sample_set_f(measure: MeasureSpec, m: int, stream: RandomStream) -> np.ndarray:
    geom = set_f_geometry(int(measure.params["i_max"]))
    cum = np.cumsum(geom.areas)
    cum /= cum[-1]
    cum[-1] = 1.0
    region = np.searchsorted(cum, stream.uniform(m), side="right")
    region = np.minimum(region, len(geom.areas) - 1)
    lo = geom.rect_lo[region]
    span = geom.rect_hi[region] - lo
    x = lo[:, 0] + stream.uniform(m) * span[:, 0]
    y = lo[:, 1] + stream.uniform(m) * span[:, 1]
    return np.column_stack([x, y])


def set_f_region_index(measure: MeasureSpec, pts: np.ndarray) -> np.ndarray:
    """Index of the region containing each point (-1 if none); first match wins."""
    geom = set_f_geometry(int(measure.params["i_max"]))
    inside = np.all(
        (pts[:, None, :] >= geom.rect_lo[None, :, :]) & (pts[:, None, :] <= geom.rect_hi[None, :, :]),
        axis=2,
    )
    idx = np.argmax(inside, axis=1)
    idx[~inside.any(axis=1)] = -1
    return idx


# ---------------------------------------------------------------------------
# membership oracles


def contains(measure: MeasureSpec, p, depth: int | None = None) -> bool:
    """Whether a single point belongs to the measure's support (see contains_mask)."""
    return bool(contains_mask(measure, np.asarray(p, dtype=np.float64).reshape(1, -1), depth)[0])


def contains_mask(measure: MeasureSpec, pts: np.ndarray, depth: int | None = None) -> np.ndarray:
    """Vectorized membership test for the measure's support.

    Rectangle kinds are exact (closed sets). IFS kinds walk the base-2/base-3
    digit cells down to ``depth`` levels; a point inside a removed cell is
    rejected only when it sits at least ~1e-13 of the current cell size away
    from the cell boundary, so boundary points (which have two digit
    expansions, one of them admissible) and floating-point perturbations of
    genuine members are accepted. Once the cumulative tolerance reaches the
    cell size the remaining points are accepted: beyond that scale doubles
    carry no information.
    """
    pts = np.asarray(pts, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.shape[1] != measure.ambient_dim:
        raise ValueError(f"points have width {pts.shape[1]}, measure needs {measure.ambient_dim}")
    kind = measure.kind

    if kind in ("unit_interval", "unit_square", "unit_cube"):
        return np.all((pts >= 0.0) & (pts <= 1.0), axis=1)
    if kind == "unit_disk":
        return (pts * pts).sum(axis=1) <= 1.0
    if kind == "set_F":
        return set_f_region_index(measure, pts) >= 0

    ratio = _IFS[kind][0]
    if depth is None:
        depth = int(measure.params["depth"])
    return _ifs_contains(kind, pts, int(depth), ratio)


def _ifs_contains(kind: str, pts: np.ndarray, depth: int, ratio: float) -> np.ndarray:
    base = round(1.0 / ratio)
    n = len(pts)
    verdict = np.ones(n, dtype=bool)
    alive = np.ones(n, dtype=bool)

    # outside the unit cell (with slack) cannot be a member
    outside = np.any((pts < -_DIGIT_TOL) | (pts > 1.0 + _DIGIT_TOL), axis=1)
    verdict[outside] = False
    alive &= ~outside

    y = np.clip(pts, 0.0, 1.0)
    tol = _DIGIT_TOL
    for _ in range(depth):
        tol *= base
        if tol >= 0.4 or not alive.any():
            break  # resolution exhausted; survivors accepted
        y = y * base
        d = np.clip(np.floor(y).astype(np.int64), 0, base - 1)
        y = np.clip(y - d, 0.0, 1.0)
        near = (y < tol) | (y > 1.0 - tol)  # per-coordinate: digit ambiguous

        if kind == "cantor_dust":
            bad_coord = d == 1
            rejected = np.any(bad_coord & ~near, axis=1)
            ambiguous = np.any(bad_coord, axis=1) & ~rejected
        else:  # carpet (base 3) and triangle (base 2): removed cell is digits (1, 1)
            in_removed = (d[:, 0] == 1) & (d[:, 1] == 1)
            rejected = in_removed & ~near[:, 0] & ~near[:, 1]
            ambiguous = in_removed & ~rejected

        verdict[alive & rejected] = False
        # ambiguous points sit on an allowed cell's boundary: accept, stop descending
        alive &= ~(rejected | ambiguous)
    return verdict
