"""Batch harness: scaling, occupancy, lonely-ball and counterexample runs.

Every trial owns the stream derived from labels [measure_label, m, trial], so
grids and trial counts can grow without perturbing existing rows; reference
clouds for packings use the reserved role label 2**48 in the trial slot.
Medians (not means) aggregate across trials: the longest edge is heavy-tailed
and the claims under test are with-high-probability statements.

CSV conventions: floats carry 17 significant digits, rows are emitted in
(m, trial) order, and reruns with the same config are byte-identical except
for the runtime_ms column.
"""
from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .emst import mst_fast
from .measures import MeasureSpec
from .measures import sample as sample_measure
from .regularity import LonelyBallStats, maximal_packing, occupancy
from .rng import derive_stream

_REFERENCE_ROLE = 2**48  # trial-slot label reserved for reference clouds

SCALING_HEADER = "measure_id,m,trial,seed,longest_edge,threshold_radius,runtime_ms"
OCCUPANCY_HEADER = "measure_id,m,C,delta,n_balls,trials,full_fraction,degenerate"
LONELY_HEADER = "measure_id,m,trial,seed,delta,n_balls,y,empty_balls"


class ExperimentError(RuntimeError):
    """A trial failed; the message names (measure, m, trial, seed)."""


def _f17(x: float) -> str:
    return format(float(x), ".17g")


@dataclass(frozen=True)
class ScalingRecord:
    measure_id: str
    m: int
    trial: int
    seed: int
    longest_edge: float
    threshold_radius: float
    runtime_ms: float


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    r2: float
    n_range: tuple[int, int]
    predictor: str  # "log_log_m_over_m" or "log_m"


@dataclass(frozen=True)
class OccupancyRecord:
    measure_id: str
    m: int
    C: float
    delta: float
    n_balls: int
    trials: int
    full_fraction: float
    degenerate: bool


@dataclass(frozen=True)
class LonelyRecord:
    measure_id: str
    m: int
    trial: int
    seed: int
    delta: float
    n_balls: int
    y: int
    empty_balls: int


@dataclass(frozen=True)
class LonelySummary:
    m: int
    delta: float
    n_balls: int
    trials: int
    median_y: float
    mean_y: float
    var_y: float
    rel_var: float  # Var(Y)/E(Y)^2, the decay the variance bound predicts


@dataclass(frozen=True)
class CounterexampleReport:
    records: list[ScalingRecord]
    m_values: list[int]
    ratios: list[float]  # R(m) = median longest edge / (log m / m)^{1/2}
    strictly_increasing: bool
    last_over_first: float


# ---------------------------------------------------------------------------
# grids and configs


def geometric_grid(lo: int, hi: int, steps: int) -> list[int]:
    """Geometric integer grid from lo to hi inclusive; duplicates collapsed."""
    if lo < 1 or hi < lo or steps < 1:
        raise ValueError("need 1 <= lo <= hi and steps >= 1")
    if steps == 1:
        return [int(lo)]
    vals = np.rint(np.geomspace(lo, hi, steps)).astype(int)
    out: list[int] = []
    for v in vals:
        if not out or v > out[-1]:
            out.append(int(v))
    return out


def parse_m_grid(text: str) -> list[int]:
    """Parse 'a:b:steps' into a geometric grid, or 'a' into [a]."""
    parts = text.split(":")
    try:
        if len(parts) == 1:
            m = int(parts[0])
            if m < 1:
                raise ValueError("m must be >= 1")
            return [m]
        if len(parts) == 3:
            return geometric_grid(int(parts[0]), int(parts[1]), int(parts[2]))
    except ValueError as exc:
        raise ValueError(f"bad m-grid {text!r}: {exc}") from exc
    raise ValueError(f"bad m-grid {text!r}; expected 'a:b:steps'")


@dataclass(frozen=True)
class RunConfig:
    """One experiment described as a JSON document (see `--config`)."""

    measure: MeasureSpec
    m_grid: list[int]
    trials: int
    seed: int
    experiment: str
    params: dict = field(default_factory=dict)

    @classmethod
    def from_json(cls, obj: str | dict) -> "RunConfig":
        if isinstance(obj, str):
            obj = json.loads(obj)
        return cls(
            measure=MeasureSpec.from_json(obj["measure"]),
            m_grid=[int(v) for v in obj["m_grid"]],
            trials=int(obj["trials"]),
            seed=int(obj["seed"]),
            experiment=str(obj["experiment"]),
            params=dict(obj.get("params", {})),
        )

    def to_json(self) -> dict:
        return {
            "measure": self.measure.to_json(),
            "m_grid": list(self.m_grid),
            "trials": self.trials,
            "seed": self.seed,
            "experiment": self.experiment,
            "params": dict(self.params),
        }


def load_config(path: str | Path) -> RunConfig:
    return RunConfig.from_json(json.loads(Path(path).read_text()))


# ---------------------------------------------------------------------------
# scaling runs


def trial_stream(measure: MeasureSpec, m: int, trial: int, master_seed: int):
    return derive_stream(master_seed, [measure.stream_label, m, trial])


def reference_cloud(measure: MeasureSpec, m: int, size: int, master_seed: int):
    stream = derive_stream(master_seed, [measure.stream_label, m, _REFERENCE_ROLE])
    return sample_measure(measure, size, stream)


def scaling_run(
    measure: MeasureSpec,
    m_grid: list[int],
    trials: int,
    master_seed: int,
    builder=mst_fast,
) -> list[ScalingRecord]:
    """Longest MST edge per (m, trial); rows in (m, trial) order."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    records = []
    for m in m_grid:
        for trial in range(trials):
            stream = trial_stream(measure, m, trial, master_seed)
            seed = stream.key
            try:
                t0 = time.perf_counter()
                cloud = sample_measure(measure, m, stream)
                result = builder(cloud)
                elapsed_ms = (time.perf_counter() - t0) * 1e3
            except Exception as exc:
                raise ExperimentError(
                    f"trial failed: measure={measure.measure_id} m={m} trial={trial} seed={seed}: {exc}"
                ) from exc
            records.append(
                ScalingRecord(
                    measure_id=measure.measure_id,
                    m=m,
                    trial=trial,
                    seed=seed,
                    longest_edge=result.longest_edge,
                    threshold_radius=result.longest_edge / 2.0,
                    runtime_ms=elapsed_ms,
                )
            )
    return records


def _medians_by_m(records: list[ScalingRecord]) -> tuple[np.ndarray, np.ndarray]:
    ids = {r.measure_id for r in records}
    if len(ids) > 1:
        raise ValueError(f"records mix measures: {sorted(ids)}")
    by_m: dict[int, list[float]] = {}
    for r in records:
        by_m.setdefault(r.m, []).append(r.longest_edge)
    ms = np.array(sorted(by_m))
    med = np.array([np.median(by_m[m]) for m in ms])
    return ms, med


def _ols(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2


def fit_scaling(records: list[ScalingRecord]) -> FitResult:
    """OLS of log(median longest edge per m) on log(log m / m).

    The slope estimates 1/d for a d-regular measure.
    """
    ms, med = _medians_by_m(records)
    if len(ms) < 3:
        raise ValueError("need at least 3 distinct m values to fit")
    if np.any(med <= 0):
        raise ValueError("median longest edge must be positive to fit logs")
    x = np.log(np.log(ms) / ms)
    slope, intercept, r2 = _ols(x, np.log(med))
    return FitResult(slope, intercept, r2, (int(ms[0]), int(ms[-1])), "log_log_m_over_m")


# ---------------------------------------------------------------------------
# occupancy and lonely-ball runs

DEFAULT_C_GRID = (0.25, 0.5, 1.0, 2.0, 4.0)


def _reference_size(m: int, reference_factor: float, min_reference: int) -> int:
    return max(int(min_reference), int(reference_factor * m))


def occupancy_run(
    measure: MeasureSpec,
    m_grid: list[int],
    trials: int,
    C_grid,
    master_seed: int,
    *,
    alpha_hat: float,
    d: float | None = None,
    reference_factor: float = 2.0,
    min_reference: int = 4096,
) -> list[OccupancyRecord]:
    """Fraction of trials with every packing ball occupied, per (m, C).

    Ball radius delta = C * (2 log m / (alpha_hat * m))^(1/d); C = 1 is the
    radius the coupon-collector argument uses, so the full-occupancy fraction
    should transition to 1 around C ~ 1 for a d-regular measure.
    """
    if alpha_hat <= 0:
        raise ValueError("alpha_hat must be positive")
    d_exp = float(d if d is not None else measure.nominal_dim)
    out = []
    for m in m_grid:
        ref = reference_cloud(measure, m, _reference_size(m, reference_factor, min_reference), master_seed)
        clouds = [sample_measure(measure, m, trial_stream(measure, m, t, master_seed)) for t in range(trials)]
        for C in C_grid:
            delta = C * (2.0 * math.log(m) / (alpha_hat * m)) ** (1.0 / d_exp)
            packing = maximal_packing(ref, delta)
            full = sum(1 for cloud in clouds if occupancy(packing, cloud).empty_balls == 0)
            out.append(
                OccupancyRecord(
                    measure_id=measure.measure_id,
                    m=m,
                    C=float(C),
                    delta=float(delta),
                    n_balls=packing.n_delta,
                    trials=trials,
                    full_fraction=full / trials,
                    degenerate=packing.n_delta < 2,
                )
            )
    return out


def lonely_run(
    measure: MeasureSpec,
    m_grid: list[int],
    trials: int,
    master_seed: int,
    *,
    beta_hat: float,
    d: float | None = None,
    reference_factor: float = 2.0,
    min_reference: int = 4096,
) -> list[LonelyRecord]:
    """Lonely-ball count Y per (m, trial) at delta = (log m / (2 beta_hat m))^(1/d)."""
    if beta_hat <= 0:
        raise ValueError("beta_hat must be positive")
    d_exp = float(d if d is not None else measure.nominal_dim)
    out = []
    for m in m_grid:
        delta = (math.log(m) / (2.0 * beta_hat * m)) ** (1.0 / d_exp)
        ref = reference_cloud(measure, m, _reference_size(m, reference_factor, min_reference), master_seed)
        packing = maximal_packing(ref, delta)
        for trial in range(trials):
            stream = trial_stream(measure, m, trial, master_seed)
            seed = stream.key
            try:
                cloud = sample_measure(measure, m, stream)
                stats: LonelyBallStats = occupancy(packing, cloud)
            except Exception as exc:
                raise ExperimentError(
                    f"trial failed: measure={measure.measure_id} m={m} trial={trial} seed={seed}: {exc}"
                ) from exc
            out.append(
                LonelyRecord(
                    measure_id=measure.measure_id,
                    m=m,
                    trial=trial,
                    seed=seed,
                    delta=float(delta),
                    n_balls=packing.n_delta,
                    y=stats.y,
                    empty_balls=stats.empty_balls,
                )
            )
    return out


def lonely_summaries(records: list[LonelyRecord]) -> list[LonelySummary]:
    by_m: dict[int, list[LonelyRecord]] = {}
    for r in records:
        by_m.setdefault(r.m, []).append(r)
    out = []
    for m in sorted(by_m):
        rows = by_m[m]
        ys = np.array([r.y for r in rows], dtype=float)
        mean = float(ys.mean())
        var = float(ys.var(ddof=1)) if len(ys) > 1 else 0.0
        out.append(
            LonelySummary(
                m=m,
                delta=rows[0].delta,
                n_balls=rows[0].n_balls,
                trials=len(rows),
                median_y=float(np.median(ys)),
                mean_y=mean,
                var_y=var,
                rel_var=var / mean**2 if mean > 0 else float("nan"),
            )
        )
    return out


def fit_lonely_growth(summaries: list[LonelySummary]) -> FitResult:
    """OLS of log(median Y) on log m; ~1/2 expected from E(Y) >= c sqrt(m) log m."""
    if len(summaries) < 3:
        raise ValueError("need at least 3 distinct m values to fit")
    ms = np.array([s.m for s in summaries], dtype=float)
    med = np.array([s.median_y for s in summaries], dtype=float)
    if np.any(med <= 0):
        raise ValueError("median Y must be positive to fit logs")
    slope, intercept, r2 = _ols(np.log(ms), np.log(med))
    return FitResult(slope, intercept, r2, (int(ms.min()), int(ms.max())), "log_m")


# ---------------------------------------------------------------------------
# counterexample


def counterexample_run(
    m_grid: list[int],
    trials: int,
    master_seed: int,
    i_max: int = 40,
) -> CounterexampleReport:
    """Scaling run on the slab-and-bridge set plus the rate-divergence report.

    R(m) = median longest edge / (log m / m)^{1/2}; an increasing R says the
    2-dimensional rate undershoots the truth on this set.
    """
    measure = MeasureSpec.from_name("set_F", i_max=i_max) if i_max != 40 else MeasureSpec.from_name("set_F")
    records = scaling_run(measure, m_grid, trials, master_seed)
    ms, med = _medians_by_m(records)
    rate = np.sqrt(np.log(ms) / ms)
    ratios = med / rate
    return CounterexampleReport(
        records=records,
        m_values=[int(v) for v in ms],
        ratios=[float(v) for v in ratios],
        strictly_increasing=bool(np.all(np.diff(ratios) > 0)),
        last_over_first=float(ratios[-1] / ratios[0]),
    )


# ---------------------------------------------------------------------------
# CSV persistence


def write_scaling_csv(records: list[ScalingRecord], path: str | Path) -> None:
    lines = [SCALING_HEADER]
    for r in records:
        lines.append(
            f"{r.measure_id},{r.m},{r.trial},{r.seed},"
            f"{_f17(r.longest_edge)},{_f17(r.threshold_radius)},{_f17(r.runtime_ms)}"
        )
    Path(path).write_text("\n".join(lines) + "\n")


def read_scaling_csv(path: str | Path) -> list[ScalingRecord]:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != SCALING_HEADER:
        raise ValueError(f"{path}: not a scaling CSV (bad header)")
    out = []
    for line in lines[1:]:
        if not line:
            continue
        mid, m, trial, seed, longest, thresh, ms = line.split(",")
        out.append(
            ScalingRecord(
                measure_id=mid,
                m=int(m),
                trial=int(trial),
                seed=int(seed),
                longest_edge=float(longest),
                threshold_radius=float(thresh),
                runtime_ms=float(ms),
            )
        )
    return out


def write_occupancy_csv(records: list[OccupancyRecord], path: str | Path) -> None:
    lines = [OCCUPANCY_HEADER]
    for r in records:
        lines.append(
            f"{r.measure_id},{r.m},{_f17(r.C)},{_f17(r.delta)},{r.n_balls},"
            f"{r.trials},{_f17(r.full_fraction)},{int(r.degenerate)}"
        )
    Path(path).write_text("\n".join(lines) + "\n")


def write_lonely_csv(records: list[LonelyRecord], path: str | Path) -> None:
    lines = [LONELY_HEADER]
    for r in records:
        lines.append(
            f"{r.measure_id},{r.m},{r.trial},{r.seed},{_f17(r.delta)},{r.n_balls},{r.y},{r.empty_balls}"
        )
    Path(path).write_text("\n".join(lines) + "\n")


def write_edges_csv(result, path: str | Path) -> None:
    """Edge dump of an MST: columns i,j,length (indices in generation order)."""
    lines = ["i,j,length"]
    for (i, j), length in zip(result.edges, result.lengths):
        lines.append(f"{i},{j},{_f17(length)}")
    Path(path).write_text("\n".join(lines) + "\n")
