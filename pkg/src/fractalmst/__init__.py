"""Longest-MST-edge scaling experiments on fractal and irregular measures."""

from .emst import MstResult, longest_edge, mst_fast, mst_oracle
from .experiments import (
    CounterexampleReport,
    ExperimentError,
    FitResult,
    LonelyRecord,
    LonelySummary,
    OccupancyRecord,
    RunConfig,
    ScalingRecord,
    counterexample_run,
    fit_lonely_growth,
    fit_scaling,
    geometric_grid,
    lonely_run,
    lonely_summaries,
    occupancy_run,
    parse_m_grid,
    read_scaling_csv,
    scaling_run,
    write_scaling_csv,
)
from .geometry import PointCloud, distance
from .measures import MeasureSpec, SetFGeometry, available_kinds, contains, sample, set_f_geometry
from .regularity import (
    LonelyBallStats,
    PackingResult,
    RegularityEstimate,
    estimate_regularity,
    expected_pair,
    expected_singleton,
    maximal_packing,
    occupancy,
    verify_packing,
)
from .rgg import ConnectivityReport, connectivity_threshold, is_connected_at
from .rng import RandomStream, derive_key, derive_stream

__all__ = [
    "ConnectivityReport",
    "CounterexampleReport",
    "ExperimentError",
    "FitResult",
    "LonelyBallStats",
    "LonelyRecord",
    "LonelySummary",
    "MeasureSpec",
    "MstResult",
    "OccupancyRecord",
    "PackingResult",
    "PointCloud",
    "RandomStream",
    "RegularityEstimate",
    "RunConfig",
    "ScalingRecord",
    "SetFGeometry",
    "available_kinds",
    "connectivity_threshold",
    "contains",
    "counterexample_run",
    "derive_key",
    "derive_stream",
    "distance",
    "estimate_regularity",
    "expected_pair",
    "expected_singleton",
    "fit_lonely_growth",
    "fit_scaling",
    "geometric_grid",
    "is_connected_at",
    "longest_edge",
    "lonely_run",
    "lonely_summaries",
    "maximal_packing",
    "mst_fast",
    "mst_oracle",
    "occupancy",
    "occupancy_run",
    "parse_m_grid",
    "read_scaling_csv",
    "sample",
    "scaling_run",
    "set_f_geometry",
    "verify_packing",
    "write_scaling_csv",
]
