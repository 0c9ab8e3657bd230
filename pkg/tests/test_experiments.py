"""Harness mechanics: grids, runs, fits, CSV round-trips, determinism."""

import math

import numpy as np
import pytest

from fractalmst.experiments import (
    DEFAULT_C_GRID,
    ExperimentError,
    FitResult,
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
    write_edges_csv,
    write_lonely_csv,
    write_occupancy_csv,
    write_scaling_csv,
)
from fractalmst.emst import mst_fast
from fractalmst.geometry import distance
from fractalmst.measures import MeasureSpec, sample
from fractalmst.rng import derive_stream

SQUARE = MeasureSpec.from_name("unit_square")


def test_geometric_grid_powers_of_two():
    assert geometric_grid(1024, 131072, 8) == [2**e for e in range(10, 18)]


def test_parse_m_grid():
    assert parse_m_grid("1024:131072:8") == [2**e for e in range(10, 18)]
    assert parse_m_grid("500") == [500]
    for bad in ("a:b:c", "10:5:3:1", "-4"):
        with pytest.raises(ValueError):
            parse_m_grid(bad)


def test_scaling_run_rows_ordered_and_threshold_identity():
    records = scaling_run(SQUARE, [64, 128], 3, master_seed=7)
    assert [(r.m, r.trial) for r in records] == [(m, t) for m in (64, 128) for t in range(3)]
    for r in records:
        assert r.threshold_radius == r.longest_edge / 2.0
        assert r.measure_id == "unit_square"


def test_scaling_run_m2_equals_pair_distance():
    records = scaling_run(SQUARE, [2], 5, master_seed=3)
    for r in records:
        cloud = sample(SQUARE, 2, derive_stream(3, [SQUARE.stream_label, 2, r.trial]))
        assert r.longest_edge == distance(cloud.points[0], cloud.points[1])


def test_scaling_run_deterministic_apart_from_runtime():
    a = scaling_run(SQUARE, [32, 64], 4, master_seed=11)
    b = scaling_run(SQUARE, [32, 64], 4, master_seed=11)
    for ra, rb in zip(a, b):
        assert (ra.measure_id, ra.m, ra.trial, ra.seed) == (rb.measure_id, rb.m, rb.trial, rb.seed)
        assert ra.longest_edge == rb.longest_edge
        assert ra.threshold_radius == rb.threshold_radius


def test_extending_grid_or_trials_preserves_rows():
    base = scaling_run(SQUARE, [32], 2, master_seed=5)
    more = scaling_run(SQUARE, [32, 64], 4, master_seed=5)
    lookup = {(r.m, r.trial): r for r in more}
    for r in base:
        assert lookup[(r.m, r.trial)].longest_edge == r.longest_edge


def test_scaling_run_wraps_failures_with_diagnostic():
    def exploding_builder(cloud):
        raise RuntimeError("boom")

    with pytest.raises(ExperimentError, match=r"measure=unit_square m=32 trial=0 seed=\d+"):
        scaling_run(SQUARE, [32], 1, master_seed=1, builder=exploding_builder)


def test_fit_scaling_exact_power_law():
    ms = [2**e for e in range(10, 16)]
    records = [
        ScalingRecord("synthetic", m, t, 0, (math.log(m) / m) ** 0.5, (math.log(m) / m) ** 0.5 / 2, 0.0)
        for m in ms
        for t in range(3)
    ]
    fit = fit_scaling(records)
    assert abs(fit.slope - 0.5) < 1e-12
    assert abs(fit.r2 - 1.0) < 1e-12
    assert fit.n_range == (ms[0], ms[-1])
    assert fit.predictor == "log_log_m_over_m"


def test_fit_scaling_needs_three_distinct_m():
    records = [ScalingRecord("x", 10, t, 0, 0.1, 0.05, 0.0) for t in range(4)]
    records += [ScalingRecord("x", 20, t, 0, 0.08, 0.04, 0.0) for t in range(4)]
    with pytest.raises(ValueError):
        fit_scaling(records)


def test_fit_scaling_rejects_mixed_measures():
    records = [
        ScalingRecord("a", 10, 0, 0, 0.1, 0.05, 0.0),
        ScalingRecord("b", 20, 0, 0, 0.1, 0.05, 0.0),
        ScalingRecord("a", 40, 0, 0, 0.1, 0.05, 0.0),
    ]
    with pytest.raises(ValueError):
        fit_scaling(records)


def test_scaling_csv_round_trip(tmp_path):
    records = scaling_run(SQUARE, [16, 32], 2, master_seed=9)
    path = tmp_path / "runs.csv"
    write_scaling_csv(records, path)
    assert path.read_text().splitlines()[0] == "measure_id,m,trial,seed,longest_edge,threshold_radius,runtime_ms"
    again = read_scaling_csv(path)
    assert again == records  # 17 significant digits round-trip doubles exactly


def test_scaling_csv_rejects_foreign_files(tmp_path):
    path = tmp_path / "junk.csv"
    path.write_text("a,b,c\n1,2,3\n")
    with pytest.raises(ValueError):
        read_scaling_csv(path)


def test_occupancy_single_ball_is_always_full():
    # delta beyond the diameter: one ball swallows everything, fraction 1
    rec = occupancy_run(SQUARE, [32], 5, [40.0], master_seed=2, alpha_hat=1.0)
    assert len(rec) == 1 and rec[0].n_balls == 1
    assert rec[0].full_fraction == 1.0 and rec[0].degenerate


def test_occupancy_fraction_transitions_with_C():
    recs = occupancy_run(SQUARE, [4096], 8, [0.05, 1.0], master_seed=6, alpha_hat=2.0)
    by_c = {r.C: r for r in recs}
    assert by_c[0.05].full_fraction <= by_c[1.0].full_fraction
    assert by_c[0.05].full_fraction < 0.5  # tiny balls get missed
    assert by_c[1.0].full_fraction > 0.5  # coupon-collector radius fills up
    assert DEFAULT_C_GRID == (0.25, 0.5, 1.0, 2.0, 4.0)


def test_median_longest_edge_nonincreasing_in_m():
    grid = [2**e for e in range(8, 14)]
    records = scaling_run(SQUARE, grid, 10, master_seed=13)
    medians = []
    for m in grid:
        medians.append(np.median([r.longest_edge for r in records if r.m == m]))
    inversions = sum(1 for a, b in zip(medians, medians[1:]) if b > a)
    assert inversions <= 1  # noise tolerance at this trial count


def test_occupancy_full_at_coupon_collector_radius_m_2_14():
    est_alpha = 1.4  # ~1% quantile of ball-mass ratios on the unit square
    recs = occupancy_run(SQUARE, [2**14], 10, [2.0], master_seed=5, alpha_hat=est_alpha)
    assert recs[0].full_fraction >= 0.9


def test_lonely_run_records_and_summaries():
    recs = lonely_run(SQUARE, [512, 1024], 6, master_seed=4, beta_hat=math.pi)
    assert [(r.m, r.trial) for r in recs] == [(m, t) for m in (512, 1024) for t in range(6)]
    for r in recs:
        assert 0 <= r.y <= r.n_balls
        assert 0 <= r.empty_balls <= r.n_balls
    summaries = lonely_summaries(recs)
    assert [s.m for s in summaries] == [512, 1024]
    for s in summaries:
        ys = [r.y for r in recs if r.m == s.m]
        assert s.median_y == float(np.median(ys))
        assert s.mean_y == pytest.approx(np.mean(ys))
        assert s.var_y == pytest.approx(np.var(ys, ddof=1))
        assert s.rel_var == pytest.approx(s.var_y / s.mean_y**2)


def test_fit_lonely_growth_on_synthetic_sqrt_law():
    from fractalmst.experiments import LonelyRecord

    # y = sqrt(m) exactly (powers of four have integer roots)
    recs = [
        LonelyRecord("synthetic", m, t, 0, 0.01, 10_000, int(math.isqrt(m)), 0)
        for m in (2**10, 2**12, 2**14, 2**16)
        for t in range(3)
    ]
    fit = fit_lonely_growth(lonely_summaries(recs))
    assert fit.predictor == "log_m"
    assert abs(fit.slope - 0.5) < 1e-6


def test_counterexample_report_shape_and_determinism():
    rep1 = counterexample_run([256, 512, 1024], 3, master_seed=21)
    rep2 = counterexample_run([256, 512, 1024], 3, master_seed=21)
    assert rep1.m_values == [256, 512, 1024]
    assert len(rep1.ratios) == 3
    assert rep1.ratios == rep2.ratios
    assert [r.longest_edge for r in rep1.records] == [r.longest_edge for r in rep2.records]
    med = np.median([r.longest_edge for r in rep1.records if r.m == 512])
    assert rep1.ratios[1] == pytest.approx(med / math.sqrt(math.log(512) / 512))


def test_aux_csv_writers(tmp_path):
    occ = occupancy_run(SQUARE, [64], 2, [1.0], master_seed=1, alpha_hat=1.0)
    write_occupancy_csv(occ, tmp_path / "occ.csv")
    assert (tmp_path / "occ.csv").read_text().startswith("measure_id,m,C,delta,n_balls,trials,full_fraction,degenerate\n")

    lon = lonely_run(SQUARE, [128], 2, master_seed=1, beta_hat=3.0)
    write_lonely_csv(lon, tmp_path / "lon.csv")
    assert (tmp_path / "lon.csv").read_text().startswith("measure_id,m,trial,seed,delta,n_balls,y,empty_balls\n")

    result = mst_fast(sample(SQUARE, 50, derive_stream(1, [0])))
    write_edges_csv(result, tmp_path / "edges.csv")
    lines = (tmp_path / "edges.csv").read_text().splitlines()
    assert lines[0] == "i,j,length" and len(lines) == 50


def test_run_config_round_trip(tmp_path):
    cfg = RunConfig(
        measure=MeasureSpec.from_name("sierpinski_carpet"),
        m_grid=[1024, 2048],
        trials=5,
        seed=42,
        experiment="scaling",
    )
    import json

    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg.to_json()))
    from fractalmst.experiments import load_config

    again = load_config(path)
    assert again == cfg


def test_fit_result_is_plain_data():
    fit = FitResult(0.5, -1.0, 0.99, (10, 100), "log_m")
    assert fit.slope == 0.5 and fit.n_range == (10, 100)
