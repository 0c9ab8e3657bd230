"""Packing invariants, occupancy recounts, exact lonely-ball moments, estimator."""

import numpy as np
import pytest

from fractalmst.geometry import PointCloud
from fractalmst.measures import MeasureSpec, sample
from fractalmst.regularity import (
    estimate_regularity,
    expected_pair,
    expected_singleton,
    maximal_packing,
    occupancy,
    verify_packing,
)
from fractalmst.rng import derive_stream


def _cloud(pts):
    return PointCloud(np.asarray(pts, dtype=np.float64))


# -- maximal packing ----------------------------------------------------------


def test_packing_small_gaps_keep_all_centers():
    ref = _cloud([[0.0], [1.0], [2.0]])
    p = maximal_packing(ref, 0.4)  # pairwise gaps 1 > 0.8
    assert list(p.center_indices) == [0, 1, 2]


def test_packing_wide_balls_drop_middle():
    ref = _cloud([[0.0], [1.0], [2.0]])
    p = maximal_packing(ref, 0.6)  # 1 is within 1.2 of 0; 2 is not
    assert list(p.center_indices) == [0, 2]


def test_packing_cover_forced_by_maximality():
    ref = _cloud([[0.0], [1.0], [2.0]])
    for delta in (0.3, 0.55, 1.1):
        p = maximal_packing(ref, delta)
        dist_to_center = np.abs(ref.points - p.centers[:, 0][None, :]).min(axis=1)
        assert (dist_to_center <= 2 * delta).all()


@pytest.mark.parametrize("kind,delta", [("unit_square", 0.07), ("sierpinski_carpet", 0.04), ("unit_cube", 0.15)])
def test_packing_invariants_on_sampled_references(kind, delta):
    spec = MeasureSpec.from_name(kind)
    ref = sample(spec, 4000, derive_stream(17, [spec.stream_label]))
    p = maximal_packing(ref, delta)
    assert p.n_delta >= 2
    verify_packing(p, ref)
    assert p.occupancy.sum() <= ref.m  # disjoint balls cannot double-count
    assert (p.occupancy >= 1).all()  # every center counts at least itself


def test_packing_rejects_bad_inputs():
    ref = _cloud([[0.0]])
    with pytest.raises(ValueError):
        maximal_packing(ref, 0.0)
    with pytest.raises(ValueError):
        maximal_packing(PointCloud(np.empty((0, 1))), 0.5)


def test_packing_is_deterministic():
    spec = MeasureSpec.from_name("unit_square")
    ref = sample(spec, 2000, derive_stream(3, [1]))
    a = maximal_packing(ref, 0.05)
    b = maximal_packing(ref, 0.05)
    assert np.array_equal(a.center_indices, b.center_indices)


# -- occupancy ----------------------------------------------------------------


def test_occupancy_counts_small_example():
    ref = _cloud([[0.0], [0.9]])
    packing = maximal_packing(ref, 0.1)
    stats = occupancy(packing, _cloud([[0.0], [0.05], [0.9]]))
    assert list(stats.counts) == [2, 1]
    assert stats.y == 1 and stats.empty_balls == 0


def test_occupancy_empty_sample():
    packing = maximal_packing(_cloud([[0.0], [0.9]]), 0.1)
    stats = occupancy(packing, PointCloud(np.empty((0, 1))))
    assert stats.y == 0 and stats.empty_balls == 2 and stats.counts.sum() == 0


def test_occupancy_dimension_mismatch():
    packing = maximal_packing(_cloud([[0.0], [0.9]]), 0.1)
    with pytest.raises(ValueError):
        occupancy(packing, _cloud([[0.1, 0.2]]))


def test_occupancy_matches_naive_recount_over_trials():
    spec = MeasureSpec.from_name("unit_square")
    ref = sample(spec, 1500, derive_stream(8, [0]))
    packing = maximal_packing(ref, 0.08)
    for trial in range(1000):
        pts = sample(spec, 60, derive_stream(8, [1, trial]))
        stats = occupancy(packing, pts)
        # independent O(n*m) recount with plain distances
        diff = pts.points[:, None, :] - packing.centers[None, :, :]
        naive = (np.sqrt((diff**2).sum(-1)) <= packing.delta).sum(axis=0)
        assert np.array_equal(stats.counts, naive)
        assert stats.y == (naive == 1).sum()
        assert stats.empty_balls == (naive == 0).sum()


# -- exact moments ------------------------------------------------------------


def test_expected_singleton_closed_forms():
    assert expected_singleton(1, 0.37) == 0.37
    assert expected_singleton(2, 0.5) == 0.5
    assert expected_singleton(3, 1 / 3) == pytest.approx(4 / 9, rel=1e-15)
    assert expected_singleton(10, 0.0) == 0.0
    assert expected_singleton(10, 1.0) == 0.0


def test_expected_singleton_peaks_at_one_over_m():
    for m in (5, 40, 300):
        qs = np.linspace(0.0, 1.0, 2001)
        vals = [expected_singleton(m, q) for q in qs]
        assert abs(qs[int(np.argmax(vals))] - 1.0 / m) < 1e-3


def test_expected_pair_closed_forms():
    assert expected_pair(2, 0.5, 0.5) == 0.5  # (1-1)^0 == 1
    assert expected_pair(2, 0.25, 0.25) == 0.125
    assert expected_pair(5, 0.0, 0.3) == 0.0


def test_moment_preconditions():
    with pytest.raises(ValueError):
        expected_singleton(0, 0.5)
    with pytest.raises(ValueError):
        expected_singleton(5, 1.5)
    with pytest.raises(ValueError):
        expected_pair(1, 0.2, 0.2)
    with pytest.raises(ValueError):
        expected_pair(5, 0.6, 0.6)


def test_singleton_matches_binomial_monte_carlo():
    rng = np.random.default_rng(123)
    trials = 100_000
    for m, q in [(10, 0.1), (50, 0.02), (200, 1 / 200)]:
        hits = (rng.binomial(m, q, size=trials) == 1).mean()
        p = expected_singleton(m, q)
        sigma = np.sqrt(p * (1 - p) / trials)
        assert abs(hits - p) <= 4 * sigma


def test_pair_matches_multinomial_monte_carlo():
    rng = np.random.default_rng(321)
    trials = 100_000
    for m, qi, qj in [(10, 0.1, 0.1), (30, 0.05, 0.2), (100, 0.01, 0.01)]:
        counts = rng.multinomial(m, [qi, qj, 1 - qi - qj], size=trials)
        both_single = ((counts[:, 0] == 1) & (counts[:, 1] == 1)).mean()
        p = expected_pair(m, qi, qj)
        sigma = np.sqrt(p * (1 - p) / trials)
        assert abs(both_single - p) <= 4 * sigma


def test_simulated_y_mean_matches_sum_of_singleton_expectations():
    spec = MeasureSpec.from_name("unit_square")
    ref = sample(spec, 20_000, derive_stream(44, [0]))
    packing = maximal_packing(ref, 0.045)
    m = 400
    q_hat = packing.occupancy / ref.m
    predicted = sum(expected_singleton(m, q) for q in q_hat)
    ys = []
    for trial in range(1000):
        ys.append(occupancy(packing, sample(spec, m, derive_stream(44, [1, trial]))).y)
    ys = np.asarray(ys, dtype=float)
    se = ys.std(ddof=1) / np.sqrt(len(ys))
    assert abs(ys.mean() - predicted) <= 4 * se + 4 * np.sqrt(packing.n_delta) / np.sqrt(ref.m)


# -- regularity estimation ----------------------------------------------------


def test_estimator_recovers_dimensions_at_reduced_scale():
    for kind, target, tol in [("unit_square", 2.0, 0.06), ("unit_interval", 1.0, 0.06)]:
        spec = MeasureSpec.from_name(kind)
        est = estimate_regularity(spec, 20_000, 100, derive_stream(6, [spec.stream_label]))
        assert abs(est.d_hat - target) <= tol
        assert 0 < est.alpha_hat <= est.beta_hat
        assert est.alpha_min <= est.alpha_hat and est.beta_hat <= est.beta_max
        assert est.fit_r2 > 0.98


def test_estimator_warns_and_fails_when_balls_are_empty():
    spec = MeasureSpec.from_name("cantor_dust")
    with pytest.warns(UserWarning):
        with pytest.raises(ValueError):
            estimate_regularity(
                spec, 300, 20, derive_stream(2, [0]), delta_grid=np.array([1e-9, 1e-8, 1e-7])
            )


def test_estimator_needs_three_grid_points():
    spec = MeasureSpec.from_name("unit_square")
    with pytest.raises(ValueError):
        estimate_regularity(spec, 1000, 10, derive_stream(1, [0]), delta_grid=np.array([0.1, 0.2]))
