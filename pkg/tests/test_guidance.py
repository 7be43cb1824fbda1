import numpy as np
import pytest

from artrip.data import Trajectory
from artrip.guidance import (
    ConfidenceVector,
    apply_guidance,
    build_confidence,
    build_guidance_matrix,
    zero_guidance,
)

# two routes over POIs {0: A, 1: B, 2: C}: A,B,C and A,C,B
TWO_ROUTES = [
    Trajectory(pois=(0, 1, 2), times=(0, 1, 2)),
    Trajectory(pois=(0, 2, 1), times=(0, 1, 2)),
]


def test_worked_example_ratios():
    pm = build_guidance_matrix(TWO_ROUTES, k=3)
    np.testing.assert_allclose(pm.values[0], [1.0, 0.0, 0.0])
    np.testing.assert_allclose(pm.values[1], [0.0, 0.5, 0.5])
    np.testing.assert_allclose(pm.values[2], [0.0, 0.5, 0.5])
    assert pm.m_max == 3


def test_visited_rows_sum_to_one():
    pm = build_guidance_matrix(TWO_ROUTES, k=5)
    sums = pm.values.sum(axis=1)
    visited = pm.poi_totals > 0
    np.testing.assert_allclose(sums[visited], 1.0, atol=1e-12)
    assert not visited[3] and not visited[4]
    np.testing.assert_array_equal(pm.values[3], 0.0)


def test_confidence_counts_zero_columns():
    pm = build_guidance_matrix(TWO_ROUTES, k=3)
    conf = build_confidence(pm, k=3)
    np.testing.assert_allclose(conf.values, [2 / 3, 1 / 3, 1 / 3])


def test_confidence_lookup_is_one_based():
    conf = ConfidenceVector(values=np.array([0.5, 0.25]))
    assert conf.at(1) == 0.5
    assert conf.at(2) == 0.25
    assert conf.at(3) == 1.0  # beyond the trained horizon
    with pytest.raises(ValueError):
        conf.at(0)


def test_zero_guidance_is_identity():
    h = np.arange(12, dtype=np.float64).reshape(4, 3) - 5.0
    out = apply_guidance(h, zero_guidance(k=3, m_max=4))
    np.testing.assert_array_equal(out, h)


def test_apply_guidance_multiplies_by_one_plus_ratio():
    pm = build_guidance_matrix(TWO_ROUTES, k=3)
    h = np.ones((3, 3))
    out = apply_guidance(h, pm)
    # row for position 1: POI 0 doubled, others untouched
    np.testing.assert_allclose(out[0], [2.0, 1.0, 1.0])
    np.testing.assert_allclose(out[1], [1.0, 1.5, 1.5])
    np.testing.assert_allclose(out[2], [1.0, 1.5, 1.5])


def test_apply_guidance_beyond_horizon_warns_and_passes_through():
    pm = build_guidance_matrix(TWO_ROUTES, k=3)
    h = np.full((5, 3), 2.0)
    with pytest.warns(UserWarning, match="horizon"):
        out = apply_guidance(h, pm)
    np.testing.assert_array_equal(out[3:], h[3:])
    assert not np.array_equal(out[0], h[0])


def test_build_guidance_rejects_empty_or_out_of_range():
    with pytest.raises(ValueError, match="empty"):
        build_guidance_matrix([], k=3)
    with pytest.raises(ValueError, match="out of range"):
        build_guidance_matrix([Trajectory(pois=(0, 9, 1), times=(0, 1, 2))], k=3)


def test_guidance_preserves_score_order_within_position():
    # guidance reshapes rows per POI, not per position rank
    pm = build_guidance_matrix(TWO_ROUTES, k=3)
    h = np.array([[3.0, 2.0, 1.0]])
    out = apply_guidance(h, pm)
    assert out.shape == (1, 3)
    assert out[0, 0] == 6.0
