import math

import numpy as np
import pytest

from artrip.model import drift_loss, recommendation_loss, total_loss
from artrip.model.losses import (
    drift_loss_grad,
    recommendation_loss_grad,
    total_loss_grad,
)


def fd_grad(fn, rows, step=1e-6):
    """Central-difference gradient of a scalar function of a matrix."""
    g = np.zeros_like(rows)
    it = np.nditer(rows, flags=["multi_index"])
    while not it.finished:
        idx = it.multi_index
        plus = rows.copy()
        plus[idx] += step
        minus = rows.copy()
        minus[idx] -= step
        g[idx] = (fn(plus) - fn(minus)) / (2.0 * step)
        it.iternext()
    return g


class TestRecommendationLoss:
    def test_uniform_rows_give_log_k(self):
        rows = np.zeros((3, 4))
        assert recommendation_loss(rows, [0, 1, 2]) == pytest.approx(math.log(4))

    def test_half_probability_gives_log_two(self):
        # logits (log 3, 0, 0, 0): softmax puts exactly 3/6 = 0.5 on index 0
        rows = np.array([[math.log(3.0), 0.0, 0.0, 0.0]])
        assert recommendation_loss(rows, [0]) == pytest.approx(math.log(2))

    def test_mean_over_positions(self):
        rows = np.array([[math.log(3.0), 0.0, 0.0, 0.0], [0.0, 0.0, 0.0, 0.0]])
        expected = (math.log(2) + math.log(4)) / 2
        assert recommendation_loss(rows, [0, 3]) == pytest.approx(expected)

    def test_large_logits_are_stable(self):
        rows = np.array([[1000.0, 0.0], [0.0, 1000.0]])
        loss = recommendation_loss(rows, [0, 1])
        assert np.isfinite(loss)
        assert loss == pytest.approx(0.0, abs=1e-9)

    def test_rejects_empty_or_misaligned(self):
        with pytest.raises(ValueError):
            recommendation_loss_grad(np.zeros((0, 4)), [])
        with pytest.raises(ValueError):
            recommendation_loss_grad(np.zeros((2, 4)), [0])

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(7)
        rows = rng.standard_normal((4, 6))
        targets = [5, 0, 2, 2]
        _, grad = recommendation_loss_grad(rows, targets)
        num = fd_grad(lambda r: recommendation_loss(r, targets), rows)
        np.testing.assert_allclose(grad, num, atol=1e-8)


class TestDriftLoss:
    def test_orthogonal_rows_cost_log_two(self):
        rows = np.array([[1.0, 0.0], [0.0, 1.0]])
        assert drift_loss(rows) == pytest.approx(math.log(2))

    def test_parallel_rows_hit_the_clip(self):
        rows = np.array([[2.0, 0.0], [5.0, 0.0]])
        assert drift_loss(rows) == pytest.approx(-math.log(1e-6))

    def test_opposite_rows_cost_almost_nothing(self):
        rows = np.array([[1.0, 0.0], [-1.0, 0.0]])
        assert drift_loss(rows) == pytest.approx(-math.log(1.0 - 1e-6))

    def test_sums_over_all_pairs_without_normalizing(self):
        # three mutually orthogonal rows: 3 pairs, log 2 each
        rows = np.eye(3)
        assert drift_loss(rows) == pytest.approx(3 * math.log(2))

    def test_single_row_is_free(self):
        assert drift_loss(np.array([[3.0, 1.0]])) == 0.0

    def test_zero_norm_row_warns_and_charges_half(self):
        rows = np.array([[1.0, 0.0], [0.0, 0.0]])
        with pytest.warns(RuntimeWarning, match="zero-norm"):
            loss, grads = drift_loss_grad(rows)
        assert loss == pytest.approx(math.log(2))
        np.testing.assert_array_equal(grads, 0.0)

    def test_scale_invariance_of_loss(self):
        rng = np.random.default_rng(3)
        rows = rng.standard_normal((3, 5))
        assert drift_loss(rows) == pytest.approx(drift_loss(rows * 17.0))

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(11)
        rows = rng.standard_normal((4, 5))
        _, grad = drift_loss_grad(rows)
        num = fd_grad(lambda r: drift_loss(r), rows)
        np.testing.assert_allclose(grad, num, atol=1e-6)

    def test_clamped_pairs_carry_no_gradient(self):
        rows = np.array([[2.0, 0.0], [5.0, 0.0]])
        _, grads = drift_loss_grad(rows)
        np.testing.assert_array_equal(grads, 0.0)


class TestTotalLoss:
    def test_alpha_zero_is_pure_cross_entropy(self):
        rows = np.array([[1.0, 0.0], [1.0, 0.0]])
        assert total_loss(rows, [0, 0], alpha=0.0) == pytest.approx(
            recommendation_loss(rows, [0, 0])
        )

    def test_alpha_scales_the_penalty(self):
        rng = np.random.default_rng(5)
        rows = rng.standard_normal((3, 4))
        targets = [0, 1, 2]
        base = recommendation_loss(rows, targets)
        drift = drift_loss(rows)
        for alpha in (0.5, 1.0, 2.0):
            assert total_loss(rows, targets, alpha) == pytest.approx(
                base + alpha * drift
            )

    def test_gradient_composition(self):
        rng = np.random.default_rng(9)
        rows = rng.standard_normal((3, 4))
        targets = [1, 3, 0]
        _, grad = total_loss_grad(rows, targets, alpha=0.7)
        num = fd_grad(lambda r: total_loss(r, targets, alpha=0.7), rows)
        np.testing.assert_allclose(grad, num, atol=1e-6)
