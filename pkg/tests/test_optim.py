import numpy as np
import pytest

from bdcd.errors import InvalidShapeError
from bdcd.optim import (AdamState, adam_step, categorical_cross_entropy,
                        softmax_ce_grad)

from reference import adam_reference


class TestCrossEntropy:
    def test_perfect_prediction_is_zero(self):
        onehot = np.eye(4, dtype=np.float32)
        assert categorical_cross_entropy(onehot.copy(), onehot) == pytest.approx(0.0, abs=1e-6)

    def test_uniform_prediction_is_log_k(self):
        probs = np.full((8, 10), 0.1, np.float32)
        onehot = np.zeros((8, 10), np.float32)
        onehot[np.arange(8), np.arange(8)] = 1.0
        assert categorical_cross_entropy(probs, onehot) == pytest.approx(np.log(10.0), abs=1e-6)

    def test_zero_true_probability_clamped(self):
        probs = np.array([[0.0, 1.0]], np.float32)
        onehot = np.array([[1.0, 0.0]], np.float32)
        assert categorical_cross_entropy(probs, onehot) == pytest.approx(-np.log(1e-12), rel=1e-6)

    def test_loss_nonnegative(self):
        gen = np.random.default_rng(0)
        for _ in range(20):
            logits = gen.normal(size=(6, 10))
            e = np.exp(logits - logits.max(axis=1, keepdims=True))
            probs = e / e.sum(axis=1, keepdims=True)
            onehot = np.zeros((6, 10))
            onehot[np.arange(6), gen.integers(0, 10, 6)] = 1.0
            assert categorical_cross_entropy(probs, onehot) >= 0.0

    def test_shape_mismatch_rejected(self):
        with pytest.raises(InvalidShapeError):
            categorical_cross_entropy(np.ones((2, 3)), np.ones((2, 4)))


class TestCeGrad:
    def test_perfect_prediction_zero_gradient(self):
        onehot = np.eye(3, dtype=np.float32)
        assert np.allclose(softmax_ce_grad(onehot.copy(), onehot), 0.0)

    def test_two_class_fixture(self):
        probs = np.array([[0.5, 0.5]], np.float32)
        onehot = np.array([[1.0, 0.0]], np.float32)
        assert np.allclose(softmax_ce_grad(probs, onehot), [[-0.5, 0.5]])

    def test_batch_mean_scaling(self):
        probs = np.full((4, 2), 0.5, np.float32)
        onehot = np.tile([[1.0, 0.0]], (4, 1)).astype(np.float32)
        assert np.allclose(softmax_ce_grad(probs, onehot), [[-0.125, 0.125]] * 4)


class TestAdam:
    def test_zero_gradient_leaves_params(self):
        p = np.array([1.0, -2.0, 3.0])
        state = AdamState.for_param(p)
        out, _ = adam_step(p, np.zeros_like(p), state, lr=1e-4)
        assert np.array_equal(out, [1.0, -2.0, 3.0])

    def test_first_step_hand_value(self):
        # at t=1 bias correction gives m_hat = g, v_hat = g**2, so the update
        # is lr * g / (|g| + eps): for g=1 exactly -1e-4 / (1 + 1e-8)
        p = np.array([0.0])
        out, state = adam_step(p, np.array([1.0]), AdamState.for_param(p), lr=1e-4)
        assert out[0] == pytest.approx(-1e-4 / (1.0 + 1e-8), rel=1e-12)
        assert state.t == 1

    def test_thousand_steps_match_reference_recurrence(self):
        gen = np.random.default_rng(17)
        p0 = gen.normal(size=(16,))
        grads = [gen.normal(size=(16,)) for _ in range(1000)]
        p = p0.copy()
        state = AdamState.for_param(p)
        for g in grads:
            p, state = adam_step(p, g, state, lr=1e-4)
        ref = adam_reference(p0, grads, lr=1e-4)
        assert np.abs(p - ref).max() < 1e-12
        assert state.t == 1000

    @pytest.mark.parametrize("scale", [1e-3, 1.0, 1e3])
    def test_first_update_magnitude_is_scale_free(self, scale):
        p = np.zeros(8)
        g = np.full(8, scale)
        out, _ = adam_step(p, g, AdamState.for_param(p), lr=1e-4)
        ratio = np.abs(out) / 1e-4
        assert np.all(ratio > 0.999) and np.all(ratio < 1.001)

    def test_no_nan_for_finite_gradients(self):
        gen = np.random.default_rng(3)
        p = gen.normal(size=(32,)).astype(np.float32)
        state = AdamState.for_param(p)
        for k in range(50):
            g = (gen.normal(size=(32,)) * 10.0 ** gen.integers(-6, 6)).astype(np.float32)
            p, state = adam_step(p, g, state, lr=1e-4)
        assert np.isfinite(p).all()

    def test_shape_mismatch_rejected(self):
        p = np.zeros(4)
        with pytest.raises(InvalidShapeError):
            adam_step(p, np.zeros(5), AdamState.for_param(p))

    def test_step_counter_increments_by_one(self):
        p = np.zeros(2)
        state = AdamState.for_param(p)
        for expected in (1, 2, 3):
            _, state = adam_step(p, np.ones(2), state)
            assert state.t == expected
