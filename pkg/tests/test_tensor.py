import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bdcd import tensor
from bdcd.errors import InvalidShapeError
from bdcd.rng import Rng


class TestCreate:
    def test_zeros(self):
        t = tensor.zeros((3,))
        assert t.dtype == np.float32
        assert np.array_equal(t, [0.0, 0.0, 0.0])

    def test_constant_fill(self):
        t = tensor.constant((2, 2), 1.5)
        assert np.array_equal(t.ravel(), [1.5, 1.5, 1.5, 1.5])

    def test_he_normal_sample_std(self):
        # sample std over 10k draws should sit within 10% of sqrt(2/100)
        t = tensor.he_normal((10000,), fan_in=100, rng=Rng(7))
        target = np.sqrt(2.0 / 100.0)
        assert abs(float(t.std()) - target) < 0.1 * target

    def test_he_normal_seed_bitwise_identical(self):
        a = tensor.he_normal((64, 32), fan_in=64, rng=Rng(99))
        b = tensor.he_normal((64, 32), fan_in=64, rng=Rng(99))
        assert a.tobytes() == b.tobytes()

    def test_uniform_bounds(self):
        t = tensor.uniform((5000,), -0.25, 0.75, Rng(3))
        assert float(t.min()) >= -0.25 and float(t.max()) < 0.75

    @pytest.mark.parametrize("shape", [(), (0,), (3, 0), (-1,), (2, -2)])
    def test_invalid_shapes_rejected(self, shape):
        with pytest.raises(InvalidShapeError):
            tensor.zeros(shape)

    def test_row_major_layout(self):
        # element (i, j) of an [m, n] tensor lives at data[i*n + j]
        flat = np.arange(12, dtype=np.float32)
        t = flat.reshape(3, 4)
        for i in range(3):
            for j in range(4):
                assert t[i, j] == flat[i * 4 + j]


class TestMatmul:
    def test_identity(self):
        a = np.array([[1.0, 2.0], [3.0, 4.0]], dtype=np.float32)
        assert np.array_equal(tensor.matmul(np.eye(2, dtype=np.float32), a), a)

    def test_fixture_product(self):
        a = np.array([[1.0, 2.0], [3.0, 4.0]], dtype=np.float32)
        b = np.array([[5.0, 6.0], [7.0, 8.0]], dtype=np.float32)
        assert np.array_equal(tensor.matmul(a, b), [[19.0, 22.0], [43.0, 50.0]])

    def test_zero_matrix(self):
        a = np.arange(6, dtype=np.float32).reshape(2, 3)
        assert np.array_equal(tensor.matmul(a, np.zeros((3, 4), np.float32)),
                              np.zeros((2, 4)))

    def test_shape_mismatch(self):
        with pytest.raises(InvalidShapeError):
            tensor.matmul(np.ones((2, 3), np.float32), np.ones((2, 3), np.float32))

    @given(st.integers(0, 2 ** 32 - 1))
    @settings(max_examples=25, deadline=None)
    def test_associativity_within_f32_tolerance(self, seed):
        gen = np.random.default_rng(seed)
        a, b, c = (gen.uniform(-1, 1, (4, 4)).astype(np.float32) for _ in range(3))
        left = tensor.matmul(tensor.matmul(a, b), c)
        right = tensor.matmul(a, tensor.matmul(b, c))
        assert np.abs(left - right).max() < 1e-4

    def test_results_finite(self):
        gen = np.random.default_rng(5)
        a = gen.normal(size=(16, 16)).astype(np.float32)
        out = tensor.matmul(a, a)
        assert np.isfinite(out).all()


class TestRelu:
    def test_sign_cases(self):
        assert np.array_equal(tensor.relu(np.array([-1.0, 0.0, 2.0], np.float32)),
                              [0.0, 0.0, 2.0])

    def test_all_negative(self):
        assert np.array_equal(tensor.relu(np.full(5, -3.0, np.float32)), np.zeros(5))

    @given(st.integers(0, 2 ** 32 - 1))
    @settings(max_examples=25, deadline=None)
    def test_idempotent(self, seed):
        x = np.random.default_rng(seed).normal(size=(20,)).astype(np.float32)
        once = tensor.relu(x)
        assert np.array_equal(tensor.relu(once), once)


class TestArgmax:
    def test_forced(self):
        assert tensor.argmax(np.array([0.1, 0.7, 0.2], np.float32)) == 1

    def test_tie_breaks_low(self):
        assert tensor.argmax(np.array([0.5, 0.5], np.float32)) == 0

    def test_one_hot(self):
        v = np.zeros(10, np.float32)
        v[6] = 1.0
        assert tensor.argmax(v) == 6

    def test_empty_rejected(self):
        with pytest.raises(InvalidShapeError):
            tensor.argmax(np.zeros((0,), np.float32))
