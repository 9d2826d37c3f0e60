import numpy as np

from bdcd.rng import Rng


def test_same_seed_same_stream():
    assert np.array_equal(Rng(42).u64(100), Rng(42).u64(100))


def test_different_seed_different_stream():
    assert not np.array_equal(Rng(42).u64(100), Rng(43).u64(100))


def test_draws_independent_of_batching():
    r = Rng(9)
    split = np.concatenate([r.u64(3), r.u64(5), r.u64(2)])
    assert np.array_equal(split, Rng(9).u64(10))


def test_uniform_in_range():
    u = Rng(1).uniform(2.0, 5.0, (5000,))
    assert u.min() >= 2.0 and u.max() < 5.0


def test_normal_moments():
    x = Rng(7).normal((20000,))
    assert abs(x.mean()) < 0.05
    assert abs(x.std() - 1.0) < 0.05


def test_permutation_is_permutation():
    p = Rng(3).permutation(50)
    assert sorted(p.tolist()) == list(range(50))


def test_derive_stable_and_keyed():
    base = Rng(5)
    a = base.derive(1, 2).u64(4)
    base.u64(10)  # consuming the parent must not change derived children
    assert np.array_equal(base.derive(1, 2).u64(4), a)
    assert not np.array_equal(base.derive(1, 3).u64(4), a)
    assert not np.array_equal(base.derive("shuffle").u64(4),
                              base.derive("dropout").u64(4))
