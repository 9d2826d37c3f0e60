"""Finite-difference checks: every layer's analytic gradient in float64."""

import numpy as np
import pytest

from bdcd import layers
from bdcd.layers import layer_backward
from bdcd.optim import categorical_cross_entropy, softmax_ce_grad
from bdcd.rng import Rng

from reference import finite_diff, max_rel_err

EPS = 1e-5
TOL = 1e-5


def rnd(shape, seed):
    return np.random.default_rng(seed).normal(size=shape)


def test_dense_gradients():
    x = rnd((4, 6), 1)
    w = rnd((6, 5), 2)
    b = rnd((5,), 3)
    lp = layers.dense(w, b)
    out, cache = layers.dense_forward(x, lp)
    up = rnd(out.shape, 4)
    dx, pg = layer_backward(lp, cache, up)

    def loss(xx, ww, bb):
        y, _ = layers.dense_forward(xx, layers.dense(ww, bb))
        return float((y * up).sum())

    assert max_rel_err(dx, finite_diff(lambda v: loss(v, w, b), x, EPS)) < TOL
    assert max_rel_err(pg["weights"], finite_diff(lambda v: loss(x, v, b), w, EPS)) < TOL
    assert max_rel_err(pg["bias"], finite_diff(lambda v: loss(x, w, v), b, EPS)) < TOL


@pytest.mark.parametrize("padding,stride", [("same", 1), ("valid", 1), ("valid", 2)])
def test_conv_gradients(padding, stride):
    x = rnd((1, 6, 6, 2), 10)
    w = rnd((3, 3, 2, 3), 11)
    b = rnd((3,), 12)
    lp = layers.conv2d(w, b, stride, padding)
    out, cache = layers.conv2d_forward(x, lp)
    up = rnd(out.shape, 13)
    dx, pg = layer_backward(lp, cache, up)

    def loss(xx, ww, bb):
        y, _ = layers.conv2d_forward(xx, layers.conv2d(ww, bb, stride, padding))
        return float((y * up).sum())

    assert max_rel_err(dx, finite_diff(lambda v: loss(v, w, b), x, EPS)) < TOL
    assert max_rel_err(pg["weights"], finite_diff(lambda v: loss(x, v, b), w, EPS)) < TOL
    assert max_rel_err(pg["bias"], finite_diff(lambda v: loss(x, w, v), b, EPS)) < TOL


def test_relu_gradient():
    x = rnd((3, 7), 20)
    x[np.abs(x) < 1e-3] += 0.01  # keep values away from the kink
    out, cache = layers.relu_forward(x)
    up = rnd(out.shape, 21)
    dx, _ = layer_backward(layers.relu_layer(), cache, up)
    num = finite_diff(lambda v: float((layers.relu_forward(v)[0] * up).sum()), x, EPS)
    assert max_rel_err(dx, num) < TOL


def test_maxpool_gradient():
    x = rnd((1, 4, 4, 2), 30)
    # separate window entries so the finite-difference step cannot flip a max
    x += np.arange(x.size).reshape(x.shape) * 1e-3
    out, cache = layers.maxpool_forward(x)
    up = rnd(out.shape, 31)
    dx, _ = layer_backward(layers.maxpool(), cache, up)
    num = finite_diff(lambda v: float((layers.maxpool_forward(v)[0] * up).sum()), x, EPS)
    assert max_rel_err(dx, num) < TOL


def test_dropout_gradient_with_fixed_mask():
    x = rnd((5, 8), 40)
    _, cache = layers.dropout_forward(x, 0.4, "train", Rng(7))
    up = rnd((5, 8), 41)
    dx, _ = layer_backward(layers.dropout(0.4), cache, up)
    # with the mask frozen the layer is linear: y = x * mask_scaled
    num = finite_diff(lambda v: float((v * cache.mask_scaled * up).sum()), x, EPS)
    assert max_rel_err(dx, num) < TOL


def test_softmax_jacobian_vector_product():
    logits = rnd((4, 6), 50)
    probs, cache = layers.softmax_forward(logits)
    up = rnd(probs.shape, 51)
    dx, _ = layer_backward(layers.softmax_layer(), cache, up)
    num = finite_diff(lambda v: float((layers.softmax(v) * up).sum()), logits, EPS)
    assert max_rel_err(dx, num) < TOL


def test_fused_softmax_cross_entropy_gradient():
    logits = rnd((6, 10), 60)
    onehot = np.zeros((6, 10))
    onehot[np.arange(6), [0, 3, 9, 1, 4, 4]] = 1.0

    def loss(v):
        return categorical_cross_entropy(layers.softmax(v), onehot)

    analytic = softmax_ce_grad(layers.softmax(logits), onehot)
    assert max_rel_err(analytic, finite_diff(loss, logits, EPS)) < 1e-6
