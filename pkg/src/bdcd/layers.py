"""Forward and backward kernels for every layer kind in the classifier.

Data layout is NHWC throughout.  Convolution weights are [kh, kw, c_in,
c_out], dense weights [d_in, d_out].  Convolution is cross-correlation (no
kernel flip) and is lowered to one GEMM per batch via patch-matrix
extraction; the patch matrix is kept in the forward cache because both
parameter gradients reuse it.

Each ``*_forward`` returns ``(output, cache)``; ``layer_backward`` consumes
the cache exactly once and returns the input gradient plus parameter
gradients where the layer has any.  Kernels preserve the input dtype so the
gradient-check suite can run them in float64.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from numpy.lib.stride_tricks import as_strided

from .errors import InvalidParameterError, InvalidShapeError
from .rng import Rng

LAYER_KINDS = ("conv2d", "maxpool", "dropout", "dense", "relu", "flatten", "softmax")


@dataclass
class LayerParams:
    kind: str
    weights: Optional[np.ndarray] = None
    bias: Optional[np.ndarray] = None
    hyper: dict = field(default_factory=dict)


def conv2d(weights: np.ndarray, bias: np.ndarray, stride: int = 1,
           padding: str = "same") -> LayerParams:
    if weights.ndim != 4:
        raise InvalidShapeError(f"conv2d weights must be [kh,kw,cin,cout], got {weights.shape}")
    if bias.shape != (weights.shape[3],):
        raise InvalidShapeError(f"conv2d bias must be [cout], got {bias.shape}")
    if stride < 1:
        raise InvalidParameterError(f"stride must be >= 1, got {stride}")
    if padding not in ("same", "valid"):
        raise InvalidParameterError(f"padding must be 'same' or 'valid', got {padding!r}")
    return LayerParams("conv2d", weights, bias, {"stride": int(stride), "padding": padding})


def dense(weights: np.ndarray, bias: np.ndarray) -> LayerParams:
    if weights.ndim != 2:
        raise InvalidShapeError(f"dense weights must be [d_in,d_out], got {weights.shape}")
    if bias.shape != (weights.shape[1],):
        raise InvalidShapeError(f"dense bias must be [d_out], got {bias.shape}")
    return LayerParams("dense", weights, bias)


def maxpool() -> LayerParams:
    return LayerParams("maxpool", hyper={"window": 2, "stride": 2})


def dropout(rate: float) -> LayerParams:
    if not 0.0 <= rate < 1.0:
        raise InvalidParameterError(f"dropout rate must be in [0, 1), got {rate}")
    return LayerParams("dropout", hyper={"rate": float(rate)})


def relu_layer() -> LayerParams:
    return LayerParams("relu")


def flatten_layer() -> LayerParams:
    return LayerParams("flatten")


def softmax_layer() -> LayerParams:
    return LayerParams("softmax")


# --- caches ---------------------------------------------------------------

@dataclass
class ConvCache:
    cols: np.ndarray            # (N*Ho*Wo, kh*kw*cin) patch matrix
    x_shape: tuple
    padded_shape: tuple
    pad_top: int
    pad_left: int
    stride: int
    out_shape: tuple            # (N, Ho, Wo, cout)


@dataclass
class PoolCache:
    x_shape: tuple
    arg: np.ndarray             # (N, Ho, Wo, C) flat index of window max
    out_shape: tuple


@dataclass
class DropoutCache:
    mask_scaled: Optional[np.ndarray]   # None in eval mode
    out_shape: tuple


@dataclass
class DenseCache:
    x: np.ndarray
    out_shape: tuple


@dataclass
class ReluCache:
    positive: np.ndarray
    out_shape: tuple


@dataclass
class FlattenCache:
    x_shape: tuple
    out_shape: tuple


@dataclass
class SoftmaxCache:
    probs: np.ndarray
    out_shape: tuple


# --- forward --------------------------------------------------------------

def _conv_padding(size: int, k: int, stride: int, padding: str) -> tuple[int, int, int]:
    """Out size plus (before, after) zero padding along one axis."""
    if padding == "valid":
        if size < k:
            raise InvalidShapeError(f"input extent {size} smaller than kernel {k}")
        return (size - k) // stride + 1, 0, 0
    out = -(-size // stride)  # ceil
    total = max((out - 1) * stride + k - size, 0)
    return out, total // 2, total - total // 2


def conv2d_forward(x: np.ndarray, params: LayerParams, mode: str = "eval"):
    """Cross-correlation plus bias. Returns (N,Ho,Wo,cout) and its cache."""
    del mode  # behaves identically in train and eval
    w = params.weights
    if x.ndim != 4:
        raise InvalidShapeError(f"conv2d input must be NHWC, got shape {x.shape}")
    n, h, wd, cin = x.shape
    kh, kw, wcin, cout = w.shape
    if cin != wcin:
        raise InvalidShapeError(f"input has {cin} channels, weights expect {wcin}")
    stride = params.hyper["stride"]
    ho, pt, pb = _conv_padding(h, kh, stride, params.hyper["padding"])
    wo, pl, pr = _conv_padding(wd, kw, stride, params.hyper["padding"])
    if pt or pb or pl or pr:
        xp = np.pad(x, ((0, 0), (pt, pb), (pl, pr), (0, 0)))
    else:
        xp = x
    s0, s1, s2, s3 = xp.strides
    view = as_strided(
        xp,
        shape=(n, ho, wo, kh, kw, cin),
        strides=(s0, s1 * stride, s2 * stride, s1, s2, s3),
    )
    cols = view.reshape(n * ho * wo, kh * kw * cin)
    out = cols @ w.reshape(kh * kw * cin, cout)
    out += params.bias
    out = out.reshape(n, ho, wo, cout)
    cache = ConvCache(cols, x.shape, xp.shape, pt, pl, stride, out.shape)
    return out, cache


def maxpool_forward(x: np.ndarray, window: int = 2, stride: int = 2):
    """2x2/stride-2 max pooling; the cache records each window's argmax."""
    if window != 2 or stride != 2:
        raise InvalidParameterError("only window=2, stride=2 pooling is supported")
    if x.ndim != 4:
        raise InvalidShapeError(f"maxpool input must be NHWC, got shape {x.shape}")
    n, h, w, c = x.shape
    if h % 2 or w % 2:
        raise InvalidShapeError(f"maxpool needs even spatial dims, got {h}x{w}")
    ho, wo = h // 2, w // 2
    # windows laid out row-major: (r0c0, r0c1, r1c0, r1c1)
    win = x.reshape(n, ho, 2, wo, 2, c).transpose(0, 1, 3, 5, 2, 4).reshape(n, ho, wo, c, 4)
    arg = win.argmax(axis=4).astype(np.uint8)
    out = win.max(axis=4)
    return out, PoolCache(x.shape, arg, out.shape)


def dropout_forward(x: np.ndarray, p: float, mode: str, rng: Optional[Rng] = None):
    """Inverted dropout: zero with probability p, scale survivors by 1/(1-p)."""
    if not 0.0 <= p < 1.0:
        raise InvalidParameterError(f"dropout rate must be in [0, 1), got {p}")
    if mode == "eval":
        return x, DropoutCache(None, x.shape)
    if rng is None:
        raise InvalidParameterError("train-mode dropout needs an rng")
    keep = rng.uniform(0.0, 1.0, x.shape) >= p
    mask = keep.astype(x.dtype) / x.dtype.type(1.0 - p)
    return x * mask, DropoutCache(mask, x.shape)


def dense_forward(x: np.ndarray, params: LayerParams, mode: str = "eval"):
    """Row-wise affine map: x @ W + bias."""
    del mode
    w = params.weights
    if x.ndim != 2:
        raise InvalidShapeError(f"dense input must be [N,d], got shape {x.shape}")
    if x.shape[1] != w.shape[0]:
        raise InvalidShapeError(f"input width {x.shape[1]} != weight rows {w.shape[0]}")
    out = x @ w + params.bias
    return out, DenseCache(x, out.shape)


def relu_forward(x: np.ndarray):
    return np.maximum(x, 0), ReluCache(x > 0, x.shape)


def flatten_forward(x: np.ndarray):
    out = x.reshape(x.shape[0], -1)
    return out, FlattenCache(x.shape, out.shape)


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise exp-normalize with max subtraction for stability.

    Normalization runs in float64 before casting back, which keeps row sums
    within a few ulp of 1 even for float32 inputs.
    """
    if logits.ndim != 2 or logits.shape[1] < 1:
        raise InvalidShapeError(f"softmax expects [N,K], got shape {logits.shape}")
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z.astype(np.float64, copy=False))
    p = e / e.sum(axis=1, keepdims=True)
    return p.astype(logits.dtype, copy=False)


def softmax_forward(logits: np.ndarray):
    probs = softmax(logits)
    return probs, SoftmaxCache(probs, probs.shape)


def layer_forward(params: LayerParams, x: np.ndarray, mode: str = "eval",
                  rng: Optional[Rng] = None):
    k = params.kind
    if k == "conv2d":
        return conv2d_forward(x, params, mode)
    if k == "maxpool":
        return maxpool_forward(x, params.hyper["window"], params.hyper["stride"])
    if k == "dropout":
        return dropout_forward(x, params.hyper["rate"], mode, rng)
    if k == "dense":
        return dense_forward(x, params, mode)
    if k == "relu":
        return relu_forward(x)
    if k == "flatten":
        return flatten_forward(x)
    if k == "softmax":
        return softmax_forward(x)
    raise InvalidParameterError(f"unknown layer kind {k!r}")


# --- backward ---------------------------------------------------------------

def _check_upstream(cache, upstream: np.ndarray) -> None:
    if tuple(upstream.shape) != tuple(cache.out_shape):
        raise InvalidShapeError(
            f"upstream shape {upstream.shape} != forward output {cache.out_shape}")


def conv2d_backward(params: LayerParams, cache: ConvCache, upstream: np.ndarray):
    _check_upstream(cache, upstream)
    w = params.weights
    kh, kw, cin, cout = w.shape
    n, h, wd, _ = cache.x_shape
    _, ho, wo, _ = cache.out_shape
    stride = cache.stride
    up2 = upstream.reshape(-1, cout)
    grad_w = (cache.cols.T @ up2).reshape(w.shape)
    grad_b = up2.sum(axis=0)
    dcols = (up2 @ w.reshape(-1, cout).T).reshape(n, ho, wo, kh, kw, cin)
    dpad = np.zeros(cache.padded_shape, dtype=upstream.dtype)
    for i in range(kh):
        for j in range(kw):
            dpad[:, i:i + stride * ho:stride, j:j + stride * wo:stride, :] += dcols[:, :, :, i, j, :]
    pt, pl = cache.pad_top, cache.pad_left
    dx = dpad[:, pt:pt + h, pl:pl + wd, :]
    if dx.base is not None:
        dx = dx.copy()
    return dx, {"weights": grad_w, "bias": grad_b}


def maxpool_backward(cache: PoolCache, upstream: np.ndarray):
    _check_upstream(cache, upstream)
    n, h, w, c = cache.x_shape
    ho, wo = h // 2, w // 2
    onehot = (cache.arg[..., None] == np.arange(4, dtype=np.uint8)).astype(upstream.dtype)
    g4 = upstream[..., None] * onehot
    dx = g4.reshape(n, ho, wo, c, 2, 2).transpose(0, 1, 4, 2, 5, 3).reshape(n, h, w, c)
    return dx, None


def dropout_backward(cache: DropoutCache, upstream: np.ndarray):
    _check_upstream(cache, upstream)
    if cache.mask_scaled is None:
        return upstream, None
    return upstream * cache.mask_scaled, None


def dense_backward(params: LayerParams, cache: DenseCache, upstream: np.ndarray):
    _check_upstream(cache, upstream)
    grad_w = cache.x.T @ upstream
    grad_b = upstream.sum(axis=0)
    dx = upstream @ params.weights.T
    return dx, {"weights": grad_w, "bias": grad_b}


def relu_backward(cache: ReluCache, upstream: np.ndarray):
    # gradient at exactly 0 is defined as 0
    _check_upstream(cache, upstream)
    return upstream * cache.positive.astype(upstream.dtype), None


def flatten_backward(cache: FlattenCache, upstream: np.ndarray):
    _check_upstream(cache, upstream)
    return upstream.reshape(cache.x_shape), None


def softmax_backward(cache: SoftmaxCache, upstream: np.ndarray):
    """Jacobian-vector product; training instead uses the fused CE gradient."""
    _check_upstream(cache, upstream)
    p = cache.probs
    dot = (upstream * p).sum(axis=1, keepdims=True)
    return p * (upstream - dot), None


def layer_backward(params: LayerParams, cache, upstream: np.ndarray):
    k = params.kind
    if k == "conv2d":
        return conv2d_backward(params, cache, upstream)
    if k == "maxpool":
        return maxpool_backward(cache, upstream)
    if k == "dropout":
        return dropout_backward(cache, upstream)
    if k == "dense":
        return dense_backward(params, cache, upstream)
    if k == "relu":
        return relu_backward(cache, upstream)
    if k == "flatten":
        return flatten_backward(cache, upstream)
    if k == "softmax":
        return softmax_backward(cache, upstream)
    raise InvalidParameterError(f"unknown layer kind {k!r}")
