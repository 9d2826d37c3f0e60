"""Dense numeric arrays and the primitive kernels every layer builds on.

Tensors are plain numpy ndarrays in row-major (C) order.  float32 is the
production dtype; the same kernels run in float64 for the finite-difference
gradient checks, so nothing here hard-codes precision.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidParameterError, InvalidShapeError
from .rng import Rng

DTYPE = np.float32


def check_shape(shape) -> tuple[int, ...]:
    """Validate a dimension list: every entry a positive integer."""
    dims = tuple(shape)
    if not dims:
        raise InvalidShapeError("shape must have at least one dimension")
    for d in dims:
        if int(d) != d or d < 1:
            raise InvalidShapeError(f"invalid dimension {d!r} in shape {dims}")
    return tuple(int(d) for d in dims)


def zeros(shape, dtype=DTYPE) -> np.ndarray:
    return np.zeros(check_shape(shape), dtype=dtype)


def constant(shape, value: float, dtype=DTYPE) -> np.ndarray:
    return np.full(check_shape(shape), value, dtype=dtype)


def he_normal(shape, fan_in: int, rng: Rng, dtype=DTYPE) -> np.ndarray:
    """Draw from normal(0, sqrt(2 / fan_in)); standard init for ReLU nets."""
    dims = check_shape(shape)
    if fan_in < 1:
        raise InvalidParameterError(f"fan_in must be >= 1, got {fan_in}")
    std = np.sqrt(2.0 / fan_in)
    return (rng.normal(dims) * std).astype(dtype)


def uniform(shape, lo: float, hi: float, rng: Rng, dtype=DTYPE) -> np.ndarray:
    dims = check_shape(shape)
    if not hi > lo:
        raise InvalidParameterError(f"need hi > lo, got [{lo}, {hi})")
    return rng.uniform(lo, hi, dims).astype(dtype)


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Standard 2-D matrix product with explicit shape checking."""
    if a.ndim != 2 or b.ndim != 2:
        raise InvalidShapeError(f"matmul needs 2-D operands, got {a.shape} x {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise InvalidShapeError(f"inner dimensions differ: {a.shape} x {b.shape}")
    return a @ b


def relu(x: np.ndarray) -> np.ndarray:
    """Elementwise max(0, x)."""
    return np.maximum(x, 0)


def argmax(x: np.ndarray) -> int:
    """Index of the maximum of a vector; ties break to the lowest index."""
    if x.ndim != 1 or x.shape[0] < 1:
        raise InvalidShapeError(f"argmax needs a non-empty vector, got shape {x.shape}")
    return int(np.argmax(x))
