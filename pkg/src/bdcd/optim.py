"""Categorical cross-entropy loss and the Adam optimizer.

Loss reduction is the batch mean, so learning-rate semantics stay tied to
the batch size rather than scaling with it.  Adam uses the standard moment
coefficients (0.9 / 0.999) with bias correction and epsilon outside the
square root.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidShapeError

PROB_FLOOR = 1e-12  # clamp before the log so a zero true-class probability stays finite


def categorical_cross_entropy(probs: np.ndarray, onehot: np.ndarray) -> float:
    """Mean over rows of -ln(probability assigned to the true class)."""
    if probs.shape != onehot.shape or probs.ndim != 2:
        raise InvalidShapeError(f"probs {probs.shape} vs onehot {onehot.shape}")
    p_true = (probs * onehot).sum(axis=1)
    return float(-np.log(np.maximum(p_true, PROB_FLOOR)).mean())


def softmax_ce_grad(probs: np.ndarray, onehot: np.ndarray) -> np.ndarray:
    """Gradient of the mean cross-entropy w.r.t. the logits: (p - y) / N."""
    if probs.shape != onehot.shape or probs.ndim != 2:
        raise InvalidShapeError(f"probs {probs.shape} vs onehot {onehot.shape}")
    return (probs - onehot) / probs.dtype.type(probs.shape[0])


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def for_param(cls, param: np.ndarray) -> "AdamState":
        return cls(np.zeros_like(param), np.zeros_like(param))


def adam_step(params: np.ndarray, grads: np.ndarray, state: AdamState,
              lr: float = 1e-4) -> tuple[np.ndarray, AdamState]:
    """One Adam update. Mutates params and state in place and returns them."""
    if params.shape != grads.shape or params.shape != state.m.shape:
        raise InvalidShapeError(
            f"params {params.shape}, grads {grads.shape}, state {state.m.shape}")
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    state.m *= b1
    state.m += (1.0 - b1) * grads
    state.v *= b2
    state.v += (1.0 - b2) * np.square(grads)
    m_hat = state.m / (1.0 - b1 ** state.t)
    v_hat = state.v / (1.0 - b2 ** state.t)
    params -= (lr * m_hat / (np.sqrt(v_hat) + state.epsilon)).astype(params.dtype, copy=False)
    return params, state
