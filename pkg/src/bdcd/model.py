"""Model assembly, forward pass, and single-image prediction.

The default architecture is four conv(3x3, same)+relu+maxpool stages with
32/64/128/128 filters, then flatten, dense 256 + relu + dropout 0.5, and a
dense softmax head over the ten denominations.  The filter/width choices
are recorded in ``ModelSpec.arch`` so alternates stay comparable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

import numpy as np

from . import layers, tensor
from .data import CLASS_NAMES, LabeledImage, normalize, resize_raster
from .errors import InvalidParameterError, InvalidShapeError
from .layers import LayerParams
from .rng import Rng

CONV_FILTERS = (32, 64, 128, 128)
DENSE_WIDTH = 256
DROPOUT_RATE = 0.5


@dataclass
class ModelSpec:
    layers: list[LayerParams]
    input_shape: tuple[int, int, int]        # (H, W, C)
    class_labels: tuple[str, ...]
    arch: str = ""


@dataclass
class Prediction:
    label: str
    confidence: float
    probabilities: np.ndarray                # float32 [K]


def build_model(vocab: Sequence[str] = CLASS_NAMES, image_size: int = 256,
                seed: int = 0) -> ModelSpec:
    """Default architecture with He-normal weights and zero biases."""
    stages = len(CONV_FILTERS)
    if image_size % (2 ** stages) != 0 or image_size < 2 ** stages:
        raise InvalidParameterError(
            f"image_size must be a positive multiple of {2 ** stages}, got {image_size}")
    rng = Rng(seed)
    spec: list[LayerParams] = []
    c_in = 3
    for filters in CONV_FILTERS:
        w = tensor.he_normal((3, 3, c_in, filters), fan_in=3 * 3 * c_in, rng=rng)
        spec.append(layers.conv2d(w, tensor.zeros((filters,))))
        spec.append(layers.relu_layer())
        spec.append(layers.maxpool())
        c_in = filters
    feat = (image_size // 2 ** stages) ** 2 * CONV_FILTERS[-1]
    spec.append(layers.flatten_layer())
    w1 = tensor.he_normal((feat, DENSE_WIDTH), fan_in=feat, rng=rng)
    spec.append(layers.dense(w1, tensor.zeros((DENSE_WIDTH,))))
    spec.append(layers.relu_layer())
    spec.append(layers.dropout(DROPOUT_RATE))
    w2 = tensor.he_normal((DENSE_WIDTH, len(vocab)), fan_in=DENSE_WIDTH, rng=rng)
    spec.append(layers.dense(w2, tensor.zeros((len(vocab),))))
    spec.append(layers.softmax_layer())
    arch = "conv" + "-".join(str(f) for f in CONV_FILTERS) + \
        f"-dense{DENSE_WIDTH}-drop{DROPOUT_RATE}-dense{len(vocab)}"
    return ModelSpec(spec, (image_size, image_size, 3), tuple(vocab), arch)


def model_forward(model: ModelSpec, x: np.ndarray, mode: str = "eval",
                  rng: Optional[Rng] = None):
    """Run all layers; returns (output, caches). Caches feed layer_backward."""
    caches = []
    for lp in model.layers:
        x, cache = layers.layer_forward(lp, x, mode, rng)
        caches.append(cache)
    return x, caches


def iter_parameters(model: ModelSpec) -> Iterator[tuple[int, str, np.ndarray]]:
    """(layer index, name, array) for every trainable tensor, in layer order."""
    for i, lp in enumerate(model.layers):
        if lp.weights is not None:
            yield i, "weights", lp.weights
        if lp.bias is not None:
            yield i, "bias", lp.bias


def parameter_count(model: ModelSpec) -> int:
    return sum(int(np.prod(p.shape)) for _, _, p in iter_parameters(model))


def _to_raster(image) -> np.ndarray:
    if isinstance(image, LabeledImage):
        return image.pixels
    return np.asarray(image)


def predict(model: ModelSpec, image) -> Prediction:
    """Resize -> normalize -> eval-mode forward -> argmax prediction."""
    px = _to_raster(image)
    if px.ndim != 3 or px.shape[2] != 3:
        raise InvalidShapeError(f"expected HxWx3 raster, got shape {px.shape}")
    h, w, _ = model.input_shape
    if px.shape[:2] != (h, w):
        px = resize_raster(px, h, w)
    batch = normalize(px)[None, ...]
    probs, _ = model_forward(model, batch, mode="eval")
    row = probs[0]
    idx = tensor.argmax(row)
    return Prediction(model.class_labels[idx], float(row[idx]), row)


def forward_dataset(model: ModelSpec, items: Sequence[LabeledImage],
                    batch_size: int = 32) -> tuple[np.ndarray, np.ndarray]:
    """Eval-mode class probabilities for every item, preserving order."""
    probs_out = []
    labels = np.array([it.label for it in items], dtype=np.int64)
    for start in range(0, len(items), batch_size):
        chunk = items[start:start + batch_size]
        x = np.stack([normalize(it) for it in chunk])
        probs, _ = model_forward(model, x, mode="eval")
        probs_out.append(probs)
    return np.concatenate(probs_out, axis=0), labels
