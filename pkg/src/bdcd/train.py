"""Training loop with per-epoch accuracy/loss logging.

Train accuracy and loss are running averages over the batches of the epoch
(accumulated while weights keep updating), which is why early-epoch train
accuracy can sit below validation accuracy.  Validation is a full eval-mode
pass after each epoch.  Runs are bitwise-reproducible for a fixed seed in
single-threaded mode; all shuffle/dropout/augmentation draws come from
generators derived from (seed, purpose, epoch).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .data import AugmentConfig, LabeledImage, batch_iter, resize_raster
from .errors import EmptyDatasetError, InvalidParameterError
from .layers import layer_backward
from .model import ModelSpec, forward_dataset, iter_parameters, model_forward
from .optim import AdamState, adam_step, categorical_cross_entropy, softmax_ce_grad
from .rng import Rng, STREAM_DROPOUT, STREAM_SHUFFLE


@dataclass
class TrainConfig:
    learning_rate: float = 1e-4
    batch_size: int = 32
    epochs: int = 16
    seed: int = 42
    augment: Optional[AugmentConfig] = None
    early_stop_patience: Optional[int] = None
    image_size: int = 256

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise InvalidParameterError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.batch_size < 1:
            raise InvalidParameterError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.epochs < 0:
            raise InvalidParameterError(f"epochs must be >= 0, got {self.epochs}")


@dataclass
class EpochMetrics:
    epoch: int                # 1-based
    train_accuracy: float
    train_loss: float
    val_accuracy: float
    val_loss: float


def metrics_json_line(m: EpochMetrics) -> str:
    """One JSON log line per epoch, 4-decimal formatting."""
    return (f'{{"epoch":{m.epoch},"train_accuracy":{m.train_accuracy:.4f},'
            f'"train_loss":{m.train_loss:.4f},"val_accuracy":{m.val_accuracy:.4f},'
            f'"val_loss":{m.val_loss:.4f}}}')


def _prepare(items: Sequence[LabeledImage], size: int) -> list[LabeledImage]:
    out = []
    for it in items:
        if it.pixels.shape[:2] != (size, size):
            out.append(LabeledImage(resize_raster(it.pixels, size, size), it.label, it.source))
        else:
            out.append(it)
    return out


def dataset_loss_accuracy(model: ModelSpec, items: Sequence[LabeledImage],
                          batch_size: int = 32) -> tuple[float, float]:
    """Eval-mode mean cross-entropy and accuracy over a dataset."""
    probs, labels = forward_dataset(model, items, batch_size)
    onehot = np.zeros_like(probs)
    onehot[np.arange(len(labels)), labels] = 1.0
    loss = categorical_cross_entropy(probs, onehot)
    acc = float((probs.argmax(axis=1) == labels).mean())
    return loss, acc


def train(model: ModelSpec, train_set: Sequence[LabeledImage],
          val_set: Sequence[LabeledImage], cfg: TrainConfig,
          on_epoch: Optional[Callable[[EpochMetrics], None]] = None,
          ) -> tuple[ModelSpec, list[EpochMetrics]]:
    """Optimize the model in place; returns it plus one metrics row per epoch.

    Early stopping (when ``cfg.early_stop_patience`` is set) ends training
    once validation loss has failed to improve for that many consecutive
    epochs.
    """
    if not train_set or not val_set:
        raise EmptyDatasetError("train and validation sets must be nonempty")
    if model.layers[-1].kind != "softmax":
        raise InvalidParameterError("model must end in a softmax layer")

    train_items = _prepare(train_set, cfg.image_size)
    val_items = _prepare(val_set, cfg.image_size)
    num_classes = len(model.class_labels)
    params = list(iter_parameters(model))
    states = [AdamState.for_param(p) for _, _, p in params]
    grads_slot: list[Optional[dict]] = [None] * len(model.layers)

    metrics: list[EpochMetrics] = []
    best_val = np.inf
    stale = 0
    for epoch in range(1, cfg.epochs + 1):
        shuffle_rng = Rng(cfg.seed).derive(STREAM_SHUFFLE, "epoch", epoch)
        dropout_rng = Rng(cfg.seed).derive(STREAM_DROPOUT, "epoch", epoch)
        seen = 0
        correct = 0
        loss_sum = 0.0
        for x, onehot in batch_iter(train_items, cfg.batch_size, shuffle_rng,
                                    num_classes=num_classes, augment_cfg=cfg.augment,
                                    seed=cfg.seed, epoch=epoch):
            probs, caches = model_forward(model, x, mode="train", rng=dropout_rng)
            n = x.shape[0]
            loss_sum += categorical_cross_entropy(probs, onehot) * n
            correct += int((probs.argmax(axis=1) == onehot.argmax(axis=1)).sum())
            seen += n

            upstream = softmax_ce_grad(probs, onehot)
            for i in range(len(model.layers) - 2, -1, -1):  # softmax folded into the CE grad
                upstream, grads_slot[i] = layer_backward(model.layers[i], caches[i], upstream)
            for (layer_idx, name, param), state in zip(params, states):
                adam_step(param, grads_slot[layer_idx][name], state, cfg.learning_rate)

        val_loss, val_acc = dataset_loss_accuracy(model, val_items, cfg.batch_size)
        m = EpochMetrics(epoch, correct / seen, loss_sum / seen, val_acc, val_loss)
        metrics.append(m)
        if on_epoch is not None:
            on_epoch(m)

        if cfg.early_stop_patience is not None:
            if val_loss < best_val:
                best_val = val_loss
                stale = 0
            else:
                stale += 1
                if stale >= cfg.early_stop_patience:
                    break
    return model, metrics
