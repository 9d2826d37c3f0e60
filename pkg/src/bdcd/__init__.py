"""Banknote denomination classification: from-scratch CNN training and inference."""

__version__ = "0.1.0"

from .data import (AugmentConfig, CLASS_NAMES, LabeledImage, augment, batch_iter,
                   load_labeled_dataset, normalize, resize_bilinear, split_dataset)
from .metrics import EvalReport, classification_report, evaluate, export_curves
from .model import ModelSpec, Prediction, build_model, predict
from .modelfile import load_model, model_info, save_model
from .rng import Rng
from .synth import synth_generate
from .train import EpochMetrics, TrainConfig, train

__all__ = [
    "AugmentConfig", "CLASS_NAMES", "EpochMetrics", "EvalReport", "LabeledImage",
    "ModelSpec", "Prediction", "Rng", "TrainConfig", "augment", "batch_iter",
    "build_model", "classification_report", "evaluate", "export_curves",
    "load_labeled_dataset", "load_model", "model_info", "normalize", "predict",
    "resize_bilinear", "save_model", "split_dataset", "synth_generate", "train",
]
