"""Everything between image files on disk and training batches.

Images are 8-bit RGB rasters in HWC order.  The pipeline is decode ->
resize (corner-aligned bilinear) -> optional augmentation -> normalize to
[0, 1] -> batch with one-hot labels.  All randomness flows through
:class:`bdcd.rng.Rng`; each image's augmentation generator is derived from
(seed, epoch, image index) so the draw schedule is independent of batch
order.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Optional, Sequence

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import EmptyDatasetError, InvalidParameterError, InvalidShapeError
from .rng import Rng, STREAM_AUGMENT, STREAM_SHUFFLE

log = logging.getLogger("bdcd.data")

# Banknote denominations (BDT), ascending; folder names double as labels.
CLASS_NAMES: tuple[str, ...] = ("1", "2", "5", "10", "20", "50", "100", "200", "500", "1000")

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")


@dataclass
class LabeledImage:
    pixels: np.ndarray          # uint8 HxWx3
    label: int                  # index into the class vocabulary
    source: str = ""


@dataclass
class AugmentConfig:
    """Random transform magnitudes; a zeroed config is the identity."""
    rotate: bool = True
    rotate_max_deg: float = 15.0
    hflip_p: float = 0.5
    vflip_p: float = 0.5
    scale: bool = True
    scale_lo: float = 0.9
    scale_hi: float = 1.1
    translate: bool = True
    translate_max_frac: float = 0.1

    def __post_init__(self):
        if not (0.0 <= self.hflip_p <= 1.0 and 0.0 <= self.vflip_p <= 1.0):
            raise InvalidParameterError("flip probabilities must be in [0, 1]")
        if self.rotate_max_deg < 0 or self.translate_max_frac < 0:
            raise InvalidParameterError("degree/fraction bounds must be >= 0")
        if self.scale and not 0 < self.scale_lo <= self.scale_hi:
            raise InvalidParameterError("need 0 < scale_lo <= scale_hi")

    @classmethod
    def disabled(cls) -> "AugmentConfig":
        return cls(rotate=False, rotate_max_deg=0.0, hflip_p=0.0, vflip_p=0.0,
                   scale=False, translate=False, translate_max_frac=0.0)


def _check_raster(px: np.ndarray) -> np.ndarray:
    if px.ndim != 3 or px.shape[2] != 3:
        raise InvalidShapeError(f"expected HxWx3 raster, got shape {px.shape}")
    return px


def load_labeled_dataset(root, vocab: Sequence[str] = CLASS_NAMES) -> list[LabeledImage]:
    """Decode every PNG/JPEG under ``root/<class-name>/`` into LabeledImages.

    Undecodable images are skipped with a warning; files without an image
    suffix are ignored.  Result is sorted by source path.
    """
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"dataset root not found: {root}")
    items: list[LabeledImage] = []
    for label, name in enumerate(vocab):
        class_dir = root / name
        if not class_dir.is_dir():
            continue
        for path in sorted(class_dir.iterdir()):
            if path.suffix.lower() not in IMAGE_SUFFIXES or not path.is_file():
                continue
            try:
                with Image.open(path) as im:
                    px = np.asarray(im.convert("RGB"), dtype=np.uint8)
            except (UnidentifiedImageError, OSError) as exc:
                log.warning("skipping undecodable image %s: %s", path, exc)
                continue
            items.append(LabeledImage(px, label, str(path)))
    if not items:
        raise EmptyDatasetError(f"no decodable images under {root}")
    items.sort(key=lambda item: item.source)
    return items


# --- geometry -----------------------------------------------------------------

def resize_raster(px: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Corner-aligned bilinear resample of a uint8 HxWx3 raster."""
    _check_raster(px)
    h, w = px.shape[:2]
    if (h, w) == (out_h, out_w):
        return px.copy()
    ys = np.linspace(0.0, h - 1.0, out_h) if out_h > 1 else np.zeros(1)
    xs = np.linspace(0.0, w - 1.0, out_w) if out_w > 1 else np.zeros(1)
    y0 = np.floor(ys).astype(np.intp)
    x0 = np.floor(xs).astype(np.intp)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    wy = (ys - y0)[:, None, None]
    wx = (xs - x0)[None, :, None]
    p = px.astype(np.float64)
    top = p[y0][:, x0] * (1.0 - wx) + p[y0][:, x1] * wx
    bot = p[y1][:, x0] * (1.0 - wx) + p[y1][:, x1] * wx
    out = top * (1.0 - wy) + bot * wy
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


def resize_bilinear(img: LabeledImage, size: int = 256) -> LabeledImage:
    return LabeledImage(resize_raster(img.pixels, size, size), img.label, img.source)


def normalize(img: LabeledImage | np.ndarray, size: Optional[int] = None) -> np.ndarray:
    """Scale 8-bit channels to [0, 1] float32."""
    px = _check_raster(img.pixels if isinstance(img, LabeledImage) else img)
    if size is not None and px.shape[:2] != (size, size):
        raise InvalidShapeError(f"expected {size}x{size}x3, got {px.shape}")
    return px.astype(np.float32) / np.float32(255.0)


def _affine_sample(px: np.ndarray, matrix: np.ndarray) -> np.ndarray:
    """Map output pixels through ``matrix`` (output -> source), bilinear,
    clamping source coordinates to the image so edges replicate outward."""
    h, w = px.shape[:2]
    yy, xx = np.mgrid[0:h, 0:w]
    sx = matrix[0, 0] * xx + matrix[0, 1] * yy + matrix[0, 2]
    sy = matrix[1, 0] * xx + matrix[1, 1] * yy + matrix[1, 2]
    return sample_bilinear_clamped(px, sx, sy)


def sample_bilinear_clamped(px: np.ndarray, sx: np.ndarray, sy: np.ndarray) -> np.ndarray:
    """Bilinear lookup of float source coords with clamp-to-edge fill."""
    h, w = px.shape[:2]
    sx = np.clip(sx, 0.0, w - 1.0)
    sy = np.clip(sy, 0.0, h - 1.0)
    x0 = np.floor(sx).astype(np.intp)
    y0 = np.floor(sy).astype(np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = (sx - x0)[..., None]
    fy = (sy - y0)[..., None]
    p = px.astype(np.float64)
    top = p[y0, x0] * (1.0 - fx) + p[y0, x1] * fx
    bot = p[y1, x0] * (1.0 - fx) + p[y1, x1] * fx
    out = top * (1.0 - fy) + bot * fy
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


def _center_matrix(h: int, w: int, core: np.ndarray) -> np.ndarray:
    """Conjugate a 3x3 point transform with translation to the image center."""
    cx, cy = (w - 1) / 2.0, (h - 1) / 2.0
    to_origin = np.array([[1, 0, -cx], [0, 1, -cy], [0, 0, 1]], dtype=np.float64)
    back = np.array([[1, 0, cx], [0, 1, cy], [0, 0, 1]], dtype=np.float64)
    return back @ core @ to_origin


def augment(img: LabeledImage, cfg: AugmentConfig, rng: Rng) -> LabeledImage:
    """Random rotate -> flip -> scale -> translate; label and shape unchanged.

    The sampled transforms compose into a single affine map so the image is
    resampled once, with edge-replicate fill.
    """
    px = _check_raster(img.pixels)
    h, w = px.shape[:2]
    forward = np.eye(3)

    if cfg.rotate and cfg.rotate_max_deg > 0:
        ang = np.deg2rad(rng.uniform(-cfg.rotate_max_deg, cfg.rotate_max_deg))
        c, s = np.cos(ang), np.sin(ang)
        rot = np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]])
        forward = _center_matrix(h, w, rot) @ forward
    if cfg.hflip_p > 0 and rng.random() < cfg.hflip_p:
        flip = np.diag([-1.0, 1.0, 1.0])
        forward = _center_matrix(h, w, flip) @ forward
    if cfg.vflip_p > 0 and rng.random() < cfg.vflip_p:
        flip = np.diag([1.0, -1.0, 1.0])
        forward = _center_matrix(h, w, flip) @ forward
    if cfg.scale:
        factor = rng.uniform(cfg.scale_lo, cfg.scale_hi)
        forward = _center_matrix(h, w, np.diag([factor, factor, 1.0])) @ forward
    if cfg.translate and cfg.translate_max_frac > 0:
        dx = rng.uniform(-cfg.translate_max_frac, cfg.translate_max_frac) * w
        dy = rng.uniform(-cfg.translate_max_frac, cfg.translate_max_frac) * h
        shift = np.array([[1, 0, dx], [0, 1, dy], [0, 0, 1.0]])
        forward = shift @ forward

    if np.array_equal(forward, np.eye(3)):
        return LabeledImage(px.copy(), img.label, img.source)
    inverse = np.linalg.inv(forward)
    return LabeledImage(_affine_sample(px, inverse), img.label, img.source)


# --- splitting and batching ----------------------------------------------------

def split_dataset(items: Sequence[LabeledImage], ratio: float = 0.8,
                  seed: int = 0) -> tuple[list[LabeledImage], list[LabeledImage]]:
    """Stratified shuffle split: per class, first floor(ratio*n) go to train."""
    if not items:
        raise EmptyDatasetError("cannot split an empty dataset")
    if not 0.0 < ratio < 1.0:
        raise InvalidParameterError(f"split ratio must be in (0, 1), got {ratio}")
    by_class: dict[int, list[LabeledImage]] = {}
    for item in items:
        by_class.setdefault(item.label, []).append(item)
    train: list[LabeledImage] = []
    val: list[LabeledImage] = []
    base = Rng(seed)
    for label in sorted(by_class):
        group = sorted(by_class[label], key=lambda it: it.source)
        perm = base.derive(STREAM_SHUFFLE, label).permutation(len(group))
        cut = int(ratio * len(group) + 1e-9)  # guard floor against float dust
        train.extend(group[i] for i in perm[:cut])
        val.extend(group[i] for i in perm[cut:])
    return train, val


def one_hot(labels: np.ndarray, num_classes: int) -> np.ndarray:
    out = np.zeros((len(labels), num_classes), dtype=np.float32)
    out[np.arange(len(labels)), labels] = 1.0
    return out


def batch_iter(items: Sequence[LabeledImage], batch_size: int, rng: Rng, *,
               num_classes: int = len(CLASS_NAMES),
               augment_cfg: Optional[AugmentConfig] = None,
               seed: int = 0, epoch: int = 0,
               ) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Shuffled normalized batches of (images [b,S,S,3], one-hot [b,K]).

    The final batch may be short.  When ``augment_cfg`` is given, each
    image is augmented with a generator derived from (seed, epoch, its
    index in ``items``), so results do not depend on batch boundaries.
    """
    if batch_size < 1:
        raise InvalidParameterError(f"batch_size must be >= 1, got {batch_size}")
    order = rng.permutation(len(items))
    base = Rng(seed)
    for start in range(0, len(items), batch_size):
        chunk = order[start:start + batch_size]
        rasters = []
        labels = np.empty(len(chunk), dtype=np.int64)
        for row, idx in enumerate(chunk):
            item = items[idx]
            if augment_cfg is not None:
                item = augment(item, augment_cfg, base.derive(STREAM_AUGMENT, epoch, int(idx)))
            rasters.append(normalize(item))
            labels[row] = item.label
        shapes = {r.shape for r in rasters}
        if len(shapes) > 1:
            raise InvalidShapeError(f"mixed raster shapes in one batch: {sorted(shapes)}")
        yield np.stack(rasters), one_hot(labels, num_classes)
