"""Synthetic banknote image generator.

Stands in for a real photo corpus at desk scale: each class renders its
denomination numeral in a class-specific hue on a textured background, with
random perspective jitter, wear patches, brightness variation, and sensor
noise.  Output is written as 8-bit RGB PNG in the dataset directory layout
``<out>/<class-name>/<file>.png``.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import numpy as np
from PIL import Image

from .data import CLASS_NAMES, sample_bilinear_clamped
from .errors import InvalidParameterError
from .rng import Rng, STREAM_SYNTH

# 5x7 bitmap glyphs for the denomination numerals.
_GLYPHS = {
    "0": ("01110", "10001", "10011", "10101", "11001", "10001", "01110"),
    "1": ("00100", "01100", "00100", "00100", "00100", "00100", "01110"),
    "2": ("01110", "10001", "00001", "00010", "00100", "01000", "11111"),
    "3": ("11111", "00010", "00100", "00010", "00001", "10001", "01110"),
    "4": ("00010", "00110", "01010", "10010", "11111", "00010", "00010"),
    "5": ("11111", "10000", "11110", "00001", "00001", "10001", "01110"),
    "6": ("00110", "01000", "10000", "11110", "10001", "10001", "01110"),
    "7": ("11111", "00001", "00010", "00100", "01000", "01000", "01000"),
    "8": ("01110", "10001", "10001", "01110", "10001", "10001", "01110"),
    "9": ("01110", "10001", "10001", "01111", "00001", "00010", "01100"),
}


def glyph_mask(text: str, scale: int = 1, spacing: int = 1) -> np.ndarray:
    """Boolean raster of ``text`` built from the 5x7 digit font."""
    if scale < 1:
        raise InvalidParameterError(f"glyph scale must be >= 1, got {scale}")
    cols = []
    for i, ch in enumerate(text):
        if ch not in _GLYPHS:
            raise InvalidParameterError(f"no glyph for character {ch!r}")
        if i:
            cols.append(np.zeros((7, spacing), dtype=bool))
        cols.append(np.array([[c == "1" for c in row] for row in _GLYPHS[ch]], dtype=bool))
    mask = np.hstack(cols)
    return np.kron(mask, np.ones((scale, scale), dtype=bool))


def hsv_to_rgb(h: float, s: float, v: float) -> np.ndarray:
    """HSV (all in [0,1]) to an RGB float array in [0,255]."""
    i = int(h * 6.0) % 6
    f = h * 6.0 - int(h * 6.0)
    p, q, t = v * (1 - s), v * (1 - s * f), v * (1 - s * (1 - f))
    rgb = [(v, t, p), (q, v, p), (p, v, t), (p, q, v), (t, p, v), (v, p, q)][i]
    return np.array(rgb, dtype=np.float64) * 255.0


def _gradient_background(size: int, rng: Rng) -> np.ndarray:
    corners = rng.uniform(25.0, 230.0, (2, 2, 3))
    wy = np.linspace(0.0, 1.0, size)[:, None, None]
    wx = np.linspace(0.0, 1.0, size)[None, :, None]
    top = corners[0, 0] * (1 - wx) + corners[0, 1] * wx
    bot = corners[1, 0] * (1 - wx) + corners[1, 1] * wx
    bg = top * (1 - wy) + bot * wy
    bg += rng.uniform(-12.0, 12.0, bg.shape)
    return bg


def compose_note(class_idx: int, rng: Rng, size: int,
                 vocab: Sequence[str] = CLASS_NAMES) -> np.ndarray:
    """Flat (unwarped) scene: textured background plus the hued note with
    its denomination numeral.  Returns a float64 HxWx3 array in [0,255]."""
    canvas = _gradient_background(size, rng)

    note_w = int(size * rng.uniform(0.70, 0.88))
    note_h = int(note_w * rng.uniform(0.45, 0.62))
    x0 = (size - note_w) // 2
    y0 = (size - note_h) // 2

    hue = (class_idx / len(vocab) + rng.uniform(-0.015, 0.015)) % 1.0
    sat = rng.uniform(0.55, 0.85)
    val = rng.uniform(0.60, 0.95)
    base = hsv_to_rgb(hue, sat, val)

    note = np.empty((note_h, note_w, 3), dtype=np.float64)
    note[:] = base
    # lighter horizontal bands give the note some texture
    bands = 1.0 + 0.08 * np.sin(np.linspace(0.0, 6.0 * np.pi, note_h))[:, None, None]
    note *= bands
    frame = max(2, note_h // 18)
    note[:frame], note[-frame:] = base * 0.55, base * 0.55
    note[:, :frame], note[:, -frame:] = base * 0.55, base * 0.55

    text = vocab[class_idx]
    mask = glyph_mask(text, scale=1)
    scale = max(1, min((note_h // 2) // mask.shape[0], (note_w * 7 // 10) // mask.shape[1]))
    mask = glyph_mask(text, scale=scale)
    ink = np.array([245.0, 245.0, 245.0]) if base.mean() < 140 else base * 0.18
    gy = (note_h - mask.shape[0]) // 2
    gx = (note_w - mask.shape[1]) // 2
    region = note[gy:gy + mask.shape[0], gx:gx + mask.shape[1]]
    region[mask] = ink

    # wear: darkened patches emulating damaged, worn-out notes
    if rng.random() < 0.5:
        for _ in range(1 + int(rng.uniform(0.0, 3.0))):
            ph = max(2, int(note_h * rng.uniform(0.05, 0.2)))
            pw = max(2, int(note_w * rng.uniform(0.05, 0.2)))
            py = int(rng.uniform(0, note_h - ph))
            pxx = int(rng.uniform(0, note_w - pw))
            note[py:py + ph, pxx:pxx + pw] *= rng.uniform(0.35, 0.8)

    canvas[y0:y0 + note_h, x0:x0 + note_w] = note
    return canvas


def _perspective_matrix(src_quad: np.ndarray, dst_quad: np.ndarray) -> np.ndarray:
    """Homography H mapping src points to dst points (4 correspondences)."""
    rows, rhs = [], []
    for (x, y), (u, v) in zip(src_quad, dst_quad):
        rows.append([x, y, 1, 0, 0, 0, -u * x, -u * y])
        rows.append([0, 0, 0, x, y, 1, -v * x, -v * y])
        rhs.extend([u, v])
    coef = np.linalg.solve(np.array(rows, dtype=np.float64), np.array(rhs, dtype=np.float64))
    return np.append(coef, 1.0).reshape(3, 3)


def warp_perspective(px: np.ndarray, matrix: np.ndarray) -> np.ndarray:
    """Inverse-map ``px`` through a homography (output -> source), bilinear."""
    h, w = px.shape[:2]
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    denom = matrix[2, 0] * xx + matrix[2, 1] * yy + matrix[2, 2]
    sx = (matrix[0, 0] * xx + matrix[0, 1] * yy + matrix[0, 2]) / denom
    sy = (matrix[1, 0] * xx + matrix[1, 1] * yy + matrix[1, 2]) / denom
    return sample_bilinear_clamped(px, sx, sy)


def render_note(class_idx: int, rng: Rng, size: int = 128,
                vocab: Sequence[str] = CLASS_NAMES, warp: bool = True) -> np.ndarray:
    """One synthetic sample as a uint8 HxWx3 raster."""
    scene = np.clip(compose_note(class_idx, rng, size, vocab), 0, 255).astype(np.uint8)
    if warp:
        corners = np.array([[0, 0], [size - 1, 0], [size - 1, size - 1], [0, size - 1]],
                           dtype=np.float64)
        jitter = rng.uniform(-0.05 * size, 0.05 * size, (4, 2))
        # output corners move by the jitter; solve output -> source mapping
        matrix = _perspective_matrix(corners + jitter, corners)
        scene = warp_perspective(scene, matrix)
    out = scene.astype(np.float64) * rng.uniform(0.75, 1.15)
    out += rng.normal(out.shape) * rng.uniform(2.0, 7.0)
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


def synth_generate(out_dir, per_class: int, seed: int, size: int = 128,
                   vocab: Sequence[str] = CLASS_NAMES) -> int:
    """Write ``per_class`` PNGs for every class; returns the file count.

    The tree is byte-identical for identical (seed, per_class, size): every
    file gets its own generator derived from (seed, class, index).
    """
    if per_class < 1:
        raise InvalidParameterError(f"per_class must be >= 1, got {per_class}")
    root = Path(out_dir)
    base = Rng(seed)
    count = 0
    for label, name in enumerate(vocab):
        class_dir = root / name
        class_dir.mkdir(parents=True, exist_ok=True)
        for k in range(per_class):
            raster = render_note(label, base.derive(STREAM_SYNTH, label, k), size, vocab)
            Image.fromarray(raster).save(class_dir / f"{name}_{k:04d}.png", format="PNG")
            count += 1
    return count
