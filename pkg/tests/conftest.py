import sys
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

sys.path.insert(0, str(Path(__file__).parent))  # for the reference module

from bdcd.data import CLASS_NAMES, LabeledImage
from bdcd.rng import Rng


@pytest.fixture
def rng():
    return Rng(1234)


def make_raster(h=8, w=8, value=128, seed=None):
    if seed is None:
        return np.full((h, w, 3), value, dtype=np.uint8)
    gen = np.random.default_rng(seed)
    return gen.integers(0, 256, size=(h, w, 3), dtype=np.uint8).astype(np.uint8)


def write_png(path, raster):
    Image.fromarray(raster).save(path, format="PNG")


@pytest.fixture
def dataset_tree(tmp_path):
    """10 class folders x 2 images each, tiny but decodable."""
    root = tmp_path / "data"
    for label, name in enumerate(CLASS_NAMES):
        d = root / name
        d.mkdir(parents=True)
        for k in range(2):
            write_png(d / f"img_{k}.png", make_raster(12, 12, seed=label * 10 + k))
    return root


def make_items(labels, size=8):
    """LabeledImages with distinct deterministic rasters."""
    return [LabeledImage(make_raster(size, size, seed=i), label, f"mem://{i:05d}")
            for i, label in enumerate(labels)]
