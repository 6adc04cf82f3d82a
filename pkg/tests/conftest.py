import numpy as np
import pytest

from triview.raster import GrayImage, RgbImage


def make_textured_gray(width=128, height=128, seed=3):
    """Deterministic urban-like texture: 8px blocks from a wide palette plus grain.

    Passes all three gates under default thresholds and loses its Laplacian
    variance quickly under box blur, which the blur-monotonicity tests rely on.
    """
    rng = np.random.default_rng(seed)
    bw, bh = (width + 7) // 8, (height + 7) // 8
    palette = rng.integers(30, 226, size=(bh, bw))
    img = np.repeat(np.repeat(palette, 8, axis=0), 8, axis=1)[:height, :width]
    img = img + rng.integers(-12, 13, size=(height, width))
    return GrayImage(np.clip(img, 5, 250).astype(np.uint8))


def make_textured_rgb(width=128, height=128, seed=3):
    gray = make_textured_gray(width, height, seed)
    return RgbImage(np.stack([gray.data] * 3, axis=-1))


def constant_gray(value, width=32, height=32):
    return GrayImage(np.full((height, width), value, dtype=np.uint8))


def checkerboard_gray(low, high, size=32):
    parity = np.indices((size, size)).sum(axis=0) % 2
    return GrayImage(np.where(parity == 1, high, low).astype(np.uint8))


def ramp_gray(height=16):
    return GrayImage(np.tile(np.arange(256, dtype=np.uint8), (height, 1)))


@pytest.fixture
def textured_gray():
    return make_textured_gray()


@pytest.fixture
def textured_rgb():
    return make_textured_rgb()
