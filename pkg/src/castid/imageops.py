"""Raster augmentation applied to actor images before embedding extraction.

Images are float arrays of shape (height, width, channels) with values in
[0, 1], channels 1 or 3.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AlreadyGray, BadLimits, ParseError

# ITU-R BT.601 luma weights
_LUMA = np.array([0.299, 0.587, 0.114])


@dataclass(frozen=True)
class RasterImage:
    pixels: np.ndarray  # height x width x channels, float64 in [0,1]

    def __post_init__(self):
        p = self.pixels
        if p.ndim != 3 or p.shape[2] not in (1, 3):
            raise ParseError(f"bad image shape {p.shape}")
        if p.shape[0] < 1 or p.shape[1] < 1:
            raise ParseError("image dimensions must be positive")
        if p.size and (p.min() < 0.0 or p.max() > 1.0):
            raise ParseError("pixel values must lie in [0,1]")

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> int:
        return self.pixels.shape[2]


def contrast_stretch(img: RasterImage, lo: float, hi: float) -> RasterImage:
    """Linearly map each channel's [min, max] onto [lo, hi].

    Constant-valued channels map to the midpoint (lo+hi)/2.
    """
    if not (0.0 <= lo < hi <= 1.0):
        raise BadLimits(f"need 0 <= lo < hi <= 1, got ({lo}, {hi})")
    out = np.empty_like(img.pixels)
    for c in range(img.channels):
        chan = img.pixels[:, :, c]
        mn, mx = chan.min(), chan.max()
        if mx - mn == 0.0:
            out[:, :, c] = (lo + hi) / 2.0
        else:
            out[:, :, c] = lo + (chan - mn) * (hi - lo) / (mx - mn)
    return RasterImage(np.clip(out, 0.0, 1.0))


def _catmull_rom(t: np.ndarray) -> np.ndarray:
    """Catmull-Rom cubic kernel (a = -0.5) evaluated at |t|."""
    a = -0.5
    t = np.abs(t)
    t2, t3 = t * t, t * t * t
    near = (a + 2) * t3 - (a + 3) * t2 + 1
    far = a * t3 - 5 * a * t2 + 8 * a * t - 4 * a
    return np.where(t <= 1, near, np.where(t < 2, far, 0.0))


def _resample_axis(values: np.ndarray, out_n: int, axis: int) -> np.ndarray:
    in_n = values.shape[axis]
    scale = in_n / out_n
    # half-pixel-centre mapping: dst j samples src at (j + 0.5)*scale - 0.5
    src = (np.arange(out_n) + 0.5) * scale - 0.5
    base = np.floor(src).astype(int)
    frac = src - base
    moved = np.moveaxis(values, axis, 0)
    acc = np.zeros((out_n,) + moved.shape[1:])
    for k in range(-1, 3):
        idx = np.clip(base + k, 0, in_n - 1)
        w = _catmull_rom(frac - k)
        acc += w.reshape((-1,) + (1,) * (moved.ndim - 1)) * moved[idx]
    return np.moveaxis(acc, 0, axis)


def bicubic_resize(img: RasterImage, out_w: int, out_h: int) -> RasterImage:
    """Separable Catmull-Rom resize with edge clamping; output clipped to [0,1]."""
    if out_w < 1 or out_h < 1:
        raise ParseError("output dimensions must be positive")
    out = _resample_axis(img.pixels, out_h, axis=0)
    out = _resample_axis(out, out_w, axis=1)
    return RasterImage(np.clip(out, 0.0, 1.0))


def horizontal_flip(img: RasterImage) -> RasterImage:
    return RasterImage(img.pixels[:, ::-1, :].copy())


def to_grayscale(img: RasterImage) -> RasterImage:
    if img.channels == 1:
        raise AlreadyGray("image already single-channel")
    luma = img.pixels @ _LUMA
    return RasterImage(np.clip(luma, 0.0, 1.0)[:, :, np.newaxis])


def augment_set(images: list[RasterImage], grayscale: bool = False) -> list[RasterImage]:
    """originals ++ contrast-stretched(0.4, 1.0) ++ half-res ++ flipped.

    Output is 4x the input size; with grayscale set, every output is
    single-channel.
    """
    if grayscale:
        images = [to_grayscale(i) if i.channels == 3 else i for i in images]
    stretched = [contrast_stretch(i, 0.4, 1.0) for i in images]
    halved = [bicubic_resize(i, max(1, i.width // 2), max(1, i.height // 2))
              for i in images]
    flipped = [horizontal_flip(i) for i in images]
    return images + stretched + halved + flipped
