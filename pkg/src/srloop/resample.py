"""Arbitrary-fractional-scale separable resampling.

Conventions (used consistently for LR generation and the in-loop
degradation so the two never disagree):

* pixel-center alignment: ``x_src = (x_dst + 0.5) * (in/out) - 0.5``,
  which makes same-size resizing an exact identity;
* replicate (edge-clamp) boundary handling, so constants are preserved
  exactly;
* on downscale the kernel support is widened by the in/out ratio
  (area-aware anti-aliasing);
* no clamping anywhere: the whole operator is linear, which the gain
  analysis relies on. Overshoot from the cubic/lanczos lobes is kept.

Each axis is reduced to a dense (out x in) weight matrix with rows
normalized to sum to 1, applied per channel. Exact linearity comes for
free from the matrix product.
"""

from __future__ import annotations

import enum
import math
from functools import lru_cache

import numpy as np

from .image import ImageBuffer


class Kernel(str, enum.Enum):
    NEAREST = "nearest"
    BILINEAR = "bilinear"
    BICUBIC = "bicubic"
    LANCZOS3 = "lanczos3"

    @classmethod
    def parse(cls, name: str) -> "Kernel":
        aliases = {"lanczos": cls.LANCZOS3, "linear": cls.BILINEAR, "cubic": cls.BICUBIC}
        name = name.strip().lower()
        if name in aliases:
            return aliases[name]
        try:
            return cls(name)
        except ValueError:
            raise ValueError(f"unknown kernel {name!r} "
                             f"(want one of {[k.value for k in cls]})") from None


def _box(t: np.ndarray) -> np.ndarray:
    # half-open on the left so exact ties round up, matching the
    # round-half-up convention used when quantizing
    return ((t > -0.5) & (t <= 0.5)).astype(np.float64)


def _tent(t: np.ndarray) -> np.ndarray:
    return np.maximum(0.0, 1.0 - np.abs(t))


def _keys_cubic(t: np.ndarray) -> np.ndarray:
    # Keys kernel with a = -0.5
    a = -0.5
    t = np.abs(t)
    t2 = t * t
    t3 = t2 * t
    near = (a + 2.0) * t3 - (a + 3.0) * t2 + 1.0
    far = a * t3 - 5.0 * a * t2 + 8.0 * a * t - 4.0 * a
    return np.where(t <= 1.0, near, np.where(t < 2.0, far, 0.0))


def _lanczos3(t: np.ndarray) -> np.ndarray:
    t = np.abs(t)
    with np.errstate(invalid="ignore", divide="ignore"):
        pt = math.pi * t
        val = 3.0 * np.sin(pt) * np.sin(pt / 3.0) / (pt * pt)
    val = np.where(t < 1e-12, 1.0, val)
    return np.where(t < 3.0, val, 0.0)


_KERNELS = {
    Kernel.NEAREST: (_box, 0.5),
    Kernel.BILINEAR: (_tent, 1.0),
    Kernel.BICUBIC: (_keys_cubic, 2.0),
    Kernel.LANCZOS3: (_lanczos3, 3.0),
}


@lru_cache(maxsize=512)
def axis_weights(n_in: int, n_out: int, kernel: Kernel, antialias: bool) -> np.ndarray:
    """Dense (n_out x n_in) resampling matrix for one axis.

    Rows sum to 1; boundary weights are folded onto the edge samples
    (replicate).
    """
    if n_in == n_out:
        # all kernels interpolate, so same-size mapping is the exact identity;
        # shortcutting avoids sin(pi*n) != 0 noise in the lanczos weights
        eye = np.eye(n_in)
        eye.flags.writeable = False
        return eye
    fn, support = _KERNELS[kernel]
    ratio = n_in / n_out
    widen = max(ratio, 1.0) if antialias else 1.0
    half = support * widen

    x = (np.arange(n_out, dtype=np.float64) + 0.5) * ratio - 0.5
    j_lo = np.floor(x - half).astype(np.int64)
    window = int(np.ceil(2.0 * half)) + 2
    j = j_lo[:, None] + np.arange(window)[None, :]
    w = fn((j - x[:, None]) / widen)

    weights = np.zeros((n_out, n_in), dtype=np.float64)
    j_clipped = np.clip(j, 0, n_in - 1)
    rows = np.repeat(np.arange(n_out), window)
    np.add.at(weights, (rows, j_clipped.ravel()), w.ravel())
    weights /= weights.sum(axis=1, keepdims=True)
    weights.flags.writeable = False
    return weights


def resize(img: ImageBuffer, out_h: int, out_w: int,
           kernel: Kernel = Kernel.BICUBIC, antialias: bool = True) -> ImageBuffer:
    """Resample ``img`` to ``out_h`` x ``out_w`` with the given kernel.

    ``antialias`` only takes effect on axes that shrink.
    """
    if out_h < 1 or out_w < 1:
        raise ValueError(f"output dims must be >= 1, got {out_h}x{out_w}")
    wh = axis_weights(img.height, out_h, kernel, antialias)
    ww = axis_weights(img.width, out_w, kernel, antialias)
    src = img.data
    out = np.empty((out_h, out_w, img.channels), dtype=np.float64)
    for c in range(img.channels):
        out[:, :, c] = wh @ src[:, :, c] @ ww.T
    return ImageBuffer(out)


def degrade(sr: ImageBuffer, lr_h: int, lr_w: int) -> ImageBuffer:
    """Canonical degradation: anti-aliased bicubic downscale to LR dims.

    This single operator is shared by LR generation and the feedback
    loop; it is the identity when the dims already match.
    """
    if lr_h > sr.height or lr_w > sr.width:
        raise ValueError(
            f"degrade target {lr_h}x{lr_w} exceeds source {sr.height}x{sr.width}")
    return resize(sr, lr_h, lr_w, Kernel.BICUBIC, antialias=True)
