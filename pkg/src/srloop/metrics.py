"""Image quality metrics and difference-image diagnostics.

PSNR and SSIM are computed on full RGB (or gray) floats in [0, 1]; no
Y-channel conversion and no 8-bit quantization happen before measuring.
A ``luma`` flag is exposed for cross-comparison with pipelines that
measure on the Y channel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import convolve2d

from .image import ImageBuffer

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03

# ITU-R BT.601 luma weights, only used behind the luma flag
_LUMA = np.array([0.299, 0.587, 0.114])


def _check_dims(x: ImageBuffer, ref: ImageBuffer) -> None:
    if x.data.shape != ref.data.shape:
        raise ValueError(f"dimension mismatch: {x.data.shape} vs {ref.data.shape}")


def _planes(img: ImageBuffer, luma: bool) -> np.ndarray:
    if luma and img.channels == 3:
        return (img.data @ _LUMA)[:, :, np.newaxis]
    return img.data


def psnr(x: ImageBuffer, ref: ImageBuffer, luma: bool = False) -> float:
    """10*log10(1/MSE) in dB over all samples, data range 1; inf when equal.

    Both images are clamped to [0, 1] before comparison.
    """
    _check_dims(x, ref)
    a = np.clip(_planes(x, luma), 0.0, 1.0)
    b = np.clip(_planes(ref, luma), 0.0, 1.0)
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


def _gaussian_window() -> np.ndarray:
    half = (SSIM_WINDOW - 1) / 2.0
    t = np.arange(SSIM_WINDOW, dtype=np.float64) - half
    g = np.exp(-(t * t) / (2.0 * SSIM_SIGMA * SSIM_SIGMA))
    win = np.outer(g, g)
    return win / win.sum()


_SSIM_WIN = _gaussian_window()


def ssim(x: ImageBuffer, ref: ImageBuffer, luma: bool = False) -> float:
    """Single-scale SSIM, mean over channels.

    Gaussian-weighted local statistics (11x11 window, sigma 1.5,
    K1=0.01, K2=0.03, L=1), computed only where the full window fits
    (5-pixel border cropped). Images smaller than the window are
    rejected.
    """
    _check_dims(x, ref)
    if min(x.height, x.width) < SSIM_WINDOW:
        raise ValueError(
            f"image {x.height}x{x.width} smaller than {SSIM_WINDOW}x{SSIM_WINDOW} SSIM window")
    a = _planes(x, luma)
    b = _planes(ref, luma)
    c1 = SSIM_K1 * SSIM_K1
    c2 = SSIM_K2 * SSIM_K2
    win = _SSIM_WIN

    per_channel = []
    for c in range(a.shape[2]):
        p = a[:, :, c]
        q = b[:, :, c]
        mu_p = convolve2d(p, win, mode="valid")
        mu_q = convolve2d(q, win, mode="valid")
        var_p = convolve2d(p * p, win, mode="valid") - mu_p * mu_p
        var_q = convolve2d(q * q, win, mode="valid") - mu_q * mu_q
        cov = convolve2d(p * q, win, mode="valid") - mu_p * mu_q
        num = (2.0 * mu_p * mu_q + c1) * (2.0 * cov + c2)
        den = (mu_p * mu_p + mu_q * mu_q + c1) * (var_p + var_q + c2)
        per_channel.append(float(np.mean(num / den)))
    return float(np.mean(per_channel))


def diff_first(a1: ImageBuffer, a2: ImageBuffer) -> ImageBuffer:
    """Elementwise absolute difference |a1 - a2|."""
    _check_dims(a1, a2)
    return ImageBuffer(np.abs(a1.data - a2.data))


def diff_second_logical(aa1: ImageBuffer, aa2: ImageBuffer) -> ImageBuffer:
    """Positive part of (aa1 - aa2): aa1 - aa2 where aa1 > aa2, else 0.

    Fed with the two methods' first-order difference images, the result
    highlights the pixels where the first method errs more.
    """
    _check_dims(aa1, aa2)
    return ImageBuffer(np.maximum(aa1.data - aa2.data, 0.0))


@dataclass(frozen=True)
class MetricRow:
    """Per-image open/closed metric pair at one scale."""

    image_id: str
    scale: float
    psnr_o: float
    psnr_c: float
    ssim_o: float
    ssim_c: float

    @property
    def dpsnr(self) -> float:
        return _increment(self.psnr_c, self.psnr_o)

    @property
    def dssim(self) -> float:
        return _increment(self.ssim_c, self.ssim_o)


def _increment(closed: float, open_: float) -> float:
    # inf - inf (both sides perfect) counts as no change
    if math.isinf(closed) and math.isinf(open_):
        return 0.0
    return closed - open_


@dataclass(frozen=True)
class Aggregate:
    """Column means plus mean/max increments over a row set."""

    count: int
    psnr_o: float
    psnr_c: float
    dpsnr_a: float
    dpsnr_m: float
    ssim_o: float
    ssim_c: float
    dssim_a: float
    dssim_m: float


def aggregate(rows: list[MetricRow]) -> Aggregate:
    """Aggregate per-image rows: column means, mean and max increments.

    The mean increment equals the difference of the column means, so
    ``dpsnr_a == psnr_c - psnr_o`` whenever no infinities are involved.
    """
    if not rows:
        raise ValueError("cannot aggregate an empty row set")
    dpsnrs = [r.dpsnr for r in rows]
    dssims = [r.dssim for r in rows]
    return Aggregate(
        count=len(rows),
        psnr_o=_mean([r.psnr_o for r in rows]),
        psnr_c=_mean([r.psnr_c for r in rows]),
        dpsnr_a=_mean(dpsnrs),
        dpsnr_m=max(dpsnrs),
        ssim_o=_mean([r.ssim_o for r in rows]),
        ssim_c=_mean([r.ssim_c for r in rows]),
        dssim_a=_mean(dssims),
        dssim_m=max(dssims),
    )


def _mean(values: list[float]) -> float:
    return math.fsum(values) / len(values) if all(map(math.isfinite, values)) \
        else float(np.mean(values))
