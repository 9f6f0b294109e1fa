"""Independent brute-force reference implementations for the tests.

Everything here is written as plain scalar loops against the documented
conventions, deliberately sharing no code with the package internals.
"""

from __future__ import annotations

import math

import numpy as np


def keys_cubic(t: float) -> float:
    a = -0.5
    t = abs(t)
    if t <= 1.0:
        return (a + 2.0) * t ** 3 - (a + 3.0) * t ** 2 + 1.0
    if t < 2.0:
        return a * t ** 3 - 5.0 * a * t ** 2 + 8.0 * a * t - 4.0 * a
    return 0.0


def tent(t: float) -> float:
    return max(0.0, 1.0 - abs(t))


def box(t: float) -> float:
    return 1.0 if -0.5 < t <= 0.5 else 0.0


def lanczos3(t: float) -> float:
    t = abs(t)
    if t >= 3.0:
        return 0.0
    if t < 1e-12:
        return 1.0
    return 3.0 * math.sin(math.pi * t) * math.sin(math.pi * t / 3.0) / (math.pi * t) ** 2


KERNELS = {
    "nearest": (box, 0.5),
    "bilinear": (tent, 1.0),
    "bicubic": (keys_cubic, 2.0),
    "lanczos3": (lanczos3, 3.0),
}


def resize_reference(img: np.ndarray, out_h: int, out_w: int,
                     kernel: str = "bicubic", antialias: bool = True) -> np.ndarray:
    """Direct per-pixel convolution with center alignment and replicate edges."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 2:
        img = img[:, :, None]
    in_h, in_w, chans = img.shape
    fn, support = KERNELS[kernel]

    def axis_samples(n_in, n_out, pos):
        ratio = n_in / n_out
        widen = max(ratio, 1.0) if antialias else 1.0
        x = (pos + 0.5) * ratio - 0.5
        half = support * widen
        lo = int(math.floor(x - half)) - 1
        hi = int(math.ceil(x + half)) + 1
        idx, wts = [], []
        for j in range(lo, hi + 1):
            w = fn((j - x) / widen)
            if w != 0.0:
                idx.append(min(max(j, 0), n_in - 1))
                wts.append(w)
        total = sum(wts)
        return idx, [w / total for w in wts]

    out = np.zeros((out_h, out_w, chans))
    for i in range(out_h):
        rows, row_w = axis_samples(in_h, out_h, i)
        for j in range(out_w):
            cols, col_w = axis_samples(in_w, out_w, j)
            for c in range(chans):
                acc = 0.0
                for r, wr in zip(rows, row_w):
                    for s, ws in zip(cols, col_w):
                        acc += wr * ws * img[r, s, c]
                out[i, j, c] = acc
    return out


def mse_reference(a: np.ndarray, b: np.ndarray) -> float:
    """Clamped brute-force mean squared error."""
    a = np.clip(np.asarray(a, dtype=np.float64), 0.0, 1.0).ravel()
    b = np.clip(np.asarray(b, dtype=np.float64), 0.0, 1.0).ravel()
    total = math.fsum((x - y) ** 2 for x, y in zip(a, b))
    return total / a.size


def psnr_reference(a: np.ndarray, b: np.ndarray) -> float:
    mse = mse_reference(a, b)
    return math.inf if mse == 0.0 else 10.0 * math.log10(1.0 / mse)


def gaussian_window_reference(size: int = 11, sigma: float = 1.5) -> np.ndarray:
    half = (size - 1) / 2.0
    win = np.empty((size, size))
    for i in range(size):
        for j in range(size):
            dy, dx = i - half, j - half
            win[i, j] = math.exp(-(dy * dy + dx * dx) / (2.0 * sigma * sigma))
    return win / win.sum()


def ssim_reference(x: np.ndarray, y: np.ndarray,
                   k1: float = 0.01, k2: float = 0.03) -> float:
    """Windowed SSIM computed window by window with explicit loops."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim == 2:
        x = x[:, :, None]
        y = y[:, :, None]
    win = gaussian_window_reference()
    size = win.shape[0]
    c1, c2 = k1 * k1, k2 * k2
    h, w, chans = x.shape
    channel_means = []
    for c in range(chans):
        vals = []
        for i in range(h - size + 1):
            for j in range(w - size + 1):
                p = x[i:i + size, j:j + size, c]
                q = y[i:i + size, j:j + size, c]
                mu_p = float((win * p).sum())
                mu_q = float((win * q).sum())
                var_p = float((win * p * p).sum()) - mu_p * mu_p
                var_q = float((win * q * q).sum()) - mu_q * mu_q
                cov = float((win * p * q).sum()) - mu_p * mu_q
                vals.append(((2 * mu_p * mu_q + c1) * (2 * cov + c2))
                            / ((mu_p ** 2 + mu_q ** 2 + c1) * (var_p + var_q + c2)))
        channel_means.append(sum(vals) / len(vals))
    return sum(channel_means) / len(channel_means)
