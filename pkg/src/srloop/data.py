"""Bundled sample images.

Six small RGB test images with natural-image statistics (smooth shading,
sharp edges, stripes, text-like strokes, band-limited texture). They are
generated procedurally from fixed seeds by this module, so they carry no
third-party license; the PNGs shipped in ``data/samples`` are the frozen
output of ``generate_samples``.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

import numpy as np

from .image import ImageBuffer, write_image

SAMPLE_NAMES = ("plasma", "stripes", "glyphs", "shapes", "weave", "dunes")
SAMPLE_SIZE = 96


def _grid(size: int) -> tuple[np.ndarray, np.ndarray]:
    t = np.linspace(0.0, 1.0, size)
    return np.meshgrid(t, t, indexing="ij")


def _bandlimited_noise(rng: np.random.Generator, size: int, rolloff: float) -> np.ndarray:
    """1/f^rolloff filtered Gaussian noise, normalized to [0, 1]."""
    spectrum = np.fft.fft2(rng.standard_normal((size, size)))
    fy = np.fft.fftfreq(size)[:, None]
    fx = np.fft.fftfreq(size)[None, :]
    radius = np.sqrt(fy * fy + fx * fx)
    radius[0, 0] = 1.0
    field = np.real(np.fft.ifft2(spectrum / radius ** rolloff))
    lo, hi = field.min(), field.max()
    return (field - lo) / (hi - lo)


def _soft_edge(mask: np.ndarray, width: float = 1.5) -> np.ndarray:
    # signed-distance-free anti-aliasing: small separable blur of the mask
    from scipy.ndimage import gaussian_filter
    return gaussian_filter(mask.astype(np.float64), sigma=width / 3.0)


def generate_sample(name: str, size: int = SAMPLE_SIZE) -> ImageBuffer:
    yy, xx = _grid(size)
    if name == "plasma":
        r = _bandlimited_noise(np.random.default_rng(11), size, 1.6)
        g = _bandlimited_noise(np.random.default_rng(12), size, 1.8)
        b = _bandlimited_noise(np.random.default_rng(13), size, 2.0)
        img = np.stack([r, 0.5 * g + 0.5 * r, b], axis=2)
    elif name == "stripes":
        angle = 0.6
        u = np.cos(angle) * xx + np.sin(angle) * yy
        freq = 9.0 + 20.0 * yy
        wave = 0.5 + 0.5 * np.tanh(4.0 * np.sin(2.0 * np.pi * freq * u))
        tint = np.stack([wave, 0.85 * wave + 0.1, 0.6 * wave + 0.25], axis=2)
        img = 0.9 * tint + 0.1 * yy[:, :, None]
    elif name == "glyphs":
        rng = np.random.default_rng(21)
        canvas = np.zeros((size, size))
        cell = size // 8
        for gy in range(1, 7):
            for gx in range(1, 7):
                if rng.random() < 0.35:
                    continue
                y0, x0 = gy * cell, gx * cell
                # random stroke pattern inside the cell, text-like
                for _ in range(rng.integers(2, 5)):
                    horizontal = rng.random() < 0.5
                    off = rng.integers(1, cell - 2)
                    thick = rng.integers(1, 3)
                    if horizontal:
                        canvas[y0 + off:y0 + off + thick, x0 + 1:x0 + cell - 1] = 1.0
                    else:
                        canvas[y0 + 1:y0 + cell - 1, x0 + off:x0 + off + thick] = 1.0
        ink = _soft_edge(canvas, 1.2)
        paper = 0.92 - 0.15 * yy - 0.05 * xx
        gray = paper * (1.0 - ink) + 0.08 * ink
        img = np.stack([gray, gray * 0.98, gray * 0.92], axis=2)
    elif name == "shapes":
        rng = np.random.default_rng(31)
        img = np.stack([0.2 + 0.5 * xx, 0.3 + 0.4 * yy, 0.6 - 0.3 * xx], axis=2)
        for _ in range(7):
            cy, cx = rng.random(2) * 0.8 + 0.1
            rad = rng.random() * 0.12 + 0.05
            mask = ((yy - cy) ** 2 + (xx - cx) ** 2) < rad * rad
            soft = _soft_edge(mask)[:, :, None]
            color = rng.random(3) * 0.9 + 0.05
            img = img * (1.0 - soft) + color[None, None, :] * soft
    elif name == "weave":
        f1 = np.sin(2 * np.pi * 7.3 * xx + 1.0) * np.sin(2 * np.pi * 6.1 * yy)
        f2 = np.sin(2 * np.pi * 13.7 * (xx + yy) / np.sqrt(2.0))
        base = 0.5 + 0.28 * f1 + 0.18 * f2
        shade = 0.85 + 0.15 * np.cos(2 * np.pi * yy)
        img = np.stack([base * shade, base, 1.0 - base * 0.7], axis=2)
    elif name == "dunes":
        tex = _bandlimited_noise(np.random.default_rng(41), size, 2.4)
        ridges = np.abs(np.sin(2 * np.pi * (3.0 * yy + 2.0 * tex)))
        level = 0.25 + 0.6 * ridges * (0.4 + 0.6 * tex)
        img = np.stack([level, 0.8 * level + 0.1, 0.55 * level + 0.15], axis=2)
    else:
        raise ValueError(f"unknown sample {name!r} (want one of {SAMPLE_NAMES})")
    return ImageBuffer(np.clip(img, 0.0, 1.0))


def generate_samples(out_dir, size: int = SAMPLE_SIZE) -> list[Path]:
    """Regenerate the frozen sample set into ``out_dir`` as 8-bit PNGs."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for name in SAMPLE_NAMES:
        path = out / f"{name}.png"
        write_image(generate_sample(name, size), path, "png8")
        paths.append(path)
    return paths


def sample_image_dir() -> Path:
    """Directory of the bundled PNGs inside the installed package."""
    return Path(resources.files("srloop") / "data" / "samples")
