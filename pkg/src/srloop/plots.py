"""Matplotlib figures for the benchmark report path.

Every function renders straight to a file; no interactive backend is
assumed.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)


def _finite(values):
    return [v for v in values if math.isfinite(v)]


def plot_increment_curves(table, path) -> Path:
    """Mean/max PSNR and SSIM increments against the scale factor."""
    scales = [row.scale for row in table]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9.5, 3.6))
    ax1.plot(scales, [row.agg.dpsnr_a for row in table], "o-", label="mean")
    ax1.plot(scales, [row.agg.dpsnr_m for row in table], "s--", label="max")
    ax1.set_xlabel("scale factor")
    ax1.set_ylabel("PSNR gain (dB)")
    ax1.axhline(0.0, color="gray", lw=0.6)
    ax1.legend()
    ax2.plot(scales, [row.agg.dssim_a for row in table], "o-", label="mean")
    ax2.plot(scales, [row.agg.dssim_m for row in table], "s--", label="max")
    ax2.set_xlabel("scale factor")
    ax2.set_ylabel("SSIM gain")
    ax2.axhline(0.0, color="gray", lw=0.6)
    ax2.legend()
    fig.suptitle("closed-loop gain over the single-pass baseline")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return Path(path)


def plot_quality_curves(table, path) -> Path:
    """Absolute PSNR of both methods against the scale factor."""
    scales = [row.scale for row in table]
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    open_vals = [row.agg.psnr_o for row in table]
    closed_vals = [row.agg.psnr_c for row in table]
    if _finite(open_vals) and _finite(closed_vals):
        ax.plot(scales, open_vals, "o-", label="single pass")
        ax.plot(scales, closed_vals, "s-", label="feedback loop")
    ax.set_xlabel("scale factor")
    ax.set_ylabel("PSNR (dB)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return Path(path)


def plot_convergence(traces, path) -> Path:
    """LR-error norm per accepted iteration for every (image, scale) run."""
    fig, ax = plt.subplots(figsize=(5.6, 3.8))
    for (stem, f), trace in sorted(traces.items()):
        norms = trace.accepted_norms()
        ax.semilogy(range(1, len(norms) + 1), norms, lw=0.9,
                    label=f"{stem} x{f:g}")
    ax.set_xlabel("iteration")
    ax.set_ylabel("LR error norm")
    if len(traces) <= 10:
        ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return Path(path)


def plot_norm_sequences(sequences: dict[str, list[float]], path) -> Path:
    """Overlay labelled error-norm sequences from the linear testbed."""
    fig, ax = plt.subplots(figsize=(5.6, 3.8))
    for label, norms in sequences.items():
        ax.semilogy(range(len(norms)), norms, lw=1.1, label=label)
    ax.set_xlabel("step")
    ax.set_ylabel("error norm")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return Path(path)
