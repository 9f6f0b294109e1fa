"""Closed-loop refinement for arbitrary-scale image upscalers.

The library wraps any upscaler (built-in analytic kernels or an external
process speaking the CSR1 file protocol) in a degradation-feedback loop
with an integral controller, picks the feedback gain from randomized
Jacobian statistics, and ships a benchmark harness that scores the loop
against its own single-pass baseline.
"""

from .backend import BackendSpec, BackendError, ProbeReport, probe_backend, upscale
from .gain import (GainError, GainSolution, JacobianStats,
                   estimate_jacobian_stats, exact_stats, solve_lambda_interval)
from .harness import RunConfig, gen_lr, run_benchmark, emit_table
from .image import ImageBuffer, ImageError, ScaleSpec, flatten_norm, read_image, write_image
from .lab import (LinearPlant, ReasonabilityReport, frobenius_interval_oracle,
                  reasonability_report, simulate_linear_loop)
from .loop import LoopConfig, LoopError, LoopTrace, open_loop, run_loop
from .metrics import (MetricRow, aggregate, diff_first, diff_second_logical,
                      psnr, ssim)
from .resample import Kernel, degrade, resize

__version__ = "0.1.0"

__all__ = [
    "BackendSpec", "BackendError", "ProbeReport", "probe_backend", "upscale",
    "GainError", "GainSolution", "JacobianStats", "estimate_jacobian_stats",
    "exact_stats", "solve_lambda_interval",
    "RunConfig", "gen_lr", "run_benchmark", "emit_table",
    "ImageBuffer", "ImageError", "ScaleSpec", "flatten_norm", "read_image",
    "write_image",
    "LinearPlant", "ReasonabilityReport", "frobenius_interval_oracle",
    "reasonability_report", "simulate_linear_loop",
    "LoopConfig", "LoopError", "LoopTrace", "open_loop", "run_loop",
    "MetricRow", "aggregate", "diff_first", "diff_second_logical", "psnr", "ssim",
    "Kernel", "degrade", "resize",
]
