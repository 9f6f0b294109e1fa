"""Closed-loop refinement around an arbitrary upscaler.

One iteration: upscale the pre-position image, degrade the result back
to LR dims, subtract from the original LR input to get the error
signal, then integrate the error into the pre-position image with gain
``lam * delta_t``. The gain comes from the probe-based interval solver
(auto mode) or is fixed by the caller.

The contraction bound behind the auto gain is estimated, not exact, so
a safeguard watches the LR error norm: a step that increases it is
discarded, the gain is halved and the step retried; after too many
halvings the loop stops and returns the best iterate seen.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from . import metrics
from .backend import BackendSpec, upscale
from .gain import (DEFAULT_PROBES, DEFAULT_STEP, GainSolution,
                   estimate_jacobian_stats, solve_lambda_interval)
from .image import ImageBuffer, ScaleSpec, flatten_norm
from .resample import degrade

# anything callable as (image, target) -> image can serve as the upscaler,
# which is how the synthetic linear plants get driven through the real loop
UpscaleFn = Callable[[ImageBuffer, ScaleSpec], ImageBuffer]
Backend = Union[BackendSpec, UpscaleFn]

STATUS_CONVERGED = "converged"
STATUS_MAX_ITERS = "max_iters"
STATUS_SAFEGUARD_EXHAUSTED = "safeguard_exhausted"


class LoopError(Exception):
    """Backend or configuration failure inside the feedback loop."""


@dataclass(frozen=True)
class LoopConfig:
    iterations: int = 10
    lambda_mode: Union[str, float] = "auto"  # "auto" or a fixed gain
    delta_t: float = 1.0
    probes: int = DEFAULT_PROBES
    probe_step: float = DEFAULT_STEP
    probe_seed: int = 0
    clamp_preposition: Optional[bool] = None  # None: on for external backends only
    init_mode: str = "lr"  # "lr" | "zero"
    early_stop_rel: float = 1e-6
    stall_window: int = 3
    safeguard_max_halvings: int = 4
    reestimate_each_iter: bool = False

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError(f"need iterations >= 1, got {self.iterations}")
        if self.delta_t <= 0:
            raise ValueError(f"delta_t must be positive, got {self.delta_t}")
        if self.early_stop_rel <= 0:
            raise ValueError(f"early_stop_rel must be positive, got {self.early_stop_rel}")
        if self.init_mode not in ("lr", "zero"):
            raise ValueError(f"unknown init_mode {self.init_mode!r}")
        if isinstance(self.lambda_mode, str) and self.lambda_mode != "auto":
            raise ValueError(f"lambda_mode must be 'auto' or a number, "
                             f"got {self.lambda_mode!r}")


@dataclass(frozen=True)
class IterationRecord:
    t: int
    error_norm: float
    lam: float
    halvings: int
    accepted: bool
    psnr: Optional[float] = None
    ssim: Optional[float] = None


@dataclass
class LoopTrace:
    records: list[IterationRecord] = field(default_factory=list)
    status: str = STATUS_MAX_ITERS
    gain: Optional[GainSolution] = None

    def accepted_norms(self) -> list[float]:
        return [r.error_norm for r in self.records if r.accepted]

    @property
    def final_lambda(self) -> float:
        return self.records[-1].lam if self.records else math.nan


def _as_upscaler(backend: Backend) -> UpscaleFn:
    if isinstance(backend, BackendSpec):
        return lambda img, tgt: upscale(backend, img, tgt)
    if callable(backend):
        return backend
    raise LoopError(f"backend must be a BackendSpec or callable, got {backend!r}")


def _clamp_default(backend: Backend) -> bool:
    # deep models behind external commands assume in-range images;
    # analytic kernels are linear and the analysis prefers no clamp
    return isinstance(backend, BackendSpec) and backend.kind == "external"


def open_loop(a_l: ImageBuffer, target: ScaleSpec, backend: Backend) -> ImageBuffer:
    """Single upscaler pass, clamped to [0, 1]: the baseline the loop is judged against."""
    pt = _as_upscaler(backend)
    return pt(a_l, target).clamped()


def run_loop(
    a_l: ImageBuffer,
    target: ScaleSpec,
    backend: Backend,
    cfg: LoopConfig = LoopConfig(),
    gt: Optional[ImageBuffer] = None,
) -> tuple[ImageBuffer, LoopTrace]:
    """Run the feedback refinement and return (SR image, trace).

    The returned image is the last accepted iterate clamped to [0, 1]
    (best-by-LR-error iterate if the safeguard gave up). When ``gt`` is
    supplied, per-iteration PSNR/SSIM are recorded in the trace.
    """
    pt = _as_upscaler(backend)
    clamp = cfg.clamp_preposition
    if clamp is None:
        clamp = _clamp_default(backend)
    lr_h, lr_w = a_l.height, a_l.width

    def evaluate(p: ImageBuffer) -> tuple[ImageBuffer, ImageBuffer, float]:
        p_in = p.clamped() if clamp else p
        s = pt(p_in, target)
        if (s.height, s.width) != (target.target_height, target.target_width):
            raise LoopError(
                f"upscaler returned {s.height}x{s.width}, "
                f"requested {target.target_height}x{target.target_width}")
        d = degrade(s, lr_h, lr_w)
        e = ImageBuffer(a_l.data - d.data)
        return s, e, flatten_norm(e)

    p = a_l if cfg.init_mode == "lr" else ImageBuffer(np.zeros_like(a_l.data))

    trace = LoopTrace()
    lam = _initial_gain(pt, p, target, lr_h, lr_w, clamp, cfg, trace)

    input_norm = flatten_norm(a_l)
    best_s: Optional[ImageBuffer] = None
    best_norm = math.inf
    prev_p: Optional[ImageBuffer] = None
    prev_e: Optional[ImageBuffer] = None
    prev_norm = math.inf
    halvings = 0
    accepted_norms: list[float] = []
    final_s: Optional[ImageBuffer] = None
    t = 1

    while t <= cfg.iterations:
        try:
            s, e, norm = evaluate(p)
        except Exception as exc:
            raise LoopError(f"backend failed at iteration {t}: {exc}") from exc

        if norm > prev_norm:
            # reject: roll back, halve the gain, rebuild the step
            trace.records.append(IterationRecord(
                t, norm, lam, halvings, accepted=False,
                **_gt_metrics(s, gt)))
            halvings += 1
            if halvings > cfg.safeguard_max_halvings:
                trace.status = STATUS_SAFEGUARD_EXHAUSTED
                break
            lam *= 0.5
            p = ImageBuffer(prev_p.data + lam * cfg.delta_t * prev_e.data)
            continue

        trace.records.append(IterationRecord(
            t, norm, lam, halvings, accepted=True, **_gt_metrics(s, gt)))
        accepted_norms.append(norm)
        final_s = s
        if norm < best_norm:
            best_norm, best_s = norm, s

        if _early_stop(norm, input_norm, accepted_norms, cfg):
            trace.status = STATUS_CONVERGED
            break

        if cfg.reestimate_each_iter and isinstance(cfg.lambda_mode, str):
            lam = _estimate_gain(pt, p, target, lr_h, lr_w, clamp, cfg, trace,
                                 seed_offset=t)

        prev_p, prev_e, prev_norm = p, e, norm
        p = ImageBuffer(p.data + lam * cfg.delta_t * e.data)
        t += 1
    else:
        trace.status = STATUS_MAX_ITERS

    out = best_s if trace.status == STATUS_SAFEGUARD_EXHAUSTED else final_s
    if out is None:
        raise LoopError("loop produced no accepted iterate")
    return out.clamped(), trace


def _gt_metrics(s: ImageBuffer, gt: Optional[ImageBuffer]) -> dict:
    if gt is None:
        return {}
    clamped = s.clamped()
    vals = {"psnr": metrics.psnr(clamped, gt)}
    if min(gt.height, gt.width) >= metrics.SSIM_WINDOW:
        vals["ssim"] = metrics.ssim(clamped, gt)
    return vals


def _early_stop(norm: float, input_norm: float, accepted: list[float],
                cfg: LoopConfig) -> bool:
    if input_norm > 0 and norm / input_norm < cfg.early_stop_rel:
        return True
    if norm == 0.0:
        return True
    w = cfg.stall_window
    if w >= 1 and len(accepted) > w:
        anchor = accepted[-w - 1]
        if anchor > 0 and (anchor - norm) / anchor < cfg.early_stop_rel:
            return True
    return False


def _initial_gain(pt, p0, target, lr_h, lr_w, clamp, cfg, trace) -> float:
    if not isinstance(cfg.lambda_mode, str):
        return float(cfg.lambda_mode)
    return _estimate_gain(pt, p0, target, lr_h, lr_w, clamp, cfg, trace, 0)


def _estimate_gain(pt, p0, target, lr_h, lr_w, clamp, cfg, trace, seed_offset) -> float:
    """Probe the downscale-after-upscale composite around p0 and solve."""
    shape = p0.data.shape

    def dp(vec: np.ndarray) -> np.ndarray:
        buf = ImageBuffer(vec.reshape(shape))
        if clamp:
            buf = buf.clamped()
        s = pt(buf, target)
        return degrade(s, lr_h, lr_w).data.ravel()

    rng = np.random.default_rng(cfg.probe_seed + seed_offset)
    try:
        stats = estimate_jacobian_stats(dp, p0.data.ravel(), cfg.probes,
                                        cfg.probe_step, rng)
        solution = solve_lambda_interval(stats, cfg.delta_t)
    except Exception as exc:
        raise LoopError(f"gain estimation failed: {exc}") from exc
    trace.gain = solution
    return solution.lambda_star
