"""Linear testbed for the contraction analysis.

Everything here works on explicit d x d Jacobians, small enough to
evaluate dense norms directly. It provides the ground truth that the
probe-based gain path is validated against, plus the conditional-
probability reasonability calculator.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np


@dataclass(frozen=True)
class LinearPlant:
    """Explicitly known composite Jacobian; the plant map is x -> gamma @ x."""

    gamma: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.gamma, dtype=np.float64)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise ValueError(f"gamma must be square, got shape {g.shape}")
        if not np.all(np.isfinite(g)):
            raise ValueError("gamma must be finite")
        object.__setattr__(self, "gamma", g)

    @property
    def dim(self) -> int:
        return self.gamma.shape[0]

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.gamma @ np.asarray(x, dtype=np.float64)


def simulate_linear_loop(
    plant: LinearPlant,
    lam: float,
    delta_t: float,
    steps: int,
    e0: np.ndarray,
) -> np.ndarray:
    """Iterate ``e <- (I - lam*dt*gamma) e`` and record the norm per step.

    Returns steps+1 norms; entry 0 is ``||e0||``.
    """
    if steps < 1:
        raise ValueError(f"need steps >= 1, got {steps}")
    e = np.asarray(e0, dtype=np.float64).copy()
    if e.size != plant.dim:
        raise ValueError(f"e0 has dim {e.size}, plant has dim {plant.dim}")
    step_matrix = np.eye(plant.dim) - lam * delta_t * plant.gamma
    norms = np.empty(steps + 1)
    norms[0] = np.linalg.norm(e)
    for t in range(1, steps + 1):
        e = step_matrix @ e
        norms[t] = np.linalg.norm(e)
    return norms


def iteration_norm(plant: LinearPlant, lam: float, delta_t: float = 1.0) -> float:
    """Dense Frobenius norm of the iteration matrix ``I - lam*dt*gamma``."""
    return float(np.linalg.norm(
        np.eye(plant.dim) - lam * delta_t * plant.gamma, "fro"))


def frobenius_interval_oracle(
    plant: LinearPlant,
    delta_t: float = 1.0,
    grid: int = 512,
) -> Optional[tuple[float, float]]:
    """Reference interval {lam > 0 : ||I - lam*dt*gamma||_F < 1}.

    Works purely from dense norm evaluations: the norm is a convex
    function of lam, so a coarse scan plus bisection pins both endpoints
    to 1e-9. Returns None when no positive lam satisfies the bound.
    """
    if grid < 100:
        raise ValueError(f"grid must be >= 100, got {grid}")

    def above(lam: float) -> bool:
        return iteration_norm(plant, lam, delta_t) >= 1.0

    # bracket: extend until the norm has clearly passed its (convex) minimum
    hi = 1.0
    while not above(hi) or not above(hi / 2.0):
        hi *= 2.0
        if hi > 1e12:
            break
    lams = np.linspace(0.0, hi, grid)
    inside = [lam for lam in lams if lam > 0 and not above(lam)]
    if not inside:
        # refine around the scan minimum in case the feasible set fell
        # between grid points
        norms = [iteration_norm(plant, lam, delta_t) for lam in lams]
        k = int(np.argmin(norms))
        fine = np.linspace(lams[max(k - 1, 0)], lams[min(k + 1, grid - 1)], grid)
        inside = [lam for lam in fine if lam > 0 and not above(lam)]
        if not inside:
            return None
    lo_in, hi_in = inside[0], inside[-1]
    lo = _bisect_edge(above, lo_in, downward=True)
    hi_edge = _bisect_edge(above, hi_in, downward=False)
    return lo, hi_edge


def _bisect_edge(above, start: float, downward: bool, tol: float = 1e-10) -> float:
    # walk from a feasible point to the boundary crossing
    inner = start
    outer = inner / 2.0 if downward else inner * 2.0
    if downward:
        while not above(outer) and outer > 1e-300:
            inner, outer = outer, outer / 2.0
        if outer <= 1e-300:
            return 0.0
    else:
        while not above(outer):
            inner, outer = outer, outer * 2.0
    for _ in range(200):
        mid = 0.5 * (inner + outer)
        if above(mid):
            outer = mid
        else:
            inner = mid
        if abs(outer - inner) < tol:
            break
    return 0.5 * (inner + outer)


@dataclass(frozen=True)
class ReasonabilityReport:
    """Prediction-success figures for the three loop stages at (d, D, w)."""

    p_preposition: float  # d * w**d
    p_upscale: float      # d * w**D
    p_degrade: float      # D * w**d
    preposition_beats_upscale: bool
    degrade_beats_upscale: bool

    @property
    def holds(self) -> bool:
        return self.preposition_beats_upscale and self.degrade_beats_upscale


def reasonability_report(d: int, big_d: int, w: float) -> ReasonabilityReport:
    """Evaluate the three per-stage success figures and their ordering.

    Requires 1 <= d < D and w strictly inside (0, 1); at w = 1 the first
    comparison degenerates to equality. The figures can exceed 1 for
    large dims; they are reported as defined, not renormalized.
    """
    if not (0.0 < w < 1.0):
        raise ValueError(f"w must be in the open interval (0, 1), got {w}")
    if not (1 <= d < big_d):
        raise ValueError(f"need 1 <= d < D, got d={d}, D={big_d}")
    p_pp = d * w ** d
    p_pt = d * w ** big_d
    p_dg = big_d * w ** d
    return ReasonabilityReport(
        p_preposition=p_pp,
        p_upscale=p_pt,
        p_degrade=p_dg,
        preposition_beats_upscale=p_pp > p_pt,
        degrade_beats_upscale=p_dg > p_pt,
    )


def write_norm_csv(path, norms: Sequence[float]) -> None:
    """Emit an error-norm sequence as (step, norm) CSV for plotting."""
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "norm"])
        for t, n in enumerate(norms):
            writer.writerow([t, repr(float(n))])
