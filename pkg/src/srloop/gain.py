"""Feedback-gain selection from randomized Jacobian statistics.

The composite downscale-after-upscale operator is treated as a black
box; its Jacobian trace and squared Frobenius norm are estimated with
Rademacher probes and finite differences (k + 1 operator evaluations
total). The admissible gain interval then comes from requiring the
iteration matrix ``I - lam*dt*J`` to have Frobenius norm below 1:

    ||I - lam*dt*J||_F^2  =  d - 2*lam*dt*tr(J) + lam^2*dt^2*||J||_F^2  <  1

i.e. the quadratic ``A*lam^2 + B*lam + C < 0`` with A = dt^2*||J||_F^2,
B = -2*dt*tr(J) and C = d - 1. The chosen gain is the quadratic's
minimizer, which also minimizes the guaranteed contraction factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

DEFAULT_PROBES = 8
DEFAULT_STEP = 1e-3

Operator = Callable[[np.ndarray], np.ndarray]


class GainError(Exception):
    """Raised when no gain can be derived (degenerate or non-finite stats)."""


@dataclass(frozen=True)
class JacobianStats:
    """Hutchinson estimates of tr(J) and ||J||_F^2 for a d-dim operator."""

    trace_est: float
    frob_sq_est: float
    probes: int
    step: float
    dim: int


@dataclass(frozen=True)
class GainSolution:
    """Quadratic coefficients, admissible interval and chosen gain.

    ``lambda_lo``/``lambda_hi`` are None when the discriminant is
    non-positive; ``lambda_star`` is then a best-effort gain with no
    contraction guarantee (``guaranteed`` False).
    """

    a_coef: float
    b_coef: float
    c_coef: float
    delta_t: float
    lambda_lo: Optional[float]
    lambda_hi: Optional[float]
    lambda_star: float

    @property
    def guaranteed(self) -> bool:
        return self.lambda_lo is not None


def estimate_jacobian_stats(
    dp: Operator,
    base: np.ndarray,
    k: int = DEFAULT_PROBES,
    eps: float = DEFAULT_STEP,
    rng: Optional[np.random.Generator] = None,
) -> JacobianStats:
    """Probe ``dp`` around ``base`` with k Rademacher directions.

    Each probe v gives a directional derivative
    ``u = (dp(base + eps*v) - dp(base)) / eps``; the estimates are
    ``mean(v.u)`` for the trace and ``mean(|u|^2)`` for the squared
    Frobenius norm. Both are unbiased when dp is linear. Costs exactly
    k + 1 evaluations of dp.
    """
    if k < 1:
        raise ValueError(f"need at least one probe, got k={k}")
    if not (eps > 0):
        raise ValueError(f"probe step must be positive, got {eps}")
    rng = rng if rng is not None else np.random.default_rng()
    base = np.asarray(base, dtype=np.float64).ravel()
    d = base.size
    f0 = np.asarray(dp(base), dtype=np.float64).ravel()
    if f0.size != d:
        raise GainError(f"operator maps dim {d} to dim {f0.size}; need a square map")

    trace_terms = np.empty(k)
    frob_terms = np.empty(k)
    for i in range(k):
        v = rng.integers(0, 2, size=d).astype(np.float64) * 2.0 - 1.0
        u = (np.asarray(dp(base + eps * v), dtype=np.float64).ravel() - f0) / eps
        if not np.all(np.isfinite(u)):
            raise GainError(
                "non-finite directional derivative; probe step eps is likely "
                "below the operator's output precision")
        trace_terms[i] = float(v @ u)
        frob_terms[i] = float(u @ u)
    return JacobianStats(
        trace_est=float(trace_terms.mean()),
        frob_sq_est=float(frob_terms.mean()),
        probes=k,
        step=eps,
        dim=d,
    )


def exact_stats(gamma: np.ndarray) -> JacobianStats:
    """Stats of an explicitly known Jacobian (for validation paths)."""
    gamma = np.asarray(gamma, dtype=np.float64)
    return JacobianStats(
        trace_est=float(np.trace(gamma)),
        frob_sq_est=float(np.sum(gamma * gamma)),
        probes=1,
        step=0.0,
        dim=gamma.shape[0],
    )


def solve_lambda_interval(stats: JacobianStats, delta_t: float = 1.0) -> GainSolution:
    """Solve ``A*lam^2 + B*lam + C < 0`` for the admissible gain interval.

    Returns the open interval roots and the quadratic minimizer
    ``lambda_star = -B / (2A)``; when the discriminant is non-positive
    the bounds are absent and ``trace/frob_sq / delta_t`` is returned as
    an unguaranteed best effort.
    """
    if not (delta_t > 0):
        raise ValueError(f"delta_t must be positive, got {delta_t}")
    if not (math.isfinite(stats.trace_est) and math.isfinite(stats.frob_sq_est)):
        raise GainError(f"non-finite Jacobian stats: {stats}")
    if stats.frob_sq_est <= 0.0:
        raise GainError(
            "degenerate operator: zero Frobenius estimate, no gain derivable")

    a = delta_t * delta_t * stats.frob_sq_est
    b = -2.0 * delta_t * stats.trace_est
    c = float(stats.dim - 1)
    disc = b * b - 4.0 * a * c
    star = -b / (2.0 * a)
    if disc > 0.0:
        root = math.sqrt(disc)
        return GainSolution(a, b, c, delta_t, (-b - root) / (2.0 * a),
                            (-b + root) / (2.0 * a), star)
    fallback = stats.trace_est / stats.frob_sq_est / delta_t
    return GainSolution(a, b, c, delta_t, None, None, fallback)
