"""Trajectory smoothness estimates and (L0, L1) fitting with a hinge penalty on underestimation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

SKIP_THRESHOLD = 1e-14
TRACE_COLUMNS = ("k", "group_id", "f_value", "g_dual_next", "delta_g_dual", "delta_x_norm", "radius_used")


class DegenerateTrajectoryError(ValueError):
    pass


class UnfittedError(ValueError):
    pass


@dataclass(frozen=True)
class TraceRecord:
    k: int
    group_id: str
    f_value: float
    g_dual_next: float
    delta_g_dual: float
    delta_x_norm: float
    radius_used: float


@dataclass
class TrajectoryTrace:
    """Per-(iteration, group) scalars of one run, ordered by ``k``."""

    records: list[TraceRecord] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def group_ids(self) -> list[str]:
        seen: dict[str, None] = {}
        for r in self.records:
            seen.setdefault(r.group_id, None)
        return list(seen)

    def for_group(self, group_id: str) -> list[TraceRecord]:
        return [r for r in self.records if r.group_id == group_id]

    def column(self, group_id: str, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.for_group(group_id)], dtype=np.float64)


@dataclass(frozen=True)
class SmoothnessEstimate:
    k: np.ndarray
    l_hat: np.ndarray
    g_dual_next: np.ndarray
    skipped: int


@dataclass(frozen=True)
class SmoothnessFit:
    l0: float
    l1: float
    lam: float
    mse_rel: float
    n_points: int
    tie_broken: bool = False


def trajectory_smoothness(trace: TrajectoryTrace, group_id: str) -> SmoothnessEstimate:
    """``||g^{k+1} - g^k||_* / ||X^{k+1} - X^k||`` per record; near-zero moves are skipped and counted."""
    records = trace.for_group(group_id)
    if not records:
        raise ValueError(f"trace has no records for group {group_id!r}")
    kept = [r for r in records if r.delta_x_norm >= SKIP_THRESHOLD]
    skipped = len(records) - len(kept)
    if not kept:
        raise DegenerateTrajectoryError(f"degenerate trajectory: all {skipped} records of group {group_id!r} have zero step")
    return SmoothnessEstimate(
        k=np.array([r.k for r in kept], dtype=np.int64),
        l_hat=np.array([r.delta_g_dual / r.delta_x_norm for r in kept]),
        g_dual_next=np.array([r.g_dual_next for r in kept]),
        skipped=skipped,
    )


def approx_curve(l0: float, l1: float, g_dual_next) -> np.ndarray:
    if l0 < 0 or l1 < 0:
        raise ValueError("L0 and L1 must be non-negative")
    return l0 + l1 * np.asarray(g_dual_next, dtype=np.float64)


def fit_loss(l0: float, l1: float, l_hat, g_dual_next, lam: float) -> float:
    """Squared error plus ``lam`` times squared underestimation."""
    r = np.asarray(l_hat, dtype=np.float64) - (l0 + l1 * np.asarray(g_dual_next, dtype=np.float64))
    under = np.maximum(r, 0.0)
    return float(np.sum(r * r) + lam * np.sum(under * under))


def hinge_term(l0: float, l1: float, l_hat, g_dual_next) -> float:
    r = np.asarray(l_hat, dtype=np.float64) - (l0 + l1 * np.asarray(g_dual_next, dtype=np.float64))
    under = np.maximum(r, 0.0)
    return float(np.sum(under * under))


def mse_rel(l_hat, l_approx) -> float:
    """Mean of ``((L_hat - L_approx) / L_hat)^2``."""
    l_hat = np.asarray(l_hat, dtype=np.float64)
    l_approx = np.asarray(l_approx, dtype=np.float64)
    if l_hat.shape != l_approx.shape:
        raise ValueError("curves must be aligned")
    if np.any(l_hat == 0):
        raise ValueError("relative error undefined where L_hat == 0")
    return float(np.mean(((l_hat - l_approx) / l_hat) ** 2))


def _asymmetric_lstsq(design: np.ndarray, y: np.ndarray, lam: float, max_iter: int = 200) -> np.ndarray:
    """Minimize ``sum w(r) r^2`` with ``w = 1 + lam`` where ``r > 0`` and 1 elsewhere.

    The loss is convex, C^1 and piecewise quadratic. A Newton step solves the
    weighted least-squares problem for the current sign pattern; once the
    solution reproduces its own pattern the gradient vanishes and it is the
    exact minimizer. Backtracking guards against pattern cycling.
    """

    def loss(beta):
        r = y - design @ beta
        return float(np.sum(r * r) + lam * np.sum(np.maximum(r, 0.0) ** 2))

    def weights(beta):
        return np.where(y - design @ beta > 0.0, 1.0 + lam, 1.0)

    beta = np.linalg.lstsq(design, y, rcond=None)[0]
    for _ in range(max_iter):
        w = weights(beta)
        dw = design * w[:, None]
        candidate = np.linalg.solve(design.T @ dw, dw.T @ y)
        step = candidate - beta
        if np.array_equal(weights(candidate), w) or np.max(np.abs(step)) <= 1e-14 * (1.0 + np.max(np.abs(beta))):
            return candidate
        current, t = loss(beta), 1.0
        while loss(beta + t * step) > current and t > 1e-12:
            t *= 0.5
        beta = beta + t * step
    return beta


def fit_constants(l_hat: Sequence[float], g_dual_next: Sequence[float], lam: float = 1.0) -> SmoothnessFit:
    """Fit ``L_hat ~ L0 + L1 * g`` with ``L0, L1 >= 0`` under the hinge-penalized squared loss.

    When the data cannot separate ``L0`` from ``L1`` (all ``g`` equal) the
    minimizer with the smallest ``L1`` is returned and ``tie_broken`` is set.
    """
    y = np.asarray(l_hat, dtype=np.float64)
    g = np.asarray(g_dual_next, dtype=np.float64)
    if y.shape != g.shape or y.ndim != 1:
        raise ValueError("l_hat and g_dual_next must be aligned 1-D sequences")
    if y.size < 2:
        raise ValueError("need at least two points to fit (L0, L1)")
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    if not (np.all(np.isfinite(y)) and np.all(np.isfinite(g))):
        raise ValueError("non-finite values in fit input")

    ones = np.ones_like(y)
    degenerate = np.all(g == g[0])
    candidates: list[tuple[float, float]] = [(0.0, 0.0)]

    def scalar_fit(column: np.ndarray) -> float:
        return float(_asymmetric_lstsq(column[:, None], y, lam)[0])

    if degenerate:
        # only the sum L0 + L1 * g0 is identified; prefer L1 = 0
        candidates.append((max(scalar_fit(ones), 0.0), 0.0))
        if g[0] > 0:
            candidates.append((0.0, max(scalar_fit(g), 0.0)))
    else:
        l0, l1 = _asymmetric_lstsq(np.column_stack([ones, g]), y, lam)
        if l0 >= 0 and l1 >= 0:
            candidates.append((float(l0), float(l1)))
        candidates.append((max(scalar_fit(ones), 0.0), 0.0))
        if np.any(g != 0):
            candidates.append((0.0, max(scalar_fit(g), 0.0)))

    # ties in loss resolve toward smaller L1
    losses = [fit_loss(a, b, y, g, lam) for a, b in candidates]
    best_loss = min(losses)
    tol = 1e-12 * max(best_loss, float(np.sum(y * y)), 1e-300)
    tied = [(b, a) for (a, b), loss in zip(candidates, losses) if loss <= best_loss + tol]
    l1_best, l0_best = min(tied)
    tie_broken = bool(degenerate and len({round(b, 12) for b, _ in tied}) > 1)

    approx = approx_curve(l0_best, l1_best, g)
    err = mse_rel(y, approx) if np.all(y != 0) else math.nan
    return SmoothnessFit(l0_best, l1_best, float(lam), err, int(y.size), tie_broken)


def suggest_stepsize(fit: SmoothnessFit, current_g_dual: float) -> float:
    """Adaptive radius ``g / (L0 + L1 g)`` implied by fitted constants (about ``1/L1`` when ``L0 ~ 0``)."""
    if fit.l0 == 0 and fit.l1 == 0:
        raise UnfittedError("unfitted: L0 and L1 are both zero")
    if current_g_dual < 0:
        raise ValueError("dual norm must be non-negative")
    return current_g_dual / (fit.l0 + fit.l1 * current_g_dual)


suggest_stepsizes = suggest_stepsize
