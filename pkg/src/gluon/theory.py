"""Closed-form iteration counts and bounds for layer-wise (L0, L1)-smooth LMO methods.

All formulas are evaluated in float64 with the ceiling applied last.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

# 2 * sqrt(2 e^2) = 2 e sqrt(2)
_LOG_COEF = 2.0 * math.e * math.sqrt(2.0)


@dataclass(frozen=True)
class RateInputs:
    delta0: float
    l0: tuple[float, ...]
    l1: tuple[float, ...]
    epsilon: float
    sigma: float = 0.0
    mu: float | None = None
    zeta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "l0", tuple(float(v) for v in self.l0))
        object.__setattr__(self, "l1", tuple(float(v) for v in self.l1))
        if len(self.l0) != len(self.l1) or not self.l0:
            raise ValueError(f"L0 and L1 must be non-empty and equally long ({len(self.l0)} vs {len(self.l1)})")
        if any(v < 0 for v in self.l0 + self.l1):
            raise ValueError("smoothness constants must be non-negative")
        if self.delta0 < 0:
            raise ValueError("delta0 must be non-negative")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")

    @property
    def p(self) -> int:
        return len(self.l0)

    @property
    def l1_max(self) -> float:
        return max(self.l1)

    @property
    def l0_max(self) -> float:
        return max(self.l0)


def _require_positive_l1(inp: RateInputs, what: str) -> None:
    if any(v == 0 for v in inp.l1):
        raise ValueError(f"{what} requires L1 > 0 for every group; use det_iterations_plain instead")


def _harmonic(l1: Sequence[float]) -> float:
    """``(1/p) sum_j 1/L1_j``."""
    return sum(1.0 / v for v in l1) / len(l1)


def _ceil(x: float) -> int:
    return int(math.ceil(x))


def det_iterations_weighted_terms(inp: RateInputs) -> tuple[float, float]:
    _require_positive_l1(inp, "the harmonic-weighted rate")
    h = _harmonic(inp.l1)
    weighted_l0 = sum(a / (b * b) for a, b in zip(inp.l0, inp.l1))
    first = 2.0 * inp.delta0 * weighted_l0 / (inp.epsilon**2 * h**2)
    second = 2.0 * inp.delta0 / (inp.epsilon * h)
    return first, second


def det_iterations_weighted(inp: RateInputs) -> int:
    """Iterations for the ``1/L1``-weighted gradient criterion to drop below epsilon."""
    if inp.delta0 == 0:
        return 0
    return _ceil(sum(det_iterations_weighted_terms(inp)))


def det_iterations_plain_terms(inp: RateInputs) -> tuple[float, float]:
    if sum(inp.l0) == 0 and inp.l1_max == 0:
        raise ValueError("L0 and L1 cannot all be zero")
    first = 2.0 * inp.delta0 * sum(inp.l0) / (inp.epsilon**2)
    second = 2.0 * inp.delta0 * inp.l1_max / (inp.epsilon)
    return first, second


def det_iterations_plain(inp: RateInputs) -> int:
    """Iterations for ``min_k sum_i ||grad_i f(X^k)||_*`` to drop below epsilon."""
    if inp.delta0 == 0:
        return 0
    return _ceil(sum(det_iterations_plain_terms(inp)))


def _check_zeta(zeta: float) -> None:
    if not 0.0 <= zeta < 1.0:
        raise ValueError("zeta must lie in [0, 1)")


def adaptive_stoch_iterations(inp: RateInputs, variant: str = "plain") -> int:
    """Iteration count under bounded relative variance ``zeta`` with adaptive radii.

    Arithmetic mirrors the deterministic formulas so ``zeta = 0`` reproduces them bit for bit.
    """
    _check_zeta(inp.zeta)
    if variant not in ("plain", "weighted"):
        raise ValueError("variant must be 'plain' or 'weighted'")
    if inp.delta0 == 0:
        return 0
    shrink = (1.0 - inp.zeta) ** 2
    grow = 1.0 + inp.zeta
    if variant == "plain":
        if sum(inp.l0) == 0 and inp.l1_max == 0:
            raise ValueError("L0 and L1 cannot all be zero")
        first = 2.0 * inp.delta0 * sum(inp.l0) / (shrink * inp.epsilon**2)
        second = 2.0 * inp.delta0 * (grow * inp.l1_max) / (shrink * inp.epsilon)
    else:
        _require_positive_l1(inp, "the harmonic-weighted rate")
        h = _harmonic(inp.l1)
        weighted_l0 = sum(a / (b * b) for a, b in zip(inp.l0, inp.l1))
        first = 2.0 * inp.delta0 * weighted_l0 / (shrink * inp.epsilon**2 * h**2)
        second = 2.0 * inp.delta0 * grow / (shrink * inp.epsilon * h)
    return _ceil(first + second)


def pl_iterations(inp: RateInputs, l1_zero: bool) -> int:
    """Iterations to reach ``f - f* <= epsilon`` under the layer-wise PL condition.

    ``l1_zero`` selects the linear-rate branch ``ceil(L0_max / mu * log(delta0 / eps))``.
    """
    if inp.mu is None or not inp.mu > 0:
        raise ValueError("the PL rate needs mu > 0")
    if inp.delta0 == 0:
        return 0
    if l1_zero:
        if inp.l1_max != 0:
            raise ValueError("the linear-rate branch needs L1 = 0 for every group")
        if inp.epsilon >= inp.delta0:
            return 0
        return _ceil(inp.l0_max / inp.mu * math.log(inp.delta0 / inp.epsilon))
    first = sum(inp.l0) * inp.delta0 / (inp.mu * inp.epsilon)
    second = math.sqrt(2.0) * inp.l1_max * inp.delta0 / math.sqrt(inp.mu * inp.epsilon)
    return _ceil(first + second)


def stoch_bound(k: int, inp: RateInputs, l1_zero: bool, radii: Sequence[float] | None = None) -> float:
    """Right-hand side of the momentum method's bound after ``k`` iterations.

    With ``l1_zero=False`` it bounds ``min_k sum_i E||grad_i||_* / (12 L1_i)`` for
    radii ``t_i = 1/(12 L1_i)``. With ``l1_zero=True`` it bounds
    ``min_k sum_i t_i E||grad_i||_*`` for the supplied ``radii`` ``t_i``.
    Both assume ``beta^k = 1 - (k+1)^(-1/2)`` and ``t_i^k = t_i (k+1)^(-3/4)``.
    """
    if k < 1:
        raise ValueError("K must be >= 1")
    log_k = math.log(k)
    root = k**0.25
    noise_factor = 7.0 + _LOG_COEF * log_k
    if l1_zero:
        if inp.l1_max != 0:
            raise ValueError("the L1 = 0 branch was requested but some L1 are non-zero")
        if radii is None or len(radii) != inp.p:
            raise ValueError("the L1 = 0 branch needs one base radius t_i per group")
        if any(t <= 0 for t in radii):
            raise ValueError("base radii must be positive")
        curvature_factor = 87.0 / 2.0 + 14.0 * log_k
        total = sum(inp.sigma * t * noise_factor + a * t * t * curvature_factor for a, t in zip(inp.l0, radii))
        return inp.delta0 / root + total / root
    if any(v == 0 for v in inp.l1):
        raise ValueError("the L1 != 0 branch requires L1 > 0 for every group")
    curvature_factor = 87.0 + 28.0 * log_k
    total = sum(
        inp.sigma / (6.0 * b) * noise_factor + a / (144.0 * b * b) * curvature_factor
        for a, b in zip(inp.l0, inp.l1)
    )
    return 2.0 * inp.delta0 / root + total / root


def weighted_grad_criterion(l1: Sequence[float], g_dual: Sequence[float]) -> float:
    """``sum_i w_i ||g_i||_*`` with ``w_i = (1/L1_i) / ((1/p) sum_j 1/L1_j)``; the weights sum to p."""
    return sum(w * g for w, g in zip(harmonic_weights(l1), g_dual, strict=True))


def harmonic_weights(l1: Sequence[float]) -> list[float]:
    if any(v <= 0 for v in l1):
        raise ValueError("harmonic weights need L1 > 0")
    h = _harmonic(l1)
    return [(1.0 / v) / h for v in l1]
