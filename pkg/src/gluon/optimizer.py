"""Layer-wise LMO optimizer (Gluon): deterministic and momentum loops plus norm presets.

Each parameter group ``X_i`` moves to the minimizer of ``<driver_i, Y>`` over the
ball ``||Y - X_i||_(i) <= t_i^k``. In the deterministic loop the driver is the
gradient; in the stochastic loop it is the momentum buffer
``M_i^k = beta^k M_i^{k-1} + (1 - beta^k) g_i^k``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence, Union

import numpy as np

from .norms import NormSpec, dual_norm, lmo_step


# ---------------------------------------------------------------------------
# stepsize schedules


@dataclass(frozen=True)
class Constant:
    t: float

    def __post_init__(self):
        if not self.t > 0:
            raise ValueError("constant radius must be positive")

    def radius(self, k: int, grad_dual_norm: float) -> float:
        return self.t


@dataclass(frozen=True)
class PolynomialDecay:
    """``t_base * (k + 1)^(-3/4)``."""

    t_base: float

    def __post_init__(self):
        if not self.t_base > 0:
            raise ValueError("t_base must be positive")

    def radius(self, k: int, grad_dual_norm: float) -> float:
        return self.t_base * (k + 1) ** -0.75


@dataclass(frozen=True)
class AdaptiveDeterministic:
    """``||g|| / (L0 + L1 ||g||)``, the minimizer of the per-layer descent bound."""

    l0: float
    l1: float

    def __post_init__(self):
        _check_constants(self.l0, self.l1)

    def radius(self, k: int, grad_dual_norm: float) -> float:
        denom = self.l0 + self.l1 * grad_dual_norm
        if denom == 0.0:
            return 0.0
        return grad_dual_norm / denom


@dataclass(frozen=True)
class AdaptiveStochastic:
    """``(1 - zeta) ||g|| / (L0 + (1 + zeta) L1 ||g||)`` for relative-variance noise level ``zeta``."""

    l0: float
    l1: float
    zeta: float

    def __post_init__(self):
        _check_constants(self.l0, self.l1)
        if not 0.0 <= self.zeta < 1.0:
            raise ValueError("zeta must lie in [0, 1)")

    def radius(self, k: int, grad_dual_norm: float) -> float:
        denom = self.l0 + (1.0 + self.zeta) * self.l1 * grad_dual_norm
        if denom == 0.0:
            return 0.0
        return (1.0 - self.zeta) * grad_dual_norm / denom


def _check_constants(l0: float, l1: float) -> None:
    if l0 < 0 or l1 < 0:
        raise ValueError("smoothness constants must be non-negative")
    if l0 == 0 and l1 == 0:
        raise ValueError("L0 and L1 cannot both be zero")


StepsizeSchedule = Union[Constant, PolynomialDecay, AdaptiveDeterministic, AdaptiveStochastic]
ADAPTIVE_SCHEDULES = (AdaptiveDeterministic, AdaptiveStochastic)


def radius_at(schedule: StepsizeSchedule, k: int, grad_dual_norm: float) -> float:
    if k < 0:
        raise ValueError("iteration index must be >= 0")
    if grad_dual_norm < 0:
        raise ValueError("dual norm must be >= 0")
    return float(schedule.radius(k, grad_dual_norm))


# ---------------------------------------------------------------------------
# momentum


@dataclass(frozen=True)
class NoMomentum:
    def beta(self, k: int) -> float:
        return 0.0


@dataclass(frozen=True)
class ConstantBeta:
    beta_value: float

    def __post_init__(self):
        if not 0.0 <= self.beta_value < 1.0:
            raise ValueError("beta must lie in [0, 1)")

    def beta(self, k: int) -> float:
        return self.beta_value


@dataclass(frozen=True)
class SqrtDecay:
    """``beta^k = 1 - (k + 1)^(-1/2)``, so ``beta^0 = 0``."""

    def beta(self, k: int) -> float:
        return 1.0 - (k + 1) ** -0.5


MomentumRule = Union[NoMomentum, ConstantBeta, SqrtDecay]


def beta_at(rule: MomentumRule, k: int) -> float:
    if k < 0:
        raise ValueError("iteration index must be >= 0")
    return float(rule.beta(k))


# ---------------------------------------------------------------------------
# state


@dataclass(frozen=True)
class ParamGroup:
    id: str
    x: np.ndarray
    norm: NormSpec
    schedule: StepsizeSchedule


@dataclass(frozen=True)
class OptimizerState:
    """Immutable snapshot; each step returns a new state.

    ``momentum`` is ``None`` until the first stochastic step, which seeds it with
    the first stochastic gradient unless an explicit ``M^0`` was supplied.
    ``last_radii`` holds ``radius_at`` outputs of the most recent step and
    ``last_frozen`` marks groups that did not move (zero driver or zero radius).
    """

    groups: tuple[ParamGroup, ...]
    momentum_rule: MomentumRule = field(default_factory=NoMomentum)
    k: int = 0
    momentum: tuple[np.ndarray, ...] | None = None
    last_radii: tuple[float, ...] = ()
    last_frozen: tuple[bool, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "groups", tuple(self.groups))
        ids = [g.id for g in self.groups]
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate group ids: {ids}")
        if self.momentum is not None:
            object.__setattr__(self, "momentum", tuple(np.asarray(m, dtype=np.float64) for m in self.momentum))
            for grp, m in zip(self.groups, self.momentum, strict=True):
                if m.shape != grp.x.shape:
                    raise ValueError(f"momentum for group {grp.id!r} has shape {m.shape}, expected {grp.x.shape}")

    @property
    def params(self) -> list[np.ndarray]:
        return [g.x for g in self.groups]

    @property
    def ids(self) -> list[str]:
        return [g.id for g in self.groups]

    @property
    def specs(self) -> list[NormSpec]:
        return [g.norm for g in self.groups]


def init_state(
    params: Sequence[np.ndarray],
    specs: Sequence[NormSpec],
    schedules: Sequence[StepsizeSchedule],
    *,
    ids: Sequence[str] | None = None,
    momentum_rule: MomentumRule | None = None,
    momentum: Sequence[np.ndarray] | None = None,
) -> OptimizerState:
    if not (len(params) == len(specs) == len(schedules)):
        raise ValueError("params, specs and schedules must have equal length")
    ids = list(ids) if ids is not None else [f"g{i}" for i in range(len(params))]
    groups = tuple(
        ParamGroup(gid, np.array(x, dtype=np.float64), spec, sched)
        for gid, x, spec, sched in zip(ids, params, specs, schedules)
    )
    return OptimizerState(groups, momentum_rule or NoMomentum(), 0, None if momentum is None else tuple(momentum))


Grads = Union[Sequence[np.ndarray], Mapping[str, np.ndarray]]


def _align(state: OptimizerState, grads: Grads) -> list[np.ndarray]:
    if isinstance(grads, Mapping):
        missing = [g.id for g in state.groups if g.id not in grads]
        if missing:
            raise ValueError(f"missing gradients for groups {missing}")
        grads = [grads[g.id] for g in state.groups]
    if len(grads) != len(state.groups):
        raise ValueError(f"expected {len(state.groups)} gradients, got {len(grads)}")
    out = []
    for grp, g in zip(state.groups, grads):
        g = np.asarray(g, dtype=np.float64)
        if g.shape != grp.x.shape:
            raise ValueError(f"gradient for group {grp.id!r} has shape {g.shape}, expected {grp.x.shape}")
        out.append(g)
    return out


def _update_group(grp: ParamGroup, driver: np.ndarray, k: int) -> tuple[ParamGroup, float, bool]:
    radius = radius_at(grp.schedule, k, dual_norm(grp.norm, driver))
    if radius == 0.0 or not np.any(driver):
        return grp, radius, True
    return replace(grp, x=lmo_step(grp.norm, grp.x, driver, radius)), radius, False


def step_deterministic(state: OptimizerState, grads: Grads) -> OptimizerState:
    """One iteration of the deterministic loop; momentum buffers are left untouched."""
    grads = _align(state, grads)
    results = [_update_group(grp, g, state.k) for grp, g in zip(state.groups, grads)]
    return replace(
        state,
        groups=tuple(r[0] for r in results),
        k=state.k + 1,
        last_radii=tuple(r[1] for r in results),
        last_frozen=tuple(r[2] for r in results),
    )


def step_stochastic(state: OptimizerState, stoch_grads: Grads) -> OptimizerState:
    """One iteration of the momentum loop. Adaptive schedules are driven by ``||M_i^k||_*``."""
    grads = _align(state, stoch_grads)
    beta = beta_at(state.momentum_rule, state.k)
    previous = state.momentum if state.momentum is not None else grads
    momentum = tuple(beta * m + (1.0 - beta) * g for m, g in zip(previous, grads))
    results = [_update_group(grp, m, state.k) for grp, m in zip(state.groups, momentum)]
    return replace(
        state,
        groups=tuple(r[0] for r in results),
        k=state.k + 1,
        momentum=momentum,
        last_radii=tuple(r[1] for r in results),
        last_frozen=tuple(r[2] for r in results),
    )


# ---------------------------------------------------------------------------
# presets

ROLES = ("hidden", "embedding", "head", "bias", "conv")


@dataclass(frozen=True)
class LayerSpec:
    """Shape plus role of a parameter group as seen by the presets.

    Conv kernels are described by ``c_in``, ``c_out`` and ``kernel`` and live
    as the ``(c_out, c_in * kernel**2)`` reshape.
    """

    shape: tuple[int, int]
    role: str = "hidden"
    c_in: int | None = None
    c_out: int | None = None
    kernel: int | None = None

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"unknown role {self.role!r}; expected one of {ROLES}")
        if len(self.shape) != 2 or min(self.shape) < 1:
            raise ValueError(f"shape must be two positive ints, got {self.shape}")

    @classmethod
    def hidden(cls, m: int, n: int) -> "LayerSpec":
        return cls((m, n), "hidden")

    @classmethod
    def embedding(cls, m: int, n: int) -> "LayerSpec":
        return cls((m, n), "embedding")

    @classmethod
    def head(cls, m: int, n: int) -> "LayerSpec":
        return cls((m, n), "head")

    @classmethod
    def bias(cls, c_out: int) -> "LayerSpec":
        return cls((c_out, 1), "bias", c_out=c_out)

    @classmethod
    def conv(cls, c_in: int, c_out: int, kernel: int) -> "LayerSpec":
        return cls((c_out, c_in * kernel * kernel), "conv", c_in=c_in, c_out=c_out, kernel=kernel)


def conv_kernel_to_matrix(w) -> np.ndarray:
    """Reshape a ``(c_out, c_in, k, k)`` kernel to ``(c_out, c_in * k * k)``."""
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 4 or w.shape[2] != w.shape[3]:
        raise ValueError(f"expected a (c_out, c_in, k, k) kernel, got {w.shape}")
    return w.reshape(w.shape[0], -1)


def matrix_to_conv_kernel(m, c_in: int, kernel: int) -> np.ndarray:
    m = np.asarray(m, dtype=np.float64)
    return m.reshape(m.shape[0], c_in, kernel, kernel)


PRESETS = {
    "muon": "spectral norm (scale 1) on every group: X - t U V^T",
    "unscion_llm": "sqrt(n/m) * spectral on hidden matrices; n_p * max-entry on the embedding/head group",
    "unscion_cnn": "sqrt(1/C_out) * Euclidean on biases; k^2 sqrt(C_in/C_out) * spectral on conv; n_p * max-entry on the head",
    "normalized_gd": "Euclidean (Frobenius) norm on every group: X - t g / ||g||",
    "sign_gd": "max-entry norm on every group: X - t sign(g)",
}


def _unsupported(name: str, layer: LayerSpec):
    return ValueError(f"preset {name!r} has no norm rule for role {layer.role!r}")


def preset(name: str, layers: Sequence[LayerSpec]) -> list[NormSpec]:
    """NormSpecs realizing a named optimizer for the given layers."""
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; expected one of {sorted(PRESETS)}")
    specs = []
    for layer in layers:
        m, n = layer.shape
        if name == "muon":
            specs.append(NormSpec.spectral(1.0))
        elif name == "normalized_gd":
            specs.append(NormSpec.euclidean(1.0))
        elif name == "sign_gd":
            specs.append(NormSpec.max_entry(1.0))
        elif name == "unscion_llm":
            if layer.role == "hidden":
                specs.append(NormSpec.spectral(math.sqrt(n / m)))
            elif layer.role in ("embedding", "head"):
                specs.append(NormSpec.max_entry(float(n)))
            else:
                raise _unsupported(name, layer)
        else:  # unscion_cnn
            if layer.role == "bias":
                c_out = layer.c_out or m
                specs.append(NormSpec.euclidean(math.sqrt(1.0 / c_out)))
            elif layer.role == "conv":
                c_in, c_out, k = layer.c_in, layer.c_out, layer.kernel
                if c_in is None or c_out is None or k is None:
                    raise ValueError("conv layers need c_in, c_out and kernel")
                specs.append(NormSpec.spectral(k * k * math.sqrt(c_in / c_out)))
            elif layer.role == "hidden":
                # dense layer == 1x1 conv with c_in = n, c_out = m
                specs.append(NormSpec.spectral(math.sqrt(n / m)))
            elif layer.role == "head":
                specs.append(NormSpec.max_entry(float(n)))
            else:
                raise _unsupported(name, layer)
    return specs
