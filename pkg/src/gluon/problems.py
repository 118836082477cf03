"""Built-in objectives with analytic gradients, seeded stochastic oracles and smoothness metadata.

Parameters are passed around as lists of 2-D arrays aligned with ``Objective.groups``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .norms import Family, NormSpec

Params = list  # list[np.ndarray], one per group


@dataclass(frozen=True)
class GroupInfo:
    id: str
    shape: tuple[int, int]
    norm: NormSpec = field(default_factory=NormSpec.euclidean)
    role: str = "hidden"


@dataclass(frozen=True)
class Objective:
    """``value``/``grad`` over a parameter list, plus optional ``stoch_grad(params, seed)``.

    ``metadata`` carries whatever is known analytically: ``f_inf``, reference
    ``l0``/``l1`` (per group, under the stated ``norm_basis``), ``mu``.
    """

    name: str
    groups: tuple[GroupInfo, ...]
    value: Callable[[Params], float]
    grad: Callable[[Params], Params]
    init: Callable[[int], Params]
    stoch_grad: Optional[Callable[[Params, int], Params]] = None
    metadata: dict = field(default_factory=dict)

    @property
    def ids(self) -> list[str]:
        return [g.id for g in self.groups]

    @property
    def shapes(self) -> list[tuple[int, int]]:
        return [g.shape for g in self.groups]

    @property
    def default_specs(self) -> list[NormSpec]:
        return [g.norm for g in self.groups]

    def sample_grad(self, params: Params, seed: int) -> Params:
        """Stochastic gradient if the objective has one, else the exact gradient."""
        if self.stoch_grad is None:
            return self.grad(params)
        return self.stoch_grad(params, seed)


def _per_group(values, p: int, name: str) -> list[float]:
    if np.isscalar(values):
        values = [values] * p
    values = [float(v) for v in values]
    if len(values) != p:
        raise ValueError(f"{name} has {len(values)} entries, expected {p}")
    return values


def _dual_norm_factor(spec: NormSpec, shape: tuple[int, int]) -> float:
    """Smallest kappa with ``base_dual(A) <= kappa * base_norm(A)`` for all ``A`` of this shape."""
    m, n = shape
    if spec.family is Family.SPECTRAL:
        return float(min(m, n))
    if spec.family is Family.MAX_ENTRY:
        return float(m * n)
    return 1.0


# ---------------------------------------------------------------------------


def layered_quadratic(c: Sequence[float], anchors: Sequence[np.ndarray], *, init_scale: float = 1.0) -> Objective:
    """``f(X) = sum_i (c_i / 2) ||X_i - A_i||_F^2``.

    Under Euclidean group norms the layer-wise constants are ``L0_i = c_i``,
    ``L1_i = 0`` and the layer-wise PL constant is ``min c_i``.
    """
    anchors = [np.array(a, dtype=np.float64) for a in anchors]
    c = _per_group(c, len(anchors), "c")
    if any(ci <= 0 for ci in c):
        raise ValueError("curvatures c_i must be positive")
    groups = tuple(GroupInfo(f"g{i}", a.shape) for i, a in enumerate(anchors))

    def value(params):
        return float(sum(0.5 * ci * np.sum((x - a) ** 2) for ci, x, a in zip(c, params, anchors)))

    def grad(params):
        return [ci * (x - a) for ci, x, a in zip(c, params, anchors)]

    def init(seed):
        rng = np.random.default_rng(seed)
        return [a + init_scale * rng.standard_normal(a.shape) for a in anchors]

    meta = dict(f_inf=0.0, l0=list(c), l1=[0.0] * len(c), mu=min(c), norm_basis="euclidean", curvatures=list(c))
    return Objective("layered_quadratic", groups, value, grad, init, None, meta)


def quadratic_constants(c: Sequence[float], shapes: Sequence[tuple[int, int]], specs: Sequence[NormSpec]):
    """Valid ``(L0, L1)`` for :func:`layered_quadratic` under arbitrary group norms.

    ``||c dX||_* = (c / a) base_dual(dX) <= (c kappa / a^2) * (a base(dX))``, so
    ``L0_i = c_i kappa_i / a_i^2`` and ``L1_i = 0``.
    """
    c = _per_group(c, len(shapes), "c")
    l0 = [ci * _dual_norm_factor(s, shape) / s.scale**2 for ci, s, shape in zip(c, specs, shapes)]
    return l0, [0.0] * len(l0)


def cosh_separable(c: Sequence[float], shapes: Sequence[tuple[int, int]], *, init_scale: float = 1.0) -> Objective:
    """``f(X) = sum_i c_i sum_jl cosh(x_ijl)``; (L0, L1)-smooth with ``L1 > 0``.

    ``cosh'' = cosh <= 1 + |sinh|`` gives reference constants ``L0_i ~ c_i`` and
    ``L1_i ~ 1`` for steps of bounded length.
    """
    shapes = [tuple(int(d) for d in s) for s in shapes]
    c = _per_group(c, len(shapes), "c")
    if any(ci <= 0 for ci in c):
        raise ValueError("c_i must be positive")
    groups = tuple(GroupInfo(f"g{i}", s) for i, s in enumerate(shapes))

    def value(params):
        return float(sum(ci * np.sum(np.cosh(x)) for ci, x in zip(c, params)))

    def grad(params):
        return [ci * np.sinh(x) for ci, x in zip(c, params)]

    def init(seed):
        rng = np.random.default_rng(seed)
        return [init_scale * rng.standard_normal(s) for s in shapes]

    f_inf = float(sum(ci * s[0] * s[1] for ci, s in zip(c, shapes)))
    meta = dict(f_inf=f_inf, l0=list(c), l1=[1.0] * len(c), norm_basis="euclidean", constants="empirical reference")
    return Objective("cosh_separable", groups, value, grad, init, None, meta)


def tiny_mlp(
    widths: tuple[int, int, int],
    dataset_seed: int = 0,
    n_samples: int = 64,
    *,
    batch_size: int | None = None,
) -> Objective:
    """One-hidden-layer tanh network fit by mean squared error to a seeded teacher.

    Groups: ``W1 (h x d)``, ``b1 (h x 1)``, ``W2 (o x h)``, ``b2 (o x 1)``.
    ``stoch_grad(params, seed)`` draws a minibatch of ``batch_size`` samples
    without replacement (the whole set when ``batch_size == n_samples``).
    """
    d, h, o = (int(w) for w in widths)
    if min(d, h, o) < 1 or n_samples < 1:
        raise ValueError("widths and n_samples must be positive")
    batch_size = batch_size or max(1, n_samples // 4)
    if not 1 <= batch_size <= n_samples:
        raise ValueError("batch_size must lie in [1, n_samples]")

    rng = np.random.default_rng(dataset_seed)
    inputs = rng.standard_normal((d, n_samples))
    t_w1 = rng.standard_normal((2 * h, d)) / math.sqrt(d)
    t_w2 = rng.standard_normal((o, 2 * h)) / math.sqrt(2 * h)
    targets = t_w2 @ np.tanh(t_w1 @ inputs) + 0.01 * rng.standard_normal((o, n_samples))

    groups = (
        GroupInfo("W1", (h, d), NormSpec.spectral(math.sqrt(d / h)), "hidden"),
        GroupInfo("b1", (h, 1), NormSpec.euclidean(math.sqrt(1.0 / h)), "bias"),
        GroupInfo("W2", (o, h), NormSpec.max_entry(float(h)), "head"),
        GroupInfo("b2", (o, 1), NormSpec.euclidean(math.sqrt(1.0 / o)), "bias"),
    )

    def forward(params, x):
        w1, b1, w2, b2 = params
        hidden = np.tanh(w1 @ x + b1)
        return hidden, w2 @ hidden + b2

    def loss_on(params, idx):
        _, pred = forward(params, inputs[:, idx])
        return float(np.mean((pred - targets[:, idx]) ** 2))

    def grad_on(params, idx):
        x, y = inputs[:, idx], targets[:, idx]
        w1, b1, w2, b2 = params
        hidden, pred = forward(params, x)
        d_pred = 2.0 * (pred - y) / pred.size
        d_hidden = (w2.T @ d_pred) * (1.0 - hidden * hidden)
        return [
            d_hidden @ x.T,
            d_hidden.sum(axis=1, keepdims=True),
            d_pred @ hidden.T,
            d_pred.sum(axis=1, keepdims=True),
        ]

    full = np.arange(n_samples)

    def value(params):
        return loss_on(params, full)

    def grad(params):
        return grad_on(params, full)

    def stoch_grad(params, seed):
        idx = np.sort(np.random.default_rng(seed).choice(n_samples, size=batch_size, replace=False))
        return grad_on(params, idx)

    def init(seed):
        r = np.random.default_rng(seed)
        return [
            r.standard_normal((h, d)) / math.sqrt(d),
            np.zeros((h, 1)),
            r.standard_normal((o, h)) / math.sqrt(h),
            np.zeros((o, 1)),
        ]

    meta = dict(f_inf=0.0, f_inf_is_lower_bound=True, batch_size=batch_size, n_samples=n_samples)
    return Objective("tiny_mlp", groups, value, grad, init, stoch_grad, meta)


# ---------------------------------------------------------------------------


def noise_std(spec: NormSpec, shape: tuple[int, int], sigma_target: float) -> float:
    """Per-entry std ``s`` such that iid ``N(0, s^2)`` noise has ``E||noise||_*^2 <= sigma_target^2``.

    Euclidean: ``E||N||_F^2 = mn s^2`` (exact). Max-entry (dual = entrywise l1):
    ``E||N||_1^2 = s^2 (mn (1 - 2/pi) + (mn)^2 2/pi)`` (exact). Spectral (dual =
    nuclear): ``||N||_*^2 <= min(m, n) ||N||_F^2`` (conservative).
    """
    m, n = shape
    mn = m * n
    if spec.family is Family.EUCLIDEAN:
        second_moment = mn
    elif spec.family is Family.MAX_ENTRY:
        second_moment = mn * (1.0 - 2.0 / math.pi) + mn * mn * 2.0 / math.pi
    else:
        second_moment = min(m, n) * mn
    # dual norm carries a 1/scale factor
    return sigma_target * spec.scale / math.sqrt(second_moment)


def with_gaussian_noise(
    base: Objective,
    sigma_target: float,
    seed: int,
    specs: Sequence[NormSpec] | None = None,
) -> Objective:
    """Wrap ``base`` so ``stoch_grad = grad + zero-mean Gaussian noise`` obeying the dual-norm variance bound."""
    if sigma_target < 0:
        raise ValueError("sigma_target must be non-negative")
    specs = list(specs) if specs is not None else base.default_specs
    if len(specs) != len(base.groups):
        raise ValueError("one norm spec per group is required")
    stds = [noise_std(s, g.shape, sigma_target) for s, g in zip(specs, base.groups)]

    def stoch_grad(params, call_seed):
        grads = base.grad(params)
        if sigma_target == 0.0:
            return grads
        rng = np.random.default_rng([seed, call_seed])
        return [g + s * rng.standard_normal(g.shape) for g, s in zip(grads, stds)]

    meta = dict(base.metadata)
    meta.update(
        sigma_target=sigma_target,
        noise_std=stds,
        noise_norms=[s.label() for s in specs],
        noise_calibration="analytic second-moment bound per norm family",
    )
    return Objective(base.name, base.groups, base.value, base.grad, base.init, stoch_grad, meta)


def finite_difference_grad(value: Callable[[Params], float], params: Params, step: float = 1e-5) -> Params:
    """Central differences, one coordinate at a time."""
    out = []
    work = [np.array(p, dtype=np.float64) for p in params]
    for i, p in enumerate(work):
        g = np.zeros_like(p)
        for idx in np.ndindex(p.shape):
            orig = p[idx]
            p[idx] = orig + step
            hi = value(work)
            p[idx] = orig - step
            lo = value(work)
            p[idx] = orig
            g[idx] = (hi - lo) / (2.0 * step)
        out.append(g)
    return out
