"""Per-group norm descriptors: primal/dual norms, the unit-ball LMO, and the product max-norm."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import linalg


class Family(str, enum.Enum):
    SPECTRAL = "spectral"  # dual: nuclear
    MAX_ENTRY = "max_entry"  # ||.||_{1->inf}; dual: entrywise l1
    EUCLIDEAN = "euclidean"  # Frobenius; self-dual


LMO_BACKENDS = ("exact", "newton_schulz")


@dataclass(frozen=True)
class NormSpec:
    """A scaled base norm ``scale * ||.||_base``.

    ``backend`` only matters for the spectral family: ``"exact"`` forms
    ``U V^T`` from the reduced SVD, ``"newton_schulz"`` uses the polynomial
    approximation from :func:`gluon.linalg.ns_orthogonalize`.
    """

    family: Family
    scale: float = 1.0
    backend: str = "exact"
    ns_iterations: int = linalg.DEFAULT_NS_ITERATIONS
    ns_coefficients: tuple[float, float, float] = linalg.DEFAULT_NS_COEFFICIENTS

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise ValueError(f"norm scale must be positive and finite, got {self.scale}")
        if self.backend not in LMO_BACKENDS:
            raise ValueError(f"unknown LMO backend {self.backend!r}; expected one of {LMO_BACKENDS}")

    @classmethod
    def spectral(cls, scale: float = 1.0, **kwargs) -> "NormSpec":
        return cls(Family.SPECTRAL, scale, **kwargs)

    @classmethod
    def max_entry(cls, scale: float = 1.0) -> "NormSpec":
        return cls(Family.MAX_ENTRY, scale)

    @classmethod
    def euclidean(cls, scale: float = 1.0) -> "NormSpec":
        return cls(Family.EUCLIDEAN, scale)

    @classmethod
    def parse(cls, text: str) -> "NormSpec":
        """Parse ``"family"`` or ``"family:scale"``, e.g. ``"spectral:1.5"``."""
        name, _, scale = text.partition(":")
        return cls(Family(name.strip()), float(scale) if scale else 1.0)

    def label(self) -> str:
        return f"{self.family.value}:{self.scale!r}"


def base_norm(family: Family, x: np.ndarray) -> float:
    if family is Family.SPECTRAL:
        return linalg.spectral_norm(x)
    if family is Family.MAX_ENTRY:
        return linalg.max_abs_entry(x)
    return linalg.frobenius_norm(x)


def base_dual_norm(family: Family, g: np.ndarray) -> float:
    if family is Family.SPECTRAL:
        return linalg.nuclear_norm(g)
    if family is Family.MAX_ENTRY:
        return linalg.entrywise_l1(g)
    return linalg.frobenius_norm(g)


def primal_norm(spec: NormSpec, x) -> float:
    x = linalg.as_matrix(x, "x")
    return spec.scale * base_norm(spec.family, x)


def dual_norm(spec: NormSpec, g) -> float:
    g = linalg.as_matrix(g, "g")
    return base_dual_norm(spec.family, g) / spec.scale


def lmo_direction(spec: NormSpec, g) -> np.ndarray:
    """Minimizer of ``<g, D>`` over ``primal_norm(spec, D) <= 1``.

    A zero gradient yields the zero direction. Zero entries get sign 0 under
    the max-entry norm, and rank-deficient gradients use the reduced ``U V^T``.
    """
    g = linalg.as_matrix(g, "g")
    if not g.any():
        return np.zeros_like(g)
    if spec.family is Family.SPECTRAL:
        if spec.backend == "newton_schulz":
            polar = linalg.ns_orthogonalize(g, spec.ns_iterations, spec.ns_coefficients)
        else:
            polar = linalg.reduced_svd(g).polar()
        return -polar / spec.scale
    if spec.family is Family.MAX_ENTRY:
        return -np.sign(g) / spec.scale
    return -g / (linalg.frobenius_norm(g) * spec.scale)


def lmo_step(spec: NormSpec, x, g, radius: float) -> np.ndarray:
    """``argmin <g, Y>`` over the ball ``{Y : ||Y - x|| <= radius}``, i.e. ``x + radius * lmo_direction``."""
    x = linalg.as_matrix(x, "x")
    if radius < 0 or not math.isfinite(radius):
        raise ValueError(f"radius must be finite and non-negative, got {radius}")
    if np.shape(g) != x.shape:
        raise ValueError(f"gradient shape {np.shape(g)} does not match parameter shape {x.shape}")
    return x + radius * lmo_direction(spec, g)


def _check_aligned(specs: Sequence[NormSpec], mats: Sequence) -> None:
    if len(specs) == 0:
        raise ValueError("max-norm needs at least one group")
    if len(specs) != len(mats):
        raise ValueError(f"{len(specs)} norm specs but {len(mats)} matrices")


def max_norm(specs: Sequence[NormSpec], xs: Sequence) -> float:
    """``max_i ||X_i||_(i)`` on the product space."""
    _check_aligned(specs, xs)
    return max(primal_norm(s, x) for s, x in zip(specs, xs))


def max_norm_dual(specs: Sequence[NormSpec], gs: Sequence) -> float:
    """Dual of the max-norm: ``sum_i ||G_i||_(i)*``."""
    _check_aligned(specs, gs)
    return sum(dual_norm(s, g) for s, g in zip(specs, gs))
