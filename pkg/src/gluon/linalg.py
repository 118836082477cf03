"""Dense matrix primitives: reduced SVD by one-sided Jacobi and Newton-Schulz orthogonalization.

Matrices are plain 2-D ``float64`` numpy arrays. Everything here is a pure
function of its inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Classical quintic used by Muon-style orthogonalizers.
MUON_QUINTIC = (3.4445, -4.7750, 2.0315)
# Default quintic: 5 steps map singular values of any cond<=100 input
# (rank <= 64) into [0.70, 1.29] after Frobenius normalization.
DEFAULT_NS_COEFFICIENTS = (3.6, -4.8, 1.95)
DEFAULT_NS_ITERATIONS = 5
# Cubic Newton-Schulz; converges to the exact polar factor, slowly.
CUBIC_NS_COEFFICIENTS = (1.5, -0.5, 0.0)

# Observed singular-value band of the default backend for cond <= 100.
NS_DEFAULT_BAND = (0.70, 1.30)

JACOBI_MAX_SWEEPS = 100
JACOBI_TOLERANCE = 1e-12
RELATIVE_RANK_TOLERANCE = 1e-12


class ConvergenceError(RuntimeError):
    """The Jacobi sweep cap was hit before the columns became orthogonal."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual={residual:.3e})")
        self.residual = residual


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Validate and return ``a`` as a finite 2-D float64 array (copying only if needed)."""
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name} must have positive dimensions, got {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} contains non-finite entries")
    return arr


@dataclass(frozen=True)
class ReducedSvd:
    """``a = u @ diag(sigma) @ v.T`` keeping only singular values above ``rank_tolerance``."""

    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray
    rank_tolerance: float

    @property
    def rank(self) -> int:
        return int(self.sigma.shape[0])

    def polar(self) -> np.ndarray:
        """The partial isometry ``U V^T`` (zero matrix when the rank is 0)."""
        return self.u @ self.v.T

    def reconstruct(self) -> np.ndarray:
        return (self.u * self.sigma) @ self.v.T


def _round_robin(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Tournament schedule: each round is a set of disjoint column pairs covering all pairs once per sweep."""
    players = list(range(n)) + ([-1] if n % 2 else [])
    size = len(players)
    rounds = []
    for _ in range(size - 1):
        pairs = [(players[i], players[size - 1 - i]) for i in range(size // 2)]
        pairs = [(min(p, q), max(p, q)) for p, q in pairs if p >= 0 and q >= 0]
        if pairs:
            p_idx = np.array([p for p, _ in pairs], dtype=np.intp)
            q_idx = np.array([q for _, q in pairs], dtype=np.intp)
            rounds.append((p_idx, q_idx))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def _jacobi_columns(a: np.ndarray, tol: float, max_sweeps: int) -> tuple[np.ndarray, np.ndarray]:
    """Hestenes one-sided Jacobi: rotate columns of ``a`` until mutually orthogonal.

    Returns the rotated matrix ``a @ v`` and the accumulated rotation ``v``.
    """
    w = a.copy()
    n = w.shape[1]
    v = np.eye(n)
    if n == 1:
        return w, v
    rounds = _round_robin(n)
    residual = np.inf
    for _ in range(max_sweeps):
        residual = 0.0
        rotated = False
        for p, q in rounds:
            wp, wq = w[:, p], w[:, q]
            alpha = np.einsum("ij,ij->j", wp, wp)
            beta = np.einsum("ij,ij->j", wq, wq)
            gamma = np.einsum("ij,ij->j", wp, wq)
            scale = np.sqrt(alpha * beta)
            active = (scale > 0.0) & (np.abs(gamma) > tol * scale)
            if not np.any(active):
                continue
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                cosine = np.where(scale > 0.0, np.abs(gamma) / scale, 0.0)
                zeta = np.where(active, (beta - alpha) / np.where(active, 2.0 * gamma, 1.0), 0.0)
                t = np.where(active, np.copysign(1.0, zeta) / (np.abs(zeta) + np.hypot(1.0, zeta)), 0.0)
            # a rotation angle below the float64 range cannot improve the pair
            active &= t != 0.0
            if not np.any(active):
                continue
            residual = max(residual, float(cosine[active].max()))
            rotated = True
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = c * t
            w[:, p], w[:, q] = c * wp - s * wq, s * wp + c * wq
            vp, vq = v[:, p], v[:, q]
            v[:, p], v[:, q] = c * vp - s * vq, s * vp + c * vq
        if not rotated:
            return w, v
    raise ConvergenceError(f"one-sided Jacobi did not converge in {max_sweeps} sweeps", residual)


def reduced_svd(
    a,
    rank_tolerance: float | None = None,
    *,
    max_sweeps: int = JACOBI_MAX_SWEEPS,
    tol: float = JACOBI_TOLERANCE,
) -> ReducedSvd:
    """Reduced SVD keeping singular values strictly above ``rank_tolerance``.

    The default tolerance is ``1e-12 * sigma_max``. Singular values come back
    sorted in non-increasing order.
    """
    a = as_matrix(a)
    if rank_tolerance is not None and rank_tolerance < 0:
        raise ValueError("rank_tolerance must be non-negative")
    m, n = a.shape
    wide = m < n
    work = a.T if wide else a
    # power-of-two rescaling is exact and keeps the Gram products away from over/underflow
    peak = float(np.max(np.abs(work)))
    shift = 0 if peak == 0.0 else -math.frexp(peak)[1]
    w, v = _jacobi_columns(np.ldexp(work, shift), tol, max_sweeps)
    scaled = np.sqrt(np.einsum("ij,ij->j", w, w))
    order = np.argsort(-scaled, kind="stable")
    scaled = scaled[order]
    w = w[:, order]
    v = v[:, order]
    norms = np.ldexp(scaled, -shift)
    if rank_tolerance is None:
        rank_tolerance = RELATIVE_RANK_TOLERANCE * (float(norms[0]) if norms.size else 0.0)
    keep = (norms > rank_tolerance) & (scaled > 0.0)
    sigma = norms[keep]
    left = w[:, keep] / scaled[keep] if sigma.size else np.zeros((work.shape[0], 0))
    right = v[:, keep]
    if wide:
        left, right = right, left
    return ReducedSvd(u=left, sigma=sigma, v=right, rank_tolerance=float(rank_tolerance))


def ns_orthogonalize(
    a,
    iterations: int = DEFAULT_NS_ITERATIONS,
    coefficients: tuple[float, float, float] = DEFAULT_NS_COEFFICIENTS,
) -> np.ndarray:
    """Approximate ``U V^T`` with the odd polynomial iteration ``X <- aX + b(XX^T)X + c(XX^T)^2 X``.

    The input is first divided by its Frobenius norm so every singular value
    lies in (0, 1]. Singular vectors are preserved exactly (up to rounding);
    only the singular values are pushed toward 1.
    """
    x = as_matrix(a)
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    norm = frobenius_norm(x)
    if norm == 0.0:
        raise ValueError("cannot orthogonalize the zero matrix: direction undefined")
    ca, cb, cc = coefficients
    tall = x.shape[0] > x.shape[1]
    if tall:
        x = x.T
    x = x / norm
    for _ in range(iterations):
        gram = x @ x.T
        x = ca * x + (cb * gram + cc * (gram @ gram)) @ x
    return x.T.copy() if tall else x


def frobenius_norm(a) -> float:
    a = np.asarray(a, dtype=np.float64)
    flat = a.ravel()
    with np.errstate(over="ignore", under="ignore"):
        total = float(flat @ flat)
    if 1e-280 < total < 1e280:
        return math.sqrt(total)
    peak = float(np.max(np.abs(a))) if a.size else 0.0
    if peak == 0.0 or not math.isfinite(peak):
        return peak
    # scale by the largest entry so tiny or huge inputs neither underflow nor overflow
    scaled = a / peak
    return peak * float(np.sqrt(np.sum(scaled * scaled)))


def nuclear_norm(a) -> float:
    return float(np.sum(reduced_svd(a).sigma))


def spectral_norm(a) -> float:
    sigma = reduced_svd(a).sigma
    return float(sigma[0]) if sigma.size else 0.0


def entrywise_l1(a) -> float:
    return float(np.sum(np.abs(np.asarray(a, dtype=np.float64))))


def max_abs_entry(a) -> float:
    return float(np.max(np.abs(np.asarray(a, dtype=np.float64))))


def trace_inner(a, b) -> float:
    """Trace inner product ``tr(a^T b)``."""
    return float(np.sum(np.asarray(a) * np.asarray(b)))
