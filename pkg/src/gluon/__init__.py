"""Layer-wise LMO optimizers under (L0, L1)-smoothness: numerics, loops, estimators and rates."""

from .linalg import ReducedSvd, ns_orthogonalize, reduced_svd
from .norms import Family, NormSpec, dual_norm, lmo_direction, lmo_step, max_norm, max_norm_dual, primal_norm
from .optimizer import (
    AdaptiveDeterministic,
    AdaptiveStochastic,
    Constant,
    ConstantBeta,
    LayerSpec,
    NoMomentum,
    OptimizerState,
    PolynomialDecay,
    SqrtDecay,
    beta_at,
    init_state,
    preset,
    radius_at,
    step_deterministic,
    step_stochastic,
)
from .smoothness import SmoothnessFit, TrajectoryTrace, fit_constants, mse_rel, suggest_stepsize, trajectory_smoothness
from .theory import RateInputs

__all__ = [
    "AdaptiveDeterministic",
    "AdaptiveStochastic",
    "Constant",
    "ConstantBeta",
    "Family",
    "LayerSpec",
    "NoMomentum",
    "NormSpec",
    "OptimizerState",
    "PolynomialDecay",
    "RateInputs",
    "ReducedSvd",
    "SmoothnessFit",
    "SqrtDecay",
    "TrajectoryTrace",
    "beta_at",
    "dual_norm",
    "fit_constants",
    "init_state",
    "lmo_direction",
    "lmo_step",
    "max_norm",
    "max_norm_dual",
    "mse_rel",
    "ns_orthogonalize",
    "preset",
    "primal_norm",
    "radius_at",
    "reduced_svd",
    "step_deterministic",
    "step_stochastic",
    "suggest_stepsize",
    "trajectory_smoothness",
]
