"""Momentum LMO method with decaying radii on a noisy layered quadratic versus the closed-form bound.

For each K the script prints ``min_k sum_i t_i E||grad_i f(X^k)||_*`` (mean over seeds)
next to the bound; both bound branches are exercised.

    python3 scripts/stochastic_bound.py [--seeds 10] [--kmax 10000] [--sigma 1.0]
"""

import argparse

import numpy as np

from gluon import norms, optimizer as opt, problems, theory
from gluon.norms import NormSpec


def criterion_curve(base, specs, radii, sigma, k_max, seeds):
    curves = []
    for seed in seeds:
        noisy = problems.with_gaussian_noise(base, sigma, seed, specs)
        state = opt.init_state(base.init(0), specs, [opt.PolynomialDecay(t) for t in radii], momentum_rule=opt.SqrtDecay())
        curve = np.empty(k_max)
        for k in range(k_max):
            params = state.params
            curve[k] = sum(t * norms.dual_norm(s, g) for t, s, g in zip(radii, specs, base.grad(params)))
            state = opt.step_stochastic(state, noisy.stoch_grad(params, k))
        curves.append(curve)
    return np.mean(curves, axis=0)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--seeds", type=int, default=10)
    parser.add_argument("--kmax", type=int, default=10_000)
    parser.add_argument("--sigma", type=float, default=1.0)
    args = parser.parse_args()

    c, shapes = [1.0, 2.0], [(3, 3), (2, 4)]
    rng = np.random.default_rng([6, 1])
    base = problems.layered_quadratic(c, [rng.standard_normal(s) for s in shapes])
    specs = [NormSpec.euclidean()] * 2
    delta0 = base.value(base.init(0))
    ks = [k for k in (10, 100, 1000, 10_000, 100_000) if k <= args.kmax]

    branches = {
        "L1 = 0, t = (0.2, 0.1)": ([0.0, 0.0], [0.2, 0.1]),
        "L1 = 1, t = 1/12": ([1.0, 1.0], [1 / 12, 1 / 12]),
    }
    for label, (l1, radii) in branches.items():
        curve = criterion_curve(base, specs, radii, args.sigma, args.kmax, range(args.seeds))
        inp = theory.RateInputs(delta0, c, l1, 1.0, sigma=args.sigma)
        print(label)
        for k in ks:
            zero = l1[0] == 0.0
            bound = theory.stoch_bound(k, inp, zero, radii if zero else None)
            print(f"  K={k:>6}  observed {curve[:k].min():.4g}  bound {bound:.4g}")


if __name__ == "__main__":
    main()
