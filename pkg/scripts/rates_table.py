"""Print iteration counts from the closed-form rates for a few illustrative constant profiles.

    python3 scripts/rates_table.py
"""

from gluon import harness, smoothness, theory

PROFILES = {
    "smooth (L1 = 0)": ([1.0, 1.0, 1.0], [0.0, 0.0, 0.0]),
    "L0 ~ 0, spread L1": ([1e-6, 1e-6, 1e-6], [1.3, 10.0, 70.0]),
    "mixed": ([5.0, 1.0, 0.1], [0.5, 2.0, 8.0]),
}


def main():
    for name, (l0, l1) in PROFILES.items():
        inp = theory.RateInputs(delta0=10.0, l0=l0, l1=l1, epsilon=1e-2, sigma=0.1, mu=0.5, zeta=0.3)
        print(name)
        for key, value in harness.rates_table(inp, k=10_000, radii=[0.01] * len(l0)).items():
            print(f"  {key:<36} {value}")
    print("suggested radii g / (L0 + L1 g) at large g:")
    for l1 in (70.0, 1.3):
        fit = smoothness.SmoothnessFit(l0=1e-9, l1=l1, lam=1.0, mse_rel=0.0, n_points=0)
        print(f"  L1 = {l1:<5} -> {smoothness.suggest_stepsize(fit, 1e3):.3g}")
    print(f"  tuned reference values: {0.00036 * 50:.3g} and {0.00036 * 3000:.3g}")


if __name__ == "__main__":
    main()
