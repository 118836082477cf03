"""Fit (L0, L1) along tiny-MLP trajectories under layer-specific norms and under plain Euclidean norms.

Both configs use full-batch gradients so the trace measures curvature rather than
sampling noise. Prints per-group constants and the relative MSE of the affine model,
using lambda = 0 (no hinge) so the two geometries are compared on plain fit quality.

    python3 scripts/compare_norm_fits.py [--iterations 500] [--lambda 0]
"""

import argparse
import os

from gluon import harness

HERE = os.path.dirname(os.path.abspath(__file__))


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--iterations", type=int, default=500)
    parser.add_argument("--lambda", dest="lam", type=float, default=0.0)
    parser.add_argument("--out", default=os.path.join(HERE, "out"))
    args = parser.parse_args()

    rows = []
    for name in ("mlp_unscion", "mlp_euclidean"):
        cfg = harness.ExperimentConfig.from_file(os.path.join(HERE, "configs", name + ".json"))
        path = os.path.join(args.out, name + ".csv")
        cfg = harness.ExperimentConfig.from_dict(dict(cfg.to_dict(), iterations=args.iterations, trace_path=path))
        trace = harness.run(cfg)
        report = harness.estimate(path, args.lam)
        for gid, entry in report["groups"].items():
            family, scale = trace.metadata["norms"][trace.metadata["group_ids"].index(gid)].split(":")
            rows.append((name, gid, f"{family}:{float(scale):.4g}", entry))

    print(f"{'run':<14} {'group':<5} {'norm':<16} {'L0':>10} {'L1':>10} {'mse_rel':>10} {'t_suggest':>10}")
    for run, gid, norm, e in rows:
        if e["error"]:
            print(f"{run:<14} {gid:<5} {norm:<16} {e['error']}")
            continue
        t = e["suggested_stepsize"]
        t = t if isinstance(t, float) else float("nan")
        print(f"{run:<14} {gid:<5} {norm:<16} {e['l0']:>10.4g} {e['l1']:>10.4g} {e['mse_rel']:>10.4g} {t:>10.4g}")


if __name__ == "__main__":
    main()
