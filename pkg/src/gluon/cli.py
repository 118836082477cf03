"""Command line entry point: ``run``, ``estimate``, ``rates`` and ``presets list``.

Exit codes: 0 success, 1 runtime failure, 2 input error.
"""

from __future__ import annotations

import argparse
import sys

from . import harness, optimizer, theory

EXIT_OK, EXIT_RUNTIME, EXIT_INPUT = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gluon", description="Layer-wise LMO optimizer experiments and smoothness estimation.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_run = sub.add_parser("run", help="run an experiment and write its trace")
    p_run.add_argument("--config", required=True, help="flat JSON config file")
    p_run.add_argument("--trace", help="override trace_path from the config")

    p_est = sub.add_parser("estimate", help="fit (L0, L1) per group from a trace")
    p_est.add_argument("--trace", required=True)
    p_est.add_argument("--lambda", dest="lam", type=float, default=1.0, help="hinge weight (default 1)")
    p_est.add_argument("--eps", type=float, default=1e-2, help="target accuracy for the theory predictions")
    p_est.add_argument("--out", help="report path (default <trace>.report.json)")

    p_rates = sub.add_parser("rates", help="evaluate the closed-form iteration counts and bounds")
    p_rates.add_argument("--p", type=int, help="group count; scalar L0/L1 are broadcast to it")
    p_rates.add_argument("--delta0", type=float, required=True)
    p_rates.add_argument("--l0", type=_floats, required=True)
    p_rates.add_argument("--l1", type=_floats, required=True)
    p_rates.add_argument("--eps", type=float, required=True)
    p_rates.add_argument("--sigma", type=float, default=0.0)
    p_rates.add_argument("--zeta", type=float, default=0.0)
    p_rates.add_argument("--mu", type=float)
    p_rates.add_argument("--k", type=int, help="iteration count for the stochastic bound")
    p_rates.add_argument("--t", type=_floats, help="base radii for the L1 = 0 stochastic bound")

    p_pre = sub.add_parser("presets", help="list the named norm presets")
    p_pre.add_argument("action", choices=["list"])
    return parser


def _cmd_run(args) -> int:
    cfg = harness.ExperimentConfig.from_file(args.config)
    trace = harness.run(cfg, args.trace)
    path = args.trace or cfg.trace_path
    print(f"wrote {len(trace.records)} rows to {path}")
    return EXIT_OK


def _cmd_estimate(args) -> int:
    if args.lam < 0:
        raise harness.ConfigError("--lambda must be non-negative")
    report = harness.estimate(args.trace, args.lam, args.out, args.eps)
    sys.stdout.write(harness.dumps(report))
    return EXIT_RUNTIME if report["failed_groups"] else EXIT_OK


def _broadcast(values: list[float], p: int | None, name: str) -> list[float]:
    if p is None:
        return values
    if len(values) == 1:
        return values * p
    if len(values) != p:
        raise harness.ConfigError(f"--{name} has {len(values)} entries but --p is {p}")
    return values


def _cmd_rates(args) -> int:
    l0 = _broadcast(args.l0, args.p, "l0")
    l1 = _broadcast(args.l1, args.p, "l1")
    if len(l0) != len(l1):
        raise harness.ConfigError(f"--l0 has {len(l0)} entries, --l1 has {len(l1)}")
    inp = theory.RateInputs(args.delta0, l0, l1, args.eps, sigma=args.sigma, mu=args.mu, zeta=args.zeta)
    radii = None if args.t is None else _broadcast(args.t, len(l0), "t")
    sys.stdout.write(harness.dumps(harness.rates_table(inp, args.k, radii)))
    return EXIT_OK


def _cmd_presets(args) -> int:
    for name in sorted(optimizer.PRESETS):
        print(f"{name}\t{optimizer.PRESETS[name]}")
    return EXIT_OK


COMMANDS = {"run": _cmd_run, "estimate": _cmd_estimate, "rates": _cmd_rates, "presets": _cmd_presets}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (harness.ConfigError, harness.TraceFormatError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as err:
        # invalid numeric inputs (RateInputs validation and the like)
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as err:  # noqa: BLE001 - any other failure is a runtime error
        print(f"runtime failure: {type(err).__name__}: {err}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
