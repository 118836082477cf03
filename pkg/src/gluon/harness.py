"""Experiment plumbing: flat JSON configs, the run loop, CSV traces and fit reports."""

from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import asdict, dataclass, fields, replace
from typing import Any

import numpy as np

from . import optimizer as opt
from . import problems, smoothness, theory
from .norms import Family, NormSpec, dual_norm, primal_norm
from .smoothness import TRACE_COLUMNS, TraceRecord, TrajectoryTrace

PROBLEMS = ("layered_quadratic", "cosh_separable", "tiny_mlp")
SCHEDULES = ("constant", "polynomial", "adaptive", "adaptive_stochastic")
MOMENTA = ("none", "constant", "sqrt")


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration (an input error)."""


class TraceFormatError(ValueError):
    """Unreadable, empty or malformed trace file (an input error)."""


class NonFiniteError(RuntimeError):
    def __init__(self, k: int, group: str, what: str):
        super().__init__(f"non-finite {what} at iteration {k}, group {group}")
        self.k = k
        self.group = group
        self.what = what


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment. Scalars given for per-group fields are broadcast to every group.

    ``norms`` (a list of ``"family:scale"``) overrides ``preset``; with neither,
    the problem's own default norms are used. Adaptive schedules without
    ``l0``/``l1`` fall back to constants that are valid for the layered quadratic.
    """

    problem: str = "layered_quadratic"
    c: Any = 1.0
    shapes: Any = ((4, 4), (4, 2))
    roles: Any = None
    widths: Any = (4, 8, 2)
    dataset_seed: int = 0
    n_samples: int = 64
    batch_size: int | None = None
    preset: str | None = None
    norms: Any = None
    backend: str = "exact"
    schedule: str = "adaptive"
    t: Any = 0.1
    l0: Any = None
    l1: Any = None
    zeta: float = 0.0
    momentum: str = "none"
    beta: float = 0.9
    iterations: int = 100
    seed: int = 0
    stochastic: bool = False
    sigma: float = 0.0
    trace_path: str = "trace.csv"
    dump_params: bool = False

    def __post_init__(self):
        if self.problem not in PROBLEMS:
            raise ConfigError(f"unknown problem {self.problem!r}; expected one of {PROBLEMS}")
        if self.preset is not None and self.preset not in opt.PRESETS:
            raise ConfigError(f"unknown preset {self.preset!r}; expected one of {sorted(opt.PRESETS)}")
        if self.schedule not in SCHEDULES:
            raise ConfigError(f"unknown schedule {self.schedule!r}; expected one of {SCHEDULES}")
        if self.momentum not in MOMENTA:
            raise ConfigError(f"unknown momentum rule {self.momentum!r}; expected one of {MOMENTA}")
        if not isinstance(self.iterations, int) or isinstance(self.iterations, bool) or self.iterations < 1:
            raise ConfigError("iterations must be an integer >= 1")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an integer in [0, 2^64)")
        if not self.sigma >= 0:
            raise ConfigError("sigma must be non-negative")
        if self.sigma > 0 and not self.stochastic:
            raise ConfigError("sigma > 0 requires stochastic = true")
        if self.backend not in ("exact", "newton_schulz"):
            raise ConfigError(f"unknown backend {self.backend!r}")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        try:
            return cls(**data)
        except ConfigError:
            raise
        except (TypeError, ValueError) as err:
            raise ConfigError(str(err)) from err

    @classmethod
    def from_file(cls, path: str) -> "ExperimentConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as err:
            raise ConfigError(f"cannot read config {path}: {err}") from err
        except json.JSONDecodeError as err:
            raise ConfigError(f"config {path} is not valid JSON: {err}") from err
        if not isinstance(data, dict):
            raise ConfigError("config must be a flat JSON object")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return json.loads(json.dumps(asdict(self)))


# ---------------------------------------------------------------------------
# building the pieces


def _broadcast(value, p: int, name: str) -> list:
    if isinstance(value, (list, tuple)):
        if len(value) != p:
            raise ConfigError(f"{name} has {len(value)} entries, expected {p}")
        return list(value)
    return [value] * p


def build_objective(cfg: ExperimentConfig) -> problems.Objective:
    if cfg.problem == "tiny_mlp":
        if len(cfg.widths) != 3:
            raise ConfigError("widths must be (d, h, o)")
        return problems.tiny_mlp(tuple(cfg.widths), cfg.dataset_seed, cfg.n_samples, batch_size=cfg.batch_size)
    shapes = [tuple(int(d) for d in s) for s in cfg.shapes]
    if not shapes or any(len(s) != 2 or min(s) < 1 for s in shapes):
        raise ConfigError("shapes must be a non-empty list of [m, n] pairs")
    c = _broadcast(cfg.c, len(shapes), "c")
    if cfg.problem == "layered_quadratic":
        rng = np.random.default_rng([cfg.seed, 1])
        anchors = [rng.standard_normal(s) for s in shapes]
        return problems.layered_quadratic(c, anchors)
    return problems.cosh_separable(c, shapes)


def build_specs(cfg: ExperimentConfig, obj: problems.Objective) -> list[NormSpec]:
    p = len(obj.groups)
    if cfg.norms is not None:
        specs = [NormSpec.parse(s) for s in _broadcast(cfg.norms, p, "norms")]
    elif cfg.preset is not None:
        if cfg.roles is not None:
            roles = _broadcast(cfg.roles, p, "roles")
        else:
            roles = [g.role for g in obj.groups]
        if "conv" in roles:
            raise ConfigError("conv roles cannot be expressed in a flat config")
        layers = [opt.LayerSpec(g.shape, r) for g, r in zip(obj.groups, roles)]
        specs = opt.preset(cfg.preset, layers)
    else:
        specs = obj.default_specs
    return [replace(s, backend=cfg.backend) if s.family is Family.SPECTRAL else s for s in specs]


def _constants(cfg: ExperimentConfig, obj: problems.Objective, specs: list[NormSpec]) -> tuple[list, list]:
    p = len(specs)
    if cfg.l0 is None and cfg.l1 is None:
        if obj.name != "layered_quadratic":
            raise ConfigError("adaptive schedules need l0 and l1 for this problem")
        curv = obj.metadata["curvatures"]
        return problems.quadratic_constants(curv, obj.shapes, specs)
    l0 = _broadcast(0.0 if cfg.l0 is None else cfg.l0, p, "l0")
    l1 = _broadcast(0.0 if cfg.l1 is None else cfg.l1, p, "l1")
    return [float(v) for v in l0], [float(v) for v in l1]


def build_schedules(cfg: ExperimentConfig, obj: problems.Objective, specs: list[NormSpec]) -> list:
    p = len(specs)
    if cfg.schedule == "constant":
        return [opt.Constant(float(t)) for t in _broadcast(cfg.t, p, "t")]
    if cfg.schedule == "polynomial":
        return [opt.PolynomialDecay(float(t)) for t in _broadcast(cfg.t, p, "t")]
    l0, l1 = _constants(cfg, obj, specs)
    if cfg.schedule == "adaptive":
        return [opt.AdaptiveDeterministic(a, b) for a, b in zip(l0, l1)]
    return [opt.AdaptiveStochastic(a, b, float(cfg.zeta)) for a, b in zip(l0, l1)]


def build_momentum(cfg: ExperimentConfig):
    if cfg.momentum == "none":
        return opt.NoMomentum()
    if cfg.momentum == "constant":
        return opt.ConstantBeta(float(cfg.beta))
    return opt.SqrtDecay()


def call_seed(seed: int, k: int) -> int:
    """Per-iteration sampling seed derived from the run seed."""
    return int(np.random.SeedSequence([seed, k]).generate_state(1, dtype=np.uint64)[0])


# ---------------------------------------------------------------------------
# run


def _check_finite(arrays, ids, k: int, what: str) -> None:
    for gid, a in zip(ids, arrays):
        if not np.all(np.isfinite(a)):
            raise NonFiniteError(k, gid, what)


def execute(cfg: ExperimentConfig) -> tuple[TrajectoryTrace, list[np.ndarray]]:
    """Run the configured loop in memory; returns the trace and the final parameters."""
    # overflow is detected explicitly and reported with its location
    with np.errstate(over="ignore", invalid="ignore"):
        return _execute(cfg)


def _execute(cfg: ExperimentConfig) -> tuple[TrajectoryTrace, list[np.ndarray]]:
    try:
        obj = build_objective(cfg)
        specs = build_specs(cfg, obj)
        schedules = build_schedules(cfg, obj, specs)
        momentum_rule = build_momentum(cfg)
    except ConfigError:
        raise
    except ValueError as err:
        raise ConfigError(str(err)) from err
    if cfg.stochastic and cfg.sigma > 0:
        obj = problems.with_gaussian_noise(obj, cfg.sigma, cfg.seed, specs)
    ids = obj.ids

    def gradient(params, k):
        if cfg.stochastic:
            return obj.sample_grad(params, call_seed(cfg.seed, k))
        return obj.grad(params)

    x = obj.init(cfg.seed)
    state = opt.init_state(x, specs, schedules, ids=ids, momentum_rule=momentum_rule)
    f0 = obj.value(x)
    g = gradient(x, 0)
    _check_finite(g, ids, 0, "gradient")
    records: list[TraceRecord] = []
    f = f0
    for k in range(cfg.iterations):
        if not math.isfinite(f):
            raise NonFiniteError(k, "*", "loss")
        x_prev = state.params
        state = opt.step_stochastic(state, g) if cfg.stochastic else opt.step_deterministic(state, g)
        x_next = state.params
        _check_finite(x_next, ids, k, "parameter")
        g_next = gradient(x_next, k + 1)
        _check_finite(g_next, ids, k + 1, "gradient")
        for i, gid in enumerate(ids):
            records.append(
                TraceRecord(
                    k=k,
                    group_id=gid,
                    f_value=f,
                    g_dual_next=dual_norm(specs[i], g_next[i]),
                    delta_g_dual=dual_norm(specs[i], g_next[i] - g[i]),
                    delta_x_norm=primal_norm(specs[i], x_next[i] - x_prev[i]),
                    radius_used=state.last_radii[i],
                )
            )
        g = g_next
        f = obj.value(x_next)

    f_inf = obj.metadata.get("f_inf")
    meta = dict(
        config=cfg.to_dict(),
        objective=obj.name,
        group_ids=ids,
        norms=[s.label() for s in specs],
        schedules=[repr(s) for s in schedules],
        momentum=repr(momentum_rule),
        f0=f0,
        f_final=f,
        f_inf=f_inf,
        delta0=None if f_inf is None else f0 - f_inf,
        sigma=cfg.sigma,
    )
    return TrajectoryTrace(records, meta), state.params


def format_trace(trace: TrajectoryTrace) -> str:
    buf = io.StringIO()
    buf.write(",".join(TRACE_COLUMNS) + "\n")
    for r in trace.records:
        buf.write(
            "%d,%s,%.17g,%.17g,%.17g,%.17g,%.17g\n"
            % (r.k, r.group_id, r.f_value, r.g_dual_next, r.delta_g_dual, r.delta_x_norm, r.radius_used)
        )
    return buf.getvalue()


def _meta_path(trace_path: str) -> str:
    return trace_path + ".meta.json"


def _dumps(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _write_text(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def run(cfg: ExperimentConfig, trace_path: str | None = None) -> TrajectoryTrace:
    """Execute ``cfg`` and persist the trace CSV plus a ``.meta.json`` sidecar."""
    path = trace_path or cfg.trace_path
    trace, params = execute(cfg)
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
    _write_text(path, format_trace(trace))
    _write_text(_meta_path(path), _dumps(trace.metadata))
    if cfg.dump_params:
        np.savez(path + ".params.npz", **{gid: x for gid, x in zip(trace.metadata["group_ids"], params)})
    return trace


def load_trace(path: str) -> TrajectoryTrace:
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            text = fh.read()
    except OSError as err:
        raise TraceFormatError(f"cannot read trace {path}: {err}") from err
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise TraceFormatError(f"trace {path} is empty")
    if tuple(rows[0]) != TRACE_COLUMNS:
        raise TraceFormatError(f"trace {path} has header {rows[0]}, expected {list(TRACE_COLUMNS)}")
    if len(rows) == 1:
        raise TraceFormatError(f"trace {path} has no data rows")
    records = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(TRACE_COLUMNS):
            raise TraceFormatError(f"{path}:{lineno}: expected {len(TRACE_COLUMNS)} fields, got {len(row)}")
        try:
            records.append(TraceRecord(int(row[0]), row[1], *(float(v) for v in row[2:])))
        except ValueError as err:
            raise TraceFormatError(f"{path}:{lineno}: {err}") from err
    meta = {}
    if os.path.exists(_meta_path(path)):
        with open(_meta_path(path), encoding="utf-8") as fh:
            meta = json.load(fh)
    return TrajectoryTrace(records, meta)


# ---------------------------------------------------------------------------
# estimate


def _theory(fits: dict, meta: dict, epsilon: float) -> dict:
    ok = [f for f in fits.values() if f.get("error") is None]
    if len(ok) != len(fits) or not ok:
        return {"unavailable": "some groups could not be fitted"}
    delta0 = meta.get("delta0")
    if delta0 is None:
        return {"unavailable": "delta0 unknown (no f_inf in trace metadata)"}
    l0 = [f["l0"] for f in ok]
    l1 = [f["l1"] for f in ok]
    sigma = float(meta.get("sigma") or 0.0)
    inp = theory.RateInputs(max(delta0, 0.0), l0, l1, epsilon, sigma=sigma)
    out: dict[str, Any] = {"delta0": delta0, "epsilon": epsilon}
    out["det_iterations_plain"] = _attempt(theory.det_iterations_plain, inp)
    out["det_iterations_weighted"] = _attempt(theory.det_iterations_weighted, inp)
    iterations = meta.get("config", {}).get("iterations")
    if iterations:
        if all(v > 0 for v in l1):
            out["stoch_bound"] = _attempt(theory.stoch_bound, iterations, inp, False)
        else:
            out["stoch_bound"] = {"unavailable": "requires L1 > 0 for every group"}
        out["stoch_bound_k"] = iterations
    return out


def _attempt(fn, *args):
    try:
        return fn(*args)
    except ValueError as err:
        return {"unavailable": str(err)}


def estimate_trace(trace: TrajectoryTrace, lam: float = 1.0, epsilon: float = 1e-2) -> dict:
    """Per-group ``fit_constants`` and suggested radius at the last recorded ``g``."""
    groups: dict[str, dict] = {}
    for gid in trace.group_ids():
        entry: dict[str, Any] = {"error": None}
        try:
            est = smoothness.trajectory_smoothness(trace, gid)
            entry["skipped"] = est.skipped
            fit = smoothness.fit_constants(est.l_hat, est.g_dual_next, lam)
            g_last = float(trace.column(gid, "g_dual_next")[-1])
            entry.update(
                l0=fit.l0,
                l1=fit.l1,
                mse_rel=fit.mse_rel,
                n_points=fit.n_points,
                tie_broken=fit.tie_broken,
                g_dual_last=g_last,
                suggested_stepsize=_attempt(smoothness.suggest_stepsize, fit, g_last),
            )
        except ValueError as err:
            entry["error"] = f"{type(err).__name__}: {err}"
        groups[gid] = entry
    failed = sorted(gid for gid, e in groups.items() if e["error"] is not None)
    return {
        "lambda": lam,
        "groups": groups,
        "failed_groups": failed,
        "config": trace.metadata.get("config"),
        "theory": _theory(groups, trace.metadata, epsilon),
    }


def estimate(trace_path: str, lam: float = 1.0, out_path: str | None = None, epsilon: float = 1e-2) -> dict:
    """Load a trace, fit every group and write the JSON report (default ``<trace>.report.json``)."""
    report = estimate_trace(load_trace(trace_path), lam, epsilon)
    _write_text(out_path or trace_path + ".report.json", _dumps(report))
    return report


def rates_table(inp: theory.RateInputs, k: int | None = None, radii=None) -> dict:
    """Every applicable theory formula for ``inp``; inapplicable ones carry a reason."""
    out: dict[str, Any] = {}
    out["det_iterations_plain"] = _attempt(theory.det_iterations_plain, inp)
    if any(v == 0 for v in inp.l1):
        out["det_iterations_weighted"] = {"unavailable": "requires L1 > 0"}
        out["adaptive_stoch_iterations_weighted"] = {"unavailable": "requires L1 > 0"}
    else:
        out["det_iterations_weighted"] = _attempt(theory.det_iterations_weighted, inp)
        out["adaptive_stoch_iterations_weighted"] = _attempt(theory.adaptive_stoch_iterations, inp, "weighted")
    out["adaptive_stoch_iterations_plain"] = _attempt(theory.adaptive_stoch_iterations, inp, "plain")
    if inp.mu is None:
        out["pl_iterations"] = {"unavailable": "requires mu"}
    else:
        out["pl_iterations"] = _attempt(theory.pl_iterations, inp, False)
        if inp.l1_max == 0:
            out["pl_iterations_linear"] = _attempt(theory.pl_iterations, inp, True)
        else:
            out["pl_iterations_linear"] = {"unavailable": "requires L1 = 0"}
    if k is not None:
        if inp.l1_max == 0:
            if radii is None:
                out["stoch_bound"] = {"unavailable": "L1 = 0 branch requires base radii t"}
            else:
                out["stoch_bound"] = _attempt(theory.stoch_bound, k, inp, True, radii)
        elif any(v == 0 for v in inp.l1):
            out["stoch_bound"] = {"unavailable": "mixed zero and non-zero L1"}
        else:
            out["stoch_bound"] = _attempt(theory.stoch_bound, k, inp, False)
        out["stoch_bound_k"] = k
    return out


def dumps(obj) -> str:
    return _dumps(obj)
