"""Declarative experiment runner.

Specs are flat ``key = value`` files with dotted sections::

    name = ring4_ipec
    graph.family = ring_4
    qaoa.p = 2
    noise.epsilon = 0.05
    strategy.name = ipec
    strategy.samples = 1000
    optimizer.max_steps = 100
    optimizer.x0 = [0.1, 0.5, 0.7, 0.9]
    run.seed = 0

Values are JSON literals where they parse as JSON, bare strings otherwise.
``#`` starts a comment. Every run writes ``trace.csv`` and ``summary.json``
into the output directory, plus plot-data CSVs for the strategies that have
them.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import math
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .circuit import Circuit
from .cost import StageTrace, cost_function_from_trace, cost_report_csv, eta, fit_ab, predict_fab
from .learning import DEFAULT_DEPTHS, learn_model
from .mitigation import (
    ApecSchedule,
    ZneConfig,
    appec_run,
    build_sample_set,
    estimate_noisy,
    exact_signed_estimate,
    fidelity,
    ideal_distribution,
    ipec_estimate,
    ipec_run,
    location_channels,
    maxcut_distribution,
    mitigate_distribution,
    noisy_distribution,
    pec_estimate_fresh,
    round_half_up,
    stream,
    zne_estimate,
)
from .noise import PauliChannel, depolarizing_model, error_probability_model, gamma
from .optimize import OptimizerConfig, Trace, nelder_mead
from .qaoa import QaoaProblem, distance, landscape_constraint_scan, landscape_line_scan, make_graph, n_cut
from .transfer import z_string_tensors

STRATEGIES = ("ideal", "noisy", "pec_fresh", "ipec", "appec", "zne", "distribution", "landscape", "learn")
STOCHASTIC = ("pec_fresh", "ipec", "appec", "distribution", "learn")
OUTPUT_ENV = "IPEC_OUTPUT_DIR"


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, key: str | None = None):
        where = f"line {line}: " if line else ""
        what = f"{key}: " if key else ""
        super().__init__(f"{where}{what}{message}")
        self.line = line
        self.key = key


# -- parsing -----------------------------------------------------------------

def parse_config(text: str) -> tuple[dict, dict]:
    """Return ``(values, lines)`` keyed by dotted name."""
    values, lines = {}, {}
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", no)
        key, val = (s.strip() for s in line.split("=", 1))
        if not key or not all(part.replace("_", "").isalnum() for part in key.split(".")):
            raise ConfigError(f"malformed key {key!r}", no)
        if key in values:
            raise ConfigError(f"duplicate key (first set on line {lines[key]})", no, key)
        if not val:
            raise ConfigError("empty value", no, key)
        try:
            values[key] = json.loads(val)
        except json.JSONDecodeError:
            if val[0] in "[{\"":
                raise ConfigError(f"unparseable value {val!r}", no, key) from None
            values[key] = val
        lines[key] = no
    return values, lines


# key -> (field, expected type)
_FIELDS = {
    "name": ("name", str),
    "graph.family": ("graph", str),
    "graph.n": ("n", int),
    "graph.edges": ("edges", list),
    "qaoa.p": ("p", int),
    "noise.epsilon": ("epsilon", float),
    "noise.convention": ("convention", str),
    "strategy.name": ("strategy", str),
    "strategy.samples": ("samples", int),
    "strategy.stages": ("stages", int),
    "strategy.q": ("q", float),
    "strategy.m": ("m", float),
    "strategy.schedule": ("schedule", list),
    "strategy.budgets": ("budgets", list),
    "strategy.factors": ("factors", list),
    "strategy.cutoff": ("cutoff", int),
    "strategy.early_stop": ("early_stop", float),
    "strategy.reference": ("reference", list),
    "strategy.full_run": ("full_run", bool),
    "strategy.mode": ("mode", (str, int)),
    "strategy.params": ("params", list),
    "strategy.n_values": ("n_values", list),
    "strategy.objective": ("objective", str),
    "strategy.offsets": ("offsets", list),
    "strategy.endpoint": ("endpoint", list),
    "strategy.points": ("points", int),
    "strategy.depths": ("depths", list),
    "strategy.twirls": ("twirls", int),
    "strategy.spam": ("spam", float),
    "optimizer.max_steps": ("max_steps", int),
    "optimizer.tol": ("tol", float),
    "optimizer.ftol": ("ftol", float),
    "optimizer.xtol": ("xtol", float),
    "optimizer.x0": ("x0", list),
    "run.seed": ("seed", int),
    "run.restarts": ("restarts", int),
    "run.output": ("output", str),
}
_NON_SEMANTIC = {"name", "output"}


@dataclass(frozen=True)
class ExperimentSpec:
    name: str = "experiment"
    graph: str = "ring_4"
    n: int | None = None
    edges: tuple | None = None
    p: int = 2
    epsilon: float = 0.0
    convention: str = "probability"  # per-qubit error probability; "rate" = six eps/4 generators
    strategy: str = "ideal"
    samples: int = 1000
    stages: int = 4
    q: float = 40.0
    m: float = 1.0
    schedule: tuple | None = None
    budgets: tuple | None = None
    factors: tuple = (1.0, 1.2, 1.4, 1.6, 1.8, 2.0, 2.2, 2.4, 2.6, 2.8, 3.0)
    cutoff: int | None = None
    early_stop: float | None = None
    reference: tuple | None = None
    full_run: bool = True
    mode: str | int = "exact"
    params: tuple | None = None
    n_values: tuple = (2, 3, 4, 5, 6, 7)
    objective: str = "ideal"
    offsets: tuple = tuple(np.round(np.linspace(-0.2, 0.2, 21), 10))
    endpoint: tuple | None = None
    points: int = 41
    depths: tuple = DEFAULT_DEPTHS
    twirls: int = 30
    spam: float = 0.0
    max_steps: int = 100
    tol: float | None = None
    ftol: float | None = None
    xtol: float | None = None
    x0: tuple | None = None
    seed: int | None = None
    restarts: int = 0
    output: str | None = None
    lines: dict = field(default_factory=dict, compare=False, repr=False)

    @classmethod
    def from_text(cls, text: str) -> ExperimentSpec:
        values, lines = parse_config(text)
        kw = {}
        for key, val in values.items():
            if key not in _FIELDS:
                raise ConfigError("unknown key", lines[key], key)
            name, typ = _FIELDS[key]
            if typ is float and isinstance(val, int) and not isinstance(val, bool):
                val = float(val)
            if not isinstance(val, typ) or (typ is int and isinstance(val, bool)):
                raise ConfigError(f"expected {getattr(typ, '__name__', typ)}, got {val!r}", lines[key], key)
            if isinstance(val, list):
                val = _freeze(val)
            kw[name] = val
        spec = cls(**kw, lines=lines)
        spec.validate()
        return spec

    @classmethod
    def load(cls, path) -> ExperimentSpec:
        return cls.from_text(Path(path).read_text())

    def _fail(self, message: str, field_name: str):
        key = next((k for k, (f, _) in _FIELDS.items() if f == field_name), None)
        raise ConfigError(message, self.lines.get(key), key)

    def validate(self) -> None:
        if self.strategy not in STRATEGIES:
            self._fail(f"unknown strategy {self.strategy!r}", "strategy")
        if self.convention not in ("probability", "rate"):
            self._fail("convention is 'probability' or 'rate'", "convention")
        try:
            self.problem()
        except ValueError as exc:
            self._fail(str(exc), "graph")
        if self.x0 is not None and len(self.x0) != 2 * self.p:
            self._fail(f"x0 needs {2 * self.p} entries", "x0")
        if self.params is not None and len(self.params) != 2 * self.p:
            self._fail(f"params needs {2 * self.p} entries", "params")
        if self.strategy in STOCHASTIC and self.seed is None:
            self._fail(f"strategy {self.strategy} needs run.seed", "strategy")
        if self.strategy not in ("ideal", "learn", "landscape") and self.epsilon <= 0:
            self._fail("noisy strategies need noise.epsilon > 0", "epsilon")
        if self.restarts < 0:
            self._fail("restarts must be >= 0", "restarts")
        if self.strategy == "learn" and self.epsilon <= 0:
            self._fail("learning needs a planted epsilon > 0", "epsilon")
        try:
            self.optimizer()
            if self.strategy in ("zne", "distribution"):
                ZneConfig(tuple(float(f) for f in self.factors))
        except ValueError as exc:
            self._fail(str(exc), "factors" if "factor" in str(exc) else "max_steps")

    # derived objects
    def problem(self) -> QaoaProblem:
        edges = [list(e) for e in self.edges] if self.edges is not None else None
        kind = "explicit" if edges is not None and self.graph == "explicit" else self.graph
        return QaoaProblem(make_graph(kind, self.n, edges), self.p)

    def channel(self) -> PauliChannel | None:
        if self.epsilon <= 0:
            return None
        if self.convention == "rate":
            return depolarizing_model(self.epsilon)
        return error_probability_model(self.epsilon)

    def budget_channel(self) -> PauliChannel:
        """Budgets quote gamma of the six eps/4 generators whatever the convention."""
        return depolarizing_model(self.epsilon)

    def optimizer(self) -> OptimizerConfig:
        if self.tol is not None:
            return OptimizerConfig.with_tol(self.tol, max_steps=self.max_steps if "optimizer.max_steps" in self.lines
                                            else 10_000)
        return OptimizerConfig(max_steps=self.max_steps, ftol=self.ftol, xtol=self.xtol)

    def start(self) -> np.ndarray:
        if self.x0 is not None:
            return np.array(self.x0, dtype=float)
        return np.full(2 * self.p, 0.5)

    def semantic(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in dataclasses.fields(self)
             if f.name not in _NON_SEMANTIC and f.name != "lines"}
        return json.loads(json.dumps(d, default=list))

    @property
    def hash(self) -> str:
        blob = json.dumps(self.semantic(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _freeze(v):
    return tuple(_freeze(x) for x in v) if isinstance(v, list) else v


# -- results -------------------------------------------------------------------

@dataclass
class ResultRecord:
    spec: ExperimentSpec
    rows: list[dict] = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    plots: dict[str, str] = field(default_factory=dict)  # kind -> CSV text

    def add_trace(self, trace: Trace, stage: int = 0, budget: int = 0, sign: float = -1.0) -> None:
        """Append one optimizer trace; the objective column stores N_cut estimates."""
        prev = self.rows[-1]["cumulative_samples"] if self.rows else 0
        for k, (x, fval) in enumerate(trace.steps, start=1):
            self.rows.append({"stage": stage, "step": k, "objective": sign * fval,
                              "params": [float(v) for v in x], "cumulative_samples": prev + k * budget})

    def trace_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        d = len(self.rows[0]["params"]) if self.rows else 0
        w.writerow(["row", "stage", "step", "objective"] + [f"x{i}" for i in range(d)] + ["cumulative_samples"])
        for i, r in enumerate(self.rows, start=1):
            w.writerow([i, r["stage"], r["step"], repr(float(r["objective"]))]
                       + [repr(v) for v in r["params"]] + [r["cumulative_samples"]])
        return buf.getvalue()

    def write(self, outdir: Path) -> Path:
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / "trace.csv").write_text(self.trace_csv())
        doc = {"name": self.spec.name, "spec_hash": self.spec.hash, "strategy": self.spec.strategy,
               **self.summary}
        (outdir / "summary.json").write_text(json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n")
        for kind, text in sorted(self.plots.items()):
            (outdir / f"{kind}.csv").write_text(text)
        return outdir


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def output_dir(spec: ExperimentSpec, base: str | None = None) -> Path:
    root = base or os.environ.get(OUTPUT_ENV) or "results"
    return Path(root) / (spec.output or spec.name)


# -- strategies ------------------------------------------------------------------

def _objective(spec: ExperimentSpec, problem: QaoaProblem):
    """``(fn(x) -> <H>, budget)`` for the single-trace strategies."""
    ch = spec.channel()
    s = spec.strategy
    if s == "ideal":
        return (lambda x: -n_cut(problem, x)), 0
    if s == "noisy":
        return (lambda x: estimate_noisy(problem, x, ch)), 1
    if s == "pec_fresh":
        rng = stream(spec.seed, 0)
        return (lambda x: pec_estimate_fresh(problem, x, ch, spec.samples, rng, m=spec.m).value), spec.samples
    if s == "ipec":
        sset = build_sample_set(location_channels(problem, ch), spec.m, spec.samples, spec.seed, mode=spec.mode)
        return (lambda x: ipec_estimate(problem, x, ch, sset).value), spec.samples
    if s == "zne":
        cfg = ZneConfig(tuple(float(f) for f in spec.factors))
        return (lambda x: zne_estimate(problem, x, ch, cfg)), len(spec.factors)
    raise ValueError(f"strategy {s} has no single objective")


def restart_loop(spec: ExperimentSpec, restarts: int | None = None) -> ResultRecord:
    """Optimize, then restart from each converged point ``restarts`` times."""
    restarts = spec.restarts if restarts is None else restarts
    if restarts < 0:
        raise ValueError("restarts must be >= 0")
    problem = spec.problem()
    fn, budget = _objective(spec, problem)
    rec = ResultRecord(spec)
    x = spec.start()
    config = spec.optimizer()
    history = []
    for r in range(restarts + 1):
        tr = nelder_mead(fn, x, config)
        rec.add_trace(tr, stage=r, budget=budget)
        x = tr.x
        history.append({"restart": r, "steps": tr.n_steps, "n_cut_ideal": n_cut(problem, x)})
    rec.summary.update(_point_summary(spec, problem, x))
    rec.summary["estimate"] = -tr.fun
    rec.summary["converged"] = tr.converged
    rec.summary["steps"] = sum(h["steps"] for h in history)
    if restarts:
        rec.summary["restarts"] = history
    return rec


def _point_summary(spec: ExperimentSpec, problem: QaoaProblem, x) -> dict:
    ch = spec.channel()
    out = {"params": [float(v) for v in x], "n_cut_ideal": n_cut(problem, x)}
    if ch is not None:
        out["n_cut_noisy"] = n_cut(problem, x, ch)
    if spec.reference is not None:
        out["distance"] = distance(x, spec.reference)
    return out


def _appec(spec: ExperimentSpec, problem: QaoaProblem, n_stages: int | None = None):
    ch = spec.channel()
    if spec.schedule is not None and n_stages is None:
        schedule = ApecSchedule(tuple(spec.schedule), q=spec.q, early_stop=spec.early_stop,
                                budgets=tuple(spec.budgets) if spec.budgets else None)
    else:
        schedule = ApecSchedule.linear(n_stages or spec.stages, q=spec.q, early_stop=spec.early_stop)
    stages, traces = appec_run(problem, ch, schedule, spec.optimizer(), spec.start(), spec.seed,
                               reference=spec.reference, mode=spec.mode, budget_model=spec.budget_channel())
    return schedule, stages, traces


def run_appec(spec: ExperimentSpec) -> ResultRecord:
    problem = spec.problem()
    schedule, stages, traces = _appec(spec, problem)
    rec = ResultRecord(spec)
    for st, tr in zip(stages, traces):
        rec.add_trace(tr, stage=st.index, budget=st.budget)
    rec.summary.update(_point_summary(spec, problem, stages[-1].params))
    rec.summary["stages"] = [st.to_dict() for st in stages]
    rec.summary["f"] = cost_function_from_trace(stages, spec.q)
    if spec.full_run:
        budget = round_half_up(spec.q * gamma(location_channels(problem, spec.budget_channel()), 1.0) ** 2)
        full, _ = ipec_run(problem, spec.channel(), budget, spec.optimizer(), spec.start(), spec.seed,
                           mode=spec.mode)
        rec.summary["full"] = {"steps": full.n_steps, "budget": budget, "n_cut_ideal": n_cut(problem, full.x),
                               "params": [float(v) for v in full.x]}
        rec.summary["eta"] = eta(stages, (full.n_steps, budget))
        if spec.cutoff is not None:
            rec.summary["eta_cutoff"] = eta(stages, (full.n_steps, budget), spec.cutoff)
    rec.plots["trajectory"] = trajectory_csv(rec, problem.graph.maxcut())
    return rec


def run_cost(spec: ExperimentSpec) -> ResultRecord:
    """APPEC for every N in ``n_values``; fits (A, B) of the cost model."""
    problem = spec.problem()
    rec = ResultRecord(spec)
    runs, f_values = {}, {}
    for n in spec.n_values:
        _, stages, traces = _appec(spec, problem, int(n))
        runs[int(n)] = stages
        f_values[int(n)] = cost_function_from_trace(stages, spec.q)
        for st, tr in zip(stages, traces):
            rec.add_trace(tr, stage=100 * int(n) + st.index, budget=st.budget)
    n_gates = len(location_channels(problem, spec.budget_channel()))
    a, b = fit_ab(f_values, spec.epsilon, n_gates)
    pred = {n: predict_fab(a, b, spec.epsilon, n, n_gates) for n in f_values}
    rec.summary.update({"f": {str(k): v for k, v in f_values.items()}, "A": a, "B": b,
                        "n_gates": n_gates, "argmin_N": min(pred, key=pred.get),
                        "stages": {str(k): [st.to_dict() for st in v] for k, v in runs.items()}})
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["N", "f", "f_fit"])
    for n in sorted(f_values):
        w.writerow([n, repr(f_values[n]), repr(pred[n])])
    rec.plots["cost"] = buf.getvalue()
    rec.plots["cost_stages"] = cost_report_csv(runs, spec.q)
    return rec


def run_distribution(spec: ExperimentSpec) -> ResultRecord:
    problem = spec.problem()
    ch = spec.channel()
    x = np.array(spec.params if spec.params is not None else spec.start(), dtype=float)
    target = maxcut_distribution(problem)
    sset = build_sample_set(location_channels(problem, ch), spec.m, spec.samples, spec.seed, mode=spec.mode)
    mitigated = mitigate_distribution(problem, x, ch, sset)
    zne = zne_estimate(problem, x, ch, ZneConfig(tuple(float(f) for f in spec.factors)),
                       observable=_probabilities(problem.n))
    dists = {"ideal": ideal_distribution(problem, x), "noisy": noisy_distribution(problem, x, ch),
             "ipec": mitigated.corrected, "zne": zne, "maxcut": target}
    rec = ResultRecord(spec)
    rec.summary.update(_point_summary(spec, problem, x))
    rec.summary["fidelity"] = {k: fidelity(v, target) for k, v in dists.items() if k != "maxcut"}
    rec.summary["normalization_a"] = mitigated.a
    rec.summary["ipec_raw_sum"] = float(mitigated.raw.sum())
    rec.plots["distribution"] = distribution_csv(dists, problem.n)
    return rec


def _probabilities(n: int):
    from .transfer import distribution_from_z
    zs = z_string_tensors(n).reshape(2 ** n, -1)
    return lambda c: distribution_from_z(zs @ c.reshape(-1), n)


def run_landscape(spec: ExperimentSpec) -> ResultRecord:
    """Ideal/noisy/mitigated objective over a constraint slice or a line.

    ``strategy.objective`` is ``ideal``, ``noisy`` or ``mitigated`` (exact
    partial inverse at ``strategy.m``). With ``strategy.endpoint`` set the
    scan runs along the line from ``x0`` (x = 1) to the endpoint (x = 0).
    """
    problem = spec.problem()
    ch = spec.channel()
    kinds = {"ideal": lambda x: n_cut(problem, x),
             "noisy": lambda x: n_cut(problem, x, ch),
             "mitigated": lambda x: -exact_signed_estimate(problem, x, ch, spec.m)}
    if spec.objective not in kinds:
        spec._fail(f"unknown landscape objective {spec.objective!r}", "objective")
    if spec.objective != "ideal" and ch is None:
        spec._fail("noisy landscapes need noise.epsilon > 0", "epsilon")
    obj = kinds[spec.objective]
    rec = ResultRecord(spec)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if spec.endpoint is not None:
        pts = landscape_line_scan(problem, spec.start(), spec.endpoint, spec.points, obj)
        w.writerow(["x", "n_cut"])
        for x, v in pts:
            w.writerow([repr(x), repr(v)])
        vals = [v for _, v in pts]
    else:
        grid = landscape_constraint_scan(problem, spec.start(), spec.offsets, obj)
        if grid.ndim == 2:
            w.writerow(["d1", "d2", "n_cut"])
            for i, d1 in enumerate(spec.offsets):
                for j, d2 in enumerate(spec.offsets):
                    w.writerow([repr(float(d1)), repr(float(d2)), repr(float(grid[i, j]))])
        else:
            w.writerow(["d", "n_cut"])
            for d, v in zip(spec.offsets, grid):
                w.writerow([repr(float(d)), repr(float(v))])
        vals = grid.ravel().tolist()
    rec.plots["landscape"] = buf.getvalue()
    rec.summary.update({"objective": spec.objective, "min": min(vals), "max": max(vals), "points": len(vals)})
    return rec


def run_learn(spec: ExperimentSpec) -> ResultRecord:
    gate = Circuit(2)
    gate.add("CNOT", 0, 1)
    hidden = spec.channel()
    model, curves = learn_model(gate, hidden, hidden.paulis, tuple(spec.depths), spec.twirls,
                                stream(spec.seed, 0), spec.spam)
    truth = hidden.rates
    rel = np.abs(model.epsilons - truth) / truth
    rec = ResultRecord(spec)
    rec.summary.update({"support": [str(p) for p in model.support], "rates": list(model.rates),
                        "epsilons": list(model.epsilons), "planted": list(truth),
                        "max_relative_error": float(rel.max()),
                        "gamma_learned": gamma(model.channel()), "gamma_planted": gamma(hidden),
                        "channel": model.channel().to_json()})
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["basis", "partner"] + [f"d{d}" for d in spec.depths])
    for c in curves:
        w.writerow([str(c.basis), str(c.partner)] + [repr(f) for f in c.fidelities])
    rec.plots["decays"] = buf.getvalue()
    return rec


def run(spec: ExperimentSpec) -> ResultRecord:
    """Dispatch on ``spec.strategy`` and time the run."""
    t0 = time.perf_counter()
    if spec.strategy == "appec":
        rec = run_appec(spec)
    elif spec.strategy == "distribution":
        rec = run_distribution(spec)
    elif spec.strategy == "landscape":
        rec = run_landscape(spec)
    elif spec.strategy == "learn":
        rec = run_learn(spec)
    else:
        rec = restart_loop(spec)
        rec.plots["trajectory"] = trajectory_csv(rec, spec.problem().graph.maxcut())
    rec.summary["wall_time_s"] = round(time.perf_counter() - t0, 3)
    return rec


# -- plot data -----------------------------------------------------------------

def trajectory_csv(rec: ResultRecord, maxcut: int) -> str:
    """``step, raw, normalized``: the N_cut estimate and its ratio to the max cut."""
    if not rec.rows:
        raise ValueError("record has no trajectory rows")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["step", "raw", "normalized"])
    for i, r in enumerate(rec.rows, start=1):
        w.writerow([i, repr(float(r["objective"])), repr(float(r["objective"]) / maxcut)])
    return buf.getvalue()


def distribution_csv(dists: dict[str, np.ndarray], n: int) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    names = list(dists)
    w.writerow(["bitstring"] + names)
    for i in range(2 ** n):
        w.writerow([format(i, f"0{n}b")] + [repr(float(dists[k][i])) for k in names])
    return buf.getvalue()


def emit_plotdata(rec: ResultRecord, kind: str, outdir: Path | None = None) -> str:
    if kind not in rec.plots:
        raise KeyError(f"record has no {kind!r} data (available: {sorted(rec.plots)})")
    if outdir is not None:
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / f"{kind}.csv").write_text(rec.plots[kind])
    return rec.plots[kind]


# -- verification ------------------------------------------------------------------

def verify(summary: dict, expected: dict) -> list[str]:
    """Compare summary fields to expectations; returns failure messages.

    Each expected entry is a bare value (exact match, 1e-9 for floats), or a
    dict with ``value`` and ``tol``, and/or ``min``/``max``. Dotted names reach
    into nested fields, e.g. ``fidelity.ipec`` or ``stages.1.budget``.
    """
    failures = []
    for key, want in expected.items():
        try:
            got = _lookup(summary, key)
        except (KeyError, IndexError, TypeError):
            failures.append(f"{key}: missing from summary")
            continue
        if isinstance(want, dict):
            if "value" in want and not math.isclose(got, want["value"], rel_tol=0, abs_tol=want.get("tol", 1e-9)):
                failures.append(f"{key}: {got} != {want['value']} ± {want.get('tol', 1e-9)}")
            if "min" in want and got < want["min"]:
                failures.append(f"{key}: {got} < {want['min']}")
            if "max" in want and got > want["max"]:
                failures.append(f"{key}: {got} > {want['max']}")
        elif isinstance(want, float):
            if not math.isclose(got, want, rel_tol=0, abs_tol=1e-9):
                failures.append(f"{key}: {got} != {want}")
        elif got != want:
            failures.append(f"{key}: {got!r} != {want!r}")
    return failures


def _lookup(doc, dotted: str):
    for part in dotted.split("."):
        doc = doc[int(part)] if isinstance(doc, list) else doc[part]
    return doc
