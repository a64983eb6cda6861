"""Sampling-cost bookkeeping for staged mitigation runs."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass

import numpy as np


@dataclass(frozen=True)
class StageTrace:
    """One stage of a staged run. Stage 0 is the unmitigated stage (budget 1)."""

    index: int
    m: float
    steps: int
    budget: int
    params: tuple[float, ...]
    n_cut_ideal: float
    distance: float | None = None
    gamma: float = 1.0

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("a stage takes at least one step")
        if self.budget < 1:
            raise ValueError("budgets are >= 1")

    @property
    def cost(self) -> float:
        return self.steps * self.budget

    def to_dict(self) -> dict:
        d = asdict(self)
        d["params"] = list(self.params)
        return d


def eta(stages, full: tuple[int, int], cutoff: int | None = None) -> float:
    """``1 - sum_{i <= cutoff} s_i S_i / (s S)`` against a full-mitigation run ``(s, S)``."""
    s, budget = full
    denom = s * budget
    if denom == 0:
        raise ZeroDivisionError("full-run cost is zero")
    used = [st for st in stages if cutoff is None or st.index <= cutoff]
    return 1.0 - sum(st.steps * st.budget for st in used) / denom


def cost_function_from_trace(stages, q: float) -> float:
    """``sum_{i >= 1} s_i S_i / Q``; the unmitigated stage is free."""
    if q <= 0:
        raise ValueError("Q must be positive")
    return sum(st.steps * st.budget for st in stages if st.index >= 1) / q


def _growth(epsilon: float, n_stages: int, n_gates: int) -> np.ndarray:
    i = np.arange(1, n_stages + 1)
    return (1.0 + epsilon * i / (2.0 * n_stages)) ** (12 * n_gates)


def predict_fab(a: float, b: float, epsilon: float, n_stages: int, n_gates: int = 16) -> float:
    """``sum_{i=1}^N (A/N + B) (1 + eps i / 2N)^(12 n_gates)``."""
    if n_stages < 1:
        raise ValueError("N must be >= 1")
    return float(np.sum((a / n_stages + b) * _growth(epsilon, n_stages, n_gates)))


def fit_ab(f_values: dict[int, float], epsilon: float, n_gates: int = 16) -> tuple[float, float]:
    """Least squares for (A, B); the model is linear in both."""
    ns = sorted(f_values)
    if len(ns) < 2:
        raise ValueError("need at least two N values to fit A and B")
    rows = []
    for n in ns:
        g = _growth(epsilon, n, n_gates)
        rows.append([g.sum() / n, g.sum()])
    design = np.array(rows)
    y = np.array([f_values[n] for n in ns], dtype=float)
    if np.linalg.matrix_rank(design) < 2:
        raise ValueError("degenerate system: A and B are not separately identifiable")
    # column scaling keeps the normal equations well conditioned
    scale = np.linalg.norm(design, axis=0)
    sol, *_ = np.linalg.lstsq(design / scale, y, rcond=None)
    a, b = sol / scale
    return float(a), float(b)


def best_n(a: float, b: float, epsilon: float, n_gates: int = 16, candidates=range(2, 8)) -> int:
    values = {n: predict_fab(a, b, epsilon, n, n_gates) for n in candidates}
    return min(values, key=values.get)


def scalability_estimate(epsilon: float, n: int, p: int, q: float = 40.0) -> float:
    """``Q (1 - eps/2)^(-24 n p)``: the full-inverse budget for a ring of n qubits."""
    if not epsilon < 2:
        raise ValueError("epsilon must be < 2")
    return q * (1.0 - epsilon / 2.0) ** (-24 * n * p)


def max_feasible_qubits(epsilon: float, p: int, budget: float, q: float = 40.0) -> int:
    """Largest n with ``scalability_estimate <= budget``."""
    if scalability_estimate(epsilon, 1, p, q) > budget:
        return 0
    per_qubit = -24 * p * math.log1p(-epsilon / 2.0)
    if per_qubit == 0:
        raise ValueError("noiseless gates: any size fits")
    return int(math.floor(math.log(budget / q) / per_qubit + 1e-12))


def bootstrap_std(samples, resamples: int, rng: np.random.Generator, chunk: int = 2048) -> float:
    """Std of resampled means, drawing ``resamples`` resamples with replacement."""
    x = np.asarray(samples, dtype=float)
    if x.size < 2:
        raise ValueError("bootstrap needs at least two samples")
    means = []
    done = 0
    while done < resamples:
        k = min(chunk, resamples - done)
        idx = rng.integers(0, x.size, size=(k, x.size))
        means.append(x[idx].mean(axis=1))
        done += k
    return float(np.std(np.concatenate(means)))


def cost_report_csv(runs: dict[int, list[StageTrace]], q: float, full: tuple[int, int] | None = None) -> str:
    """Rows ``N, stage, m, s_i, S_i, f, eta``; f and eta repeat per N."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["N", "stage", "m", "s_i", "S_i", "f", "eta"])
    for n in sorted(runs):
        stages = runs[n]
        f = cost_function_from_trace(stages, q)
        e = eta(stages, full) if full else ""
        for st in stages:
            w.writerow([n, st.index, st.m, st.steps, st.budget, f, e])
    return buf.getvalue()
