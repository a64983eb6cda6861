"""Nelder–Mead with step-by-step trajectory recording.

Step counting treats the initial simplex as step 1 and each simplex update
as one further step, so ``max_steps = s`` allows ``s - 1`` updates. The
default simplex and stopping rule follow the common SciPy formulation: vertex i perturbs coordinate i by 5% (0.00025
when the coordinate is zero), and the run stops once both the simplex extent
and the objective spread fall within the tolerance.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

RHO, CHI, PSI, SIGMA = 1.0, 2.0, 0.5, 0.5


class NonFiniteObjective(ArithmeticError):
    pass


@dataclass(frozen=True)
class OptimizerConfig:
    """``ftol``/``xtol`` of None disable that half of the stopping rule.

    ``simplex="relative"`` scales each coordinate by ``1 + scale``;
    ``"absolute"`` adds ``scale`` radians instead.
    """

    max_steps: int = 100
    ftol: float | None = None
    xtol: float | None = None
    scale: float = 0.05
    simplex: str = "relative"

    def __post_init__(self):
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        for name in ("ftol", "xtol"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ValueError(f"{name} must be positive")
        if self.simplex not in ("relative", "absolute"):
            raise ValueError(f"unknown simplex rule {self.simplex!r}")

    @classmethod
    def with_tol(cls, tol: float, max_steps: int = 10_000, **kw) -> OptimizerConfig:
        """Stop on a combined tolerance, the way figure captions quote it."""
        return cls(max_steps=max_steps, ftol=tol, xtol=tol, **kw)


@dataclass
class Trace:
    """Best vertex after every step; ``steps[0]`` is the initial simplex (step 1)."""

    steps: list[tuple[np.ndarray, float]] = field(default_factory=list)
    converged: bool = False
    evaluations: int = 0

    @property
    def n_steps(self) -> int:
        return len(self.steps)

    @property
    def x(self) -> np.ndarray:
        return self.steps[-1][0]

    @property
    def fun(self) -> float:
        return self.steps[-1][1]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        d = len(self.x)
        w.writerow(["step", "objective"] + [f"x{i}" for i in range(d)])
        for i, (x, f) in enumerate(self.steps, start=1):
            w.writerow([i, repr(float(f))] + [repr(float(v)) for v in x])
        return buf.getvalue()


def initial_simplex(x0: np.ndarray, config: OptimizerConfig) -> np.ndarray:
    d = x0.size
    sim = np.tile(x0, (d + 1, 1))
    for k in range(d):
        if config.simplex == "absolute":
            sim[k + 1, k] += config.scale
        elif x0[k] != 0:
            sim[k + 1, k] *= 1.0 + config.scale
        else:
            sim[k + 1, k] = 0.00025
    return sim


def nelder_mead(objective: Callable[[np.ndarray], float], x0, config: OptimizerConfig,
                callback: Callable[[int, np.ndarray, float], bool] | None = None) -> Trace:
    """Minimize ``objective`` from ``x0``.

    ``callback(step, best_x, best_f)`` runs after each step; returning True
    stops early (the trace is then marked converged).
    """
    x0 = np.asarray(x0, dtype=float).ravel()
    trace = Trace()

    def f(x):
        v = float(objective(x))
        trace.evaluations += 1
        if not math.isfinite(v):
            raise NonFiniteObjective(f"objective returned {v} at {x}")
        return v

    sim = initial_simplex(x0, config)
    fsim = np.array([f(v) for v in sim])
    order = np.argsort(fsim, kind="stable")
    sim, fsim = sim[order], fsim[order]
    trace.steps.append((sim[0].copy(), float(fsim[0])))
    d = x0.size

    step = 1
    while step < config.max_steps:
        if _done(sim, fsim, config):
            trace.converged = True
            break
        xbar = sim[:-1].mean(axis=0)
        xr = (1 + RHO) * xbar - RHO * sim[-1]
        fr = f(xr)
        shrink = False
        if fr < fsim[0]:
            xe = (1 + RHO * CHI) * xbar - RHO * CHI * sim[-1]
            fe = f(xe)
            if fe < fr:
                sim[-1], fsim[-1] = xe, fe
            else:
                sim[-1], fsim[-1] = xr, fr
        elif fr < fsim[-2]:
            sim[-1], fsim[-1] = xr, fr
        elif fr < fsim[-1]:
            xc = (1 + PSI * RHO) * xbar - PSI * RHO * sim[-1]
            fc = f(xc)
            if fc <= fr:
                sim[-1], fsim[-1] = xc, fc
            else:
                shrink = True
        else:
            xcc = (1 - PSI) * xbar + PSI * sim[-1]
            fcc = f(xcc)
            if fcc < fsim[-1]:
                sim[-1], fsim[-1] = xcc, fcc
            else:
                shrink = True
        if shrink:
            for j in range(1, d + 1):
                sim[j] = sim[0] + SIGMA * (sim[j] - sim[0])
                fsim[j] = f(sim[j])
        order = np.argsort(fsim, kind="stable")
        sim, fsim = sim[order], fsim[order]
        step += 1
        trace.steps.append((sim[0].copy(), float(fsim[0])))
        if callback is not None and callback(step, sim[0].copy(), float(fsim[0])):
            trace.converged = True
            break
    if not trace.converged:
        trace.converged = _done(sim, fsim, config)
    return trace


def _done(sim, fsim, config: OptimizerConfig) -> bool:
    if config.ftol is None and config.xtol is None:
        return False
    ok = True
    if config.xtol is not None:
        ok &= float(np.max(np.abs(sim[1:] - sim[0]))) <= config.xtol
    if config.ftol is not None:
        ok &= float(np.max(np.abs(fsim[0] - fsim[1:]))) <= config.ftol
    return ok
