"""Cycle-benchmarking simulation and sparse Pauli-Lindblad rate recovery.

A Pauli basis b prepared on the gate qubits is pushed through d noisy,
twirled gate cycles. For a Clifford gate G with ``G b G† = ±b'`` and odd d,
the surviving Pauli is ``b'`` and its expectation decays as ``A F^d`` with
``F = sqrt(f_b f_b')``. Only such pair products are visible, which is why the
design matrix averages the anticommutation rows of b and b'.

Rates relate to per-term error probabilities through
``1 - 2 eps_k = exp(-2 lambda_k)``, i.e. ``omega_k = (1 + exp(-2 lambda_k)) / 2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import nnls

from .circuit import Circuit
from .noise import PauliChannel, build_noisy_circuit, pauli_twirl
from .pauli import PauliString, all_paulis
from .transfer import TransferProgram

DEFAULT_DEPTHS = (1, 3, 5, 7, 11, 13)


@dataclass(frozen=True)
class DecayCurve:
    basis: PauliString
    depths: tuple[int, ...]
    fidelities: tuple[float, ...]
    partner: PauliString | None = None  # Pauli measured after an odd number of cycles

    def __post_init__(self):
        depths = tuple(int(d) for d in self.depths)
        fids = tuple(float(f) for f in self.fidelities)
        object.__setattr__(self, "depths", depths)
        object.__setattr__(self, "fidelities", fids)
        if len(depths) != len(fids):
            raise ValueError("one fidelity per depth")
        if not depths or depths[0] < 1 or any(b <= a for a, b in zip(depths, depths[1:])):
            raise ValueError("depths must be positive and strictly increasing")
        if any(not -1 - 1e-9 <= f <= 1 + 1e-9 for f in fids):
            raise ValueError("fidelities lie in [-1, 1]")


@dataclass(frozen=True)
class DecayFit:
    fidelity: float
    amplitude: float
    ok: bool = True


@dataclass(frozen=True)
class LearnedModel:
    support: tuple[PauliString, ...]
    rates: tuple[float, ...]
    qubits: tuple[int, ...] = (0, 1)

    def __post_init__(self):
        if len(self.support) != len(self.rates):
            raise ValueError("one rate per generator")
        if any(r < 0 for r in self.rates):
            raise ValueError("rates are non-negative")

    @property
    def omegas(self) -> np.ndarray:
        return (1.0 + np.exp(-2.0 * np.asarray(self.rates))) / 2.0

    @property
    def epsilons(self) -> np.ndarray:
        return 1.0 - self.omegas

    def channel(self) -> PauliChannel:
        """Composed Pauli channel; zero-rate generators are dropped."""
        terms = tuple((p, float(e)) for p, e in zip(self.support, self.epsilons) if e > 0)
        return PauliChannel(self.qubits, terms)


class RankDeficient(ValueError):
    """The measured bases do not pin down every rate."""

    def __init__(self, null: np.ndarray, support):
        self.null_space = null
        names = [str(p) for p in support]
        dirs = ["{" + ", ".join(f"{n}: {v:+.3f}" for n, v in zip(names, col) if abs(v) > 1e-9) + "}"
                for col in null.T]
        super().__init__(f"design matrix rank {len(names) - null.shape[1]} < {len(names)}; "
                         f"undetermined directions: {'; '.join(dirs)}")


def _conjugated(gate: Circuit, b: PauliString) -> PauliString:
    """The Pauli ``U b U†`` (sign dropped) for a Clifford gate circuit U."""
    prog = TransferProgram(gate)
    c = np.zeros((1,) + (4,) * gate.n)
    c[(0,) + b.index()] = 1.0
    out = prog.run(c, noisy=False)[0]
    idx = np.unravel_index(int(np.argmax(np.abs(out))), out.shape)
    if not math.isclose(abs(out[idx]), 1.0, abs_tol=1e-9):
        raise ValueError("gate does not map Paulis to Paulis")
    return PauliString(tuple("IXYZ"[k] for k in reversed(idx)))


def simulate_cycle_benchmark(gate: Circuit, hidden: PauliChannel, depths=DEFAULT_DEPTHS,
                             twirls: int = 30, rng: np.random.Generator | None = None,
                             spam: float = 0.0, bases=None) -> list[DecayCurve]:
    """Exact twirl-averaged Pauli decays for every non-identity basis.

    ``spam`` shrinks each measured expectation by ``1 - spam`` to mimic
    preparation and readout loss; it only moves the fitted amplitude.
    """
    if twirls < 1:
        raise ValueError("twirls must be >= 1")
    if any(d % 2 == 0 for d in depths):
        raise ValueError("cycle depths must be odd")
    rng = rng if rng is not None else np.random.default_rng(0)
    n = gate.n
    bases = list(bases) if bases is not None else [b for b in all_paulis(n) if not b.is_identity()]
    partners = {b: _conjugated(gate, b) for b in bases}
    values = {b: [] for b in bases}
    for d in depths:
        cycle = Circuit(n)
        for _ in range(d):
            for g in gate.gates:
                cycle.gates.append(g)
        noisy = build_noisy_circuit(cycle, hidden)
        ideal = TransferProgram(noisy)
        runs = [TransferProgram(t.circuit) for t in pauli_twirl(noisy, rng, twirls)]
        batch = np.zeros((len(bases),) + (4,) * n)
        batch[(slice(None),) + (0,) * n] = 1.0
        for j, b in enumerate(bases):
            batch[(j,) + b.index()] = 1.0
        ref = ideal.run(batch, noisy=False)
        acc = np.zeros(len(bases))
        for prog in runs:
            out = prog.run(batch)
            for j, b in enumerate(bases):
                k = partners[b].index() if d % 2 else b.index()
                acc[j] += out[(j,) + k] / ref[(j,) + k]
        for j, b in enumerate(bases):
            values[b].append((1.0 - spam) * acc[j] / len(runs))
    return [DecayCurve(b, tuple(depths), tuple(values[b]), partners[b]) for b in bases]


def fit_decay(curve: DecayCurve) -> DecayFit:
    """Least squares of ``log f_d = log A + d log F``; flagged if any value <= 0."""
    d = np.asarray(curve.depths, dtype=float)
    y = np.asarray(curve.fidelities)
    if d.size < 2:
        raise ValueError("need at least two depths")
    if np.any(y <= 0):
        return DecayFit(float("nan"), float("nan"), ok=False)
    slope, intercept = np.polyfit(d, np.log(y), 1)
    return DecayFit(float(min(math.exp(slope), 1.0)), float(math.exp(intercept)))


def design_row(basis: PauliString, support, partner: PauliString | None = None) -> np.ndarray:
    """Anticommutation indicators of ``basis`` against each generator.

    With a partner the row is the average over the pair, matching ``F = sqrt(f_b f_b')``.
    """
    row = np.array([0.0 if basis.commutes(p) else 1.0 for p in support])
    if partner is not None:
        row = (row + design_row(partner, support)) / 2.0
    return row


def fit_lindblad_rates(pauli_fidelities, support, partners=None, qubits=(0, 1),
                       design: np.ndarray | None = None) -> LearnedModel:
    """Non-negative rates with ``M (2 lambda) = -ln f``.

    ``pauli_fidelities`` maps basis -> fitted f (NaN entries are skipped).
    ``design`` replaces the anticommutation matrix, one row per entry.
    """
    support = tuple(support)
    partners = partners or {}
    keys = [b for b, f in pauli_fidelities.items() if math.isfinite(f)]
    if design is None:
        m = np.array([design_row(b, support, partners.get(b)) for b in keys])
    else:
        m = np.asarray(design, dtype=float)
    fs = np.array([pauli_fidelities[b] for b in keys], dtype=float)
    if np.any(fs <= 0):
        raise ValueError("fidelities must be positive")
    target = -np.log(fs)
    null = null_space(m) if m.size else np.eye(len(support))
    if null.shape[1]:
        raise RankDeficient(null, support)
    two_lam, _ = nnls(m, target)
    return LearnedModel(support, tuple(float(v) for v in two_lam / 2.0), tuple(qubits))


def kkt_gap(m: np.ndarray, target: np.ndarray, x: np.ndarray) -> float:
    """Most negative gradient entry on the active set (>= 0 at an NNLS optimum)."""
    grad = m.T @ (m @ x - target)
    active = x <= 0
    return float(grad[active].min()) if active.any() else 0.0


def learn_model(gate: Circuit, hidden: PauliChannel, support, depths=DEFAULT_DEPTHS,
                twirls: int = 30, rng: np.random.Generator | None = None,
                spam: float = 0.0) -> tuple[LearnedModel, list[DecayCurve]]:
    """Benchmark, fit every decay and recover the rates."""
    curves = simulate_cycle_benchmark(gate, hidden, depths, twirls, rng, spam)
    fits = {c.basis: fit_decay(c).fidelity for c in curves}
    partners = {c.basis: c.partner for c in curves}
    model = fit_lindblad_rates(fits, support, partners, qubits=hidden.qubits)
    return model, curves
