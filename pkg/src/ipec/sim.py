"""Dense statevector and density-matrix simulation.

Qubit 0 is the least-significant bit of a basis index. Outcome labels are
printed most-significant qubit first, so on four qubits index 5 is ``"0101"``.
Dense storage only; density matrices are capped at ``MAX_DM_QUBITS``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .circuit import Circuit, Gate
from .noise import GammaDivergence, PauliChannel
from .pauli import PauliString

MAX_DM_QUBITS = 12


def bit_label(index: int, n: int) -> str:
    return format(index, f"0{n}b")


@dataclass(frozen=True)
class Observable:
    """Weighted sum of Pauli strings plus a classical constant offset.

    The constant never passes through an estimator: it is added to the
    estimated Pauli part as-is.
    """

    terms: tuple[tuple[float, PauliString], ...]
    constant: float = 0.0

    @property
    def n(self) -> int:
        return self.terms[0][1].n if self.terms else 0

    def matrix(self, n: int | None = None) -> np.ndarray:
        n = self.n if n is None else n
        m = self.constant * np.eye(2 ** n, dtype=complex)
        for w, p in self.terms:
            m = m + w * p.to_matrix()
        return m

    @classmethod
    def single(cls, label: str) -> Observable:
        return cls(((1.0, PauliString.from_label(label)),))


@dataclass
class StateVector:
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        n = int(round(math.log2(self.amplitudes.size)))
        if 2 ** n != self.amplitudes.size:
            raise ValueError("length must be a power of two")

    @property
    def n(self) -> int:
        return int(round(math.log2(self.amplitudes.size)))

    @classmethod
    def zero(cls, n: int) -> StateVector:
        a = np.zeros(2 ** n, dtype=complex)
        a[0] = 1.0
        return cls(a)

    @classmethod
    def basis(cls, label: str) -> StateVector:
        a = np.zeros(2 ** len(label), dtype=complex)
        a[int(label, 2)] = 1.0
        return cls(a)

    def norm(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def to_density_matrix(self) -> DensityMatrix:
        a = self.amplitudes
        return DensityMatrix(np.outer(a, a.conj()))


@dataclass
class DensityMatrix:
    entries: np.ndarray

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=complex)
        d = self.entries.shape[0]
        if self.entries.shape != (d, d):
            raise ValueError("density matrix must be square")
        n = int(round(math.log2(d)))
        if 2 ** n != d:
            raise ValueError("dimension must be a power of two")
        if n > MAX_DM_QUBITS:
            raise ValueError(f"density matrices are capped at {MAX_DM_QUBITS} qubits")

    @property
    def n(self) -> int:
        return int(round(math.log2(self.entries.shape[0])))

    @classmethod
    def zero(cls, n: int) -> DensityMatrix:
        return StateVector.zero(n).to_density_matrix()

    def trace(self) -> complex:
        return complex(np.trace(self.entries))

    def is_hermitian(self, atol: float = 1e-10) -> bool:
        return bool(np.allclose(self.entries, self.entries.conj().T, atol=atol))


# -- tensor helpers ----------------------------------------------------------

def _axes(n: int, qubits) -> list[int]:
    return [n - 1 - q for q in qubits]


def _apply_vec(psi: np.ndarray, u: np.ndarray, qubits, n: int) -> np.ndarray:
    k = len(qubits)
    t = psi.reshape((2,) * n)
    ax = _axes(n, qubits)
    t = np.tensordot(u.reshape((2,) * (2 * k)), t, axes=(list(range(k, 2 * k)), ax))
    t = np.moveaxis(t, list(range(k)), ax)
    return t.reshape(-1)


def _apply_dm(rho: np.ndarray, u: np.ndarray, qubits, n: int) -> np.ndarray:
    k = len(qubits)
    t = rho.reshape((2,) * (2 * n))
    ax = _axes(n, qubits)
    ur = u.reshape((2,) * (2 * k))
    t = np.tensordot(ur, t, axes=(list(range(k, 2 * k)), ax))
    t = np.moveaxis(t, list(range(k)), ax)
    cax = [a + n for a in ax]
    t = np.tensordot(ur.conj(), t, axes=(list(range(k, 2 * k)), cax))
    t = np.moveaxis(t, list(range(k)), cax)
    return t.reshape(2 ** n, 2 ** n)


def _check_targets(gate: Gate, n: int) -> None:
    if max(gate.targets) >= n:
        raise IndexError(f"gate {gate.kind} targets {gate.targets} out of range for {n} qubits")


def apply_gate(state, gate: Gate):
    """Apply one gate's unitary; returns a new state of the same type."""
    n = state.n
    _check_targets(gate, n)
    u = gate.matrix()
    if isinstance(state, StateVector):
        return StateVector(_apply_vec(state.amplitudes, u, gate.targets, n))
    return DensityMatrix(_apply_dm(state.entries, u, gate.targets, n))


def _conj_pauli(rho: np.ndarray, local: PauliString, qubits, n: int) -> np.ndarray:
    u = Gate("PAULI", tuple(qubits), pauli=local).matrix()
    return _apply_dm(rho, u, qubits, n)


def apply_pauli_channel(rho: DensityMatrix, channel: PauliChannel) -> DensityMatrix:
    """Compose ``(1 - eps_k) rho + eps_k P_k rho P_k`` over every generator."""
    n = rho.n
    if max(channel.qubits, default=-1) >= n:
        raise IndexError("channel support out of range")
    out = rho.entries
    for p, r in channel.terms:
        if not 0.0 <= r < 0.5:
            raise ValueError(f"rate {r} outside [0, 1/2)")
        if r == 0.0:
            continue
        out = (1.0 - r) * out + r * _conj_pauli(out, p, channel.qubits, n)
    return DensityMatrix(out)


def apply_depolarizing(rho: DensityMatrix, epsilon: float, qubits) -> DensityMatrix:
    """Exact single-qubit map ``(1 - 3 eps/4) rho + eps/4 (X rho X + Y rho Y + Z rho Z)`` per qubit.

    ``epsilon = 1`` sends each qubit to I/2. This differs from the composed
    six-generator channel at O(eps^2).
    """
    if not 0.0 <= epsilon <= 4.0 / 3.0:
        raise ValueError(f"epsilon {epsilon} outside [0, 4/3]")
    n = rho.n
    out = rho.entries
    for q in qubits:
        if not 0 <= q < n:
            raise IndexError(f"qubit {q} out of range")
        acc = (1.0 - 0.75 * epsilon) * out
        for s in "XYZ":
            acc = acc + 0.25 * epsilon * _conj_pauli(out, PauliString((s,)), (q,), n)
        out = acc
    return DensityMatrix(out)


def apply_signed_pauli_map(rho: DensityMatrix, channel: PauliChannel, m: float) -> DensityMatrix:
    """Exact partial inverse: gamma(m) * o_k [(1 - m eps_k) rho - m eps_k P_k rho P_k].

    The result is trace preserving but need not be positive.
    """
    if not 0.0 <= m <= 1.0:
        raise ValueError(f"m = {m} outside [0, 1]")
    n = rho.n
    out = rho.entries
    for p, r in channel.terms:
        x = 1.0 - 2.0 * m * r
        if x <= 0.0:
            raise GammaDivergence(f"2*m*eps = {2 * m * r} >= 1")
        if r == 0.0 or m == 0.0:
            continue
        g = 1.0 / x
        out = g * ((1.0 - m * r) * out - m * r * _conj_pauli(out, p, channel.qubits, n))
    return DensityMatrix(out)


def expectation(state, observable: Observable) -> float:
    """``constant + sum_j w_j Tr(rho P_j)`` for either backend."""
    n = state.n
    val = 0.0 + 0.0j
    for w, p in observable.terms:
        if p.n != n:
            raise ValueError(f"observable on {p.n} qubits, state on {n}")
        pm = p.to_matrix()
        if isinstance(state, StateVector):
            a = state.amplitudes
            val += w * np.vdot(a, pm @ a)
        else:
            val += w * np.trace(pm @ state.entries)
    return float(val.real) + observable.constant


def probability_distribution(state) -> np.ndarray:
    if isinstance(state, StateVector):
        return np.abs(state.amplitudes) ** 2
    return np.real(np.diag(state.entries)).copy()


def sample_bitstrings(state, shots: int, rng: np.random.Generator) -> dict[str, int]:
    """Counts per outcome label; zero-count outcomes omitted."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    probs = np.clip(probability_distribution(state), 0.0, None)
    probs = probs / probs.sum()
    counts = rng.multinomial(shots, probs)
    n = state.n
    return {bit_label(i, n): int(c) for i, c in enumerate(counts) if c}


def counts_to_distribution(counts: dict[str, int], n: int) -> np.ndarray:
    p = np.zeros(2 ** n)
    for label, c in counts.items():
        p[int(label, 2)] += c
    return p / p.sum()


def simulate(circuit: Circuit, state=None, noisy: bool = True):
    """Run a circuit. Channels apply after their gate when ``noisy`` is set.

    A statevector input with a noisy circuit is promoted to a density matrix.
    """
    if state is None:
        state = (DensityMatrix.zero(circuit.n) if noisy and circuit.noisy_locations
                 else StateVector.zero(circuit.n))
    chan = dict(circuit.noisy_locations) if noisy else {}
    if chan and isinstance(state, StateVector):
        state = state.to_density_matrix()
    for i, g in enumerate(circuit.gates):
        state = apply_gate(state, g)
        if i in chan:
            state = apply_pauli_channel(state, chan[i])
    return state
