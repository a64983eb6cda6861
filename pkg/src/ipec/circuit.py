"""Gate and circuit containers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING

import numpy as np

from .pauli import PauliString

if TYPE_CHECKING:
    from .noise import PauliChannel

ROTATIONS = {"RX", "RY", "RZ"}
FIXED_1Q = {"H", "X", "Y", "Z", "S", "SDG"}
TWO_QUBIT = {"CNOT", "CZ"}
CLIFFORD_2Q = TWO_QUBIT
KINDS = ROTATIONS | FIXED_1Q | TWO_QUBIT | {"PAULI"}


@dataclass(frozen=True)
class Gate:
    """One circuit operation.

    ``PAULI`` gates carry a local ``PauliString`` acting on ``targets`` (its
    operator ``ops[i]`` acts on ``targets[i]``). For CNOT the first target is
    the control.
    """

    kind: str
    targets: tuple[int, ...]
    theta: float | None = None
    pauli: PauliString | None = None
    noisy: bool = False

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        if self.kind not in KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if len(set(self.targets)) != len(self.targets):
            raise ValueError(f"repeated target in {self.targets}")
        if any(t < 0 for t in self.targets):
            raise ValueError("negative qubit index")
        if self.kind in ROTATIONS:
            if self.theta is None or not math.isfinite(self.theta):
                raise ValueError(f"{self.kind} needs a finite angle, got {self.theta}")
        expected = 2 if self.kind in TWO_QUBIT else 1
        if self.kind == "PAULI":
            if self.pauli is None or self.pauli.n != len(self.targets):
                raise ValueError("PAULI gate needs a local Pauli string per target")
        elif len(self.targets) != expected:
            raise ValueError(f"{self.kind} acts on {expected} qubit(s)")

    @property
    def is_two_qubit(self) -> bool:
        return self.kind in TWO_QUBIT

    def matrix(self) -> np.ndarray:
        """Local unitary; for two-qubit gates the first target is the high factor."""
        k = self.kind
        if k == "RX":
            c, s = math.cos(self.theta / 2), math.sin(self.theta / 2)
            return np.array([[c, -1j * s], [-1j * s, c]])
        if k == "RY":
            c, s = math.cos(self.theta / 2), math.sin(self.theta / 2)
            return np.array([[c, -s], [s, c]], dtype=complex)
        if k == "RZ":
            t = self.theta / 2
            return np.diag([np.exp(-1j * t), np.exp(1j * t)])
        if k == "H":
            return np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
        if k == "X":
            return np.array([[0, 1], [1, 0]], dtype=complex)
        if k == "Y":
            return np.array([[0, -1j], [1j, 0]])
        if k == "Z":
            return np.diag([1, -1]).astype(complex)
        if k == "S":
            return np.diag([1, 1j])
        if k == "SDG":
            return np.diag([1, -1j])
        if k == "CNOT":
            m = np.eye(4, dtype=complex)
            m[[2, 3]] = m[[3, 2]]
            return m
        if k == "CZ":
            return np.diag([1, 1, 1, -1]).astype(complex)
        if k == "PAULI":
            # targets[0] is the high factor, consistent with two-qubit gates
            m = np.array([[1.0 + 0j]])
            for o in self.pauli.ops:
                m = np.kron(m, PauliString((o,)).to_matrix())
            return m
        raise AssertionError(k)

    def inverse(self) -> Gate:
        if self.kind in ROTATIONS:
            return replace(self, theta=-self.theta)
        if self.kind == "S":
            return replace(self, kind="SDG")
        if self.kind == "SDG":
            return replace(self, kind="S")
        return self


@dataclass
class Circuit:
    """Ordered gate list on ``n`` qubits with noise channels attached after gates.

    ``noisy_locations`` holds ``(gate index, PauliChannel)`` pairs in strictly
    increasing gate order.
    """

    n: int
    gates: list[Gate] = field(default_factory=list)
    noisy_locations: list[tuple[int, PauliChannel]] = field(default_factory=list)

    def add(self, kind: str, *targets: int, theta: float | None = None,
            pauli: PauliString | None = None) -> Circuit:
        g = Gate(kind, tuple(targets), theta=theta, pauli=pauli)
        if max(g.targets) >= self.n:
            raise ValueError(f"target {max(g.targets)} out of range for {self.n} qubits")
        self.gates.append(g)
        return self

    def copy(self) -> Circuit:
        return Circuit(self.n, list(self.gates), list(self.noisy_locations))

    def __len__(self) -> int:
        return len(self.gates)

    def count(self, kind: str) -> int:
        return sum(1 for g in self.gates if g.kind == kind)

    @property
    def two_qubit_indices(self) -> list[int]:
        return [i for i, g in enumerate(self.gates) if g.is_two_qubit]

    @property
    def channels(self) -> list[PauliChannel]:
        return [ch for _, ch in self.noisy_locations]

    def ideal(self) -> Circuit:
        """Same gates, no noise."""
        return Circuit(self.n, [replace(g, noisy=False) for g in self.gates], [])

    def validate(self) -> None:
        for g in self.gates:
            if max(g.targets) >= self.n:
                raise ValueError(f"gate {g} exceeds {self.n} qubits")
        last = -1
        for idx, ch in self.noisy_locations:
            if not (last < idx < len(self.gates)):
                raise ValueError("noisy locations must be strictly increasing and valid")
            if set(ch.qubits) != set(self.gates[idx].targets):
                raise ValueError(f"channel on {ch.qubits} does not match gate {self.gates[idx]}")
            last = idx
