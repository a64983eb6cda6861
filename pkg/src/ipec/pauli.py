"""Pauli strings and the single-qubit Pauli algebra.

Label convention: the rightmost character of a label acts on qubit 0, matching
the way outcome bitstrings are printed (most-significant qubit first). A
``PauliString`` stores its operators indexed by qubit, ``ops[q]``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product

import numpy as np

SYMBOLS = "IXYZ"

I2 = np.eye(2, dtype=complex)
X2 = np.array([[0, 1], [1, 0]], dtype=complex)
Y2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z2 = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI_MATRICES = {"I": I2, "X": X2, "Y": Y2, "Z": Z2}

# single-qubit product table: (a, b) -> (phase, c) with a·b = phase·c
_PRODUCT = {}
for _a, _b in product(SYMBOLS, repeat=2):
    _m = PAULI_MATRICES[_a] @ PAULI_MATRICES[_b]
    for _c in SYMBOLS:
        _ph = np.trace(PAULI_MATRICES[_c].conj().T @ _m) / 2
        if abs(_ph) > 0.5:
            _PRODUCT[_a, _b] = (complex(np.round(_ph)), _c)
            break


@dataclass(frozen=True)
class PauliString:
    """An n-qubit Pauli word without phase."""

    ops: tuple[str, ...]

    def __post_init__(self):
        ops = tuple(self.ops)
        if any(o not in SYMBOLS for o in ops):
            raise ValueError(f"invalid Pauli symbols in {ops!r}")
        object.__setattr__(self, "ops", ops)

    @classmethod
    def from_label(cls, label: str) -> PauliString:
        return cls(tuple(reversed(label.upper())))

    @classmethod
    def identity(cls, n: int) -> PauliString:
        return cls(("I",) * n)

    @classmethod
    def single(cls, n: int, qubit: int, symbol: str) -> PauliString:
        ops = ["I"] * n
        ops[qubit] = symbol
        return cls(tuple(ops))

    @property
    def n(self) -> int:
        return len(self.ops)

    @property
    def label(self) -> str:
        return "".join(reversed(self.ops))

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(q for q, o in enumerate(self.ops) if o != "I")

    @property
    def weight(self) -> int:
        return len(self.support)

    def is_identity(self) -> bool:
        return all(o == "I" for o in self.ops)

    def __str__(self) -> str:
        return self.label

    def __len__(self) -> int:
        return self.n

    def compose(self, other: PauliString) -> tuple[complex, PauliString]:
        """Return ``(phase, P)`` with ``self @ other == phase * P``."""
        if other.n != self.n:
            raise ValueError("qubit count mismatch")
        phase = 1 + 0j
        ops = []
        for a, b in zip(self.ops, other.ops):
            ph, c = _PRODUCT[a, b]
            phase *= ph
            ops.append(c)
        return phase, PauliString(tuple(ops))

    def __mul__(self, other: PauliString) -> PauliString:
        # phase dropped; use compose() when it matters
        return self.compose(other)[1]

    def commutes(self, other: PauliString) -> bool:
        anti = sum(1 for a, b in zip(self.ops, other.ops)
                   if a != "I" and b != "I" and a != b)
        return anti % 2 == 0

    def embed(self, n: int, qubits) -> PauliString:
        """Place this local word on ``qubits`` of an n-qubit register."""
        if len(qubits) != self.n:
            raise ValueError("embedding needs one qubit per operator")
        ops = ["I"] * n
        for q, o in zip(qubits, self.ops):
            ops[q] = o
        return PauliString(tuple(ops))

    def to_matrix(self) -> np.ndarray:
        """Dense matrix with qubit q mapped to bit q of the basis index."""
        m = np.array([[1.0 + 0j]])
        for o in reversed(self.ops):
            m = np.kron(m, PAULI_MATRICES[o])
        return m

    def index(self) -> tuple[int, ...]:
        """Index into a transfer-basis tensor (axis order: qubit n-1 first)."""
        return tuple(SYMBOLS.index(o) for o in reversed(self.ops))


def all_paulis(n: int):
    """Every n-qubit Pauli string, identity first."""
    for ops in product(SYMBOLS, repeat=n):
        yield PauliString(ops)


@lru_cache(maxsize=None)
def anticommute_table() -> np.ndarray:
    """4x4 table: 1 where single-qubit Paulis a and b anticommute."""
    t = np.zeros((4, 4), dtype=int)
    for a in range(1, 4):
        for b in range(1, 4):
            t[a, b] = int(a != b)
    return t


def anticommute_tensor(local: PauliString) -> np.ndarray:
    """Parity tensor over the local support, shape (4,)*k.

    Entry ``[a_{k-1}, ..., a_0]`` is 1 when the basis Pauli with those symbols
    anticommutes with ``local``. Axis order follows the transfer-basis
    convention (highest local index first).
    """
    t = anticommute_table()
    k = local.n
    out = np.zeros((4,) * k, dtype=int)
    for ax, o in enumerate(reversed(local.ops)):
        shape = [1] * k
        shape[ax] = 4
        out = out + t[:, SYMBOLS.index(o)].reshape(shape)
    return out % 2


def conjugation_signs(local: PauliString) -> np.ndarray:
    """±1 tensor: sign picked up by each basis Pauli under conjugation by ``local``."""
    return 1 - 2 * anticommute_tensor(local).astype(float)
