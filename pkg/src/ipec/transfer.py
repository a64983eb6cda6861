"""Batched Pauli-transfer simulation.

A state is stored as the real tensor ``c[Q] = Tr(rho Q)`` over n-qubit Pauli
strings Q, shape ``(B, 4, ..., 4)`` with a leading batch axis. The axis for
qubit q is ``1 + (n - 1 - q)`` and each axis runs over I, X, Y, Z. Gates act as
real transfer matrices, Pauli channels and Pauli conjugations are elementwise
products, and ``Tr(rho O) = <o, c>`` for the coefficient vector ``o`` of O.

The engine evaluates sample sets exactly. It caches the noisy state after
every noisy location and the Heisenberg-evolved observables before it, so an
instance only needs propagating between its first and last insertion.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .circuit import Circuit, Gate
from .noise import PauliChannel
from .pauli import SYMBOLS, PauliString, conjugation_signs

_BATCH_ELEMS = 1 << 24  # cap on floats held by one active batch


def _local_basis(k: int) -> list[np.ndarray]:
    mats = []
    for idx in range(4 ** k):
        ops = [SYMBOLS[(idx >> (2 * (k - 1 - i))) & 3] for i in range(k)]
        mats.append(Gate("PAULI", tuple(range(k)), pauli=PauliString(tuple(ops))).matrix())
    return mats


def transfer_matrix(u: np.ndarray) -> np.ndarray:
    """``R[a, b] = Tr(P_a U P_b U^dag) / 2^k`` for a k-qubit unitary.

    The local index of ``P_a`` puts the first target in the high base-4 digit,
    the same ordering ``Gate.matrix`` uses.
    """
    k = int(round(np.log2(u.shape[0])))
    basis = _local_basis(k)
    d = 2 ** k
    out = np.empty((4 ** k, 4 ** k))
    for b, pb in enumerate(basis):
        m = u @ pb @ u.conj().T
        for a, pa in enumerate(basis):
            out[a, b] = np.real(np.trace(pa @ m)) / d
    return out


@lru_cache(maxsize=4096)
def _gate_ptm(kind: str, theta: float | None, word: str | None) -> np.ndarray:
    n_t = 2 if kind in ("CNOT", "CZ") else (len(word) if word else 1)
    pauli = PauliString(tuple(word)) if word else None
    g = Gate(kind, tuple(range(n_t)), theta=theta, pauli=pauli)
    return transfer_matrix(g.matrix())


def gate_ptm(gate: Gate) -> np.ndarray:
    word = "".join(gate.pauli.ops) if gate.pauli is not None else None
    return _gate_ptm(gate.kind, gate.theta, word)


class _Layout:
    """Maps local tensors over a qubit tuple onto the state tensor."""

    def __init__(self, n: int, qubits):
        self.n = n
        self.qubits = tuple(qubits)
        self.axes = [1 + (n - 1 - q) for q in self.qubits]

    def broadcast(self, local: np.ndarray, batch: bool = False) -> np.ndarray:
        """Reshape a tensor whose axes follow ``reversed(qubits)`` for broadcasting.

        That axis order is the one produced by ``anticommute_tensor`` and
        ``PauliChannel.transfer_eigenvalues``. With ``batch`` the input
        carries a leading batch axis.
        """
        k = len(self.qubits)
        src_axes = [1 + (self.n - 1 - q) for q in reversed(self.qubits)]
        order = np.argsort(src_axes)
        lead = 1 if batch else 0
        t = np.transpose(local, [0] * lead + [lead + int(i) for i in order]) if k else local
        shape = [local.shape[0] if batch else 1] + [1] * self.n
        for ax in sorted(src_axes):
            shape[ax] = 4
        return t.reshape(shape)


def apply_ptm(c: np.ndarray, r: np.ndarray, layout: _Layout, transpose: bool = False) -> np.ndarray:
    k = len(layout.qubits)
    rt = (r.T if transpose else r).reshape((4,) * (2 * k))
    t = np.tensordot(c, rt, axes=(layout.axes, list(range(k, 2 * k))))
    # tensordot appends the output axes at the end
    return np.moveaxis(t, list(range(c.ndim - k, c.ndim)), layout.axes)


def zero_state(n: int, batch: int = 1) -> np.ndarray:
    """Transfer tensor of |0...0>: 1 on every string built from I and Z."""
    one = np.array([1.0, 0.0, 0.0, 1.0])
    c = np.ones((batch,) + (1,) * n)
    for q in range(n):
        shape = [1] * (n + 1)
        shape[1 + q] = 4
        c = c * one.reshape(shape)
    return np.ascontiguousarray(c)


def observable_tensor(terms, n: int) -> np.ndarray:
    """Coefficient tensor (4,)*n of ``sum_j w_j P_j`` (constant excluded)."""
    o = np.zeros((4,) * n)
    for w, p in terms:
        if p.n != n:
            raise ValueError(f"observable term on {p.n} qubits, circuit has {n}")
        o[p.index()] += w
    return o


def z_string_tensors(n: int) -> np.ndarray:
    """All 2^n Z-type strings as a (2^n, 4, ..., 4) stack; row z has Z on the set bits of z."""
    out = np.zeros((2 ** n,) + (4,) * n)
    for z in range(2 ** n):
        idx = tuple(3 if (z >> q) & 1 else 0 for q in reversed(range(n)))
        out[(z,) + idx] = 1.0
    return out


def distribution_from_z(zvals: np.ndarray, n: int) -> np.ndarray:
    """Outcome probabilities from Z-string expectations (last axis indexes z).

    ``P(x) = 2^-n sum_z (-1)^{popcount(x & z)} <Z_z>``.
    """
    x = np.arange(2 ** n)
    parity = np.array([bin(v).count("1") & 1 for v in range(2 ** n)])
    h = 1.0 - 2.0 * parity[np.bitwise_and.outer(x, x)]
    return zvals @ h.T / 2 ** n


@dataclass
class _Op:
    layout: _Layout
    ptm: np.ndarray
    location: int  # noisy location index after this gate, or -1


class TransferProgram:
    """A circuit compiled to transfer matrices, with optional per-location scaling.

    ``eigen_override`` replaces the forward channel diagonal at every
    location; it is how exact signed maps are evaluated.
    """

    def __init__(self, circuit: Circuit, eigen_override: list[np.ndarray] | None = None):
        circuit.validate()
        self.n = circuit.n
        locs = dict((g, i) for i, (g, _) in enumerate(circuit.noisy_locations))
        self.ops = [_Op(_Layout(self.n, g.targets), gate_ptm(g), locs.get(i, -1))
                    for i, g in enumerate(circuit.gates)]
        self.channels: list[PauliChannel] = circuit.channels
        self.loc_layouts = [_Layout(self.n, ch.qubits) for ch in self.channels]
        if eigen_override is None:
            eig = [ch.transfer_eigenvalues() for ch in self.channels]
        else:
            eig = eigen_override
        self.eigen = [lay.broadcast(e) for lay, e in zip(self.loc_layouts, eig)]
        self._sign_tables = {}

    @classmethod
    def mitigated(cls, circuit: Circuit, m: float) -> TransferProgram:
        """Program for the exact composition ``Lambda^{-m} o Lambda`` at every location."""
        eig = [ch.transfer_eigenvalues() * ch.transfer_eigenvalues(m, inverse=True)
               for ch in circuit.channels]
        return cls(circuit, eig)

    @property
    def n_locations(self) -> int:
        return len(self.channels)

    def sign_table(self, loc: int) -> np.ndarray:
        """(4^k, broadcast shape) conjugation signs for every local word at ``loc``."""
        if loc not in self._sign_tables:
            ch = self.channels[loc]
            k = len(ch.qubits)
            rows = []
            for w in range(4 ** k):
                ops = tuple(SYMBOLS[(w >> (2 * (k - 1 - i))) & 3] for i in range(k))
                rows.append(conjugation_signs(PauliString(ops)))
            tab = self.loc_layouts[loc].broadcast(np.stack(rows), batch=True)
            self._sign_tables[loc] = tab
        return self._sign_tables[loc]

    # -- propagation ---------------------------------------------------------

    def run(self, c: np.ndarray | None = None, noisy: bool = True) -> np.ndarray:
        """Forward-propagate a batch through the whole circuit."""
        c = zero_state(self.n) if c is None else c
        for op in self.ops:
            c = apply_ptm(c, op.ptm, op.layout)
            if noisy and op.location >= 0:
                c = c * self.eigen[op.location]
        return c

    def forward_cache(self) -> tuple[list[np.ndarray], np.ndarray]:
        """States right after each location's channel, plus the final state."""
        c = zero_state(self.n)
        cache = []
        for op in self.ops:
            c = apply_ptm(c, op.ptm, op.layout)
            if op.location >= 0:
                c = c * self.eigen[op.location]
                cache.append(c[0])
        return cache, c[0]

    def backward_cache(self, obs: np.ndarray) -> list[np.ndarray]:
        """Heisenberg observables (K, 4, ..., 4) seen right after each location's channel."""
        o = obs
        cache = [None] * self.n_locations
        for op in reversed(self.ops):
            if op.location >= 0:
                cache[op.location] = o
                o = o * self.eigen[op.location]
            o = apply_ptm(o, op.ptm, op.layout, transpose=True)
        return cache

    def instance_values(self, words: list[tuple[tuple[int, int], ...]], obs: np.ndarray) -> np.ndarray:
        """Exact expectation of each observable for each instance.

        ``words[j]`` lists ``(location, local word index)`` pairs in increasing
        location order, one per location with a non-identity insertion. The
        word index puts the first channel qubit in the high base-4 digit.
        ``obs`` has shape (K, 4, ..., 4). Returns (len(words), K).
        """
        k_obs = obs.shape[0]
        flat = obs.reshape(k_obs, -1)
        rho, final = self.forward_cache()
        base = flat @ final.reshape(-1)
        out = np.tile(base, (len(words), 1))
        if not any(words):
            return out
        ocache = self.backward_cache(obs)

        singles: dict[int, list[tuple[int, int]]] = {}
        multi: list[int] = []
        for j, w in enumerate(words):
            if len(w) == 1:
                singles.setdefault(w[0][0], []).append((j, w[0][1]))
            elif len(w) > 1:
                multi.append(j)

        for loc, items in singles.items():
            # <O, s * rho> for every word at once
            prod = (ocache[loc] * rho[loc][None]).reshape(k_obs, -1)
            signs = self.sign_table(loc)
            s = np.broadcast_to(signs, signs.shape[:1] + rho[loc].shape).reshape(signs.shape[0], -1)
            table = s @ prod.T
            idx = np.array(items)
            out[idx[:, 0]] = table[idx[:, 1]]

        if multi:
            self._propagate_multi(words, multi, rho, ocache, out)
        return out

    def _propagate_multi(self, words, multi, rho, ocache, out) -> None:
        per_state = int(np.prod(rho[0].shape))
        chunk = max(1, _BATCH_ELEMS // per_state)
        multi = sorted(multi, key=lambda j: words[j][0][0])
        for start in range(0, len(multi), chunk):
            self._sweep(words, multi[start:start + chunk], rho, ocache, out)

    def _sweep(self, words, batch, rho, ocache, out) -> None:
        first = {}
        for j in batch:
            first.setdefault(words[j][0][0], []).append(j)
        picks_at: dict[int, dict[int, int]] = {}
        last = {}
        for j in batch:
            for loc, w in words[j]:
                picks_at.setdefault(loc, {})[j] = w
            last.setdefault(words[j][-1][0], []).append(j)

        ids: list[int] = []
        state = None
        lo = min(first)
        started = False
        for op in self.ops:
            loc = op.location
            if not started:
                if loc != lo:
                    continue
                started = True
            elif state is not None and len(ids):
                state = apply_ptm(state, op.ptm, op.layout)
                if loc >= 0:
                    state = state * self.eigen[loc]
            if loc < 0:
                continue
            if loc in first:
                new = np.broadcast_to(rho[loc], (len(first[loc]),) + rho[loc].shape)
                state = new.copy() if state is None or not ids else np.concatenate([state, new])
                ids = ids + first[loc]
            if loc in picks_at and ids:
                here = picks_at[loc]
                w = np.array([here.get(j, 0) for j in ids])
                state = state * self.sign_table(loc)[w]
            if loc in last:
                done = set(last[loc])
                keep = np.array([j not in done for j in ids])
                sel = ~keep
                o = ocache[loc].reshape(ocache[loc].shape[0], -1)
                vals = state[sel].reshape(int(sel.sum()), -1) @ o.T
                out[np.array(ids)[sel]] = vals
                state = state[keep]
                ids = [j for j in ids if j not in done]
                if not ids and max(last) <= loc:
                    return


def word_index(local: PauliString) -> int:
    """Base-4 index of a local word, first operator in the high digit."""
    w = 0
    for o in local.ops:
        w = 4 * w + SYMBOLS.index(o)
    return w
