"""Pauli channels, quasi-probability inverses and Pauli twirling.

A ``PauliChannel`` is the composed map

    rho -> o_k [ (1 - eps_k) rho + eps_k P_k rho P_k ]

over its generator terms. Partial inversion by a fraction ``m`` flips the sign
of every correction term and rescales by ``gamma = prod_k 1/(1 - 2 m eps_k)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .circuit import CLIFFORD_2Q, Circuit, Gate
from .pauli import SYMBOLS, PauliString


class GammaDivergence(ValueError):
    """Raised when some 2*m*eps_k >= 1, where the inverse map has no finite gamma."""


@dataclass(frozen=True)
class PauliChannel:
    """Composed Pauli channel on ``qubits``.

    Each term is ``(P, eps)`` with ``P`` a local word whose ``ops[i]`` acts on
    ``qubits[i]``.
    """

    qubits: tuple[int, ...]
    terms: tuple[tuple[PauliString, float], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        terms = tuple((p, float(r)) for p, r in self.terms)
        object.__setattr__(self, "terms", terms)
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError("repeated qubit in channel support")
        for p, r in terms:
            if p.n != len(self.qubits):
                raise ValueError(f"term {p} does not match support {self.qubits}")
            if p.is_identity():
                raise ValueError("identity generator carries no noise")
            if not (0.0 <= r < 0.5) or not math.isfinite(r):
                raise ValueError(f"rate {r} outside [0, 1/2)")

    @property
    def rates(self) -> np.ndarray:
        return np.array([r for _, r in self.terms])

    @property
    def paulis(self) -> list[PauliString]:
        return [p for p, _ in self.terms]

    def is_identity(self) -> bool:
        return all(r == 0.0 for _, r in self.terms)

    def scaled(self, factor: float) -> PauliChannel:
        return PauliChannel(self.qubits, tuple((p, r * factor) for p, r in self.terms))

    def on(self, qubits) -> PauliChannel:
        """Same generators moved onto another support."""
        qubits = tuple(qubits)
        if len(qubits) != len(self.qubits):
            raise ValueError("support size mismatch")
        return PauliChannel(qubits, self.terms)

    def transfer_eigenvalues(self, m: float = 0.0, inverse: bool = False) -> np.ndarray:
        """Diagonal of the Pauli-transfer matrix, shape (4,)*k.

        Forward channel: each anticommuting generator scales by ``1 - 2 eps_k``.
        With ``inverse=True`` this is the spectrum of the gamma-normalized
        signed map at fraction ``m``: each anticommuting generator contributes
        ``1 / (1 - 2 m eps_k)``, commuting ones leave the component alone.
        """
        from .pauli import anticommute_tensor

        k = len(self.qubits)
        lam = np.ones((4,) * k)
        for p, r in self.terms:
            mask = anticommute_tensor(p).astype(bool)
            if inverse:
                f = 1.0 / (1.0 - 2.0 * m * r)
            else:
                f = 1.0 - 2.0 * r
            lam = np.where(mask, lam * f, lam)
        return lam

    def to_json(self) -> list[dict]:
        return [{"pauli": p.label, "rate": r} for p, r in self.terms]

    @classmethod
    def from_json(cls, qubits, items) -> PauliChannel:
        return cls(tuple(qubits), tuple((PauliString.from_label(d["pauli"]), float(d["rate"]))
                                        for d in items))


def depolarizing_model(epsilon: float, gate_qubits=(0, 1)) -> PauliChannel:
    """Local depolarizing noise on both gate qubits as six eps/4 generators.

    Terms are {X, Y, Z} on the first qubit then {X, Y, Z} on the second.
    ``epsilon = 0`` yields the identity channel (no terms).
    """
    if not (0.0 <= epsilon < 2.0):
        raise ValueError(f"epsilon {epsilon} outside [0, 2)")
    gate_qubits = tuple(gate_qubits)
    if len(gate_qubits) != 2:
        raise ValueError("depolarizing model is defined on a qubit pair")
    if epsilon == 0.0:
        return PauliChannel(gate_qubits, ())
    terms = []
    for slot in range(2):
        for s in "XYZ":
            ops = ["I", "I"]
            ops[slot] = s
            terms.append((PauliString(tuple(ops)), epsilon / 4))
    return PauliChannel(gate_qubits, tuple(terms))


def error_probability_model(epsilon: float, gate_qubits=(0, 1)) -> PauliChannel:
    """Depolarizing noise quoted as a per-qubit error probability.

    Each qubit suffers X, Y or Z with probability ``epsilon / 3`` apiece, so
    this is ``depolarizing_model(4 epsilon / 3)``. Defined for ``epsilon < 1.5``.
    """
    if not (0.0 <= epsilon < 1.5):
        raise ValueError(f"epsilon {epsilon} outside [0, 1.5)")
    return depolarizing_model(4.0 * epsilon / 3.0, gate_qubits)


def gamma(channels, m: float = 1.0) -> float:
    """Sampling amplification of the partial inverse over all channels."""
    if isinstance(channels, PauliChannel):
        channels = [channels]
    if not 0.0 <= m <= 1.0:
        raise ValueError(f"mitigation fraction {m} outside [0, 1]")
    log_g = 0.0
    for ch in channels:
        for _, r in ch.terms:
            x = 1.0 - 2.0 * m * r
            if x <= 0.0:
                raise GammaDivergence(f"2*m*eps = {2 * m * r} >= 1")
            log_g -= math.log(x)
    return math.exp(log_g)


@dataclass(frozen=True)
class QuasiProbRep:
    """Quasi-probability representation of the partial inverse map."""

    channel: PauliChannel
    m: float

    def __post_init__(self):
        if not 0.0 <= self.m <= 1.0:
            raise ValueError("m outside [0, 1]")

    @property
    def gamma(self) -> float:
        return gamma([self.channel], self.m)

    def term_weights(self) -> list[tuple[float, float]]:
        """Per term ``(identity weight, pauli weight)`` before the gamma factor."""
        return [(1.0 - self.m * r, -self.m * r) for _, r in self.channel.terms]


@dataclass(frozen=True)
class InsertionPattern:
    """One sampled instance of the partial inverse.

    ``picks[loc]`` is a boolean vector over that location's channel terms.
    ``resolved`` maps a noisy location index to the local Pauli word inserted
    there (the product of picked generators; phases are irrelevant under
    conjugation).
    """

    picks: tuple[tuple[bool, ...], ...]
    sign: int
    resolved: tuple[tuple[int, PauliString], ...] = field(default=())

    @property
    def n_picks(self) -> int:
        return sum(sum(p) for p in self.picks)

    def is_identity(self) -> bool:
        return not self.resolved


def resolve_picks(channels, picks) -> tuple[tuple[int, PauliString], ...]:
    out = []
    for loc, (ch, row) in enumerate(zip(channels, picks)):
        word = None
        for (p, _), hit in zip(ch.terms, row):
            if hit:
                word = p if word is None else word * p
        if word is not None and not word.is_identity():
            out.append((loc, word))
    return tuple(out)


def pattern_from_picks(channels, picks) -> InsertionPattern:
    picks = tuple(tuple(bool(x) for x in row) for row in picks)
    n = sum(sum(row) for row in picks)
    return InsertionPattern(picks, -1 if n % 2 else 1, resolve_picks(channels, picks))


def draw_picks(channels, m: float, size: int, rng: np.random.Generator) -> np.ndarray:
    """Boolean matrix (size, total terms): Pauli chosen with probability m*eps_k."""
    rates = np.concatenate([ch.rates for ch in channels]) if channels else np.zeros(0)
    if size < 1:
        raise ValueError("size must be >= 1")
    u = rng.random((size, rates.size))
    return u < m * rates


def split_picks(channels, row) -> list[tuple[bool, ...]]:
    out, i = [], 0
    for ch in channels:
        k = len(ch.terms)
        out.append(tuple(bool(x) for x in row[i:i + k]))
        i += k
    return out


def sample_insertion(channels, m: float, rng: np.random.Generator) -> InsertionPattern:
    """Draw one pattern: per term, identity w.p. 1 - m eps_k, else its Pauli (sign flip).

    The signed estimator weight of the drawn instance is ``gamma * sign``.
    """
    if isinstance(channels, PauliChannel):
        channels = [channels]
    gamma(channels, m)  # validates the rates
    row = draw_picks(channels, m, 1, rng)[0]
    return pattern_from_picks(channels, split_picks(channels, row))


def enumerate_patterns(channels, m: float):
    """Every pattern with its probability; feasible for a handful of terms."""
    if isinstance(channels, PauliChannel):
        channels = [channels]
    flat = [r for ch in channels for r in ch.rates]
    for bits in product((False, True), repeat=len(flat)):
        prob = 1.0
        for b, r in zip(bits, flat):
            prob *= m * r if b else 1.0 - m * r
        yield pattern_from_picks(channels, split_picks(channels, bits)), prob


# -- twirling ----------------------------------------------------------------

def _conjugate_through(gate: Gate, local: PauliString) -> tuple[int, PauliString]:
    """Return (sign, Q) with G·P·G† = sign·Q for a Clifford two-qubit gate."""
    u = gate.matrix()
    pm = Gate("PAULI", gate.targets, pauli=local).matrix()
    out = u @ pm @ u.conj().T
    for ops in product(SYMBOLS, repeat=len(local.ops)):
        q = PauliString(ops)
        qm = Gate("PAULI", gate.targets, pauli=q).matrix()
        c = np.trace(qm.conj().T @ out) / out.shape[0]
        if abs(abs(c) - 1) < 1e-9:
            if abs(c.imag) > 1e-9:
                raise ValueError("conjugation produced a non-Hermitian phase")
            return int(round(c.real)), q
    raise ValueError(f"{gate.kind} is not Clifford")


@dataclass
class TwirledCircuit:
    circuit: Circuit
    sign: int


def twirl_pairs(gate: Gate):
    """All (P_pre, P_post, sign) with P_post·G·P_pre = sign·G."""
    pairs = []
    for ops in product(SYMBOLS, repeat=2):
        pre = PauliString(ops)
        s, post = _conjugate_through(gate, pre)
        pairs.append((pre, post, s))
    return pairs


def pauli_twirl(circuit: Circuit, rng: np.random.Generator, randomizations: int,
                include_identity: bool = False) -> list[TwirledCircuit]:
    """Randomly twirl every noisy gate.

    Each noisy gate G becomes ``P_pre, G, P_post`` with ``P_post = G P_pre G†``
    (up to a sign), so the ideal action is unchanged; the sign is returned for
    the estimator rather than folded into gates. The noise channel stays
    attached after G, i.e. it is sandwiched by the twirl.
    """
    noisy = [i for i, _ in circuit.noisy_locations]
    for i in noisy:
        if circuit.gates[i].kind not in CLIFFORD_2Q:
            raise ValueError(f"cannot twirl non-Clifford noisy gate {circuit.gates[i].kind}")
    cache = {}
    out = []
    for r in range(randomizations):
        gates, locs, sign = [], [], 1
        chan = dict(circuit.noisy_locations)
        for i, g in enumerate(circuit.gates):
            if i not in chan:
                gates.append(g)
                continue
            key = (g.kind, g.targets)
            if key not in cache:
                cache[key] = twirl_pairs(g)
            pairs = cache[key]
            j = 0 if (include_identity and r == 0) else int(rng.integers(len(pairs)))
            pre, post, s = pairs[j]
            sign *= s
            if not pre.is_identity():
                gates.append(Gate("PAULI", g.targets, pauli=pre))
            gates.append(g)
            locs.append((len(gates) - 1, chan[i]))
            if not post.is_identity():
                gates.append(Gate("PAULI", g.targets, pauli=post))
        out.append(TwirledCircuit(Circuit(circuit.n, gates, locs), sign))
    return out


def build_noisy_circuit(ideal: Circuit, model: PauliChannel) -> Circuit:
    """Attach ``model`` (moved onto each gate's qubits) after every CNOT/CZ."""
    locs = []
    gates = []
    for i, g in enumerate(ideal.gates):
        if g.is_two_qubit:
            if len(model.qubits) != len(g.targets):
                raise ValueError(f"model support {model.qubits} cannot attach to {g.targets}")
            gates.append(Gate(g.kind, g.targets, g.theta, g.pauli, noisy=True))
            locs.append((i, model.on(g.targets)))
        else:
            gates.append(g)
    return Circuit(ideal.n, gates, locs)


def channels_to_json(circuit: Circuit) -> str:
    """Serialize per-location channels as ``{tag: [{pauli, rate}, ...]}``."""
    doc = {f"{i}:{','.join(map(str, ch.qubits))}": ch.to_json()
           for i, ch in circuit.noisy_locations}
    return json.dumps(doc, indent=2)


def channels_from_json(text: str) -> dict[int, PauliChannel]:
    doc = json.loads(text)
    out = {}
    for tag, items in doc.items():
        idx, qs = tag.split(":")
        out[int(idx)] = PauliChannel.from_json([int(q) for q in qs.split(",")], items)
    return out
