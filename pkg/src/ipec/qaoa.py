"""MaxCut problems, the QAOA ansatz and landscape scans.

Parameter vector layout (length 2p): ``x[:p]`` drive the cost layers and
``x[p:]`` drive the mixers. Angles are in units of pi:

* cost layer l, per edge (i, j): ``CNOT(i, j) · RZ(pi x_l) on j · CNOT(i, j)``,
  i.e. ``exp(-i (pi/2) x_l Z_i Z_j)``;
* mixer layer l: ``RX(pi x_{p+l})`` on every qubit.

The optimized observable is ``H = -sum_{(i,j)} (1 - Z_i Z_j)/2`` and
``N_cut = -<H>``. The ``-|E|/2`` part of ``H`` is a classical constant.
"""

from __future__ import annotations

import itertools
import json
import math
import re
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .circuit import Circuit
from .noise import PauliChannel, build_noisy_circuit
from .pauli import PauliString
from .sim import Observable, StateVector, expectation, simulate
from .transfer import TransferProgram, observable_tensor


@dataclass(frozen=True)
class Graph:
    n: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        edges = tuple((int(a), int(b)) for a, b in self.edges)
        object.__setattr__(self, "edges", edges)
        if self.n < 2:
            raise ValueError("graph needs at least 2 vertices")
        seen = set()
        for a, b in edges:
            if a == b:
                raise ValueError(f"self-loop on vertex {a}")
            if not (0 <= a < self.n and 0 <= b < self.n):
                raise ValueError(f"edge ({a}, {b}) outside [0, {self.n})")
            key = frozenset((a, b))
            if key in seen:
                raise ValueError(f"duplicate edge ({a}, {b})")
            seen.add(key)

    def cut_size(self, bits: int) -> int:
        return sum(((bits >> a) ^ (bits >> b)) & 1 for a, b in self.edges)

    def maxcut(self) -> int:
        """Brute force over all 2^n bipartitions."""
        return max(self.cut_size(b) for b in range(2 ** self.n))

    def to_json(self) -> str:
        return json.dumps({"n": self.n, "edges": [list(e) for e in self.edges]})

    @classmethod
    def from_json(cls, text: str) -> Graph:
        d = json.loads(text)
        return cls(int(d["n"]), tuple(tuple(e) for e in d["edges"]))


def _ring(n: int):
    return tuple((i, (i + 1) % n) for i in range(n))


def make_graph(kind: str, n: int | None = None, edges=None) -> Graph:
    """Build a named graph family.

    ``kind`` may carry the size inline, e.g. ``"ring_6"`` or ``"star_8"``.
    """
    m = re.fullmatch(r"(ring|star)_(\d+)", kind)
    if m:
        kind, n = m.group(1), int(m.group(2))
    if kind == "ring":
        if n is None or n < 3:
            raise ValueError("ring needs n >= 3")
        return Graph(n, _ring(n))
    if kind == "star":
        if n is None or n < 2:
            raise ValueError("star needs n >= 2")
        return Graph(n, tuple((0, i) for i in range(1, n)))
    fixed = {
        "pyramid4": ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)),
        "diag4": _ring(4) + ((0, 2),),
        "brush4": ((0, 1), (0, 2), (0, 3), (1, 2)),
    }
    if kind in fixed:
        if n not in (None, 4):
            raise ValueError(f"{kind} has 4 vertices")
        return Graph(4, fixed[kind])
    if kind == "explicit":
        if n is None or edges is None:
            raise ValueError("explicit graph needs n and edges")
        return Graph(n, tuple(tuple(e) for e in edges))
    raise ValueError(f"unknown graph family {kind!r}")


@dataclass(frozen=True)
class QaoaProblem:
    graph: Graph
    p: int

    def __post_init__(self):
        if self.p < 0:
            raise ValueError("p must be >= 0")

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def n_params(self) -> int:
        return 2 * self.p

    @cached_property
    def cost(self) -> Observable:
        """``H = -sum (1 - ZZ)/2``: +1/2 per ZZ term, constant -|E|/2."""
        n = self.n
        terms = tuple((0.5, PauliString.single(n, a, "Z") * PauliString.single(n, b, "Z"))
                      for a, b in self.graph.edges)
        return Observable(terms, -len(self.graph.edges) / 2)

    @cached_property
    def mixer(self) -> Observable:
        return Observable(tuple((1.0, PauliString.single(self.n, q, "X")) for q in range(self.n)))

    @cached_property
    def cost_tensor(self) -> np.ndarray:
        return observable_tensor(self.cost.terms, self.n)

    def check(self, params) -> np.ndarray:
        x = np.asarray(params, dtype=float).reshape(-1)
        if x.size != self.n_params:
            raise ValueError(f"expected {self.n_params} parameters, got {x.size}")
        if not np.all(np.isfinite(x)):
            raise ValueError("parameters must be finite")
        return x


def build_ansatz(problem: QaoaProblem, params) -> Circuit:
    x = problem.check(params)
    p, n = problem.p, problem.n
    c = Circuit(n)
    for q in range(n):
        c.add("H", q)
    for layer in range(p):
        for a, b in problem.graph.edges:
            c.add("CNOT", a, b)
            c.add("RZ", b, theta=math.pi * x[layer])
            c.add("CNOT", a, b)
        for q in range(n):
            c.add("RX", q, theta=math.pi * x[p + layer])
    return c


def noisy_ansatz(problem: QaoaProblem, params, channel: PauliChannel) -> Circuit:
    return build_noisy_circuit(build_ansatz(problem, params), channel)


def n_cut(problem: QaoaProblem, params, channel: PauliChannel | None = None,
          backend: str = "transfer") -> float:
    """Expected cut size; noiseless when ``channel`` is None.

    ``backend="dense"`` uses the statevector / density-matrix simulator,
    ``"transfer"`` the Pauli-transfer engine (same numbers, faster with noise).
    """
    circ = build_ansatz(problem, params)
    if channel is None:
        return -expectation(simulate(circ, StateVector.zero(problem.n), noisy=False), problem.cost)
    noisy = build_noisy_circuit(circ, channel)
    if backend == "dense":
        return -expectation(simulate(noisy), problem.cost)
    return -transfer_expectation(TransferProgram(noisy), problem)


def transfer_expectation(program: TransferProgram, problem: QaoaProblem) -> float:
    c = program.run()
    return float(np.sum(c[0] * problem.cost_tensor)) + problem.cost.constant


def exact_mitigated_n_cut(problem: QaoaProblem, params, channel: PauliChannel, m: float) -> float:
    """N_cut under the exact partial inverse ``Lambda^{-m}`` after every channel."""
    circ = noisy_ansatz(problem, params, channel)
    return -transfer_expectation(TransferProgram.mitigated(circ, m), problem)


def distance(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError("parameter vectors differ in length")
    return float(np.linalg.norm(a - b))


def landscape_constraint_scan(problem: QaoaProblem, base_params, offsets, objective) -> np.ndarray:
    """Scan the slice that keeps each ``cost_l + mixer_l`` fixed.

    For p = 2 the grid is over shifts ``(d_1, d_2)``: cost_l gains ``d_l`` and
    mixer_l loses it. For other p a single shift is shared by every layer and
    the result is 1-D. ``objective(params)`` supplies the value (ideal, noisy
    or mitigated).
    """
    x0 = problem.check(base_params)
    p = problem.p
    offsets = np.asarray(offsets, dtype=float)
    if p == 2:
        out = np.empty((offsets.size, offsets.size))
        for i, d1 in enumerate(offsets):
            for j, d2 in enumerate(offsets):
                x = x0.copy()
                x[0] += d1
                x[2] -= d1
                x[1] += d2
                x[3] -= d2
                out[i, j] = objective(x)
        return out
    out = np.empty(offsets.size)
    for i, d in enumerate(offsets):
        x = x0.copy()
        x[:p] += d
        x[p:] -= d
        out[i] = objective(x)
    return out


def landscape_line_scan(problem: QaoaProblem, endpoint_a, endpoint_b, samples: int,
                        objective) -> list[tuple[float, float]]:
    """Values along ``x a + (1 - x) b`` for ``samples`` points in [0, 1]."""
    a = problem.check(endpoint_a)
    b = problem.check(endpoint_b)
    if samples < 1:
        raise ValueError("samples must be >= 1")
    xs = np.linspace(0.0, 1.0, samples) if samples > 1 else np.array([0.0])
    return [(float(x), float(objective(x * a + (1 - x) * b))) for x in xs]


def brute_force_maxcut(graph: Graph) -> tuple[int, list[str]]:
    """Max cut size and every optimal bitstring label (qubit 0 rightmost)."""
    best, arg = -1, []
    for bits in itertools.product((0, 1), repeat=graph.n):
        v = int("".join(map(str, bits)), 2)
        c = graph.cut_size(v)
        if c > best:
            best, arg = c, [format(v, f"0{graph.n}b")]
        elif c == best:
            arg.append(format(v, f"0{graph.n}b"))
    return best, arg
