"""Estimators: noisy baseline, PEC with fresh or frozen sample sets, ZNE,
the staged partial-inverse schedule and distribution-level mitigation.

Two channels appear throughout. ``channel`` is the noise the simulator
applies after every two-qubit gate. ``model`` is the channel the
quasi-probability inverse is built from; it defaults to ``channel``, which
makes every PEC estimator unbiased.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Callable

import numpy as np

from .circuit import Circuit, Gate
from .noise import PauliChannel, build_noisy_circuit, draw_picks, gamma, pattern_from_picks, split_picks
from .optimize import OptimizerConfig, Trace, nelder_mead
from .qaoa import QaoaProblem, build_ansatz, distance, n_cut
from .sim import bit_label
from .transfer import TransferProgram, distribution_from_z, word_index, z_string_tensors


def stream(seed: int, *keys: int) -> np.random.Generator:
    """Independent generator for a named substream of a master seed."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, keys)]))


STAGE_SHOTS = 1_000_003  # substream key offset for shot sampling


def round_half_up(x: float) -> int:
    return int(Decimal(repr(x)).quantize(Decimal(1), rounding=ROUND_HALF_UP))


def location_channels(problem: QaoaProblem, model: PauliChannel) -> list[PauliChannel]:
    """The model channel placed on every CNOT of the ansatz, in gate order."""
    dummy = build_ansatz(problem, np.zeros(problem.n_params))
    return build_noisy_circuit(dummy, model).channels


# -- records -----------------------------------------------------------------

@dataclass(frozen=True)
class MitigatedEstimate:
    value: float
    std_error: float
    samples_used: int
    gamma: float

    def record(self, strategy: str, m: float, params, step: int | None = None) -> dict:
        return {"strategy": strategy, "m": m, "gamma": self.gamma, "samples": self.samples_used,
                "value": self.value, "std_error": self.std_error,
                "params": [float(v) for v in np.asarray(params)], "step": step}


@dataclass(frozen=True)
class SampleSet:
    """A frozen batch of insertion patterns.

    ``picks`` is a read-only boolean (size, total terms) matrix; row j is
    instance j. ``mode`` is ``"exact"`` or a positive shot count per instance.
    """

    channels: tuple[PauliChannel, ...]
    m: float
    gamma: float
    seed: int
    stage: int
    picks: np.ndarray
    mode: str | int = "exact"

    @property
    def size(self) -> int:
        return self.picks.shape[0]

    @property
    def signs(self) -> np.ndarray:
        return 1.0 - 2.0 * (self.picks.sum(axis=1) % 2)

    @property
    def instances(self):
        for row in self.picks:
            yield pattern_from_picks(self.channels, split_picks(self.channels, row))

    def words(self) -> list[tuple[tuple[int, int], ...]]:
        """Per instance, the non-identity local word at each location."""
        if not hasattr(self, "_words"):
            object.__setattr__(self, "_words", _words_from_picks(self.channels, self.picks))
        return self._words

    def matches(self, circuit: Circuit) -> bool:
        chans = circuit.channels
        return len(chans) == len(self.channels) and all(
            a.qubits == b.qubits and len(a.terms) == len(b.terms) for a, b in zip(chans, self.channels))


def _words_from_picks(channels, picks) -> list[tuple[tuple[int, int], ...]]:
    term_loc = np.repeat(np.arange(len(channels)), [len(ch.terms) for ch in channels])
    term_word = [p for ch in channels for p, _ in ch.terms]
    out = []
    rows, cols = np.nonzero(picks)
    per_row: dict[int, list[int]] = {}
    for r, c in zip(rows.tolist(), cols.tolist()):
        per_row.setdefault(r, []).append(c)
    for j in range(picks.shape[0]):
        acc: dict[int, object] = {}
        for c in per_row.get(j, ()):
            loc = int(term_loc[c])
            acc[loc] = term_word[c] if loc not in acc else acc[loc] * term_word[c]
        out.append(tuple((loc, word_index(w)) for loc, w in sorted(acc.items())
                         if not w.is_identity()))
    return out


def build_sample_set(channels, m: float, size: int, seed: int, mode: str | int = "exact",
                     stage: int = 0) -> SampleSet:
    """Draw ``size`` patterns once from the substream ``(seed, stage)``.

    Row j only depends on ``(seed, stage, j)``, so growing ``size`` keeps the
    earlier instances.
    """
    channels = tuple(channels)
    if size < 1:
        raise ValueError("sample set size must be >= 1")
    if mode != "exact" and not (isinstance(mode, int) and mode > 0):
        raise ValueError(f"mode must be 'exact' or a positive shot count, got {mode!r}")
    g = gamma(channels, m)
    picks = draw_picks(channels, m, size, stream(seed, stage))
    picks.setflags(write=False)
    return SampleSet(channels, float(m), g, int(seed), int(stage), picks, mode)


# -- estimators --------------------------------------------------------------

def estimate_noisy(problem: QaoaProblem, params, channel: PauliChannel | None) -> float:
    """Exact noisy expectation of the optimized observable ``H`` (= -N_cut)."""
    return -n_cut(problem, params, channel)


def _instance_values(problem, params, channel, sset: SampleSet, obs) -> np.ndarray:
    circ = build_noisy_circuit(build_ansatz(problem, params), channel)
    if not sset.matches(circ):
        raise ValueError("sample set was built for a different set of noise locations")
    prog = TransferProgram(circ)
    return prog.instance_values(sset.words(), obs)


def _shot_values(problem, sset: SampleSet, zvals: np.ndarray, diag: np.ndarray) -> np.ndarray:
    """Empirical mean of a diagonal observable per instance."""
    probs = np.clip(distribution_from_z(zvals, problem.n), 0.0, None)
    probs /= probs.sum(axis=1, keepdims=True)
    rng = stream(sset.seed, sset.stage, STAGE_SHOTS)
    counts = np.array([rng.multinomial(sset.mode, p) for p in probs])
    return counts @ diag / sset.mode


def _diag_cost(problem: QaoaProblem) -> np.ndarray:
    """Eigenvalue of the Pauli part of ``H`` on each basis state."""
    x = np.arange(2 ** problem.n)
    cut = np.array([problem.graph.cut_size(int(v)) for v in x])
    return -cut - problem.cost.constant


def _combine(signed: np.ndarray, g: float, constant: float) -> MitigatedEstimate:
    s = signed.size
    value = constant + g * float(np.mean(signed))
    err = g * float(np.std(signed, ddof=1)) / math.sqrt(s) if s > 1 else 0.0
    return MitigatedEstimate(value, err, s, g)


def ipec_estimate(problem: QaoaProblem, params, channel: PauliChannel, sset: SampleSet) -> MitigatedEstimate:
    """``(gamma / S) sum_j sign_j <H>_j`` over a frozen set; value is ``<H>``, i.e. -N_cut."""
    if sset.mode == "exact":
        vals = _instance_values(problem, params, channel, sset, problem.cost_tensor[None])[:, 0]
    else:
        z = _instance_values(problem, params, channel, sset, z_string_tensors(problem.n))
        vals = _shot_values(problem, sset, z, _diag_cost(problem))
    return _combine(sset.signs * vals, sset.gamma, problem.cost.constant)


def pec_estimate_fresh(problem: QaoaProblem, params, channel: PauliChannel, size: int,
                       rng: np.random.Generator, model: PauliChannel | None = None,
                       m: float = 1.0) -> MitigatedEstimate:
    """Same estimator with a new sample set drawn from ``rng`` on every call."""
    chans = location_channels(problem, model or channel)
    seed = int(rng.integers(2 ** 63))
    sset = build_sample_set(chans, m, size, seed)
    return ipec_estimate(problem, params, channel, sset)


def exact_signed_estimate(problem: QaoaProblem, params, channel: PauliChannel, m: float,
                          model: PauliChannel | None = None) -> float:
    """Infinite-sample limit of the estimator: ``<H>`` under ``Lambda_model^{-m} o Lambda``."""
    model = model or channel
    circ = build_noisy_circuit(build_ansatz(problem, params), channel)
    eig = [ch.transfer_eigenvalues() * model.on(ch.qubits).transfer_eigenvalues(m, inverse=True)
           for ch in circ.channels]
    c = TransferProgram(circ, eig).run()[0]
    return float(np.sum(c * problem.cost_tensor)) + problem.cost.constant


# -- ZNE ---------------------------------------------------------------------

@dataclass(frozen=True)
class ZneConfig:
    scale_factors: tuple[float, ...] = (1.0, 3.0)
    extrapolation: str = "linear"

    def __post_init__(self):
        f = tuple(float(v) for v in self.scale_factors)
        object.__setattr__(self, "scale_factors", f)
        if len(f) < 2:
            raise ValueError("ZNE needs at least two scale factors")
        if f[0] != 1.0:
            raise ValueError("the first scale factor must be 1")
        if any(b <= a for a, b in zip(f, f[1:])):
            raise ValueError("scale factors must be strictly increasing")
        if self.extrapolation != "linear":
            raise ValueError("only linear extrapolation is supported")


def fold_counts(n_gates: int, factor: float) -> list[int]:
    """Folds per noisy gate so the gate count is as close to ``factor * n`` as possible.

    Every gate gets ``k = floor((factor - 1) / 2)`` folds; the leftover is
    spread by giving the leftmost gates one extra fold each.
    """
    if factor < 1:
        raise ValueError("scale factor must be >= 1")
    target = factor * n_gates
    k = int((factor - 1) // 2)
    extra = round_half_up((target - n_gates * (1 + 2 * k)) / 2)
    extra = max(0, min(n_gates, extra))
    return [k + (1 if i < extra else 0) for i in range(n_gates)]


def zne_fold(circuit: Circuit, factor: float) -> Circuit:
    """Replace each noisy gate G by ``G (G^dag G)^k``; every copy carries the channel."""
    chan = dict(circuit.noisy_locations)
    folds = fold_counts(len(chan), factor)
    order = {g: i for i, g in enumerate(sorted(chan))}
    gates: list[Gate] = []
    locs = []
    for i, g in enumerate(circuit.gates):
        if i not in chan:
            gates.append(g)
            continue
        gates.append(g)
        locs.append((len(gates) - 1, chan[i]))
        for _ in range(folds[order[i]]):
            for h in (g.inverse(), g):
                gates.append(h)
                locs.append((len(gates) - 1, chan[i]))
    return Circuit(circuit.n, gates, locs)


def achieved_factor(circuit: Circuit, factor: float) -> float:
    n = len(circuit.noisy_locations)
    return (n + 2 * sum(fold_counts(n, factor))) / n if n else 1.0


def linear_intercept(xs, ys) -> float:
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if np.ptp(xs) == 0:
        raise ValueError("degenerate fit: all scale factors equal")
    slope, intercept = np.polyfit(xs, ys, 1)
    return float(intercept)


def zne_estimate(problem: QaoaProblem, params, channel: PauliChannel, config: ZneConfig,
                 observable: Callable[[np.ndarray], np.ndarray] | None = None):
    """Linear extrapolation to zero noise of ``<H>`` (or of a vector observable).

    The fit uses the gate-count ratio the folding actually achieved.
    ``observable(c)`` maps a final transfer tensor to the quantity to fit.
    """
    base = build_noisy_circuit(build_ansatz(problem, params), channel)
    xs, ys = [], []
    for f in config.scale_factors:
        folded = zne_fold(base, f)
        c = TransferProgram(folded).run()[0]
        ys.append(observable(c) if observable else float(np.sum(c * problem.cost_tensor)))
        xs.append(achieved_factor(base, f))
    ys = np.asarray(ys, dtype=float)
    if ys.ndim == 1:
        return linear_intercept(xs, ys) + problem.cost.constant
    return np.array([linear_intercept(xs, ys[:, k]) for k in range(ys.shape[1])])


# -- distributions -------------------------------------------------------------

def ideal_distribution(problem: QaoaProblem, params) -> np.ndarray:
    c = TransferProgram(build_ansatz(problem, params)).run(noisy=False)[0]
    return _z_to_probs(problem.n, c)


def noisy_distribution(problem: QaoaProblem, params, channel: PauliChannel) -> np.ndarray:
    c = TransferProgram(build_noisy_circuit(build_ansatz(problem, params), channel)).run()[0]
    return _z_to_probs(problem.n, c)


def _z_to_probs(n: int, c: np.ndarray) -> np.ndarray:
    z = z_string_tensors(n).reshape(2 ** n, -1) @ c.reshape(-1)
    return distribution_from_z(z, n)


def maxcut_distribution(problem: QaoaProblem) -> np.ndarray:
    """Uniform distribution over the optimal cuts: the answer a perfect solver returns."""
    cuts = np.array([problem.graph.cut_size(v) for v in range(2 ** problem.n)])
    q = (cuts == cuts.max()).astype(float)
    return q / q.sum()


@dataclass(frozen=True)
class MitigatedDistribution:
    raw: np.ndarray        # sum_i may differ from 1
    corrected: np.ndarray  # raw + a, sums to 1
    a: float
    std_error: np.ndarray
    samples: int


def mitigate_distribution(problem: QaoaProblem, params, channel: PauliChannel,
                          sset: SampleSet) -> MitigatedDistribution:
    """IPEC on every projector ``|i><i|`` with one shared sample set.

    The projector estimates are renormalized additively:
    ``a = (1 - sum_i <P_i>) / 2^n`` is added to every entry.
    """
    n = problem.n
    z = _instance_values(problem, params, channel, sset, z_string_tensors(n))
    if sset.mode == "exact":
        per = distribution_from_z(z, n)
    else:
        probs = np.clip(distribution_from_z(z, n), 0.0, None)
        probs /= probs.sum(axis=1, keepdims=True)
        rng = stream(sset.seed, sset.stage, STAGE_SHOTS)
        per = np.array([rng.multinomial(sset.mode, p) for p in probs]) / sset.mode
    signed = sset.signs[:, None] * per
    raw = sset.gamma * signed.mean(axis=0)
    err = (sset.gamma * signed.std(axis=0, ddof=1) / math.sqrt(sset.size)
           if sset.size > 1 else np.zeros(2 ** n))
    a = (1.0 - raw.sum()) / 2 ** n
    corrected = raw + a
    return MitigatedDistribution(raw, corrected, float(a), err, sset.size)


def fidelity(p, q) -> float:
    """``(sum_i sqrt(p_i q_i))^2`` after clipping negative ``p_i`` to zero and renormalizing."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError("distributions differ in length")
    p = np.clip(p, 0.0, None)
    if p.sum() <= 0:
        return 0.0
    p = p / p.sum()
    q = np.clip(q, 0.0, None)
    return float(min(1.0, np.sum(np.sqrt(p * q)) ** 2))


def distribution_table(p) -> list[tuple[str, float]]:
    n = int(round(math.log2(len(p))))
    return [(bit_label(i, n), float(v)) for i, v in enumerate(p)]


def readout_correct(counts, confusion) -> np.ndarray:
    """Invert a tensor-product readout confusion on an empirical distribution.

    ``counts`` is a label->count dict or a probability vector. ``confusion[q]``
    is qubit q's column-stochastic matrix ``C[measured, true]``.
    """
    n = len(confusion)
    if isinstance(counts, dict):
        p = np.zeros(2 ** n)
        for label, c in counts.items():
            p[int(label, 2)] += c
        p /= p.sum()
    else:
        p = np.asarray(counts, dtype=float)
    t = p.reshape((2,) * n)
    for q, cm in enumerate(confusion):
        cm = np.asarray(cm, dtype=float)
        if cm.shape != (2, 2) or not np.allclose(cm.sum(axis=0), 1.0):
            raise ValueError(f"confusion matrix for qubit {q} is not column-stochastic")
        if abs(np.linalg.det(cm)) < 1e-12:
            raise np.linalg.LinAlgError(f"confusion matrix for qubit {q} is singular")
        ax = n - 1 - q
        t = np.moveaxis(np.tensordot(np.linalg.inv(cm), t, axes=([1], [ax])), 0, ax)
    return t.reshape(-1)


# -- staged partial inverse ------------------------------------------------------

@dataclass(frozen=True)
class ApecSchedule:
    """Stage fractions ``m_1 < ... <= m_N`` with budget rule ``S_i = round(Q gamma(m_i)^2)``.

    ``budgets`` overrides the rule. ``early_stop`` ends the run once a stage
    improves N_cut^ideal by less than that amount.
    """

    ms: tuple[float, ...]
    q: float = 40.0
    budgets: tuple[int, ...] | None = None
    early_stop: float | None = None

    def __post_init__(self):
        ms = tuple(float(v) for v in self.ms)
        object.__setattr__(self, "ms", ms)
        if not ms:
            raise ValueError("schedule needs at least one stage")
        if not all(0.0 <= v <= 1.0 for v in ms):
            raise ValueError("mitigation fractions must lie in [0, 1]")
        if any(b <= a for a, b in zip(ms, ms[1:])):
            raise ValueError("mitigation fractions must increase")
        if self.budgets is not None and (len(self.budgets) != len(ms) or min(self.budgets) < 1):
            raise ValueError("one budget >= 1 per stage")
        if self.q <= 0:
            raise ValueError("Q must be positive")

    @classmethod
    def linear(cls, n_stages: int, **kw) -> ApecSchedule:
        return cls(tuple((i + 1) / n_stages for i in range(n_stages)), **kw)

    def budget(self, i: int, channels) -> int:
        if self.budgets is not None:
            return int(self.budgets[i])
        return round_half_up(self.q * gamma(channels, self.ms[i]) ** 2)


class StageError(RuntimeError):
    def __init__(self, stage: int, cause: Exception):
        super().__init__(f"stage {stage}: {cause}")
        self.stage = stage


def appec_run(problem: QaoaProblem, channel: PauliChannel, schedule: ApecSchedule,
              config: OptimizerConfig, x0, seed: int, model: PauliChannel | None = None,
              reference=None, mode: str | int = "exact", budget_model: PauliChannel | None = None):
    """Stage 0 optimizes the noisy objective, stage i an IPEC objective at ``m_i``.

    Each stage starts from the previous optimum and draws its own sample set
    from substream ``(seed, i)``. ``budget_model`` (default ``model``) is the
    channel whose gamma sets the stage budgets. Returns ``(stages, traces)``.
    """
    from .cost import StageTrace

    model = model or channel
    chans = location_channels(problem, model)
    budget_chans = location_channels(problem, budget_model) if budget_model else chans
    x = problem.check(x0)
    stages, traces = [], []
    prev_cut = None
    for i in range(len(schedule.ms) + 1):
        try:
            if i == 0:
                m, budget, g = 0.0, 1, 1.0
                fn = lambda v: estimate_noisy(problem, v, channel)  # noqa: E731
            else:
                m = schedule.ms[i - 1]
                budget = schedule.budget(i - 1, budget_chans)
                sset = build_sample_set(chans, m, budget, seed, mode=mode, stage=i)
                g = sset.gamma
                fn = lambda v, s=sset: ipec_estimate(problem, v, channel, s).value  # noqa: E731
            tr = nelder_mead(fn, x, config)
        except Exception as exc:  # noqa: BLE001
            raise StageError(i, exc) from exc
        x = tr.x
        cut = n_cut(problem, x)
        d = distance(x, reference) if reference is not None else None
        stages.append(StageTrace(i, m, tr.n_steps, budget, tuple(float(v) for v in x), cut, d, g))
        traces.append(tr)
        if (schedule.early_stop is not None and i >= 2 and prev_cut is not None
                and cut - prev_cut < schedule.early_stop):
            break
        prev_cut = cut
    return stages, traces


def ipec_run(problem: QaoaProblem, channel: PauliChannel, size: int, config: OptimizerConfig,
             x0, seed: int, m: float = 1.0, model: PauliChannel | None = None,
             mode: str | int = "exact") -> tuple[Trace, SampleSet]:
    """Full IPEC: one frozen set, optimized from ``x0``."""
    chans = location_channels(problem, model or channel)
    sset = build_sample_set(chans, m, size, seed, mode=mode)
    tr = nelder_mead(lambda v: ipec_estimate(problem, v, channel, sset).value, x0, config)
    return tr, sset


def records_to_json(records: list[dict]) -> str:
    return json.dumps(records, indent=2)
