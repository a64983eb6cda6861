"""The Pauli-transfer engine against the dense density-matrix simulator."""

import numpy as np
import pytest

from ipec.circuit import Circuit, Gate
from ipec.noise import PauliChannel, build_noisy_circuit, depolarizing_model, draw_picks, resolve_picks, split_picks
from ipec.pauli import PauliString, all_paulis
from ipec.sim import DensityMatrix, Observable, apply_gate, apply_pauli_channel, apply_signed_pauli_map, expectation, probability_distribution, simulate
from ipec.transfer import TransferProgram, distribution_from_z, observable_tensor, word_index, z_string_tensors


def random_circuit(n, depth, rng):
    c = Circuit(n)
    for _ in range(depth):
        kind = rng.choice(["H", "RX", "RZ", "RY", "S", "CNOT", "CZ"])
        if kind in ("CNOT", "CZ"):
            a, b = rng.choice(n, 2, replace=False)
            c.add(str(kind), int(a), int(b))
        elif kind in ("RX", "RY", "RZ"):
            c.add(str(kind), int(rng.integers(n)), theta=float(rng.uniform(-3, 3)))
        else:
            c.add(str(kind), int(rng.integers(n)))
    return c


def random_channel(rng):
    words = [p for p in all_paulis(2) if not p.is_identity()]
    pick = rng.choice(len(words), 3, replace=False)
    return PauliChannel((0, 1), tuple((words[i], float(rng.uniform(0, 0.2))) for i in pick))


def dense_observable(rng, n):
    return Observable(tuple((float(rng.normal()), p) for p in all_paulis(n) if not p.is_identity()))


@pytest.mark.parametrize("seed", range(4))
def test_noisy_expectation_matches_density_matrix(seed):
    rng = np.random.default_rng(seed)
    n = 3
    noisy = build_noisy_circuit(random_circuit(n, 14, rng), random_channel(rng))
    obs = dense_observable(rng, n)
    c = TransferProgram(noisy).run()[0]
    got = float(np.sum(c * observable_tensor(obs.terms, n)))
    assert got == pytest.approx(expectation(simulate(noisy), obs), abs=1e-10)


def test_distribution_from_z_strings():
    rng = np.random.default_rng(10)
    noisy = build_noisy_circuit(random_circuit(3, 12, rng), depolarizing_model(0.1))
    c = TransferProgram(noisy).run()[0]
    z = z_string_tensors(3).reshape(8, -1) @ c.reshape(-1)
    np.testing.assert_allclose(distribution_from_z(z, 3), probability_distribution(simulate(noisy)), atol=1e-12)


def test_mitigated_program_matches_signed_map():
    rng = np.random.default_rng(11)
    ideal = random_circuit(3, 12, rng)
    ideal.add("CNOT", 0, 2)
    ch = random_channel(rng)
    noisy = build_noisy_circuit(ideal, ch)
    obs = dense_observable(rng, 3)
    for m in (0.5, 1.0):
        rho = DensityMatrix.zero(3)
        for i, g in enumerate(noisy.gates):
            rho = apply_gate(rho, g)
            for loc, lch in noisy.noisy_locations:
                if loc == i:
                    rho = apply_signed_pauli_map(apply_pauli_channel(rho, lch), lch, m)
        c = TransferProgram.mitigated(noisy, m).run()[0]
        got = float(np.sum(c * observable_tensor(obs.terms, 3)))
        assert got == pytest.approx(expectation(rho, obs), abs=1e-10)
    # m = 1 removes the noise entirely
    c = TransferProgram.mitigated(noisy, 1.0).run()[0]
    ref = expectation(simulate(ideal, noisy=False), obs)
    assert float(np.sum(c * observable_tensor(obs.terms, 3))) == pytest.approx(ref, abs=1e-10)


def _dense_instance(noisy, inserts, obs):
    rho = DensityMatrix.zero(noisy.n)
    locs = dict((g, k) for k, (g, _) in enumerate(noisy.noisy_locations))
    for i, g in enumerate(noisy.gates):
        rho = apply_gate(rho, g)
        if i in locs:
            k = locs[i]
            ch = noisy.channels[k]
            rho = apply_pauli_channel(rho, ch)
            if k in inserts:
                rho = apply_gate(rho, Gate("PAULI", ch.qubits, pauli=inserts[k]))
    return expectation(rho, obs)


def test_instance_values_match_explicit_insertions():
    rng = np.random.default_rng(12)
    ideal = random_circuit(3, 16, rng)
    for a, b in ((0, 1), (1, 2), (2, 0), (0, 2)):
        ideal.add("CNOT", a, b)
    noisy = build_noisy_circuit(ideal, depolarizing_model(0.2))
    chans = noisy.channels
    picks = draw_picks(chans, 1.0, 40, rng)
    words, resolved = [], []
    for row in picks:
        r = resolve_picks(chans, split_picks(chans, row))
        resolved.append(dict(r))
        words.append(tuple((loc, word_index(w)) for loc, w in r))
    assert any(len(w) > 1 for w in words) and any(len(w) == 1 for w in words)
    obs = dense_observable(rng, 3)
    vals = TransferProgram(noisy).instance_values(words, observable_tensor(obs.terms, 3)[None])[:, 0]
    for j in range(len(words)):
        assert vals[j] == pytest.approx(_dense_instance(noisy, resolved[j], obs), abs=1e-10)


def test_word_index_order():
    assert word_index(PauliString(("X", "Z"))) == 1 * 4 + 3
    assert word_index(PauliString(("I", "I"))) == 0
