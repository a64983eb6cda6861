import itertools
import json
import math

import numpy as np
import pytest
from scipy.linalg import expm

from ipec.circuit import Circuit, Gate
from ipec.noise import (
    PauliChannel,
    QuasiProbRep,
    build_noisy_circuit,
    channels_from_json,
    channels_to_json,
    depolarizing_model,
    enumerate_patterns,
    error_probability_model,
    gamma,
    pauli_twirl,
    sample_insertion,
    twirl_pairs,
)
from ipec.pauli import PauliString, all_paulis
from ipec.qaoa import QaoaProblem, build_ansatz, make_graph
from ipec.sim import DensityMatrix, StateVector, apply_gate, apply_pauli_channel, apply_signed_pauli_map, simulate


def test_depolarizing_rates():
    ch = depolarizing_model(0.05)
    assert len(ch.terms) == 6 and np.allclose(ch.rates, 0.0125)
    assert {p.label for p in ch.paulis} == {"IX", "IY", "IZ", "XI", "YI", "ZI"}
    assert np.allclose(depolarizing_model(0.02).rates, 0.005)
    assert depolarizing_model(0.0).is_identity()
    with pytest.raises(ValueError):
        depolarizing_model(2.0)


def test_error_probability_model_is_four_thirds_rescaling():
    assert np.allclose(error_probability_model(0.03).rates, 0.01)
    assert error_probability_model(0.03) == depolarizing_model(0.04)
    with pytest.raises(ValueError):
        error_probability_model(1.5)


def test_gamma_values():
    z = PauliChannel((0,), ((PauliString.from_label("Z"), 0.25),))
    assert gamma([z], 0.0) == 1.0
    assert gamma([z], 1.0) == pytest.approx(2.0)
    chans = [depolarizing_model(0.05)] * 16
    assert gamma(chans, 1.0) == pytest.approx(0.975 ** -96, rel=1e-12)
    assert gamma(chans, 1.0) == pytest.approx(11.37, abs=0.01)


def test_gamma_multiplicative_and_monotone():
    a, b = depolarizing_model(0.03), depolarizing_model(0.07)
    assert gamma([a, b], 0.6) == pytest.approx(gamma([a], 0.6) * gamma([b], 0.6))
    ms = np.linspace(0, 1, 11)
    vals = [gamma([a], m) for m in ms]
    assert all(x < y for x, y in zip(vals, vals[1:]))
    assert gamma([a], 1) < gamma([b], 1)


@pytest.mark.parametrize("eps,m", [(0.01, 1.0), (0.02, 1.0), (0.05, 0.4)])
def test_gamma_first_order_approximation(eps, m):
    """(1 + m eps/2)^(6 N) tracks gamma within 2% while 96 (m eps/2)^2 stays below ~0.02."""
    exact = gamma([depolarizing_model(eps)] * 16, m)
    assert exact == pytest.approx((1 + m * eps / 2) ** 96, rel=0.02)


def test_first_order_approximation_degrades_at_full_strength():
    exact = gamma([depolarizing_model(0.05)] * 16, 1.0)
    assert exact / 1.025 ** 96 == pytest.approx(1.062, abs=0.001)


def test_quasi_prob_rep():
    rep = QuasiProbRep(depolarizing_model(0.05), 0.0)
    assert rep.gamma == 1.0
    rep = QuasiProbRep(depolarizing_model(0.05), 1.0)
    g = 1 / (1 - 0.025)
    for wi, wp in rep.term_weights():
        assert g * wi + g * wp == pytest.approx(1.0)


def test_sample_insertion_trivial_and_frequencies():
    ch = depolarizing_model(0.05)
    rng = np.random.default_rng(0)
    pat = sample_insertion([ch], 0.0, rng)
    assert pat.is_identity and pat.sign == 1
    picks = np.array([sum(sample_insertion([ch], 1.0, rng).picks, ()) for _ in range(20_000)])
    freq = picks.mean(axis=0)
    sigma = math.sqrt(0.0125 * 0.9875 / picks.shape[0])
    assert np.all(np.abs(freq - 0.0125) < 3.5 * sigma)


def test_pattern_sign_parity():
    rng = np.random.default_rng(1)
    ch = PauliChannel((0, 1), ((PauliString.from_label("XI"), 0.3), (PauliString.from_label("IZ"), 0.3)))
    for _ in range(50):
        pat = sample_insertion([ch], 1.0, rng)
        assert pat.sign == (-1) ** pat.n_picks


def test_enumerated_estimator_equals_signed_map():
    ch = PauliChannel((0, 1), ((PauliString.from_label("XY"), 0.08), (PauliString.from_label("ZI"), 0.13),
                              (PauliString.from_label("IX"), 0.05)))
    rng = np.random.default_rng(2)
    a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    rho = DensityMatrix(a @ a.conj().T / np.trace(a @ a.conj().T))
    for m in (0.4, 1.0):
        g = gamma([ch], m)
        acc = np.zeros((4, 4), dtype=complex)
        total = 0.0
        for pat, prob in enumerate_patterns([ch], m):
            total += prob
            out = rho
            for _, word in pat.resolved:
                out = apply_gate(out, Gate("PAULI", (0, 1), pauli=word))
            acc += prob * g * pat.sign * out.entries
        assert total == pytest.approx(1.0)
        np.testing.assert_allclose(acc, apply_signed_pauli_map(rho, ch, m).entries, atol=1e-12)


def test_twirl_pairs_preserve_gate():
    cnot = Gate("CNOT", (0, 1))
    u = cnot.matrix()
    pairs = twirl_pairs(cnot)
    assert len(pairs) == 16
    for pre, post, s in pairs:
        pm = Gate("PAULI", (0, 1), pauli=pre).matrix()
        qm = Gate("PAULI", (0, 1), pauli=post).matrix()
        np.testing.assert_allclose(qm @ u @ pm, s * u, atol=1e-12)


def test_twirled_circuits_keep_ideal_output():
    problem = QaoaProblem(make_graph("ring_4"), 1)
    ideal = build_ansatz(problem, [0.3, 0.7])
    noisy = build_noisy_circuit(ideal, depolarizing_model(0.05))
    ref = simulate(ideal, noisy=False).to_density_matrix().entries
    twirled = pauli_twirl(noisy, np.random.default_rng(3), 8, include_identity=True)
    assert [g.kind for g in twirled[0].circuit.gates] == [g.kind for g in noisy.gates]
    for t in twirled:
        out = simulate(t.circuit, noisy=False).to_density_matrix().entries
        np.testing.assert_allclose(out, ref, atol=1e-10)


def test_twirl_rejects_non_clifford_noisy_gate():
    c = Circuit(2).add("RX", 0, theta=0.2)
    c.gates[0] = Gate("RX", (0,), theta=0.2, noisy=True)
    c.noisy_locations.append((0, PauliChannel((0,), ((PauliString.from_label("X"), 0.1),))))
    with pytest.raises(ValueError):
        pauli_twirl(c, np.random.default_rng(0), 1)


def _ptm(channel_fn, n):
    basis = list(all_paulis(n))
    mats = [p.to_matrix() for p in basis]
    return np.array([[np.trace(a @ channel_fn(b)).real / 2 ** n for b in mats] for a in mats])


def test_twirl_average_of_coherent_error_is_pauli_diagonal():
    cnot = Gate("CNOT", (0, 1)).matrix()
    zx = PauliString.from_label("XZ").to_matrix()
    bad = expm(-0.1j * zx) @ cnot  # over-rotated CNOT
    pairs = twirl_pairs(Gate("CNOT", (0, 1)))

    def averaged_error(rho):
        acc = np.zeros_like(rho)
        for pre, post, _ in pairs:
            a = Gate("PAULI", (0, 1), pauli=pre).matrix()
            b = Gate("PAULI", (0, 1), pauli=post).matrix()
            v = cnot.conj().T @ b @ bad @ a  # strip the ideal gate
            acc = acc + v @ rho @ v.conj().T
        return acc / len(pairs)

    r = _ptm(averaged_error, 2)
    off = r - np.diag(np.diag(r))
    assert np.abs(off).max() < 1e-10
    assert np.diag(r).min() < 1 - 1e-3  # the error survives as Pauli noise


def test_build_noisy_circuit_locations():
    p2 = build_noisy_circuit(build_ansatz(QaoaProblem(make_graph("ring_4"), 2), [0.1] * 4), depolarizing_model(0.05))
    assert len(p2.noisy_locations) == 16
    p2.validate()
    r6 = build_noisy_circuit(build_ansatz(QaoaProblem(make_graph("ring_6"), 3), [0.1] * 6), depolarizing_model(0.05))
    assert len(r6.noisy_locations) == 36


def test_zero_noise_matches_ideal():
    ideal = build_ansatz(QaoaProblem(make_graph("ring_4"), 2), [0.2, 0.3, 0.6, 0.7])
    noisy = build_noisy_circuit(ideal, depolarizing_model(0.0))
    a = simulate(noisy).entries
    b = simulate(ideal, noisy=False).to_density_matrix().entries
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_support_mismatch():
    with pytest.raises(ValueError):
        build_noisy_circuit(Circuit(2).add("CNOT", 0, 1), PauliChannel((0,), ((PauliString.from_label("X"), 0.1),)))


def test_channel_json_round_trip():
    noisy = build_noisy_circuit(Circuit(3).add("CNOT", 0, 1).add("CNOT", 2, 1), depolarizing_model(0.05))
    text = channels_to_json(noisy)
    assert isinstance(json.loads(text), dict)
    back = channels_from_json(text)
    assert [back[i] for i, _ in noisy.noisy_locations] == noisy.channels


def test_transfer_eigenvalues_match_dense_channel():
    ch = PauliChannel((0, 1), ((PauliString.from_label("XY"), 0.08), (PauliString.from_label("ZI"), 0.13)))
    lam = ch.transfer_eigenvalues()
    r = _ptm(lambda rho: apply_pauli_channel(DensityMatrix(rho), ch).entries, 2)
    for p, val in zip(all_paulis(2), np.diag(r)):
        assert lam[p.index()] == pytest.approx(val, abs=1e-12)
    inv = ch.transfer_eigenvalues(1.0, inverse=True)
    np.testing.assert_allclose(lam * inv, 1.0, atol=1e-12)


def test_pauli_pairs_commutation():
    for a, b in itertools.product(all_paulis(2), repeat=2):
        ma, mb = a.to_matrix(), b.to_matrix()
        assert np.allclose(ma @ mb, mb @ ma) == a.commutes(b)
