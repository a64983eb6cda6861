import itertools
import math

import numpy as np
import pytest

from ipec.circuit import Circuit, Gate
from ipec.cost import StageTrace
from ipec.noise import build_noisy_circuit, depolarizing_model, error_probability_model, gamma
from ipec.optimize import OptimizerConfig
from ipec.qaoa import QaoaProblem, build_ansatz, make_graph, n_cut
from ipec.mitigation import (
    ApecSchedule,
    ZneConfig,
    achieved_factor,
    appec_run,
    build_sample_set,
    estimate_noisy,
    exact_signed_estimate,
    fidelity,
    fold_counts,
    ipec_estimate,
    linear_intercept,
    location_channels,
    maxcut_distribution,
    mitigate_distribution,
    noisy_distribution,
    pec_estimate_fresh,
    readout_correct,
    round_half_up,
    zne_estimate,
    zne_fold,
)
from ipec.pauli import PauliString
from ipec.sim import Observable, apply_gate, expectation, simulate
from ipec.transfer import TransferProgram

RING4 = QaoaProblem(make_graph("ring_4"), 2)
RING4_P1 = QaoaProblem(make_graph("ring_4"), 1)
X = [0.25, 0.37, 0.64, 0.75]


def test_noisy_estimate_limits():
    assert -estimate_noisy(RING4, X, depolarizing_model(0.0)) == pytest.approx(n_cut(RING4, X), abs=1e-12)
    # tabulated noisy optimum at eps=0.05; the simulated model sits 0.015 below the listed 2.616
    assert -estimate_noisy(RING4, [0.2119, 0.3587, 0.6302, 0.7722], error_probability_model(0.05)) == pytest.approx(
        2.616, abs=0.02)
    # heavy depolarization drives the state toward I/2^n, where every ZZ averages to zero
    assert -estimate_noisy(RING4, X, depolarizing_model(1.0)) == pytest.approx(2.0, abs=0.05)


def test_sample_set_m0_is_identity():
    s = build_sample_set(location_channels(RING4, depolarizing_model(0.05)), 0.0, 50, seed=1)
    assert s.gamma == 1.0 and not s.picks.any()
    ch = depolarizing_model(0.05)
    assert ipec_estimate(RING4, X, ch, s).value == pytest.approx(estimate_noisy(RING4, X, ch), abs=1e-12)


def test_sample_set_frozen_and_reproducible():
    chans = location_channels(RING4, depolarizing_model(0.05))
    a = build_sample_set(chans, 1.0, 300, seed=7)
    b = build_sample_set(chans, 1.0, 300, seed=7)
    assert np.array_equal(a.picks, b.picks) and a.words() == b.words()
    with pytest.raises(ValueError):
        a.picks[0, 0] = True
    longer = build_sample_set(chans, 1.0, 600, seed=7)
    assert np.array_equal(longer.picks[:300], a.picks)
    assert not np.array_equal(build_sample_set(chans, 1.0, 300, seed=7, stage=1).picks, a.picks)


def test_pick_frequency_audit():
    chans = location_channels(RING4, depolarizing_model(0.05))
    s = build_sample_set(chans, 1.0, 1000, seed=3)
    freq = s.picks.mean(axis=0)
    sigma = math.sqrt(0.0125 * 0.9875 / 1000)
    assert s.picks.shape == (1000, 96)
    assert np.mean(np.abs(freq - 0.0125) < 3 * sigma) > 0.97
    assert abs(s.picks.mean() - 0.0125) < 3 * sigma / math.sqrt(96)


def test_sample_set_validation():
    chans = location_channels(RING4, depolarizing_model(0.05))
    with pytest.raises(ValueError):
        build_sample_set(chans, 1.0, 0, seed=0)
    with pytest.raises(ValueError):
        build_sample_set(chans, 1.0, 10, seed=0, mode=-5)


def test_ipec_is_deterministic_for_a_fixed_set():
    ch = depolarizing_model(0.05)
    s = build_sample_set(location_channels(RING4, ch), 1.0, 200, seed=4)
    a = ipec_estimate(RING4, X, ch, s)
    b = ipec_estimate(RING4, np.array(X), ch, s)
    assert a.value == b.value and a.samples_used == 200 and a.std_error > 0
    assert a.gamma == pytest.approx(gamma(location_channels(RING4, ch), 1.0))


def test_enumerated_patterns_reproduce_ideal_expectation():
    """All 2^6 insertion patterns of one depolarized CNOT, weighted exactly."""
    ideal = Circuit(2).add("H", 0).add("RY", 1, theta=0.7).add("CNOT", 0, 1).add("RX", 0, theta=0.4)
    ch = depolarizing_model(0.05)
    noisy = build_noisy_circuit(ideal, ch)
    obs = Observable(((0.7, PauliString.from_label("ZZ")), (-0.4, PauliString.from_label("XI"))))
    rho_noisy = simulate(noisy)
    total, acc = 0.0, 0.0
    for picks in itertools.product((0, 1), repeat=len(ch.terms)):
        w = np.prod([r if k else 1 - r for r, k in zip(ch.rates, picks)])
        total += w
        rho = rho_noisy
        word = PauliString.identity(2)
        for (p, _), k in zip(ch.terms, picks):
            if k:
                word = word * p
        if not word.is_identity():
            rho = apply_gate(rho, Gate("PAULI", (0, 1), pauli=word))
        acc += w * (-1) ** sum(picks) * expectation(rho, obs)
    assert total == pytest.approx(1.0, abs=1e-14)
    assert gamma([ch], 1.0) * acc == pytest.approx(expectation(simulate(ideal, noisy=False), obs), abs=1e-12)


def test_exact_signed_estimate_endpoints():
    ch = depolarizing_model(0.05)
    assert -exact_signed_estimate(RING4, X, ch, 1.0) == pytest.approx(n_cut(RING4, X), abs=1e-10)
    assert exact_signed_estimate(RING4, X, ch, 0.0) == pytest.approx(estimate_noisy(RING4, X, ch), abs=1e-12)


def test_ipec_mean_over_sets_is_unbiased():
    ch = depolarizing_model(0.1)
    chans = location_channels(RING4_P1, ch)
    x = [0.3, 0.7]
    for m in (0.5, 1.0):
        ests = [ipec_estimate(RING4_P1, x, ch, build_sample_set(chans, m, 400, seed=s)).value for s in range(40)]
        truth = exact_signed_estimate(RING4_P1, x, ch, m)
        se = np.std(ests, ddof=1) / math.sqrt(len(ests))
        assert abs(np.mean(ests) - truth) < 3.5 * se


def test_fresh_pec_zero_noise_and_mean():
    rng = np.random.default_rng(5)
    zero = depolarizing_model(0.0)
    assert -pec_estimate_fresh(RING4_P1, [0.3, 0.7], zero, 10, rng).value == pytest.approx(
        n_cut(RING4_P1, [0.3, 0.7]), abs=1e-12)
    ch = depolarizing_model(0.1)
    vals = [pec_estimate_fresh(RING4_P1, [0.3, 0.7], ch, 50, rng).value for _ in range(200)]
    se = np.std(vals, ddof=1) / math.sqrt(len(vals))
    assert abs(np.mean(vals) + n_cut(RING4_P1, [0.3, 0.7])) < 3 * se


def test_fresh_pec_variance_scales_with_gamma_squared():
    rng = np.random.default_rng(6)
    ch = depolarizing_model(0.1)
    x = [0.3, 0.7]
    var = {m: np.var([pec_estimate_fresh(RING4_P1, x, ch, 20, rng, m=m).value for _ in range(600)], ddof=1)
           for m in (0.5, 1.0)}
    chans = location_channels(RING4_P1, ch)
    want = (gamma(chans, 1.0) / gamma(chans, 0.5)) ** 2
    assert want / 1.5 < var[1.0] / var[0.5] < want * 1.5


# -- ZNE --------------------------------------------------------------------

def test_fold_counts():
    assert fold_counts(16, 1.0) == [0] * 16
    assert sum(fold_counts(16, 3.0)) == 16
    assert 16 + 2 * sum(fold_counts(16, 2.0)) == 32
    with pytest.raises(ValueError):
        fold_counts(16, 0.5)


def test_fold_factor_three_gives_48_locations():
    noisy = build_noisy_circuit(build_ansatz(RING4, X), depolarizing_model(0.05))
    folded = zne_fold(noisy, 3.0)
    assert len(folded.noisy_locations) == 48 and folded.count("CNOT") == 48
    assert len(zne_fold(noisy, 1.0).noisy_locations) == 16
    assert achieved_factor(noisy, 1.2) == pytest.approx(1.25)


def test_folding_keeps_the_ideal_state():
    ideal = build_ansatz(RING4, X)
    noisy = build_noisy_circuit(ideal, depolarizing_model(0.05))
    ref = TransferProgram(noisy).run(noisy=False)[0]
    for f in (1.4, 2.2, 3.0):
        np.testing.assert_allclose(TransferProgram(zne_fold(noisy, f)).run(noisy=False)[0], ref, atol=1e-10)


def test_folding_moves_toward_the_mixed_value():
    ch = depolarizing_model(0.05)
    noisy = build_noisy_circuit(build_ansatz(RING4, X), ch)
    vals = []
    for f in (1.0, 1.6, 2.2, 3.0):
        c = TransferProgram(zne_fold(noisy, f)).run()[0]
        vals.append(-(float(np.sum(c * RING4.cost_tensor)) + RING4.cost.constant))
    assert all(a > b > 2.0 for a, b in zip(vals, vals[1:]))


def test_two_point_intercept():
    assert linear_intercept([1.0, 3.0], [2.0, 1.0]) == pytest.approx(2.0 + 0.5)
    y1, ym, m = -3.1, -2.6, 2.2
    assert linear_intercept([1, m], [y1, ym]) == pytest.approx(y1 - (ym - y1) / (m - 1))
    with pytest.raises(ValueError):
        linear_intercept([2.0, 2.0], [1.0, 0.0])


def test_zne_config_and_zero_noise():
    for bad in [(1.0,), (1.5, 2.0), (1.0, 3.0, 2.0)]:
        with pytest.raises(ValueError):
            ZneConfig(bad)
    with pytest.raises(ValueError):
        ZneConfig((1.0, 3.0), "richardson")
    val = zne_estimate(RING4, X, depolarizing_model(0.0), ZneConfig((1.0, 2.0, 3.0)))
    assert -val == pytest.approx(n_cut(RING4, X), abs=1e-10)


def test_zne_improves_on_raw_noise():
    ch = error_probability_model(0.05)
    raw = -estimate_noisy(RING4, X, ch)
    zne = -zne_estimate(RING4, X, ch, ZneConfig((1.0, 3.0)))
    assert raw < zne < n_cut(RING4, X) + 0.2


# -- distributions ------------------------------------------------------------

IPEC4 = [0.253, 0.369, 0.635, 0.748]


def test_distribution_zero_noise():
    ch = depolarizing_model(0.0)
    s = build_sample_set(location_channels(RING4, ch), 1.0, 20, seed=0)
    d = mitigate_distribution(RING4, IPEC4, ch, s)
    assert d.a == pytest.approx(0.0, abs=1e-12)
    assert fidelity(d.corrected, noisy_distribution(RING4, IPEC4, ch)) == pytest.approx(1.0, abs=1e-10)


def test_distribution_mitigation_normalizes():
    ch = error_probability_model(0.05)
    s = build_sample_set(location_channels(RING4, ch), 1.0, 500, seed=2)
    d = mitigate_distribution(RING4, IPEC4, ch, s)
    assert d.corrected.sum() == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(d.corrected - d.raw, d.a)
    assert d.std_error.shape == (16,) and (d.std_error >= 0).all()


def test_noisy_fidelity_against_maxcut():
    p = noisy_distribution(RING4, IPEC4, error_probability_model(0.05))
    assert fidelity(p, maxcut_distribution(RING4)) == pytest.approx(0.352, abs=0.01)


def test_fidelity_properties():
    p = np.array([0.2, 0.3, 0.5])
    assert fidelity(p, p) == pytest.approx(1.0)
    assert fidelity([1, 0, 0], [0, 0.5, 0.5]) == 0.0
    # negatives are clipped, then p is renormalized
    assert fidelity([-0.01, 0.5, 0.5], [0, 0.5, 0.5]) == pytest.approx(1.0)
    assert fidelity([-0.2, 0.6, 0.6], [0, 0.5, 0.5]) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        fidelity([1.0], [0.5, 0.5])


def test_readout_correction():
    eye = [np.eye(2)] * 2
    p = np.array([0.1, 0.2, 0.3, 0.4])
    np.testing.assert_allclose(readout_correct(p, eye), p)
    q = 0.07
    flip = np.array([[1 - q, q], [q, 1 - q]])
    np.testing.assert_allclose(readout_correct(np.array([1 - q, q]), [flip]), [1.0, 0.0], atol=1e-12)
    with pytest.raises(np.linalg.LinAlgError):
        readout_correct(p, [np.full((2, 2), 0.5)] * 2)
    with pytest.raises(ValueError):
        readout_correct(p, [np.array([[0.9, 0.2], [0.2, 0.9]])] * 2)


def test_readout_round_trip_with_shots():
    rng = np.random.default_rng(8)
    truth = rng.dirichlet(np.ones(8))
    conf = [np.array([[0.97, 0.05], [0.03, 0.95]]), np.array([[0.93, 0.02], [0.07, 0.98]]),
            np.array([[0.99, 0.04], [0.01, 0.96]])]
    full = np.array([[1.0]])
    for cm in reversed(conf):
        full = np.kron(full, cm)
    measured = full @ truth
    counts = rng.multinomial(1_000_000, measured)
    labels = {format(i, "03b"): int(c) for i, c in enumerate(counts)}
    back = readout_correct(labels, conf)
    assert 0.5 * np.abs(back - truth).sum() < 0.01


# -- staged runs -----------------------------------------------------------------

def test_round_half_up():
    assert [round_half_up(v) for v in (0.5, 1.5, 2.5, 2.4999)] == [1, 2, 3, 2]


def test_schedule_budgets_follow_gamma_squared():
    chans = location_channels(RING4, depolarizing_model(0.05))
    sched = ApecSchedule.linear(4)
    assert sched.ms == (0.25, 0.5, 0.75, 1.0)
    budgets = [sched.budget(i, chans) for i in range(4)]
    assert budgets == [133, 448, 1515, 5166]
    for i in range(1, 4):
        ratio = (gamma(chans, sched.ms[i]) / gamma(chans, sched.ms[i - 1])) ** 2
        assert budgets[i] / budgets[i - 1] == pytest.approx(ratio, rel=0.01)
    assert ApecSchedule((0.5,), budgets=(7,)).budget(0, chans) == 7


@pytest.mark.parametrize("kw", [{"ms": ()}, {"ms": (0.5, 0.4)}, {"ms": (1.2,)}, {"ms": (0.5,), "budgets": (0,)},
                                {"ms": (0.5,), "q": 0.0}])
def test_schedule_validation(kw):
    with pytest.raises(ValueError):
        ApecSchedule(**kw)


def test_single_stage_schedule_runs_noisy_then_full():
    ch = depolarizing_model(0.05)
    stages, traces = appec_run(RING4_P1, ch, ApecSchedule((1.0,), budgets=(30,)), OptimizerConfig(max_steps=6),
                               [0.2, 0.6], seed=0)
    assert [s.index for s in stages] == [0, 1] and [s.budget for s in stages] == [1, 30]
    assert isinstance(stages[0], StageTrace) and stages[1].m == 1.0
    assert all(t.n_steps == 6 for t in traces)
    # the full stage warm-starts from the noisy optimum
    np.testing.assert_allclose(stages[0].params, traces[0].x)
    assert traces[1].evaluations > 0 and stages[1].n_cut_ideal == pytest.approx(n_cut(RING4_P1, traces[1].x))
