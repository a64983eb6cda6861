import numpy as np
import pytest
from scipy.optimize import minimize, rosen

from ipec.optimize import NonFiniteObjective, OptimizerConfig, nelder_mead
from ipec.qaoa import QaoaProblem, make_graph, n_cut


def scipy_path(fun, x0, tol, maxiter):
    path = []
    res = minimize(fun, x0, method="Nelder-Mead", callback=lambda xk: path.append(np.array(xk)),
                   options={"xatol": tol, "fatol": tol, "maxiter": maxiter})
    return res, path


@pytest.mark.parametrize("x0", [[1.3, 0.7, 0.8, 1.9, 1.2], [0.0, 0.5, -0.3]])
def test_iterates_match_scipy(x0):
    res, path = scipy_path(rosen, x0, 1e-6, 2000)
    tr = nelder_mead(rosen, x0, OptimizerConfig.with_tol(1e-6, max_steps=2000))
    assert tr.n_steps == res.nit
    # our step 1 is the initial simplex, so updates line up with scipy's callbacks
    assert len(path) >= len(tr.steps) - 1
    for (x, _), xs in zip(tr.steps[1:], path):
        np.testing.assert_allclose(x, xs, rtol=0, atol=1e-12)
    np.testing.assert_allclose(tr.x, res.x, atol=1e-12)
    assert tr.converged


def test_qaoa_objective_matches_scipy():
    prob = QaoaProblem(make_graph("ring_4"), 2)
    fun = lambda x: -n_cut(prob, x)
    res, _ = scipy_path(fun, [0.1, 0.5, 0.7, 0.9], 1e-3, 10_000)
    tr = nelder_mead(fun, [0.1, 0.5, 0.7, 0.9], OptimizerConfig.with_tol(1e-3))
    assert tr.n_steps == res.nit
    assert -tr.fun == pytest.approx(4.0, abs=1e-2)


def test_step_cap_and_monotone_best():
    tr = nelder_mead(rosen, [1.3, 0.7, 0.8], OptimizerConfig(max_steps=25))
    assert tr.n_steps == 25 and not tr.converged
    vals = [f for _, f in tr.steps]
    assert all(b <= a for a, b in zip(vals, vals[1:]))


def test_single_step_is_the_initial_simplex():
    tr = nelder_mead(lambda x: float(np.sum(x ** 2)), [1.0, 2.0], OptimizerConfig(max_steps=1))
    assert tr.n_steps == 1 and tr.evaluations == 3
    np.testing.assert_allclose(tr.x, [1.0, 2.0])


def test_already_converged_start():
    tr = nelder_mead(lambda x: 0.0, [0.3, 0.4], OptimizerConfig.with_tol(1e-1))
    assert tr.converged and tr.n_steps == 1


def test_callback_stops_early():
    seen = []

    def cb(step, x, f):
        seen.append(step)
        return step == 5

    tr = nelder_mead(rosen, [1.3, 0.7], OptimizerConfig(max_steps=100), callback=cb)
    assert tr.n_steps == 5 and seen == [2, 3, 4, 5] and tr.converged


def test_determinism():
    a = nelder_mead(rosen, [1.3, 0.7, 0.8], OptimizerConfig(max_steps=60))
    b = nelder_mead(rosen, [1.3, 0.7, 0.8], OptimizerConfig(max_steps=60))
    assert a.to_csv() == b.to_csv()


def test_absolute_simplex():
    tr = nelder_mead(lambda x: float(np.sum((x - 0.3) ** 2)), [0.0, 0.0],
                     OptimizerConfig(max_steps=1, simplex="absolute", scale=0.1))
    np.testing.assert_allclose(tr.x, [0.1, 0.0])


def test_non_finite_objective():
    with pytest.raises(NonFiniteObjective):
        nelder_mead(lambda x: float("nan"), [0.1], OptimizerConfig())


@pytest.mark.parametrize("kw", [{"max_steps": 0}, {"ftol": 0.0}, {"xtol": -1.0}, {"simplex": "spherical"}])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        OptimizerConfig(**kw)


def test_trace_csv_layout():
    tr = nelder_mead(rosen, [1.3, 0.7], OptimizerConfig(max_steps=3))
    lines = tr.to_csv().splitlines()
    assert lines[0] == "step,objective,x0,x1" and len(lines) == 4 and lines[1].startswith("1,")
