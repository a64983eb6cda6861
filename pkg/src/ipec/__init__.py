"""Invariant and adaptive partial probabilistic error cancellation for QAOA.

Set ``IPEC_THREADS`` before the first import to cap BLAS threads.
"""

import os as _os

if _os.environ.get("IPEC_THREADS"):
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        _os.environ.setdefault(_var, _os.environ["IPEC_THREADS"])

from .circuit import Circuit, Gate  # noqa: E402
from .cost import StageTrace, eta, fit_ab, predict_fab, scalability_estimate  # noqa: E402
from .mitigation import (  # noqa: E402
    ApecSchedule,
    SampleSet,
    ZneConfig,
    appec_run,
    build_sample_set,
    ipec_estimate,
    ipec_run,
    zne_estimate,
)
from .noise import PauliChannel, depolarizing_model, error_probability_model, gamma  # noqa: E402
from .optimize import OptimizerConfig, nelder_mead  # noqa: E402
from .pauli import PauliString  # noqa: E402
from .qaoa import Graph, QaoaProblem, make_graph, n_cut  # noqa: E402

__all__ = [
    "ApecSchedule", "Circuit", "Gate", "Graph", "OptimizerConfig", "PauliChannel", "PauliString",
    "QaoaProblem", "SampleSet", "StageTrace", "ZneConfig", "appec_run", "build_sample_set",
    "depolarizing_model", "error_probability_model", "eta", "fit_ab", "gamma", "ipec_estimate",
    "ipec_run", "make_graph", "n_cut", "nelder_mead", "predict_fab", "scalability_estimate",
    "zne_estimate",
]
