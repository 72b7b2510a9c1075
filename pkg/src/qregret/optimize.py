"""Derivative-free simplex refinement shared by the frontier tracer and the MLE."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize


@dataclass(frozen=True)
class SimplexResult:
    x: np.ndarray
    fun: float
    n_evals: int


def nelder_mead(fun, x0, max_evals: int = 500, initial_step=None, xatol: float = 1e-10,
                fatol: float = 1e-12) -> SimplexResult:
    """Minimize ``fun`` from ``x0`` with at most ``max_evals`` evaluations.

    Non-finite objective values are treated as +inf so the simplex backs away
    from them.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))

    def safe(x):
        v = fun(x)
        return v if np.isfinite(v) else np.inf

    options = {"maxfev": max_evals, "xatol": xatol, "fatol": fatol}
    if initial_step is not None:
        step = np.broadcast_to(np.asarray(initial_step, dtype=float), x0.shape)
        simplex = np.vstack([x0] + [x0 + np.eye(len(x0))[i] * step[i] for i in range(len(x0))])
        options["initial_simplex"] = simplex
    res = minimize(safe, x0, method="Nelder-Mead", options=options)
    return SimplexResult(np.asarray(res.x, dtype=float), float(res.fun), int(res.nfev))
