"""Monte-Carlo sampling, estimators and asymptotic-attainment checks.

Randomness comes from numpy's PCG64 generator. Trial ``t`` of a run with
seed ``s`` uses the ``t``-th child of ``SeedSequence(s)``, so results do not
depend on how trials are scheduled.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._parallel import ordered_map
from .errors import FlatLikelihood
from .geometry import QuantumGeometry
from .linalg import ParametricModel, Povm
from .measurement import (
    ErrorTradeoffReport,
    _born,
    error_tradeoff_report,
    error_tradeoff_terms,
    gammas,
    outcome_distribution,
)
from .models import GaussianJointMeasurement, gaussian_score
from .optimize import nelder_mead

RNG_ALGORITHM = "PCG64"


def _trial_rngs(seed: int, trials: int) -> list:
    return [np.random.Generator(np.random.PCG64(s)) for s in np.random.SeedSequence(seed).spawn(trials)]


def sample_povm_outcomes(povm: Povm, model: ParametricModel, theta, nu: int, seed: int) -> np.ndarray:
    """Outcome counts of ``nu`` independent measurements."""
    if nu < 1:
        raise ValueError("nu must be >= 1")
    p = outcome_distribution(povm, model.rho(theta))
    return np.random.default_rng(seed).multinomial(nu, p)


def sample_gaussian_outcomes(gm: GaussianJointMeasurement, nu: int, seed: int) -> np.ndarray:
    """``nu`` draws of ``(xi, eta)``, shape ``(nu, 2)``."""
    if nu < 1:
        raise ValueError("nu must be >= 1")
    return _draw_gaussian(gm, nu, np.random.default_rng(seed))


def _draw_gaussian(gm, nu, rng):
    sd = np.sqrt(np.diag(gm.covariance))
    return np.asarray(gm.theta, dtype=float) + rng.standard_normal((nu, 2)) * sd


@dataclass(frozen=True, eq=False)
class PovmExperiment:
    povm: Povm
    model: ParametricModel
    theta: tuple


@dataclass(frozen=True, eq=False)
class EstimationRun:
    nu: int
    trials: int
    seed: int
    true_theta: np.ndarray
    estimates: np.ndarray
    empirical_cov: np.ndarray
    estimator_kind: str
    metadata: dict = field(default_factory=dict)

    @property
    def squared_errors(self) -> np.ndarray:
        return (self.estimates - self.true_theta) ** 2

    def mean_standard_errors(self) -> np.ndarray:
        return self.estimates.std(axis=0, ddof=1) / math.sqrt(self.trials)

    def cov_standard_errors(self) -> np.ndarray:
        """Standard errors of the entries of ``empirical_cov``."""
        dev = self.estimates - self.true_theta
        prods = dev[:, :, None] * dev[:, None, :]
        return prods.std(axis=0, ddof=1) / math.sqrt(self.trials)


def _empirical_cov(estimates, theta):
    dev = estimates - theta
    cov = dev.T @ dev / len(dev)
    return 0.5 * (cov + cov.T)


def estimate_gaussian(gm: GaussianJointMeasurement, nu: int, trials: int, seed: int,
                      extra_noise: float = 0.0) -> EstimationRun:
    """Sample-mean estimates of ``theta`` over ``trials`` runs of ``nu`` shots.

    ``extra_noise`` adds independent normal noise of that standard deviation
    to every estimate (a deliberately suboptimal estimator).
    """
    if trials < 2:
        raise ValueError("need at least two trials")

    def one(rng):
        est = _draw_gaussian(gm, nu, rng).mean(axis=0)
        if extra_noise:
            est = est + extra_noise * rng.standard_normal(2)
        return est

    estimates = np.array(ordered_map(one, _trial_rngs(seed, trials)))
    theta = np.asarray(gm.theta, dtype=float)
    return EstimationRun(nu, trials, seed, theta, estimates, _empirical_cov(estimates, theta), "sample_mean",
                         {"rng": RNG_ALGORITHM, "r": gm.r, "extra_noise": extra_noise})


def estimate_povm(exp: PovmExperiment, nu: int, trials: int, seed: int, grid, max_evals: int = 200) -> EstimationRun:
    """Grid maximum likelihood refined by the simplex, over ``trials`` runs.

    ``grid`` lists ``(low, high, points)`` per parameter.
    """
    if trials < 2:
        raise ValueError("need at least two trials")
    model = exp.model
    theta = np.atleast_1d(np.asarray(exp.theta, dtype=float))
    axes = [np.linspace(lo, hi, int(n)) for lo, hi, n in grid]
    if len(axes) != model.n_params:
        raise ValueError("one grid axis per parameter required")
    nodes = np.array(np.meshgrid(*axes, indexing="ij")).reshape(len(axes), -1).T
    probs = np.array([_born(exp.povm.effects, model.state_at(t)) for t in nodes])
    log_table = np.log(np.clip(probs, 1e-300, None))
    if np.ptp(probs, axis=0).max() <= 1e-12:
        raise FlatLikelihood("outcome distribution does not vary over the grid")
    p_true = outcome_distribution(exp.povm, model.rho(theta))

    def negloglik(t, counts):
        try:
            p = _born(exp.povm.effects, model.state_at(t))
        except Exception:
            return math.inf
        if np.any(p[counts > 0] <= 0):
            return math.inf
        return -float(counts[counts > 0] @ np.log(p[counts > 0]))

    steps = np.array([(hi - lo) / max(int(n) - 1, 1) for lo, hi, n in grid])

    def one(rng):
        counts = rng.multinomial(nu, p_true)
        ll = log_table @ counts
        if np.ptp(ll) <= 1e-12:
            raise FlatLikelihood("log-likelihood flat over the grid")
        start = nodes[int(np.argmax(ll))]
        res = nelder_mead(lambda t: negloglik(t, counts), start, max_evals=max_evals, initial_step=steps / 2,
                          xatol=1e-9, fatol=1e-9)
        return res.x

    estimates = np.array(ordered_map(one, _trial_rngs(seed, trials)))
    return EstimationRun(nu, trials, seed, theta, estimates, _empirical_cov(estimates, theta), "grid_mle",
                         {"rng": RNG_ALGORITHM})


def estimate(experiment, nu: int, trials: int, seed: int, estimator_kind: str | None = None, **kwargs) -> EstimationRun:
    if isinstance(experiment, GaussianJointMeasurement):
        if estimator_kind not in (None, "sample_mean"):
            raise ValueError("Gaussian runs use the sample-mean estimator")
        return estimate_gaussian(experiment, nu, trials, seed, **kwargs)
    if estimator_kind not in (None, "grid_mle"):
        raise ValueError("POVM runs use the grid MLE")
    return estimate_povm(experiment, nu, trials, seed, **kwargs)


def observed_information(r: float, samples: np.ndarray, theta_hat, step: float = 1e-4) -> np.ndarray:
    """Per-shot observed information: minus the mean Hessian of the log density,
    by central differences of the analytic score."""
    theta_hat = np.asarray(theta_hat, dtype=float)
    xi, eta = samples[:, 0], samples[:, 1]
    out = np.empty((2, 2))
    for k in range(2):
        e = np.zeros(2)
        e[k] = step
        plus = gaussian_score(r, theta_hat + e, xi, eta).mean(axis=1)
        minus = gaussian_score(r, theta_hat - e, xi, eta).mean(axis=1)
        out[:, k] = -(plus - minus) / (2 * step)
    return 0.5 * (out + out.T)


@dataclass(frozen=True, eq=False)
class AttainmentReport:
    tradeoff: ErrorTradeoffReport
    margin_standard_errors: list
    coherent_sum: float | None = None
    coherent_margin: float | None = None
    coherent_standard_error: float | None = None

    @property
    def error_margins(self) -> list:
        return [p.margin for p in self.tradeoff.pairwise]

    def error_bound_holds(self, n_sigma: float = 3.0) -> bool:
        return all(m >= -n_sigma * se for m, se in zip(self.error_margins, self.margin_standard_errors))

    def coherent_on_boundary(self, n_sigma: float = 3.0) -> bool:
        return abs(self.coherent_margin) <= n_sigma * self.coherent_standard_error


def attainment_report(run: EstimationRun, geom: QuantumGeometry, coherent: bool = False) -> AttainmentReport:
    """Error-form tradeoff margins with delta-method Monte-Carlo standard errors.

    With ``coherent=True`` the coherent-signal bound ``1/(nu E11) + 1/(nu E22) <= 4``
    is evaluated too; its margin is ``4 - sum``.
    """
    rep = error_tradeoff_report(geom, run.empirical_cov, run.nu)
    sq = run.squared_errors
    mean_cov = np.atleast_2d(np.cov(sq, rowvar=False)) / run.trials
    ediag = np.diag(run.empirical_cov)

    ses = []
    for pair in rep.pairwise:
        j, k, c = pair.j, pair.k, float(geom.c_tilde[pair.j, pair.k])

        def margin_of(e):
            g = gammas(np.diag(np.diag(geom.qfim)[[j, k]]), np.diag(e), run.nu)
            lhs, rhs = error_tradeoff_terms(g[0], g[1], c)
            return rhs - lhs

        e0 = ediag[[j, k]]
        grad = np.empty(2)
        for i in range(2):
            h = 1e-6 * e0[i]
            ep, em = e0.copy(), e0.copy()
            ep[i] += h
            em[i] -= h
            grad[i] = (margin_of(ep) - margin_of(em)) / (2 * h)
        sub = mean_cov[np.ix_([j, k], [j, k])]
        ses.append(float(math.sqrt(max(grad @ sub @ grad, 0.0))))

    total = margin = se = None
    if coherent:
        total = float(np.sum(1.0 / (run.nu * ediag)))
        grad = -1.0 / (run.nu * ediag ** 2)
        se = float(math.sqrt(max(grad @ mean_cov @ grad, 0.0)))
        margin = 4.0 - total
    return AttainmentReport(rep, ses, total, margin, se)
