"""Classical Fisher information of a POVM, information regret and the regret tradeoff."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BadCovariance, DimMismatch, NotDominated, SingularOutcome
from .geometry import QuantumGeometry
from .linalg import ParametricModel, Povm

PROB_TOL = 1e-12
DPROB_TOL = 1e-9
DOMINANCE_TOL = 1e-8
COEFFICIENT_KINDS = ("plain_c", "tilde_c")


def _born(effects: np.ndarray, op: np.ndarray) -> np.ndarray:
    # tr(M_x op) for every x
    return np.einsum("xab,ba->x", effects, op).real


def outcome_distribution(povm: Povm, rho) -> np.ndarray:
    rho = getattr(rho, "mat", rho)
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (povm.dim, povm.dim):
        raise DimMismatch(f"POVM dim {povm.dim} vs state shape {rho.shape}")
    p = _born(povm.effects, rho)
    p = np.where(p < 0.0, 0.0, p)
    return p / p.sum()


def outcome_derivatives(povm: Povm, model: ParametricModel, theta) -> np.ndarray:
    """``d_j p_x = tr(M_x d_j rho)`` as an ``(n_params, n_outcomes)`` array."""
    return np.array([_born(povm.effects, d) for d in model.derivatives(theta)])


def fim_from_probabilities(p: np.ndarray, dp: np.ndarray) -> np.ndarray:
    """``F_jk = sum_x dp_j dp_k / p`` with the zero-probability convention.

    Outcomes with ``p <= 1e-12`` are dropped if all their derivatives are
    below 1e-9, otherwise the FIM diverges and ``SingularOutcome`` is raised.
    """
    small = p <= PROB_TOL
    if np.any(small):
        bad = np.abs(dp[:, small]).max(initial=0.0)
        if bad > DPROB_TOL:
            raise SingularOutcome(f"outcome with p ~ 0 has derivative {bad:.3e}")
    keep = ~small
    w = dp[:, keep] / np.sqrt(p[keep])
    f = w @ w.T
    return 0.5 * (f + f.T)


def classical_fim(povm: Povm, model: ParametricModel, theta) -> np.ndarray:
    rho = model.rho(theta)
    if rho.shape[0] != povm.dim:
        raise DimMismatch(f"POVM dim {povm.dim} vs model dim {rho.shape[0]}")
    p = _born(povm.effects, rho)
    dp = outcome_derivatives(povm, model, theta)
    return fim_from_probabilities(p, dp)


def tradeoff_lhs(delta_j: float, delta_k: float, c: float) -> float:
    return delta_j ** 2 + delta_k ** 2 + 2.0 * math.sqrt(max(0.0, 1.0 - c * c)) * delta_j * delta_k


@dataclass(frozen=True)
class PairTradeoff:
    j: int
    k: int
    c_used: float
    lhs: float
    rhs: float
    margin: float
    coefficient_kind: str


@dataclass(frozen=True, eq=False)
class RegretReport:
    cfim: np.ndarray
    regret: np.ndarray
    delta: np.ndarray
    pairwise: list = field(default_factory=list)
    degenerate: np.ndarray = None

    @property
    def min_margin(self) -> float:
        return min((p.margin for p in self.pairwise), default=math.inf)


def regret_report(geom: QuantumGeometry, cfim, coefficient_kind: str = "tilde_c") -> RegretReport:
    if coefficient_kind not in COEFFICIENT_KINDS:
        raise ValueError(f"coefficient_kind must be one of {COEFFICIENT_KINDS}")
    cfim = np.asarray(cfim, dtype=float)
    n = geom.n_params
    if cfim.shape != (n, n):
        raise DimMismatch(f"cfim shape {cfim.shape} vs {n} parameters")
    regret = geom.qfim - cfim
    regret = 0.5 * (regret + regret.T)
    wmin = np.linalg.eigvalsh(regret)[0]
    if wmin < -DOMINANCE_TOL:
        raise NotDominated(f"qfim - cfim has eigenvalue {wmin:.3e}")
    qdiag = np.diag(geom.qfim)
    flagged = qdiag <= math.sqrt(1e-14)
    delta = np.zeros(n)
    ok = ~flagged
    delta[ok] = np.sqrt(np.clip(np.diag(regret)[ok] / qdiag[ok], 0.0, 1.0))
    coeff = geom.coefficient(coefficient_kind)
    pairs = []
    for j in range(n):
        for k in range(j + 1, n):
            c = float(coeff[j, k])
            lhs = tradeoff_lhs(delta[j], delta[k], c)
            rhs = c * c
            pairs.append(PairTradeoff(j, k, c, lhs, rhs, lhs - rhs, coefficient_kind))
    return RegretReport(cfim, regret, delta, pairs, flagged)


def error_tradeoff_terms(gamma_j: float, gamma_k: float, c_tilde: float) -> tuple:
    """Left- and right-hand sides of the error-form tradeoff.

    ``1 - gamma`` is floored at 0: gamma above 1 only occurs through
    sampling noise or bias.
    """
    s = math.sqrt(max(0.0, 1.0 - c_tilde * c_tilde))
    lhs = gamma_j + gamma_k - 2.0 * s * math.sqrt(max(0.0, 1.0 - gamma_j) * max(0.0, 1.0 - gamma_k))
    rhs = 2.0 - c_tilde * c_tilde
    return lhs, rhs


@dataclass(frozen=True)
class ErrorPair:
    j: int
    k: int
    lhs: float
    rhs: float
    margin: float


@dataclass(frozen=True, eq=False)
class ErrorTradeoffReport:
    gamma: np.ndarray
    pairwise: list

    @property
    def min_margin(self) -> float:
        return min((p.margin for p in self.pairwise), default=math.inf)


def gammas(qfim: np.ndarray, err_cov: np.ndarray, nu: int) -> np.ndarray:
    qdiag = np.diag(qfim)
    ediag = np.diag(err_cov)
    out = np.zeros(len(qdiag))
    ok = qdiag > math.sqrt(1e-14)
    out[ok] = 1.0 / (nu * ediag[ok] * qdiag[ok])
    return out


def error_tradeoff_report(geom: QuantumGeometry, err_cov, nu: int) -> ErrorTradeoffReport:
    err_cov = np.asarray(err_cov, dtype=float)
    n = geom.n_params
    if err_cov.shape != (n, n):
        raise BadCovariance(f"error covariance shape {err_cov.shape} vs {n} parameters")
    if np.max(np.abs(err_cov - err_cov.T)) > 1e-9 * max(1.0, np.max(np.abs(err_cov))):
        raise BadCovariance("error covariance not symmetric")
    if np.any(np.diag(err_cov) <= 0.0):
        raise BadCovariance("error covariance needs a positive diagonal")
    if nu < 1:
        raise BadCovariance("nu must be >= 1")
    g = gammas(geom.qfim, err_cov, nu)
    pairs = []
    for j in range(n):
        for k in range(j + 1, n):
            lhs, rhs = error_tradeoff_terms(g[j], g[k], float(geom.c_tilde[j, k]))
            pairs.append(ErrorPair(j, k, lhs, rhs, rhs - lhs))
    return ErrorTradeoffReport(g, pairs)


@dataclass(frozen=True)
class CoherentBoundRow:
    """Lower bounds on E22 at one value of E11; ``None`` where a curve is undefined."""

    e11: float
    regret_bound_e22: float | None
    rld_geo_e22: float | None
    rld_arith_e22: float | None
    sld_harm_e22: float | None


def comparison_bounds_coherent(nu: int, e11_grid) -> list[CoherentBoundRow]:
    """The regret-tradeoff boundary and three generalized-mean CRB curves
    for the coherent-state signal, evaluated on a grid of E11 values."""
    if nu < 1:
        raise ValueError("nu must be >= 1")
    rows = []
    for e11 in np.asarray(e11_grid, dtype=float):
        if not e11 > 0:
            raise ValueError("grid entries must be positive")
        inv = 1.0 / (nu * e11)
        regret = 1.0 / (nu * (4.0 - inv)) if inv < 4.0 else None
        geo = 1.0 / (4.0 * nu * nu * e11)
        arith = 1.0 / nu - e11
        arith = arith if arith > 0 else None
        harm = 1.0 / (nu * (8.0 - inv)) if inv < 8.0 else None
        rows.append(CoherentBoundRow(float(e11), regret, geo, arith, harm))
    return rows
