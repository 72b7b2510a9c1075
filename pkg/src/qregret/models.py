"""Concrete parametric models, the Gaussian joint quadrature measurement,
and scans over measurements (tradeoff frontier, Vidrighin sum)."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.linalg import expm
from scipy.special import gammainc

from ._parallel import ordered_map
from .errors import CutoffTooSmall, NotDominated, NotNormalized, SingularOutcome
from .geometry import QuantumGeometry, geometric_tensor, pure_state_tensor
from .linalg import (
    ParametricModel,
    Povm,
    dagger,
    haar_unitary,
    projective_povm,
    random_povm,
)
from .measurement import classical_fim, regret_report
from .optimize import nelder_mead

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = np.array([SIGMA_X, SIGMA_Y, SIGMA_Z])
TAIL_TOL = 1e-12


def bloch_state(r) -> np.ndarray:
    return 0.5 * (np.eye(2) + np.einsum("i,iab->ab", np.asarray(r, dtype=float), PAULI))


# --------------------------------------------------------------------------
# pure-state families


@dataclass(frozen=True, eq=False)
class GenericPureModel:
    """Pure-state family ``theta -> |psi_theta>``; ``dpsi_at`` optional (FD otherwise)."""

    dim: int
    n_params: int
    psi_at: Callable[[np.ndarray], np.ndarray]
    dpsi_at: Optional[Callable[[np.ndarray], list]] = None
    fd_step: float = 1e-5
    name: str = "pure"

    def psi(self, theta) -> np.ndarray:
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        v = np.asarray(self.psi_at(theta), dtype=complex)
        nrm = np.linalg.norm(v)
        if abs(nrm - 1.0) > 1e-10:
            raise NotNormalized(f"{self.name}: |psi| = {nrm:.12f}")
        return v

    def fd_dpsi(self, theta) -> list:
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        out = []
        for j in range(self.n_params):
            e = np.zeros(self.n_params)
            e[j] = self.fd_step
            out.append((self.psi_at(theta + e) - self.psi_at(theta - e)) / (2 * self.fd_step))
        return out

    def dpsi(self, theta) -> list:
        if self.dpsi_at is None:
            return self.fd_dpsi(theta)
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        return [np.asarray(v, dtype=complex) for v in self.dpsi_at(theta)]

    def geometry(self, theta) -> QuantumGeometry:
        return pure_state_tensor(self.psi(theta), self.dpsi(theta), theta)

    def as_parametric(self) -> ParametricModel:
        def state_at(theta):
            v = self.psi(theta)
            return np.outer(v, v.conj())

        def derivative_at(theta, j):
            v = self.psi(theta)
            dv = self.dpsi(theta)[j]
            return np.outer(dv, v.conj()) + np.outer(v, dv.conj())

        return ParametricModel(self.n_params, state_at, derivative_at, self.fd_step, self.name)


def _normalized_derivatives(v: np.ndarray, dv: list) -> list:
    # d(v/|v|) = dv/|v| - v Re<v, dv>/|v|^3
    n = np.linalg.norm(v)
    return [d / n - v * np.vdot(v, d).real / n ** 3 for d in dv]


@dataclass(frozen=True, eq=False)
class CoherentModel(GenericPureModel):
    """Truncated coherent state ``|alpha>``, ``theta = (Re alpha, Im alpha)``."""

    n_max: int = 40


def coherent_tail_weight(alpha_abs2: float, n_max: int) -> float:
    """Poisson weight beyond the Fock cutoff, ``P(N > n_max)``."""
    return float(gammainc(n_max + 1, alpha_abs2))


def coherent_model(n_max: int = 40) -> CoherentModel:
    if n_max < 20:
        raise CutoffTooSmall(f"n_max = {n_max} < 20")
    n = np.arange(n_max + 1)
    sqrt_n = np.sqrt(n)

    def raw(theta):
        alpha = complex(theta[0], theta[1])
        tail = coherent_tail_weight(abs(alpha) ** 2, n_max)
        if tail > TAIL_TOL:
            raise CutoffTooSmall(f"tail weight {tail:.3e} beyond n_max = {n_max} at |alpha| = {abs(alpha):.3f}")
        c = np.empty(n_max + 1, dtype=complex)
        c[0] = math.exp(-abs(alpha) ** 2 / 2)
        for k in range(1, n_max + 1):
            c[k] = c[k - 1] * alpha / sqrt_n[k]
        return c

    def psi_at(theta):
        c = raw(theta)
        return c / np.linalg.norm(c)

    def raise_op(v):
        out = np.zeros_like(v)
        out[1:] = sqrt_n[1:] * v[:-1]
        return out

    def dpsi_at(theta):
        # d|alpha>/d Re(alpha) = (-Re(alpha) + a^dag)|alpha>, d/d Im(alpha) = (-Im(alpha) + i a^dag)|alpha>
        v = psi_at(theta)
        up = raise_op(v)
        return [-theta[0] * v + up, -theta[1] * v + 1j * up]

    return CoherentModel(n_max + 1, 2, psi_at, dpsi_at, 1e-5, "coherent", n_max)


def pure_qubit_family() -> GenericPureModel:
    """``cos(t1/2)|0> + exp(i t2) sin(t1/2)|1>``."""

    def psi_at(t):
        return np.array([math.cos(t[0] / 2), np.exp(1j * t[1]) * math.sin(t[0] / 2)])

    def dpsi_at(t):
        return [
            np.array([-0.5 * math.sin(t[0] / 2), 0.5 * np.exp(1j * t[1]) * math.cos(t[0] / 2)]),
            np.array([0.0, 1j * np.exp(1j * t[1]) * math.sin(t[0] / 2)]),
        ]

    return GenericPureModel(2, 2, psi_at, dpsi_at, name="pure-qubit")


def real_pure_family() -> GenericPureModel:
    """Real qutrit family ``(cos t1 cos t2, sin t1 cos t2, sin t2)``; its SLDs commute on the state."""

    def psi_at(t):
        return np.array([math.cos(t[0]) * math.cos(t[1]), math.sin(t[0]) * math.cos(t[1]), math.sin(t[1])],
                        dtype=complex)

    def dpsi_at(t):
        return [
            np.array([-math.sin(t[0]) * math.cos(t[1]), math.cos(t[0]) * math.cos(t[1]), 0.0], dtype=complex),
            np.array([-math.cos(t[0]) * math.sin(t[1]), -math.sin(t[0]) * math.sin(t[1]), math.cos(t[1])],
                     dtype=complex),
        ]

    return GenericPureModel(3, 2, psi_at, dpsi_at, name="real-pure")


def random_pure_model(dim: int, n_params: int, seed: int) -> GenericPureModel:
    """``psi = v/|v|`` with ``v = v0 + sum_j sin(theta_j) v_j`` for seeded complex ``v``'s."""
    rng = np.random.default_rng(seed)
    vs = rng.standard_normal((n_params + 1, dim)) + 1j * rng.standard_normal((n_params + 1, dim))

    def unnorm(t):
        return vs[0] + np.sin(t) @ vs[1:]

    def psi_at(t):
        v = unnorm(t)
        return v / np.linalg.norm(v)

    def dpsi_at(t):
        return _normalized_derivatives(unnorm(t), [math.cos(t[j]) * vs[j + 1] for j in range(n_params)])

    return GenericPureModel(dim, n_params, psi_at, dpsi_at, name=f"random-pure-{dim}")


def random_mixed_model(dim: int, n_params: int, seed: int, rank: int | None = None) -> ParametricModel:
    """``rho = A A^dag / tr(A A^dag)`` with ``A = A0 + sum_j sin(theta_j) A_j`` (``dim x rank``)."""
    rank = dim if rank is None else rank
    rng = np.random.default_rng(seed)
    mats = rng.standard_normal((n_params + 1, dim, rank)) + 1j * rng.standard_normal((n_params + 1, dim, rank))

    def amp(t):
        return mats[0] + np.einsum("j,jab->ab", np.sin(t), mats[1:])

    def state_at(t):
        a = amp(t)
        b = a @ dagger(a)
        return b / np.trace(b).real

    def derivative_at(t, j):
        a = amp(t)
        da = math.cos(t[j]) * mats[j + 1]
        b = a @ dagger(a)
        db = da @ dagger(a) + a @ dagger(da)
        tr = np.trace(b).real
        return db / tr - b * np.trace(db).real / tr ** 2

    return ParametricModel(n_params, state_at, derivative_at, 1e-5, f"random-mixed-{dim}-r{rank}")


# --------------------------------------------------------------------------
# phase shift + phase diffusion qubit


@dataclass(frozen=True)
class QubitDephasingModel:
    """Bloch vector ``exp(-t2^2) (sin chi cos t1, sin chi sin t1, cos chi)``."""

    chi: float = math.pi / 2

    def bloch(self, theta) -> np.ndarray:
        t1, t2 = theta
        s = math.exp(-t2 * t2)
        return s * np.array([math.sin(self.chi) * math.cos(t1), math.sin(self.chi) * math.sin(t1), math.cos(self.chi)])

    def bloch_derivative(self, theta, j: int) -> np.ndarray:
        t1, t2 = theta
        if j == 0:
            s = math.exp(-t2 * t2)
            return s * math.sin(self.chi) * np.array([-math.sin(t1), math.cos(t1), 0.0])
        return -2.0 * t2 * self.bloch(theta)

    def parametric(self) -> ParametricModel:
        return ParametricModel(
            2,
            lambda t: bloch_state(self.bloch(t)),
            lambda t, j: 0.5 * np.einsum("i,iab->ab", self.bloch_derivative(t, j), PAULI),
            1e-5,
            f"qubit-dephasing(chi={self.chi:g})",
        )


def qubit_model(chi: float = math.pi / 2) -> ParametricModel:
    return QubitDephasingModel(chi).parametric()


def projective_qubit_povm(vartheta: float, phi: float) -> Povm:
    """Projective measurement along the Bloch direction ``(vartheta, phi)``."""
    m = np.array([math.sin(vartheta) * math.cos(phi), math.sin(vartheta) * math.sin(phi), math.cos(vartheta)])
    mz = np.einsum("i,iab->ab", m, PAULI)
    return Povm([0.5 * (np.eye(2) + mz), 0.5 * (np.eye(2) - mz)])


def sld_eigenbasis_povm(sld: np.ndarray) -> Povm:
    _, vecs = np.linalg.eigh(0.5 * (sld + dagger(sld)))
    return projective_povm(vecs)


# --------------------------------------------------------------------------
# Gaussian joint quadrature measurement on the coherent state


def gaussian_covariance(r: float) -> np.ndarray:
    e = math.exp(2 * r)
    return np.diag([(e + 1) / 4, (e + 1) / (4 * e)])


def gaussian_measurement_fim(r: float) -> np.ndarray:
    e = math.exp(2 * r)
    return np.diag([4 / (e + 1), 4 * e / (e + 1)])


def gaussian_log_density(r: float, theta, xi, eta):
    """Log density of the joint outcome ``(xi, eta)``: independent normals with
    means ``theta`` and variances from ``gaussian_covariance(r)``."""
    var_xi, var_eta = np.diag(gaussian_covariance(r))
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    return (-math.log(2 * math.pi * math.sqrt(var_xi * var_eta))
            - (xi - theta[0]) ** 2 / (2 * var_xi) - (eta - theta[1]) ** 2 / (2 * var_eta))


def gaussian_score(r: float, theta, xi, eta) -> np.ndarray:
    """Gradient of the log density with respect to ``theta``, shape ``(2, ...)``."""
    var_xi, var_eta = np.diag(gaussian_covariance(r))
    return np.array([(np.asarray(xi) - theta[0]) / var_xi, (np.asarray(eta) - theta[1]) / var_eta])


@dataclass(frozen=True)
class GaussianJointMeasurement:
    r: float
    theta: tuple = (0.0, 0.0)

    @property
    def covariance(self) -> np.ndarray:
        return gaussian_covariance(self.r)

    @property
    def fim(self) -> np.ndarray:
        return gaussian_measurement_fim(self.r)

    def log_density(self, xi, eta, theta=None):
        return gaussian_log_density(self.r, self.theta if theta is None else theta, xi, eta)


# --------------------------------------------------------------------------
# measurement scans


@dataclass(frozen=True)
class FrontierPoint:
    kind: str  # "grid", "random", "refined" or "gaussian"
    params: tuple
    delta1: float
    delta2: float
    margin: float


@dataclass(frozen=True)
class FrontierConfig:
    grid: int = 64
    n_starts: int = 8
    max_evals: int = 500
    n_random: int = 32
    seed: int = 0
    coefficient_kind: str = "tilde_c"


@dataclass(frozen=True, eq=False)
class FrontierResult:
    points: list
    min_margin: float
    hull: list = field(default_factory=list)

    def distinct_tight(self, tol: float = 1e-3, resolution: float = 1e-3) -> list:
        """Tight points (margin <= tol) with distinct ``(delta1, delta2)`` at ``resolution``."""
        seen = {}
        for p in self.points:
            if p.margin <= tol:
                key = (round(p.delta1 / resolution), round(p.delta2 / resolution))
                seen.setdefault(key, p)
        return list(seen.values())


def pareto_hull(points) -> list:
    """Points not dominated in both regrets by any other point, sorted by ``delta1``."""
    pts = sorted(points, key=lambda p: (p.delta1, p.delta2))
    hull, best = [], math.inf
    for p in pts:
        if p.delta2 < best - 1e-12:
            hull.append(p)
            best = p.delta2
    return hull


def _evaluate(geom, model: ParametricModel, theta, povm: Povm, kind: str):
    try:
        rep = regret_report(geom, classical_fim(povm, model, theta), kind)
    except (SingularOutcome, NotDominated):
        return None
    return rep


def _basis_from_params(x, base: np.ndarray) -> np.ndarray:
    d = base.shape[0]
    h = np.zeros((d, d), dtype=complex)
    iu = np.triu_indices(d, 1)
    n_off = len(iu[0])
    h[np.diag_indices(d)] = x[:d]
    h[iu] = x[d:d + n_off] + 1j * x[d + n_off:d + 2 * n_off]
    h = h + np.triu(h, 1).conj().T
    return expm(1j * h) @ base


def trace_frontier(model: GenericPureModel, theta, config: FrontierConfig = FrontierConfig()) -> FrontierResult:
    """Sweep measurements and refine toward the equality curve of the regret tradeoff.

    Qubit models sweep projective measurements on a ``grid x grid`` Bloch-angle
    mesh; other dimensions use seeded Haar bases. Seeded random POVMs are added
    in every case, then ``n_starts`` simplex refinements minimize the margin.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if model.n_params != 2:
        raise ValueError("frontier tracing needs a two-parameter model")
    geom = model.geometry(theta)
    pm = model.as_parametric()
    kind = config.coefficient_kind
    points: list[FrontierPoint] = []

    def point(kind_tag, params, povm):
        rep = _evaluate(geom, pm, theta, povm, kind)
        if rep is None:
            return None
        return FrontierPoint(kind_tag, tuple(float(v) for v in params), float(rep.delta[0]),
                             float(rep.delta[1]), float(rep.pairwise[0].margin))

    rng = np.random.default_rng(config.seed)
    if model.dim == 2:
        varthetas = np.linspace(0.0, math.pi, config.grid)
        phis = np.linspace(0.0, 2 * math.pi, config.grid, endpoint=False)
        mesh = [(a, b) for a in varthetas for b in phis]
        evaluated = ordered_map(lambda ab: point("grid", ab, projective_qubit_povm(*ab)), mesh)

        def family(x):
            return projective_qubit_povm(x[0], x[1])
    else:
        bases = [haar_unitary(model.dim, rng) for _ in range(config.grid)]
        evaluated = ordered_map(lambda ib: point("grid", (ib[0],), projective_povm(ib[1])), enumerate(bases))
        base0 = bases[0]

        def family(x):
            return projective_povm(_basis_from_params(x, base0))

    points.extend(p for p in evaluated if p is not None)

    for i in range(config.n_random):
        s = config.seed * 1000 + i
        povm = random_povm(model.dim, 2 + i % 3, s)
        p = point("random", (s,), povm)
        if p is not None:
            points.append(p)

    grid_pts = [p for p in points if p.kind == "grid"]
    starts = []
    if grid_pts:
        order = sorted(grid_pts, key=lambda p: p.delta1)
        idx = np.linspace(0, len(order) - 1, config.n_starts).round().astype(int)
        starts = [order[i] for i in idx]

    def objective(x):
        try:
            povm = family(x)
        except Exception:
            return math.inf
        rep = _evaluate(geom, pm, theta, povm, kind)
        return math.inf if rep is None else rep.pairwise[0].margin

    def refine(start):
        if model.dim == 2:
            x0 = np.array(start.params)
        else:
            x0 = np.zeros(model.dim ** 2)
        res = nelder_mead(objective, x0, max_evals=config.max_evals, initial_step=0.05)
        return point("refined", res.x, family(res.x))

    refined = ordered_map(refine, starts)
    points.extend(p for p in refined if p is not None)
    min_margin = min((p.margin for p in points), default=math.inf)
    return FrontierResult(points, min_margin, pareto_hull(points))


def gaussian_frontier(r_values, qfim=None) -> list:
    """Frontier points of the coherent signal under the squeezed-ancilla
    joint quadrature measurements, one per squeezing value."""
    qfim = np.diag([4.0, 4.0]) if qfim is None else np.asarray(qfim, dtype=float)
    out = []
    for r in r_values:
        f = gaussian_measurement_fim(r)
        d = np.sqrt(np.clip(1.0 - np.diag(f) / np.diag(qfim), 0.0, 1.0))
        # coherent family: c = c~ = 1, so the tradeoff reads delta1^2 + delta2^2 >= 1
        out.append(FrontierPoint("gaussian", (float(r),), float(d[0]), float(d[1]), float(d[0] ** 2 + d[1] ** 2 - 1)))
    return out


@dataclass(frozen=True)
class VidrighinResult:
    max_sum: float
    bound_margin: float
    argmax: tuple
    min_delta_sq_sum: float
    n_evaluated: int


def vidrighin_sum(geom: QuantumGeometry, cfim: np.ndarray) -> float:
    q = np.diag(geom.qfim)
    ok = q > 1e-7
    return float(np.sum(np.diag(cfim)[ok] / q[ok]))


def vidrighin_check(model: ParametricModel, theta, grid: int = 48, n_random: int = 64, seed: int = 0,
                    geom: QuantumGeometry | None = None) -> VidrighinResult:
    """Maximum of ``F11/qfim11 + F22/qfim22`` over projective measurements on
    a Bloch-angle grid plus seeded random POVMs."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    geom = geometric_tensor(model, theta) if geom is None else geom
    candidates = [(("projective", a, b), projective_qubit_povm(a, b))
                  for a in np.linspace(0.0, math.pi, grid)
                  for b in np.linspace(0.0, 2 * math.pi, grid, endpoint=False)]
    candidates += [(("random", seed * 1000 + i), random_povm(2, 2 + i % 3, seed * 1000 + i)) for i in range(n_random)]

    def one(item):
        tag, povm = item
        try:
            f = classical_fim(povm, model, theta)
        except SingularOutcome:
            return None
        return tag, vidrighin_sum(geom, f)

    results = [r for r in ordered_map(one, candidates) if r is not None]
    tag, best = max(results, key=lambda tr: tr[1])
    return VidrighinResult(best, 1.0 - best, tag, 2.0 - best, len(results))
