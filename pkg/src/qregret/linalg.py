"""Hermitian linear algebra and the state / measurement / model types.

Matrices are plain complex ``numpy`` arrays. ``DensityMatrix`` and ``Povm``
validate on construction and freeze their buffers.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import (
    BadDims,
    DimMismatch,
    InvalidPovm,
    InvalidState,
    NonHermitian,
    NonSquare,
    NotPsd,
)

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = 1e-10
COMPLETENESS_TOL = 1e-9


def _as_square(m, name="matrix") -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise NonSquare(f"{name} must be square, got shape {m.shape}")
    return m


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


def hermiticity_error(m: np.ndarray) -> float:
    return float(np.max(np.abs(m - dagger(m)), initial=0.0))


def check_hermitian(m, tol: float = HERMITIAN_TOL, name: str = "matrix") -> np.ndarray:
    m = _as_square(m, name)
    err = hermiticity_error(m)
    if err > tol:
        raise NonHermitian(f"{name} is not Hermitian (max |m - m^dag| = {err:.3e})")
    return m


def hermitian_eig(m, tol: float = HERMITIAN_TOL):
    """Eigen-decomposition of a Hermitian matrix.

    Returns ``(eigenvalues, vectors)`` with eigenvalues in descending order
    and eigenvectors stored as the columns of ``vectors``.
    """
    m = check_hermitian(m, tol)
    herm = 0.5 * (m + dagger(m))
    w, v = np.linalg.eigh(herm)
    return w[::-1].copy(), v[:, ::-1].copy()


def matrix_sqrt_psd(m, tol: float = PSD_TOL) -> np.ndarray:
    """PSD square root. Eigenvalues at rounding level are treated as exact
    zeros, otherwise a rank-deficient input picks up ~1e-8 noise from sqrt."""
    w, v = hermitian_eig(m)
    if w.size and w[-1] < -tol:
        raise NotPsd(f"minimum eigenvalue {w[-1]:.3e} < -{tol:g}")
    floor = 64 * np.finfo(float).eps * max(1.0, float(np.abs(w).max(initial=0.0)))
    root = np.sqrt(np.where(w <= floor, 0.0, w))
    return (v * root) @ dagger(v)


def trace_norm(m) -> float:
    """Sum of singular values.

    Uses the Hermitian dilation ``[[0, m], [m^dag, 0]]`` whose eigenvalues are
    ``+-sigma_i``; this keeps small singular values accurate, unlike
    square roots of the eigenvalues of ``m^dag m``.
    """
    m = _as_square(m)
    n = m.shape[0]
    big = np.zeros((2 * n, 2 * n), dtype=complex)
    big[:n, n:] = m
    big[n:, :n] = dagger(m)
    w = np.linalg.eigvalsh(big)
    return float(0.5 * np.sum(np.abs(w)))


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def max_abs(m) -> float:
    return float(np.max(np.abs(np.asarray(m)), initial=0.0))


def _frozen(m: np.ndarray) -> np.ndarray:
    m = np.array(m, dtype=complex, copy=True)
    m.flags.writeable = False
    return m


def check_density(mat) -> np.ndarray:
    """Validate a density matrix (Hermitian, unit trace, PSD); returns it as an array."""
    mat = _as_square(mat, "density matrix")
    err = hermiticity_error(mat)
    if err > HERMITIAN_TOL:
        raise InvalidState(f"density matrix not Hermitian ({err:.3e})")
    tr = np.trace(mat)
    if abs(tr - 1.0) > TRACE_TOL:
        raise InvalidState(f"density matrix trace {tr.real:.12f} != 1")
    wmin = np.linalg.eigvalsh(0.5 * (mat + dagger(mat)))[0]
    if wmin < -PSD_TOL:
        raise InvalidState(f"density matrix has eigenvalue {wmin:.3e} < 0")
    return mat


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    mat: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mat", _frozen(check_density(self.mat)))

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    @classmethod
    def from_vector(cls, psi) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=complex)
        return cls(np.outer(psi, psi.conj()))


def check_povm(effects: Sequence[np.ndarray]) -> np.ndarray:
    """Validate effects and return them stacked as an ``(m, d, d)`` array."""
    if len(effects) == 0:
        raise InvalidPovm("POVM has no effects")
    stack = np.array([_as_square(e, "effect") for e in effects], dtype=complex)
    if len({e.shape for e in stack}) != 1:
        raise InvalidPovm("effects must share one shape")
    d = stack.shape[1]
    for i, e in enumerate(stack):
        err = hermiticity_error(e)
        if err > HERMITIAN_TOL:
            raise InvalidPovm(f"effect {i} not Hermitian ({err:.3e})")
        wmin = np.linalg.eigvalsh(0.5 * (e + dagger(e)))[0]
        if wmin < -PSD_TOL:
            raise InvalidPovm(f"effect {i} has eigenvalue {wmin:.3e} < 0")
    resid = max_abs(stack.sum(axis=0) - np.eye(d))
    if resid > COMPLETENESS_TOL:
        raise InvalidPovm(f"effects do not sum to identity (residual {resid:.3e})")
    return stack


@dataclass(frozen=True, eq=False)
class Povm:
    effects: np.ndarray
    labels: tuple = ()

    def __post_init__(self):
        stack = check_povm(list(self.effects))
        stack.flags.writeable = False
        object.__setattr__(self, "effects", stack)
        labels = tuple(self.labels) if self.labels else tuple(range(len(stack)))
        if len(labels) != len(stack):
            raise InvalidPovm("one label per effect required")
        object.__setattr__(self, "labels", labels)

    @property
    def dim(self) -> int:
        return self.effects.shape[1]

    @property
    def n_outcomes(self) -> int:
        return self.effects.shape[0]

    def same_as(self, other: "Povm", tol: float = 1e-12) -> bool:
        return self.effects.shape == other.effects.shape and max_abs(self.effects - other.effects) <= tol

    def merged(self, i: int, j: int) -> "Povm":
        """Coarse-grain outcomes ``i`` and ``j`` into one."""
        keep = [k for k in range(self.n_outcomes) if k not in (i, j)]
        effects = [self.effects[i] + self.effects[j]] + [self.effects[k] for k in keep]
        return Povm(effects)


@dataclass(frozen=True)
class ParametricModel:
    """A smooth family ``theta -> rho_theta``.

    ``derivative_at(theta, j)`` is optional; without it derivatives come from
    central differences with step ``fd_step``.
    """

    n_params: int
    state_at: Callable[[np.ndarray], np.ndarray]
    derivative_at: Optional[Callable[[np.ndarray, int], np.ndarray]] = None
    fd_step: float = 1e-5
    name: str = field(default="model", compare=False)

    def _theta(self, theta) -> np.ndarray:
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        if theta.shape != (self.n_params,):
            raise DimMismatch(f"expected {self.n_params} parameters, got {theta.shape}")
        return theta

    def rho(self, theta) -> np.ndarray:
        return check_density(self.state_at(self._theta(theta)))

    def state(self, theta) -> DensityMatrix:
        return DensityMatrix(self.rho(theta))

    @property
    def has_analytic_derivative(self) -> bool:
        return self.derivative_at is not None

    def fd_derivative(self, theta, j: int) -> np.ndarray:
        theta = self._theta(theta)
        step = np.zeros(self.n_params)
        step[j] = self.fd_step
        plus = np.asarray(self.state_at(theta + step), dtype=complex)
        minus = np.asarray(self.state_at(theta - step), dtype=complex)
        return (plus - minus) / (2.0 * self.fd_step)

    def derivative(self, theta, j: int) -> np.ndarray:
        if self.derivative_at is None:
            return self.fd_derivative(theta, j)
        return np.asarray(self.derivative_at(self._theta(theta), j), dtype=complex)

    def derivatives(self, theta) -> list[np.ndarray]:
        return [self.derivative(theta, j) for j in range(self.n_params)]

    def reparameterized(self, scales) -> "ParametricModel":
        """Model in the new coordinates ``phi_j = scales[j] * theta_j``."""
        scales = np.asarray(scales, dtype=float)

        def state_at(phi):
            return self.state_at(phi / scales)

        deriv = None
        if self.derivative_at is not None:
            def deriv(phi, j):
                return self.derivative_at(phi / scales, j) / scales[j]

        return ParametricModel(self.n_params, state_at, deriv, self.fd_step, f"{self.name}-scaled")

    def sliced(self, free: Sequence[int], theta0) -> "ParametricModel":
        """Sub-model over the parameters ``free``; the others are pinned at ``theta0``."""
        free = list(free)
        theta0 = self._theta(theta0).copy()

        def embed(t):
            full = theta0.copy()
            full[free] = t
            return full

        def state_at(t):
            return self.state_at(embed(t))

        deriv = None
        if self.derivative_at is not None:
            def deriv(t, j):
                return self.derivative_at(embed(t), free[j])

        return ParametricModel(len(free), state_at, deriv, self.fd_step, f"{self.name}-slice")


def haar_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    phases = np.diag(r) / np.abs(np.diag(r))
    return q * phases


def random_povm(dim: int, n_outcomes: int, seed: int) -> Povm:
    """Seeded random POVM carved out of a Haar unitary on ``dim * n_outcomes``."""
    if dim < 2 or n_outcomes < 2:
        raise BadDims(f"need dim >= 2 and n_outcomes >= 2, got ({dim}, {n_outcomes})")
    rng = np.random.default_rng(seed)
    u = haar_unitary(dim * n_outcomes, rng)
    iso = u[:, :dim]
    effects = []
    for x in range(n_outcomes):
        block = iso[x * dim:(x + 1) * dim, :]
        e = dagger(block) @ block
        effects.append(0.5 * (e + dagger(e)))
    return Povm(effects)


def projective_povm(basis) -> Povm:
    """Rank-one projectors onto the columns of a unitary ``basis``."""
    basis = np.asarray(basis, dtype=complex)
    return Povm([np.outer(basis[:, k], basis[:, k].conj()) for k in range(basis.shape[1])])


def random_hermitian(dim: int, rng: np.random.Generator) -> np.ndarray:
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return 0.5 * (a + dagger(a))
