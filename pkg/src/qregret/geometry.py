"""SLD operators, the quantum geometric tensor and incompatibility coefficients."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSupport, NotNormalized
from .linalg import (
    ParametricModel,
    commutator,
    dagger,
    hermitian_eig,
    trace_norm,
)

KERNEL_TOL = 1e-10
KERNEL_WEIGHT_TOL = 1e-6
DEGENERATE_QFIM_TOL = 1e-14


@dataclass(frozen=True, eq=False)
class SldSet:
    operators: tuple
    theta: np.ndarray

    def __len__(self):
        return len(self.operators)

    def __getitem__(self, j):
        return self.operators[j]


@dataclass(frozen=True, eq=False)
class QuantumGeometry:
    """Geometric data of a model at one parameter point.

    ``degenerate[j, k]`` is True where ``qfim_jj * qfim_kk`` vanishes; the
    coefficients there are reported as 0.
    """

    q_tensor: np.ndarray
    qfim: np.ndarray
    c: np.ndarray
    c_tilde: np.ndarray
    slds: SldSet
    rho: np.ndarray
    degenerate: np.ndarray

    @property
    def n_params(self) -> int:
        return self.qfim.shape[0]

    @property
    def theta(self) -> np.ndarray:
        return self.slds.theta

    def coefficient(self, kind: str) -> np.ndarray:
        if kind == "plain_c":
            return self.c
        if kind == "tilde_c":
            return self.c_tilde
        raise ValueError(f"unknown coefficient kind {kind!r}")


def solve_sld(rho: np.ndarray, drho: np.ndarray, kernel_tol: float = KERNEL_TOL) -> np.ndarray:
    """Solve ``(L rho + rho L)/2 = drho`` in the eigenbasis of ``rho``.

    Blocks with ``lambda_u + lambda_v <= kernel_tol`` are set to zero; if the
    derivative carries weight there the equation has no solution.
    """
    lam, vecs = hermitian_eig(rho)
    d = dagger(vecs) @ drho @ vecs
    denom = lam[:, None] + lam[None, :]
    skipped = denom <= kernel_tol
    if np.any(skipped):
        weight = float(np.max(np.abs(d[skipped])))
        if weight > KERNEL_WEIGHT_TOL:
            raise DegenerateSupport(f"derivative has weight {weight:.3e} on the kernel of rho")
    coeff = np.where(skipped, 0.0, 2.0 / np.where(skipped, 1.0, denom))
    sld = vecs @ (coeff * d) @ dagger(vecs)
    return 0.5 * (sld + dagger(sld))


def sld_at(model: ParametricModel, theta) -> SldSet:
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    rho = model.rho(theta)
    ops = tuple(solve_sld(rho, d) for d in model.derivatives(theta))
    return SldSet(ops, theta.copy())


def sld_residual(rho: np.ndarray, sld: np.ndarray, drho: np.ndarray) -> float:
    return float(np.max(np.abs(0.5 * (sld @ rho + rho @ sld) - drho)))


def support_sqrt(rho: np.ndarray) -> np.ndarray:
    """``sqrt(rho)`` with eigenvalues inside the SLD kernel threshold set to 0."""
    lam, vecs = hermitian_eig(rho)
    lam = np.where(lam <= KERNEL_TOL / 2, 0.0, lam)
    return (vecs * np.sqrt(lam)) @ dagger(vecs)


def _coefficients(q: np.ndarray, rho: np.ndarray, slds) -> tuple:
    n = q.shape[0]
    qfim = q.real.copy()
    diag = np.diag(qfim)
    norm = np.sqrt(np.clip(np.outer(diag, diag), 0.0, None))
    degenerate = np.outer(diag, diag) <= DEGENERATE_QFIM_TOL
    c = np.zeros((n, n))
    c_tilde = np.zeros((n, n))
    root = support_sqrt(rho)
    for j in range(n):
        for k in range(j + 1, n):
            if degenerate[j, k]:
                continue
            c[j, k] = c[k, j] = abs(q[j, k].imag) / norm[j, k]
            x = root @ commutator(slds[j], slds[k]) @ root
            c_tilde[j, k] = c_tilde[k, j] = trace_norm(x) / (2.0 * norm[j, k])
    return qfim, c, c_tilde, degenerate


def geometry_from_slds(rho: np.ndarray, slds: SldSet) -> QuantumGeometry:
    n = len(slds)
    q = np.empty((n, n), dtype=complex)
    for j in range(n):
        for k in range(n):
            q[j, k] = np.trace(slds[j] @ slds[k] @ rho)
    q = 0.5 * (q + dagger(q))
    qfim, c, c_tilde, degenerate = _coefficients(q, rho, slds)
    return QuantumGeometry(q, qfim, c, c_tilde, slds, np.array(rho), degenerate)


def geometric_tensor(model: ParametricModel, theta) -> QuantumGeometry:
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    rho = model.rho(theta)
    return geometry_from_slds(rho, sld_at(model, theta))


def pure_state_tensor(psi, dpsi, theta=None) -> QuantumGeometry:
    """Geometric tensor of a pure-state family from ``psi`` and its derivatives.

    Uses ``Q_jk = 4 <d_j psi| (1 - |psi><psi|) |d_k psi>``; the SLDs returned
    are ``2 (|d_j psi><psi| + |psi><d_j psi|)``.
    """
    psi = np.asarray(psi, dtype=complex)
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > 1e-10:
        raise NotNormalized(f"|psi| = {norm:.12f}")
    dpsi = [np.asarray(v, dtype=complex) for v in dpsi]
    n = len(dpsi)
    proj = [v - psi * np.vdot(psi, v) for v in dpsi]
    q = np.empty((n, n), dtype=complex)
    for j in range(n):
        for k in range(n):
            q[j, k] = 4.0 * np.vdot(dpsi[j], proj[k])
    q = 0.5 * (q + dagger(q))
    rho = np.outer(psi, psi.conj())
    ops = []
    for v in dpsi:
        op = 2.0 * (np.outer(v, psi.conj()) + np.outer(psi, v.conj()))
        ops.append(0.5 * (op + dagger(op)))
    theta = np.zeros(n) if theta is None else np.atleast_1d(np.asarray(theta, dtype=float))
    slds = SldSet(tuple(ops), theta)
    qfim, c, c_tilde, degenerate = _coefficients(q, rho, slds)
    return QuantumGeometry(q, qfim, c, c_tilde, slds, rho, degenerate)
