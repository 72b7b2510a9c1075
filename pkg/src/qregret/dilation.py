"""Measurement channel, its unitary dilation, and the regret / measurement-error bridge.

Tensor factors are ordered (system, register, ancilla register). A basis
state ``|s>|x>|a>`` has flat index ``s*m*m + x*m + a`` where ``m`` is the
number of outcomes; the ancilla input state ``|0>|0>`` is index 0 of both
registers.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimMismatch, Mismatch, TooLarge
from .geometry import QuantumGeometry, SldSet
from .linalg import ParametricModel, Povm, dagger, matrix_sqrt_psd, max_abs
from .measurement import _born, classical_fim, fim_from_probabilities, outcome_derivatives

MAX_TOTAL_DIM = 64


@dataclass(frozen=True, eq=False)
class MeasurementChannel:
    povm: Povm

    @property
    def out_dim(self) -> int:
        return self.povm.n_outcomes

    @property
    def labels(self) -> tuple:
        return self.povm.labels

    def apply(self, rho) -> np.ndarray:
        p = _born(self.povm.effects, np.asarray(rho, dtype=complex))
        return np.diag(p).astype(complex)


def channel_sld(channel: MeasurementChannel, model: ParametricModel, theta) -> SldSet:
    """Diagonal SLDs of ``Phi(rho_theta)``: entries ``d_j ln p_x``."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    p = _born(channel.povm.effects, model.rho(theta))
    dp = outcome_derivatives(channel.povm, model, theta)
    fim_from_probabilities(p, dp)  # raises SingularOutcome
    safe = np.where(p > 1e-12, p, 1.0)
    logd = np.where(p > 1e-12, dp / safe, 0.0)
    return SldSet(tuple(np.diag(row).astype(complex) for row in logd), theta)


@dataclass(frozen=True, eq=False)
class Dilation:
    channel: MeasurementChannel
    isometry: np.ndarray
    unitary: np.ndarray

    @property
    def sys_dim(self) -> int:
        return self.channel.povm.dim

    @property
    def out_dim(self) -> int:
        return self.channel.out_dim

    @property
    def total_dim(self) -> int:
        return self.sys_dim * self.out_dim ** 2

    def input_indices(self) -> np.ndarray:
        return np.arange(self.sys_dim) * self.out_dim ** 2

    def embed_state(self, rho) -> np.ndarray:
        """``rho (x) |0><0| (x) |0><0|`` on the full space."""
        out = np.zeros((self.total_dim, self.total_dim), dtype=complex)
        idx = self.input_indices()
        out[np.ix_(idx, idx)] = rho
        return out

    def lift_register(self, op: np.ndarray) -> np.ndarray:
        """``1_s (x) op (x) 1_r``."""
        return np.kron(np.kron(np.eye(self.sys_dim), op), np.eye(self.out_dim))

    def lift_system(self, op: np.ndarray) -> np.ndarray:
        """``op (x) 1_r (x) 1_r``."""
        return np.kron(op, np.eye(self.out_dim ** 2))

    def heisenberg(self, register_op: np.ndarray) -> np.ndarray:
        """``U^dag (1_s (x) op (x) 1_r) U``."""
        u = self.unitary
        return dagger(u) @ self.lift_register(register_op) @ u

    def channel_output(self, rho) -> np.ndarray:
        """Partial trace over factors 1 and 3 of ``U (rho (x) |0><0| (x) |0><0|) U^dag``."""
        d, m = self.sys_dim, self.out_dim
        full = self.unitary @ self.embed_state(rho) @ dagger(self.unitary)
        t = full.reshape(d, m, m, d, m, m)
        return np.einsum("sxasya->xy", t)


def isometry_of(povm: Povm) -> np.ndarray:
    """``V = sum_x sqrt(M_x) (x) |x> (x) |x>`` as a ``(d m^2, d)`` matrix."""
    d, m = povm.dim, povm.n_outcomes
    v = np.zeros((d, m, m, d), dtype=complex)
    for x in range(m):
        v[:, x, x, :] = matrix_sqrt_psd(povm.effects[x])
    return v.reshape(d * m * m, d)


def _complete(columns: np.ndarray, candidates: np.ndarray) -> np.ndarray:
    """Extend orthonormal ``columns`` to a basis by Gram-Schmidt over ``candidates``."""
    n = columns.shape[0]
    basis = [columns[:, k] for k in range(columns.shape[1])]
    for c in candidates.T:
        if len(basis) == n:
            break
        w = c.astype(complex)
        for _ in range(2):
            for b in basis:
                w = w - b * np.vdot(b, w)
        nrm = np.linalg.norm(w)
        if nrm > 1e-8:
            basis.append(w / nrm)
    if len(basis) != n:
        raise RuntimeError("basis completion failed")
    return np.column_stack(basis[columns.shape[1]:])


def build_dilation(channel: MeasurementChannel, completion: str = "standard", seed: int = 0) -> Dilation:
    """Unitary dilation of the measurement channel.

    ``completion="standard"`` orthonormalizes standard basis vectors against
    the isometry's columns; ``"random"`` uses seeded Gaussian vectors, which
    gives a different but equally valid unitary.
    """
    povm = channel.povm
    d, m = povm.dim, povm.n_outcomes
    total = d * m * m
    if total > MAX_TOTAL_DIM:
        raise TooLarge(f"d*m^2 = {total} exceeds {MAX_TOTAL_DIM}")
    v = isometry_of(povm)
    if completion == "standard":
        candidates = np.eye(total, dtype=complex)
    elif completion == "random":
        rng = np.random.default_rng(seed)
        candidates = rng.standard_normal((total, 2 * total)) + 1j * rng.standard_normal((total, 2 * total))
    else:
        raise ValueError(f"unknown completion {completion!r}")
    rest = _complete(v, candidates)
    u = np.zeros((total, total), dtype=complex)
    inputs = np.arange(d) * m * m
    others = np.setdiff1d(np.arange(total), inputs)
    u[:, inputs] = v
    u[:, others] = rest
    return Dilation(channel, v, u)


def dilation_residuals(dil: Dilation, rho=None) -> dict:
    """Numerical checks of the dilation's defining properties."""
    d = dil.sys_dim
    v, u = dil.isometry, dil.unitary
    out = {
        "isometry": max_abs(dagger(v) @ v - np.eye(d)),
        "unitary": max_abs(dagger(u) @ u - np.eye(dil.total_dim)),
        "input_slice": max_abs(u[:, dil.input_indices()] - v),
    }
    if rho is not None:
        out["channel"] = max_abs(dil.channel_output(rho) - dil.channel.apply(rho))
    return out


@dataclass(frozen=True, eq=False)
class BridgeResult:
    regret_direct: np.ndarray
    regret_via_error: np.ndarray
    max_abs_gap: float
    commutator_norm: float


def dilated_observables(dil: Dilation, register_slds: SldSet) -> list:
    return [dil.heisenberg(op) for op in register_slds]


def regret_via_error(dil: Dilation, rho: np.ndarray, system_slds, register_slds) -> np.ndarray:
    """``R_jk = Re tr[N_j N_k rho_total]`` with ``N_j = U^dag(1 (x) L~_j (x) 1)U - L_j (x) 1 (x) 1``."""
    total = dil.embed_state(rho)
    big = dilated_observables(dil, register_slds)
    ns = [b - dil.lift_system(l) for b, l in zip(big, system_slds)]
    n = len(ns)
    r = np.empty((n, n))
    for j in range(n):
        for k in range(n):
            r[j, k] = np.trace(ns[j] @ ns[k] @ total).real
    return r


def bridge_check(dil: Dilation, model: ParametricModel, theta, geom: QuantumGeometry,
                 povm: Povm | None = None) -> BridgeResult:
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if povm is not None and not povm.same_as(dil.channel.povm):
        raise Mismatch("dilation was built for a different POVM")
    if geom.theta.shape != theta.shape or max_abs(geom.theta - theta) > 1e-12:
        raise Mismatch("geometry evaluated at a different parameter point")
    if geom.rho.shape[0] != dil.sys_dim:
        raise DimMismatch("geometry and dilation act on different systems")
    reg = channel_sld(dil.channel, model, theta)
    direct = geom.qfim - classical_fim(dil.channel.povm, model, theta)
    via = regret_via_error(dil, geom.rho, geom.slds, reg)
    big = dilated_observables(dil, reg)
    comm = 0.0
    for j in range(len(big)):
        for k in range(j + 1, len(big)):
            comm = max(comm, max_abs(big[j] @ big[k] - big[k] @ big[j]))
    return BridgeResult(direct, via, max_abs(direct - via), comm)


def ozawa_error(dil: Dilation, ideal: np.ndarray, register_obs: np.ndarray, rho) -> float:
    """Ozawa error of approximating ``ideal`` by the dilated register observable."""
    rho = np.asarray(getattr(rho, "mat", rho), dtype=complex)
    ideal = np.asarray(ideal, dtype=complex)
    register_obs = np.asarray(register_obs, dtype=complex)
    if ideal.shape != (dil.sys_dim, dil.sys_dim) or rho.shape != ideal.shape:
        raise DimMismatch("ideal observable / state do not match the system dimension")
    if register_obs.shape != (dil.out_dim, dil.out_dim):
        raise DimMismatch("register observable does not match the register dimension")
    x = dil.heisenberg(register_obs) - dil.lift_system(ideal)
    val = np.trace(x @ x @ dil.embed_state(rho)).real
    return float(np.sqrt(max(val, 0.0)))


def branciard_margins(geom: QuantumGeometry, regret: np.ndarray) -> list:
    """Branciard's inequality with errors ``sqrt(R_jj)`` and spreads ``sqrt(qfim_jj)``;
    returns ``lhs - rhs`` for every parameter pair."""
    n = geom.n_params
    out = []
    for j in range(n):
        for k in range(j + 1, n):
            ea2, eb2 = max(regret[j, j], 0.0), max(regret[k, k], 0.0)
            sa2, sb2 = geom.qfim[j, j], geom.qfim[k, k]
            cab = abs(geom.q_tensor[j, k].imag)
            lhs = ea2 * sb2 + eb2 * sa2 + 2.0 * np.sqrt(max(sa2 * sb2 - cab * cab, 0.0)) * np.sqrt(ea2 * eb2)
            out.append(float(lhs - cab * cab))
    return out
