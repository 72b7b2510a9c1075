"""Closed-form reference values, written independently of the library code."""
import math

import numpy as np

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]])
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
I2 = np.eye(2, dtype=complex)


def qubit_sld1(t1, t2):
    s = math.exp(-t2 * t2)
    return np.array([[0, -1j * s * np.exp(-1j * t1)], [1j * s * np.exp(1j * t1), 0]])


def qubit_sld2(t1, t2):
    e = math.exp(t2 * t2)
    n = math.cos(t1) * SX + math.sin(t1) * SY
    return 2 * t2 * (I2 - e * n) / (e * e - 1)


def qubit_qfim(t2):
    return np.diag([math.exp(-2 * t2 * t2), 4 * t2 * t2 / (math.exp(2 * t2 * t2) - 1)])


def qubit_commutator_trace_norm(t2):
    return 4 * math.exp(-t2 * t2) * t2 / math.sqrt(math.exp(2 * t2 * t2) - 1)


COHERENT_Q = 4 * np.array([[1, 1j], [-1j, 1]])


def gaussian_fim(r):
    e = math.exp(2 * r)
    return np.diag([4 / (e + 1), 4 * e / (e + 1)])


def gaussian_cov(r):
    e = math.exp(2 * r)
    return np.diag([(e + 1) / 4, (e + 1) / (4 * e)])


def svd_trace_norm(m):
    return float(np.linalg.svd(m, compute_uv=False).sum())


def fd_fim(logpdf, theta, xs, weights, h=1e-5):
    """Fisher information of a density by quadrature of FD scores."""
    theta = np.asarray(theta, dtype=float)
    n = theta.size
    scores = []
    for j in range(n):
        e = np.zeros(n)
        e[j] = h
        scores.append((logpdf(theta + e, xs) - logpdf(theta - e, xs)) / (2 * h))
    scores = np.array(scores)
    return np.einsum("iw,jw,w->ij", scores, scores, weights)
