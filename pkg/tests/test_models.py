import math

import numpy as np
import pytest

from qregret.errors import CutoffTooSmall
from qregret.geometry import geometric_tensor
from qregret.linalg import Povm, projective_povm
from qregret.measurement import classical_fim, regret_report
from qregret.models import (
    FrontierConfig,
    coherent_model,
    coherent_tail_weight,
    gaussian_frontier,
    gaussian_log_density,
    gaussian_measurement_fim,
    projective_qubit_povm,
    pure_qubit_family,
    qubit_model,
    real_pure_family,
    trace_frontier,
    vidrighin_check,
    vidrighin_sum,
)
from qregret.linalg import random_povm

from oracles import COHERENT_Q, fd_fim, gaussian_cov, gaussian_fim


def test_coherent_vacuum():
    cm = coherent_model()
    psi = cm.psi([0.0, 0.0])
    assert abs(psi[0] - 1) <= 1e-15 and np.max(np.abs(psi[1:])) == 0
    assert np.max(np.abs(cm.geometry([0, 0]).q_tensor - COHERENT_Q)) <= 1e-6


def test_coherent_fd_matches_analytic():
    cm = coherent_model()
    for theta in ([0.5, 0.3], [-0.7, 0.6]):
        for a, b in zip(cm.dpsi(theta), cm.fd_dpsi(theta)):
            assert np.max(np.abs(a - b)) <= 1e-6


def test_coherent_cutoff_convergence():
    a = coherent_model(40).geometry([1.0, 0.0]).q_tensor
    b = coherent_model(60).geometry([1.0, 0.0]).q_tensor
    assert np.max(np.abs(a - b)) <= 1e-8
    r40 = regret_report(coherent_model(40).geometry([0.6, 0.8]), gaussian_measurement_fim(0.3))
    r60 = regret_report(coherent_model(60).geometry([0.6, 0.8]), gaussian_measurement_fim(0.3))
    assert np.max(np.abs(r40.delta - r60.delta)) <= 1e-8


def test_coherent_cutoff_errors():
    with pytest.raises(CutoffTooSmall):
        coherent_model(10)
    cm = coherent_model(20)
    assert coherent_tail_weight(1.0, 20) < 1e-12
    with pytest.raises(CutoffTooSmall):
        cm.psi([4.0, 0.0])


def test_gaussian_fim_closed_form():
    assert np.array_equal(gaussian_measurement_fim(0.0), np.diag([2.0, 2.0]))
    for r in np.linspace(-3, 3, 201):
        f = gaussian_measurement_fim(r)
        assert abs(np.trace(f) - 4) <= 1e-12
        assert np.allclose(f, gaussian_fim(r), atol=1e-12)
        g = gaussian_measurement_fim(-r)
        assert abs(f[0, 0] - g[1, 1]) <= 1e-12 and abs(f[1, 1] - g[0, 0]) <= 1e-12
    f5 = gaussian_measurement_fim(5.0)
    assert f5[1, 1] > 3.99 and f5[0, 0] < 0.01
    assert np.allclose(gaussian_measurement_fim(0.5), np.diag([4 / (math.e + 1), 4 * math.e / (math.e + 1)]), atol=1e-6)


def _gh_2d(n=40):
    x, w = np.polynomial.hermite.hermgauss(n)
    return x, w


@pytest.mark.parametrize("r", [-1.0, 0.0, 0.5, 1.3])
def test_gaussian_density_quadrature(r):
    theta = np.array([0.4, -0.7])
    sd = np.sqrt(np.diag(gaussian_cov(r)))
    x, w = _gh_2d()
    # substitute xi = theta1 + sqrt(2) sd1 u to absorb the Gaussian weight
    u, v = np.meshgrid(x, x, indexing="ij")
    wu, wv = np.meshgrid(w, w, indexing="ij")
    xi = theta[0] + math.sqrt(2) * sd[0] * u
    eta = theta[1] + math.sqrt(2) * sd[1] * v
    jac = 2 * sd[0] * sd[1]
    dens = np.exp(gaussian_log_density(r, theta, xi, eta) + u ** 2 + v ** 2)
    weights = wu * wv * jac * dens
    assert abs(weights.sum() - 1) <= 1e-9
    assert abs((weights * xi).sum() - theta[0]) <= 1e-9
    # FD Fisher information of the density against the closed form
    pts = np.stack([xi.ravel(), eta.ravel()])
    f = fd_fim(lambda t, p: gaussian_log_density(r, t, p[0], p[1]), theta, pts, weights.ravel())
    assert np.max(np.abs(f - gaussian_measurement_fim(r))) <= 1e-6


def test_gaussian_density_origin():
    assert abs(gaussian_log_density(0.0, (0, 0), 0.0, 0.0) - math.log(1 / math.pi)) <= 1e-14


def test_qubit_closed_forms_grid(qubit):
    from oracles import qubit_qfim, qubit_sld1, qubit_sld2

    for t1 in np.linspace(0, 2 * math.pi, 10, endpoint=False):
        for t2 in np.linspace(0.1, 1.5, 10):
            g = geometric_tensor(qubit, [t1, t2])
            assert np.max(np.abs(g.slds[0] - qubit_sld1(t1, t2))) <= 1e-9
            assert np.max(np.abs(g.slds[1] - qubit_sld2(t1, t2))) <= 1e-9
            assert np.max(np.abs(g.qfim - qubit_qfim(t2))) <= 1e-9
            assert g.c[0, 1] <= 1e-9 and abs(g.c_tilde[0, 1] - 1) <= 1e-9


def test_qubit_general_chi_grid():
    m = qubit_model(math.pi / 4)
    theta = [0.3, 0.5]
    g = geometric_tensor(m, theta)
    assert 0 < g.c_tilde[0, 1] < 1
    for vt in np.linspace(0, math.pi, 16):
        for ph in np.linspace(0, 2 * math.pi, 16, endpoint=False):
            f = classical_fim(projective_qubit_povm(vt, ph), m, theta)
            for kind in ("plain_c", "tilde_c"):
                assert regret_report(g, f, kind).min_margin >= -1e-8


def test_qubit_delta_sum_invariant(qubit):
    theta = [0.3, 0.5]
    g = geometric_tensor(qubit, theta)
    for vt in np.linspace(0, math.pi, 24):
        for ph in np.linspace(0, 2 * math.pi, 24, endpoint=False):
            rep = regret_report(g, classical_fim(projective_qubit_povm(vt, ph), qubit, theta))
            assert rep.delta[0] ** 2 + rep.delta[1] ** 2 >= 1 - 1e-8


def test_vidrighin_examples(qubit):
    theta = [0.3, 0.5]
    g = geometric_tensor(qubit, theta)
    # equatorial Bloch vector: sigma_z statistics do not move at all
    z_sum = vidrighin_sum(g, classical_fim(projective_povm(np.eye(2)), qubit, theta))
    assert z_sum < 1
    radial = projective_qubit_povm(math.pi / 2, theta[0])
    r_sum = vidrighin_sum(g, classical_fim(radial, qubit, theta))
    assert abs(r_sum - 1) <= 1e-9  # every equatorial basis lands exactly on the bound
    assert vidrighin_sum(g, classical_fim(Povm([np.eye(2) / 2] * 2), qubit, theta)) == 0
    res = vidrighin_check(qubit, theta, grid=16, n_random=16)
    assert res.max_sum <= 1 + 1e-8
    assert res.min_delta_sq_sum >= 1 - 1e-8
    assert res.n_evaluated > 0


def test_pure_qubit_frontier_is_tight():
    res = trace_frontier(pure_qubit_family(), [math.pi / 3, 0.2], FrontierConfig(grid=24, n_starts=3, max_evals=100))
    assert res.min_margin <= 1e-3
    assert res.min_margin >= -1e-8
    assert all(p.margin >= -1e-8 for p in res.points)
    assert len(res.distinct_tight()) >= 10
    assert res.hull and all(a.delta1 <= b.delta1 for a, b in zip(res.hull, res.hull[1:]))


def test_compatible_family_single_measurement():
    fam = real_pure_family()
    theta = [0.4, 0.3]
    g = fam.geometry(theta)
    assert np.max(np.abs(g.c)) <= 1e-9 and np.max(np.abs(g.c_tilde)) <= 1e-8
    # any real orthonormal basis extracts everything from a real family
    basis, _ = np.linalg.qr(np.random.default_rng(3).standard_normal((3, 3)))
    rep = regret_report(g, classical_fim(projective_povm(basis), fam.as_parametric(), theta))
    assert np.max(rep.delta) <= 1e-6


def test_frontier_on_qutrit_pure_family():
    res = trace_frontier(real_pure_family(), [0.4, 0.3], FrontierConfig(grid=8, n_starts=2, max_evals=60, n_random=4))
    assert res.min_margin >= -1e-8


def test_gaussian_frontier_on_circle():
    pts = gaussian_frontier(np.linspace(-3, 3, 61))
    for p in pts:
        assert abs(p.delta1 ** 2 + p.delta2 ** 2 - 1) <= 1e-9
        assert abs(p.margin) <= 1e-9


def test_random_povms_respect_vidrighin(qubit):
    theta = [1.1, 0.8]
    g = geometric_tensor(qubit, theta)
    for seed in range(30):
        assert vidrighin_sum(g, classical_fim(random_povm(2, 3, seed), qubit, theta)) <= 1 + 1e-8
