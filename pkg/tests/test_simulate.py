import math

import numpy as np
import pytest

from qregret.errors import FlatLikelihood
from qregret.linalg import Povm, projective_povm
from qregret.measurement import classical_fim
from qregret.models import GaussianJointMeasurement, coherent_model, gaussian_measurement_fim, qubit_model
from qregret.simulate import (
    PovmExperiment,
    attainment_report,
    estimate,
    estimate_gaussian,
    estimate_povm,
    observed_information,
    sample_gaussian_outcomes,
    sample_povm_outcomes,
)

from oracles import gaussian_cov

Z = projective_povm(np.eye(2))


def test_counts_examples(qubit):
    const = qubit_model(0.0)  # Bloch vector along z: sigma_z outcome is deterministic at theta2 = 0
    counts = sample_povm_outcomes(Z, const, [0.3, 0.0], 1000, 1)
    assert list(counts) == [1000, 0]
    nu = 100_000
    c = sample_povm_outcomes(Z, qubit, [0.3, 0.5], nu, 2)
    assert np.all(np.abs(c - nu / 2) <= 5 * math.sqrt(nu / 4))
    assert np.array_equal(c, sample_povm_outcomes(Z, qubit, [0.3, 0.5], nu, 2))


@pytest.mark.parametrize("r", [0.0, 0.8])
def test_gaussian_samples(r):
    nu = 100_000
    gm = GaussianJointMeasurement(r, (0.3, -0.2))
    s = sample_gaussian_outcomes(gm, nu, 4)
    assert s.shape == (nu, 2)
    var = np.diag(gaussian_cov(r))
    assert np.all(np.abs(s.mean(axis=0) - gm.theta) <= 5 * np.sqrt(var / nu))
    assert np.all(np.abs(s.var(axis=0) / var - 1) <= 0.05)
    assert np.array_equal(s, sample_gaussian_outcomes(gm, nu, 4))


@pytest.mark.parametrize("r", [0.0, 0.8])
def test_gaussian_estimator_crb(r):
    # 5% relative tolerance; 8000 trials put it at ~3 Monte-Carlo sigma
    nu = 10_000
    run = estimate(GaussianJointMeasurement(r), nu, 8000, 21)
    target = np.diag(np.linalg.inv(gaussian_measurement_fim(r)))
    assert np.all(np.abs(nu * np.diag(run.empirical_cov) / target - 1) <= 0.05)
    assert run.metadata["rng"] == "PCG64"
    # unbiasedness at desk scale
    assert np.all(np.abs(run.estimates.mean(axis=0)) <= 3 * run.mean_standard_errors())


def test_qubit_sigma_z_diffusion_slice():
    # at chi = pi/2 sigma_z carries no information; tilt the Bloch vector
    m = qubit_model(math.pi / 4).sliced([1], [0.3, 0.5])
    f = classical_fim(Z, m, [0.5])[0, 0]
    nu = 10_000
    run = estimate_povm(PovmExperiment(Z, m, (0.5,)), nu, 2000, 7, [(0.05, 1.2, 116)])
    assert abs(nu * run.empirical_cov[0, 0] * f - 1) <= 0.10


def test_flat_likelihood(qubit):
    unin = Povm([np.eye(2) / 2] * 2)
    with pytest.raises(FlatLikelihood):
        estimate_povm(PovmExperiment(unin, qubit, (0.3, 0.5)), 100, 4, 0, [(0, 1, 5), (0.1, 1, 5)])


def test_trials_independent_of_worker_count(monkeypatch):
    gm = GaussianJointMeasurement(0.2)
    a = estimate_gaussian(gm, 500, 20, 9)
    monkeypatch.setenv("QREGRET_THREADS", "3")
    b = estimate_gaussian(gm, 500, 20, 9)
    assert np.array_equal(a.estimates, b.estimates)


def test_observed_information_converges():
    r = 0.5
    gm = GaussianJointMeasurement(r, (0.1, 0.2))
    s = sample_gaussian_outcomes(gm, 100_000, 8)
    info = observed_information(r, s, s.mean(axis=0))
    f = gaussian_measurement_fim(r)
    assert np.all(np.abs(np.diag(info) / np.diag(f) - 1) <= 0.10)


def test_attainment_vacuum():
    g = coherent_model().geometry([0.0, 0.0])
    run = estimate_gaussian(GaussianJointMeasurement(0.0), 10_000, 500, 17)
    rep = attainment_report(run, g, coherent=True)
    assert rep.coherent_on_boundary(3.0)
    assert rep.error_bound_holds(3.0)


def test_noise_inflated_estimator_is_interior():
    g = coherent_model().geometry([0.0, 0.0])
    nu = 10_000
    run = estimate_gaussian(GaussianJointMeasurement(0.0), nu, 500, 17, extra_noise=1 / math.sqrt(nu))
    rep = attainment_report(run, g, coherent=True)
    assert rep.coherent_margin > 3 * rep.coherent_standard_error
    assert rep.error_margins[0] > 3 * rep.margin_standard_errors[0]
