"""Information-matrix estimators and the deterministic fOU reference value."""

import numpy as np
import pytest

from fraclan.errors import (
    NotPositiveDefiniteError,
    QuadratureConvergenceError,
    TailToleranceError,
)
from fraclan.gamma import (
    GammaEstimate,
    GammaMethod,
    fou_stationary_covariance,
    fou_stationary_variance,
    gamma_ergodic,
    gamma_fou_reference,
    gamma_stationary_quad,
)
from fraclan.grids import Hurst
from fraclan.rng import replica_stream
from fraclan.sde import drift_by_name

H7 = Hurst(0.7)

# frozen regression value for theta = 1, H = 0.7 (quadrature, deterministic)
GAMMA_FOU_1 = 0.5042692032766569


def test_reference_value_is_stable():
    g = gamma_fou_reference(1.0, H7)
    print(f"Gamma_fou(theta=1, H=0.7) = {g:.12f}")
    assert g == pytest.approx(GAMMA_FOU_1, rel=1e-6)


def test_reference_monotone_in_theta():
    gs = [gamma_fou_reference(th, H7) for th in (1.0, 2.0, 4.0)]
    print("Gamma over theta 1,2,4:", [f"{g:.5f}" for g in gs])
    assert gs[0] > gs[1] > gs[2] > 0.0
    # empirical halving across a theta doubling at this Hurst index
    assert gs[1] == pytest.approx(gs[0] / 2.0, rel=0.02)


def test_reference_rejects_bad_inputs():
    with pytest.raises(ValueError):
        gamma_fou_reference(-1.0, H7)
    with pytest.raises(QuadratureConvergenceError):
        gamma_fou_reference(1.0, H7, nz=8)


def test_stationary_covariance_at_zero_and_decay():
    rho0 = fou_stationary_variance(1.0, H7)
    assert fou_stationary_covariance(np.array([0.0]), 1.0, H7)[0] == pytest.approx(rho0, rel=1e-6)
    r = np.array([0.5, 2.0, 10.0, 55.0, 80.0, 200.0])
    rho = fou_stationary_covariance(r, 1.0, H7)
    assert np.all(np.diff(rho) < 0) and np.all(rho > 0)
    # long-lag power law rho ~ H(2H-1) theta^-2 r^{2H-2}
    assert rho[-1] == pytest.approx(0.7 * 0.4 * 200.0 ** (-0.6), rel=1e-3)


def test_estimate_container_validation():
    est = GammaEstimate(np.array([[0.5]]), np.array([[0.01]]), GammaMethod.ERGODIC)
    assert est.q == 1 and est.scalar == 0.5
    with pytest.raises(ValueError, match="symmetric"):
        GammaEstimate(np.array([[1.0, 0.3], [0.0, 1.0]]), np.zeros((2, 2)), GammaMethod.ERGODIC)
    with pytest.raises(NotPositiveDefiniteError):
        GammaEstimate(np.array([[1.0, 0.0], [0.0, -0.5]]), np.zeros((2, 2)), GammaMethod.ERGODIC)
    with pytest.raises(ValueError):
        GammaEstimate(np.eye(2), np.zeros((2, 2)), GammaMethod.ERGODIC).scalar


def test_ergodic_estimator_hits_the_reference():
    drift = drift_by_name("fou")
    est = gamma_ergodic(drift, [1.0], H7, tau=50.0, delta=0.05, m_replicas=64,
                        rng=replica_stream(13, 0))
    rel = est.scalar / GAMMA_FOU_1 - 1.0
    print(f"ergodic Gamma = {est.scalar:.5f} (se {est.standard_errors[0,0]:.5f}, "
          f"rel dev {rel:+.2%})")
    assert est.method is GammaMethod.ERGODIC
    assert abs(rel) < 0.15
    assert est.settings["burn_in"] == pytest.approx(20.0)


def test_ergodic_warns_on_short_horizon():
    with pytest.warns(UserWarning, match="short"):
        gamma_ergodic(drift_by_name("fou"), [1.0], H7, tau=10.0, delta=0.1,
                      m_replicas=8, rng=replica_stream(1, 0))


def test_quadrature_estimator_and_tail_guard():
    drift = drift_by_name("fou")
    est = gamma_stationary_quad(drift, [1.0], H7, r_max=60.0, n_r=1200,
                                m_replicas=64, rng=replica_stream(17, 0))
    rel = est.scalar / GAMMA_FOU_1 - 1.0
    print(f"quad Gamma = {est.scalar:.5f} (se {est.standard_errors[0,0]:.5f}, "
          f"rel dev {rel:+.2%})")
    assert abs(rel) < 0.1
    # with r_max well inside the correlation length most of Gamma is
    # extrapolated tail mass, which the guard must refuse
    with pytest.raises(TailToleranceError):
        gamma_stationary_quad(drift, [0.05], H7, r_max=2.0, n_r=100,
                              m_replicas=16, rng=replica_stream(18, 0),
                              tail_tolerance=0.3)


def test_polarization_yields_symmetric_psd_matrix():
    drift = drift_by_name("tanh")
    est = gamma_ergodic(drift, [2.0, 1.0], H7, tau=50.0, delta=0.1, m_replicas=32,
                        rng=replica_stream(19, 0))
    assert est.q == 2
    np.testing.assert_allclose(est.matrix, est.matrix.T, atol=1e-12)
    eigs = np.linalg.eigvalsh(est.matrix)
    print("tanh Gamma eigenvalues:", eigs)
    assert eigs.min() > -1e-8 * eigs.max()
    assert est.standard_errors.shape == (2, 2)
