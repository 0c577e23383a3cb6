import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from fastmusic import MUSIC
from fastmusic.exceptions import ParameterError
from fastmusic.scene import FMCWConfig, TargetScene, spatial_covariance, synthesize_beat_signal
from fastmusic.spectrum import AngleGrid


@pytest.fixture(scope="module")
def data():
    cfg = FMCWConfig.automotive(64, 128)
    sc = TargetScene(np.deg2rad([20.0, 45.0]), [0.2 * cfg.max_delay, 0.6 * cfg.max_delay], [3.0, 3.0j])
    Y = synthesize_beat_signal(cfg, sc, 1.0, 0)
    return Y.T, sc


def test_params_roundtrip():
    est = MUSIC(n_targets=3, method="fast2", n_iter=3, random_state=4)
    p = est.get_params()
    assert p["n_targets"] == 3 and p["method"] == "fast2" and p["n_iter"] == 3
    c = clone(est)
    assert c.get_params() == p
    est.set_params(method="fast1", oversampling=8)
    assert est.method == "fast1" and est.oversampling == 8


@pytest.mark.parametrize("method", ["exact", "fast1", "fast2", "lanczos", "propagator", "matrix_inverse", "fft"])
def test_recovers_angles(data, method):
    X, sc = data
    est = MUSIC(n_targets=2, method=method, oversampling=6, angle_range=(0, np.pi / 2), grid_size=901, random_state=0)
    ang = est.fit(X).predict_angles()
    np.testing.assert_allclose(ang, sc.thetas, atol=np.deg2rad(0.5))
    assert est.fit_time_ >= 0


def test_transform_and_attributes(data):
    X, _ = data
    est = MUSIC(n_targets=2).fit(X)
    Z = est.transform(X)
    assert Z.shape == (X.shape[0], 2)
    np.testing.assert_allclose(Z, X @ est.subspace_.basis.conj(), atol=1e-12)
    assert est.components_.shape == (2, 64)
    assert est.n_antennas_ == 64
    np.testing.assert_allclose(est.fit_transform(X), Z)


def test_covariance_input(data):
    X, _ = data
    S = spatial_covariance(X.T)
    a = MUSIC(n_targets=2, input="covariance").fit(S).spectrum_.values
    b = MUSIC(n_targets=2).fit(X).spectrum_.values
    np.testing.assert_allclose(a, b, rtol=1e-8)
    with pytest.raises(ParameterError):
        MUSIC(n_targets=2, method="propagator", input="covariance").fit(S)


def test_pseudo_spectrum_other_grid(data):
    X, _ = data
    est = MUSIC(n_targets=2).fit(X)
    g = AngleGrid(181)
    assert est.pseudo_spectrum(g).grid == g
    assert est.pseudo_spectrum() is est.spectrum_


def test_errors(data):
    X, _ = data
    with pytest.raises(NotFittedError):
        MUSIC().transform(X)
    with pytest.raises(ParameterError):
        MUSIC(method="capon").fit(X)
    with pytest.raises(ParameterError):
        MUSIC(n_targets=0).fit(X)
    est = MUSIC(n_targets=2).fit(X)
    with pytest.raises(ParameterError):
        est.transform(X[:, :10])
    with pytest.raises(ParameterError):
        MUSIC(n_targets=2, method="fft").fit(X).transform(X)


def test_deterministic_fast(data):
    X, _ = data
    a = MUSIC(n_targets=2, method="fast1", random_state=3).fit(X).spectrum_.values
    b = MUSIC(n_targets=2, method="fast1", random_state=3).fit(X).spectrum_.values
    np.testing.assert_array_equal(a, b)
