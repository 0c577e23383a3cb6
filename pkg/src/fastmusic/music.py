"""scikit-learn style front end for the subspace estimators.

Data follows the scikit-learn layout: ``X`` has one row per snapshot and
one column per antenna, i.e. ``X = Y.T`` for the ``M x N`` signal matrix
``Y`` used elsewhere in the package.

>>> est = MUSIC(n_targets=2, method="fast1", oversampling=6, random_state=0)
>>> est.fit(X).predict_angles()                      # doctest: +SKIP
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_count, check_hermitian, check_matrix
from .estimators import (
    block_lanczos_subspace,
    exact_signal_subspace,
    fast_music_1,
    fast_music_2,
    fft_angle_spectrum,
    matrix_inverse_noise_projector,
    propagator_subspace,
)
from .exceptions import ParameterError
from .scene import spatial_covariance
from .spectrum import AngleGrid, extract_peaks, music_spectrum

__all__ = ["MUSIC"]

_SUBSPACE_METHODS = ("exact", "fast1", "fast2", "lanczos", "propagator")
_ALL_METHODS = _SUBSPACE_METHODS + ("matrix_inverse", "fft")


class MUSIC(TransformerMixin, BaseEstimator):
    """Angle-of-arrival estimation with MUSIC and its fast approximations.

    Parameters
    ----------
    n_targets : int, default=1
        Signal-subspace dimension ``K``.
    method : {"exact", "fast1", "fast2", "lanczos", "propagator", \
"matrix_inverse", "fft"}, default="exact"
        How the subspace (or spectrum) is obtained.
    oversampling : int, optional
        Sketch width ``p`` for ``fast1``/``fast2``. Defaults to
        ``n_targets + 1`` for ``fast1`` and ``n_targets`` for ``fast2``.
    n_iter : int, default=2
        Power iterations ``t`` for ``fast2``.
    grid_size : int, default=1801
        Number of scan angles.
    angle_range : tuple of float, default=(0, pi)
        Scan interval in radians.
    spacing : float, default=0.5
        Element spacing in wavelengths.
    min_separation : int, default=3
        Minimum distance between reported peaks, in grid cells.
    input : {"signal", "covariance"}, default="signal"
        Whether ``fit`` receives snapshots or a precomputed covariance.
    random_state : int, optional
        Seed for the randomized methods.

    Attributes
    ----------
    covariance_ : ndarray, shape (M, M)
    subspace_ : SubspaceEstimate or NoiseProjectorEstimate or None
    components_ : ndarray, shape (K, M)
        Conjugated basis rows, so ``transform(X) = X @ components_.T``.
    eigenvalues_ : ndarray, shape (K,)
    fit_time_ : float
        Seconds spent inside the estimator body.
    spectrum_ : PseudoSpectrum
    """

    def __init__(
        self,
        n_targets=1,
        method="exact",
        oversampling=None,
        n_iter=2,
        grid_size=1801,
        angle_range=(0.0, np.pi),
        spacing=0.5,
        min_separation=3,
        input="signal",
        random_state=None,
    ):
        self.n_targets = n_targets
        self.method = method
        self.oversampling = oversampling
        self.n_iter = n_iter
        self.grid_size = grid_size
        self.angle_range = angle_range
        self.spacing = spacing
        self.min_separation = min_separation
        self.input = input
        self.random_state = random_state

    def _grid(self):
        return AngleGrid(self.grid_size, float(self.angle_range[0]), float(self.angle_range[1]))

    def _seed(self):
        return 0 if self.random_state is None else self.random_state

    def fit(self, X, y=None):
        """Estimate the signal subspace and the pseudo-spectrum."""
        if self.method not in _ALL_METHODS:
            raise ParameterError(f"method must be one of {_ALL_METHODS}, got {self.method!r}")
        if self.input not in ("signal", "covariance"):
            raise ParameterError("input must be 'signal' or 'covariance'")
        X = check_matrix(X, "X")
        K = check_count(self.n_targets, "n_targets")
        if self.input == "signal":
            Y = X.T
            S = spatial_covariance(Y)
        else:
            if self.method in ("propagator", "fft"):
                raise ParameterError(f"method {self.method!r} needs snapshots, not a covariance")
            Y = None
            S = check_hermitian(X)
        M = S.shape[0]
        grid = self._grid()
        self.covariance_ = S
        self.n_antennas_ = M
        self.subspace_ = None
        self.components_ = None
        self.eigenvalues_ = None

        m = self.method
        if m == "exact":
            est = exact_signal_subspace(S, K)
        elif m == "fast1":
            p = K + 1 if self.oversampling is None else self.oversampling
            est = fast_music_1(S, K, min(p, M), self._seed())
        elif m == "fast2":
            est = fast_music_2(S, K, self.oversampling, self.n_iter, self._seed())
        elif m == "lanczos":
            est = block_lanczos_subspace(S, K, seed=self._seed())
        elif m == "propagator":
            est = propagator_subspace(Y, K)
        elif m == "matrix_inverse":
            est = matrix_inverse_noise_projector(S, K)
        else:
            est = None

        if m == "fft":
            self.fit_time_ = 0.0
            self.spectrum_ = fft_angle_spectrum(Y, max(4 * M, 1024), grid, d=self.spacing)
        elif m == "matrix_inverse":
            self.subspace_ = est
            self.fit_time_ = est.cost
            self.spectrum_ = est.spectrum(grid, d=self.spacing)
        else:
            self.subspace_ = est
            self.components_ = est.basis.conj().T
            self.eigenvalues_ = est.eigenvalues
            self.fit_time_ = est.cost
            self.spectrum_ = music_spectrum(est, grid, d=self.spacing)
        return self

    def transform(self, X):
        """Project snapshots onto the signal subspace, shape ``(n_snapshots, K)``."""
        check_is_fitted(self, "spectrum_")
        if self.components_ is None:
            raise ParameterError(f"method {self.method!r} does not produce a subspace basis")
        X = check_matrix(X, "X")
        if X.shape[1] != self.n_antennas_:
            raise ParameterError(f"expected {self.n_antennas_} antennas, got {X.shape[1]}")
        return X @ self.components_.T

    def pseudo_spectrum(self, grid=None):
        """Spectrum on ``grid`` (the fitted grid by default)."""
        check_is_fitted(self, "spectrum_")
        if grid is None or grid == self.spectrum_.grid:
            return self.spectrum_
        if self.method == "matrix_inverse":
            return self.subspace_.spectrum(grid, d=self.spacing)
        if self.method == "fft":
            raise ParameterError("the fft spectrum is only available on the fitted grid")
        return music_spectrum(self.subspace_, grid, d=self.spacing)

    def find_peaks(self):
        check_is_fitted(self, "spectrum_")
        return extract_peaks(self.spectrum_, check_count(self.n_targets, "n_targets"), self.min_separation)

    def predict_angles(self):
        """Estimated target angles in radians, ascending."""
        return self.find_peaks().angles

    def fit_predict(self, X, y=None):
        return self.fit(X).predict_angles()
