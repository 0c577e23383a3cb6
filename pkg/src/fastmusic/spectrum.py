"""Pseudo-spectrum evaluation, peak picking and angle-error metrics."""

import functools
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from ._validation import check_count, check_matrix
from .exceptions import ParameterError
from .scene import steering_matrix

__all__ = [
    "AngleGrid",
    "PseudoSpectrum",
    "PeakSet",
    "music_spectrum",
    "normalize_spectrum",
    "extract_peaks",
    "aoa_mse",
    "spectrum_sq_error",
    "MISS_PENALTY",
]

# squared error charged for each target without a matching peak
MISS_PENALTY = (np.pi / 2) ** 2

# relative floor on the MUSIC denominator, in units of M
DENOMINATOR_FLOOR = 1e-12

_CHUNK = 1024


@dataclass(frozen=True)
class AngleGrid:
    """``L`` equispaced angles from ``lo`` to ``hi`` inclusive (radians).

    The default spans ``[0, pi]`` in 0.1 degree cells.
    """

    L: int = 1801
    lo: float = 0.0
    hi: float = np.pi

    def __post_init__(self):
        check_count(self.L, "L", minimum=2)
        if not (np.isfinite(self.lo) and np.isfinite(self.hi) and self.hi > self.lo):
            raise ParameterError("grid needs finite lo < hi")

    @classmethod
    def with_spacing(cls, lo_deg, hi_deg, step_deg=0.1):
        """Grid covering ``[lo_deg, hi_deg]`` with the given spacing in degrees."""
        L = int(round((hi_deg - lo_deg) / step_deg)) + 1
        return cls(L, np.deg2rad(lo_deg), np.deg2rad(hi_deg))

    @property
    def thetas(self):
        return np.linspace(self.lo, self.hi, self.L)

    @property
    def spacing(self):
        return (self.hi - self.lo) / (self.L - 1)

    def nearest_index(self, theta):
        idx = np.rint((np.asarray(theta) - self.lo) / self.spacing).astype(int)
        return np.clip(idx, 0, self.L - 1)


@dataclass
class PseudoSpectrum:
    """Spectrum values sampled on an :class:`AngleGrid`."""

    grid: AngleGrid
    values: np.ndarray
    method: str = "music"
    degenerate: bool = False

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.L,):
            raise ParameterError(f"expected {self.grid.L} values, got shape {v.shape}")
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise ParameterError("spectrum values must be finite and non-negative")
        self.values = v

    @property
    def thetas(self):
        return self.grid.thetas

    def to_csv(self, path_or_buf):
        """Write ``theta_deg,value`` rows."""
        data = np.column_stack([np.rad2deg(self.thetas), self.values])
        np.savetxt(path_or_buf, data, delimiter=",", header="theta_deg,value", comments="", fmt="%.10g")


@dataclass
class PeakSet:
    """Selected spectrum peaks, ordered by angle.

    ``rank[i]`` is the position of peak ``i`` in descending-height order.
    ``baseline`` is the largest spectrum value outside every peak's
    exclusion window. ``shortfall`` counts requested peaks that were not
    found.
    """

    angles: np.ndarray
    heights: np.ndarray
    indices: np.ndarray
    baseline: float
    shortfall: int = 0
    rank: np.ndarray = field(default=None)

    def __len__(self):
        return len(self.angles)


@functools.lru_cache(maxsize=32)
def _cached_steering(M, grid, spacing_ratio):
    A = steering_matrix(grid.thetas, M, d=spacing_ratio, lam=1.0)
    A.setflags(write=False)
    return A


def music_spectrum(basis, grid, d=0.5, lam=1.0, method=None):
    """MUSIC pseudo-spectrum ``1 / (M - ||U^H a(theta)||^2)`` over ``grid``.

    Parameters
    ----------
    basis : SubspaceEstimate or array_like, shape (M, K)
        Orthonormal signal-subspace basis. ``K = 0`` gives a flat ``1/M``.
    grid : AngleGrid
    d, lam : float
        Element spacing and wavelength; only their ratio matters.
    method : str, optional
        Tag for the result; taken from ``basis.method`` when available.

    Notes
    -----
    The denominator is floored at ``1e-12 * M`` so an angle lying inside
    the signal subspace yields a tall but finite peak.
    """
    U = getattr(basis, "basis", basis)
    if method is None:
        method = getattr(basis, "method", "music")
    U = check_matrix(U, "basis", allow_empty=True)
    M = U.shape[0]
    if M < 1:
        raise ParameterError("basis needs at least one row")
    A = _cached_steering(M, grid, d / lam)
    proj = np.empty(grid.L)
    Uh = U.conj().T
    for start in range(0, grid.L, _CHUNK):
        blk = A[:, start:start + _CHUNK]
        proj[start:start + _CHUNK] = np.sum(np.abs(Uh @ blk) ** 2, axis=0) if U.shape[1] else 0.0
    denom = np.maximum(M - proj, DENOMINATOR_FLOOR * M)
    return PseudoSpectrum(grid, 1.0 / denom, method)


def normalize_spectrum(P):
    """Rescale a spectrum affinely onto ``[0, 1]``.

    A constant spectrum maps to all zeros, flagged ``degenerate`` with a
    :class:`RuntimeWarning`.
    """
    v = P.values
    lo, hi = v.min(), v.max()
    if hi <= lo:
        warnings.warn("constant spectrum cannot be normalized", RuntimeWarning, stacklevel=2)
        return PseudoSpectrum(P.grid, np.zeros_like(v), P.method, degenerate=True)
    out = (v - lo) / (hi - lo)
    out[np.argmin(v)] = 0.0
    out[np.argmax(v)] = 1.0
    return PseudoSpectrum(P.grid, np.clip(out, 0.0, 1.0), P.method)


def _local_maxima(v):
    """Indices of strict local maxima; a flat top reports its leftmost index."""
    if v.size < 3:
        return np.empty(0, dtype=int)
    starts = np.concatenate([[0], np.flatnonzero(np.diff(v)) + 1])
    run_vals = v[starts]
    if run_vals.size < 3:
        return np.empty(0, dtype=int)
    inner = np.arange(1, run_vals.size - 1)
    is_peak = (run_vals[inner] > run_vals[inner - 1]) & (run_vals[inner] > run_vals[inner + 1])
    return starts[inner[is_peak]]


def extract_peaks(P, K, min_separation=3):
    """Pick the ``K`` highest local maxima at least ``min_separation`` cells apart.

    Ties in height go to the smaller angle. If fewer than ``K`` qualifying
    maxima exist, the ones found are returned and ``shortfall`` is set;
    nothing is fabricated.
    """
    K = check_count(K, "K")
    min_separation = check_count(min_separation, "min_separation", minimum=0)
    v = P.values
    cand = _local_maxima(v)
    order = cand[np.lexsort((cand, -v[cand]))]
    chosen = []
    for i in order:
        if all(abs(int(i) - j) > min_separation for j in chosen):
            chosen.append(int(i))
            if len(chosen) == K:
                break
    by_height = np.array(chosen, dtype=int)
    idx = np.sort(by_height)
    rank = np.array([chosen.index(i) for i in idx], dtype=int)

    mask = np.ones(v.size, dtype=bool)
    for i in idx:
        mask[max(0, i - min_separation):i + min_separation + 1] = False
    baseline = float(v[mask].max()) if mask.any() else float(v.min())
    return PeakSet(
        angles=P.thetas[idx],
        heights=v[idx],
        indices=idx,
        baseline=baseline,
        shortfall=K - idx.size,
        rank=rank,
    )


def aoa_mse(truth, estimate, miss_penalty=MISS_PENALTY):
    """Sum of squared angle errors between true and estimated angles.

    With equally many estimates both lists are sorted and paired in order.
    When peaks are missing the estimates are matched to the truth by
    minimum total squared error and every unmatched target costs
    ``miss_penalty``.
    """
    truth = np.sort(np.atleast_1d(np.asarray(truth, dtype=float)))
    est = getattr(estimate, "angles", estimate)
    est = np.sort(np.atleast_1d(np.asarray(est, dtype=float)))
    if est.size > truth.size:
        raise ParameterError("more estimates than true targets")
    if est.size == truth.size:
        return float(np.sum((truth - est) ** 2))
    if est.size == 0:
        return float(truth.size * miss_penalty)
    cost = (truth[:, None] - est[None, :]) ** 2
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].sum() + (truth.size - est.size) * miss_penalty)


def spectrum_sq_error(P_approx, P_exact):
    """``sum_l (P_approx[l] - P_exact[l])**2`` over a shared grid."""
    if P_approx.grid != P_exact.grid:
        raise ParameterError("spectra are sampled on different grids")
    return float(np.sum((P_approx.values - P_exact.values) ** 2))
