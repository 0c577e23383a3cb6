"""Dense complex linear-algebra kernels and random-matrix constructors.

Matrices are plain ``complex128`` ndarrays (C order, i.e. row-major).
Factorizations are delegated to LAPACK through :mod:`scipy.linalg`;
this module adds the ordering, validation and failure contracts the rest
of the package relies on.
"""

from typing import NamedTuple

import numpy as np
import scipy.linalg as sla

from ._validation import check_count, check_hermitian, check_matrix, check_random_state
from .exceptions import ConvergenceError, ParameterError, RankDeficiencyError

__all__ = [
    "EigResult",
    "SVDResult",
    "SamplingMatrix",
    "hermitian_eig",
    "thin_svd",
    "qr_orthonormal",
    "pseudo_inverse",
    "sample_indices",
    "uniform_sampling_matrix",
    "gaussian_matrix",
    "coherence",
    "projector_distance",
]

_EPS = np.finfo(np.float64).eps


class EigResult(NamedTuple):
    """Spectral decomposition ``S = V diag(w) V^H`` with ``w`` descending."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


class SVDResult(NamedTuple):
    """Thin SVD ``A = U diag(s) V^H``; ``s`` is non-negative and descending."""

    U: np.ndarray
    s: np.ndarray
    V: np.ndarray


class SamplingMatrix(NamedTuple):
    """Scaled column-selection matrix and the row indices it selects."""

    matrix: np.ndarray
    indices: np.ndarray


def hermitian_eig(S):
    """Full eigendecomposition of a Hermitian matrix, eigenvalues descending.

    Parameters
    ----------
    S : array_like, shape (M, M)
        Hermitian matrix. It is symmetrized before factorization.

    Returns
    -------
    EigResult

    Raises
    ------
    ConvergenceError
        If LAPACK fails to converge.
    """
    S = check_hermitian(S)
    try:
        w, V = sla.eigh(S, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"Hermitian eigensolver failed: {exc}") from exc
    w = w[::-1].copy()
    V = V[:, ::-1].copy()
    residual = np.linalg.norm(S @ V - V * w) / max(np.linalg.norm(S), 1e-300)
    if not np.isfinite(residual) or residual > 1e-6:
        raise ConvergenceError("Hermitian eigensolver returned an inaccurate factorization", residual)
    return EigResult(w, V)


def thin_svd(A):
    """Thin SVD of an ``m x n`` matrix with ``r = min(m, n)`` components.

    ``gesdd`` is tried first; on failure ``gesvd`` is used before giving up.
    """
    A = check_matrix(A)
    for driver in ("gesdd", "gesvd"):
        try:
            U, s, Vh = sla.svd(A, full_matrices=False, check_finite=False, lapack_driver=driver)
            break
        except np.linalg.LinAlgError:
            continue
    else:
        raise ConvergenceError(f"SVD of {A.shape} matrix did not converge")
    return SVDResult(U, s, Vh.conj().T)


def qr_orthonormal(A, rtol=None):
    """Orthonormal basis of ``range(A)`` from a Householder QR.

    Parameters
    ----------
    A : array_like, shape (m, n)
        Full column rank input, ``n <= m``.
    rtol : float, optional
        A diagonal entry ``|R[i, i]| <= rtol * max|R[j, j]|`` marks rank
        deficiency. Defaults to ``max(m, n) * eps``.

    Returns
    -------
    Q : ndarray, shape (m, n)

    Raises
    ------
    RankDeficiencyError
        Naming the first deficient column.
    """
    A = check_matrix(A)
    m, n = A.shape
    if n > m:
        raise RankDeficiencyError(f"{m}x{n} matrix cannot have full column rank", m)
    if rtol is None:
        rtol = max(m, n) * _EPS
    Q, R = sla.qr(A, mode="economic", check_finite=False)
    diag = np.abs(np.diag(R))
    top = diag.max()
    bad = np.flatnonzero(diag <= rtol * top) if top > 0 else np.arange(n)
    if bad.size:
        raise RankDeficiencyError("matrix is numerically rank deficient", int(bad[0]))
    return Q


def pseudo_inverse(A, rel_tol=None):
    """Moore-Penrose pseudo-inverse through :func:`thin_svd`.

    Singular values ``s_i <= rel_tol * s_1`` are treated as zero. The
    default ``rel_tol`` is ``max(m, n) * eps``. An all-zero input gives the
    all-zero ``n x m`` matrix.
    """
    A = check_matrix(A)
    m, n = A.shape
    if rel_tol is None:
        rel_tol = max(m, n) * _EPS
    if not 0 < rel_tol < 1:
        raise ParameterError(f"rel_tol must lie in (0, 1), got {rel_tol}")
    U, s, V = thin_svd(A)
    if s.size == 0 or s[0] == 0:
        return np.zeros((n, m), dtype=np.complex128)
    keep = s > rel_tol * s[0]
    return (V[:, keep] / s[keep]) @ U[:, keep].conj().T


def sample_indices(M, p, seed):
    """Draw ``p`` distinct indices uniformly from ``range(M)``."""
    M = check_count(M, "M")
    p = check_count(p, "p", maximum=M)
    rng = check_random_state(seed)
    return rng.choice(M, size=p, replace=False)


def uniform_sampling_matrix(M, p, seed):
    """Uniform column-sampling matrix scaled by ``sqrt(M / p)``.

    Column ``j`` is ``sqrt(M/p) * e_{I[j]}`` where ``I`` holds ``p`` distinct
    indices, so ``S @ matrix == sqrt(M/p) * S[:, I]`` and
    ``||matrix||_2 ** 2 == M / p``.
    """
    idx = sample_indices(M, p, seed)
    Pi = np.zeros((M, p), dtype=np.complex128)
    Pi[idx, np.arange(p)] = np.sqrt(M / p)
    return SamplingMatrix(Pi, idx)


def gaussian_matrix(M, p, seed):
    """``M x p`` matrix of i.i.d. real standard normals, stored as complex."""
    M = check_count(M, "M")
    p = check_count(p, "p")
    rng = check_random_state(seed)
    return rng.standard_normal((M, p)).astype(np.complex128)


def coherence(U_K, atol=1e-8):
    """Row coherence ``(M/K) * max_i ||U_K[i, :]||^2`` of an orthonormal basis.

    The result lies in ``[1, M/K]``.
    """
    U_K = check_matrix(U_K, "U_K")
    M, K = U_K.shape
    gram = U_K.conj().T @ U_K
    if np.max(np.abs(gram - np.eye(K))) > atol:
        raise ParameterError("U_K must have orthonormal columns")
    row_norms = np.sum(np.abs(U_K) ** 2, axis=1)
    return float(M / K * row_norms.max())


def projector_distance(U, V):
    """Spectral-norm distance ``||U U^H - V V^H||_2`` between two subspaces."""
    U = np.asarray(U)
    V = np.asarray(V)
    D = U @ U.conj().T - V @ V.conj().T
    return float(np.linalg.norm(D, 2))
