"""Signal-subspace estimators: exact MUSIC, the two randomized fast-MUSIC
sketches, and the classical shortcuts they are compared against.

Every estimator validates its input, then times only the numerical body;
the elapsed seconds land in ``cost``.
"""

import time
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy.linalg import lapack

from ._validation import check_count, check_hermitian, check_matrix, check_random_state, child_seeds
from .cxmat import gaussian_matrix, hermitian_eig, pseudo_inverse, qr_orthonormal, sample_indices, thin_svd
from .exceptions import ConvergenceError, ParameterError, RankDeficiencyError, SingularMatrixError
from .spectrum import DENOMINATOR_FLOOR, PseudoSpectrum, _cached_steering

__all__ = [
    "SubspaceEstimate",
    "NoiseProjectorEstimate",
    "METHODS",
    "exact_signal_subspace",
    "fast_music_1",
    "fast_music_2",
    "block_lanczos_subspace",
    "matrix_inverse_noise_projector",
    "propagator_subspace",
    "fft_angle_spectrum",
]

METHODS = ("exact", "fast1", "fast2", "lanczos", "matrix_inverse", "propagator")

MAX_FAST2_RETRIES = 3
MAX_POWER_ITERATIONS = 20


@dataclass
class SubspaceEstimate:
    """An ``M x K`` orthonormal basis of the estimated signal subspace.

    Attributes
    ----------
    basis : ndarray, shape (M, K)
    eigenvalues : ndarray, shape (K,)
        Descending, clamped at zero.
    method : str
        One of :data:`METHODS`.
    cost : float
        Wall-clock seconds spent in the estimator body.
    """

    basis: np.ndarray
    eigenvalues: np.ndarray
    method: str
    cost: float = 0.0

    @property
    def K(self):
        return self.basis.shape[1]

    def projector(self):
        return self.basis @ self.basis.conj().T


@dataclass
class NoiseProjectorEstimate:
    """Approximate noise-subspace projector ``noise_power * S^{-1}``."""

    projector: np.ndarray
    noise_power: float
    method: str = "matrix_inverse"
    cost: float = 0.0

    def spectrum(self, grid, d=0.5, lam=1.0):
        """Pseudo-spectrum ``1 / (a^H Pn a)`` with the MUSIC denominator floor."""
        M = self.projector.shape[0]
        A = _cached_steering(M, grid, d / lam)
        quad = np.real(np.sum(A.conj() * (self.projector @ A), axis=0))
        denom = np.maximum(quad, DENOMINATOR_FLOOR * M)
        return PseudoSpectrum(grid, 1.0 / denom, self.method)


def _check_rank(K, M):
    return check_count(K, "K", maximum=M - 1)


def _finish(U, w, method, t0):
    cost = time.perf_counter() - t0
    w = np.maximum(np.asarray(w, dtype=float), 0.0)
    return SubspaceEstimate(np.ascontiguousarray(U), w, method, cost)


def exact_signal_subspace(S, K):
    """Top-``K`` eigenpairs of ``S`` from a full Hermitian eigendecomposition."""
    S = check_hermitian(S)
    K = _check_rank(K, S.shape[0])
    t0 = time.perf_counter()
    w, V = hermitian_eig(S)
    return _finish(V[:, :K], w[:K], "exact", t0)


def _rank_restricted(C, W, K):
    """Leading ``K`` eigenpairs of ``C W C^H`` through two small SVDs."""
    Uc, sc, Vc = thin_svd(C)
    # sigma_c is real, so sigma_c^T == sigma_c^H
    B = (sc[:, None] * Vc.conj().T) @ W @ (Vc * sc[None, :])
    B = 0.5 * (B + B.conj().T)
    Ub, sb, _ = thin_svd(B)
    return Uc @ Ub[:, :K], sb[:K]


def fast_music_1(S, K, p, seed):
    """Signal subspace from a Nystrom sketch built on uniformly sampled columns.

    Draw ``p`` distinct column indices ``I``, set ``C = S[:, I]`` and
    ``W = pinv(S[I, I])``, then take the top ``K`` eigenpairs of
    ``C W C^H`` from the SVDs of ``C`` and of ``Sigma_c V_c^H W V_c Sigma_c``.
    The ``sqrt(M/p)`` scale of the sampling matrix cancels in ``C W C^H``
    and is omitted.

    Parameters
    ----------
    S : array_like, shape (M, M)
        Hermitian PSD covariance.
    K : int
        Signal-subspace dimension.
    p : int
        Number of sampled columns, ``K <= p <= M``.
    seed : int or numpy.random.Generator

    Returns
    -------
    SubspaceEstimate
    """
    S = check_hermitian(S)
    M = S.shape[0]
    K = _check_rank(K, M)
    p = check_count(p, "p", minimum=K, maximum=M)
    rng = check_random_state(seed)
    t0 = time.perf_counter()
    idx = sample_indices(M, p, rng)
    C = S[:, idx]
    W = pseudo_inverse(C[idx, :])
    U, w = _rank_restricted(C, W, K)
    return _finish(U, w, "fast1", t0)


def _power_sketch(S, p, t, seed):
    C = S @ gaussian_matrix(S.shape[0], p, seed)
    for _ in range(t):
        V = qr_orthonormal(C)
        C = S @ V
    return C, V


def fast_music_2(S, K, p=None, t=2, seed=0):
    """Signal subspace from an iterated Gaussian random-projection sketch.

    ``C = S Pi`` with ``Pi`` an ``M x p`` standard normal matrix, then ``t``
    rounds of ``V = orth(C); C = S V``. With ``W = pinv(V^H S V)`` the
    top ``K`` eigenpairs of ``C W C^H`` are extracted as in
    :func:`fast_music_1`.

    A rank-deficient sketch triggers up to three redraws with seeds derived
    from ``seed``; after that the :class:`RankDeficiencyError` propagates.
    ``seed`` must be an integer here so the redraws are reproducible.
    """
    S = check_hermitian(S)
    M = S.shape[0]
    K = _check_rank(K, M)
    p = K if p is None else check_count(p, "p", minimum=K, maximum=M)
    t = check_count(t, "t", maximum=MAX_POWER_ITERATIONS)
    if isinstance(seed, np.random.Generator):
        seed = int(seed.integers(2**63))
    seeds = [seed] + child_seeds(seed, MAX_FAST2_RETRIES)
    t0 = time.perf_counter()
    for attempt, s in enumerate(seeds):
        try:
            C, V = _power_sketch(S, p, t, s)
            break
        except RankDeficiencyError:
            if attempt == MAX_FAST2_RETRIES:
                raise
    W = pseudo_inverse(V.conj().T @ C)
    U, w = _rank_restricted(C, W, K)
    return _finish(U, w, "fast2", t0)


def _ritz(basis, SB, K):
    T = basis.conj().T @ SB
    T = 0.5 * (T + T.conj().T)
    theta, Z = np.linalg.eigh(T)
    Z = Z[:, ::-1][:, :K]
    return theta[::-1][:K], basis @ Z, SB @ Z


def block_lanczos_subspace(
    S, K, block=None, iters=200, tol=1e-10, seed=0, *, residual_tol=1e-9, require_convergence=True
):
    """Top-``K`` eigenpairs by block Krylov iteration with full reorthogonalization.

    Each step multiplies the newest block by ``S``, orthogonalizes it twice
    against the whole basis and appends it; Rayleigh-Ritz on the basis
    yields the current estimate. Convergence requires both a relative
    change of the top ``K`` Ritz values ``<= tol`` and Ritz residuals
    ``||S x - theta x|| <= residual_tol * theta_1``.

    Raises
    ------
    ConvergenceError
        If ``iters`` steps pass without convergence and
        ``require_convergence`` is set.
    """
    S = check_hermitian(S)
    M = S.shape[0]
    K = _check_rank(K, M)
    block = K if block is None else check_count(block, "block", minimum=K)
    iters = check_count(iters, "iters")
    rng = check_random_state(seed)
    t0 = time.perf_counter()

    Q = qr_orthonormal(rng.standard_normal((M, block)).astype(np.complex128))
    basis, SB = Q, S @ Q
    prev = None
    residual = np.inf
    for _ in range(iters):
        theta, X, SX = _ritz(basis, SB, K)
        residual = float(np.max(np.linalg.norm(SX - X * theta, axis=0)))
        scale = max(abs(theta[0]), 1e-300)
        if prev is not None:
            change = float(np.max(np.abs(theta - prev)) / scale)
            if change <= tol and residual <= residual_tol * scale:
                return _finish(X, theta, "lanczos", t0)
        prev = theta
        if basis.shape[1] >= M:
            # Krylov space is the whole space, Rayleigh-Ritz is exact
            return _finish(X, theta, "lanczos", t0)
        Z = SB[:, -Q.shape[1]:].copy()
        for _ in range(2):
            Z -= basis @ (basis.conj().T @ Z)
        Z = Z[:, :M - basis.shape[1]]
        Qz, Rz = np.linalg.qr(Z)
        keep = np.abs(np.diag(Rz)) > M * np.finfo(float).eps * scale
        if not keep.any():
            # invariant subspace found
            return _finish(X, theta, "lanczos", t0)
        Q = Qz[:, keep]
        basis = np.hstack([basis, Q])
        SB = np.hstack([SB, S @ Q])
    if require_convergence:
        raise ConvergenceError(f"block Lanczos did not converge in {iters} steps", residual)
    theta, X, _ = _ritz(basis, SB, K)
    return _finish(X, theta, "lanczos", t0)


def matrix_inverse_noise_projector(S, K, lanczos_steps=4):
    """Noise projector approximated by ``noise_power * S^{-1}``.

    ``noise_power`` is estimated as ``(trace(S) - sum of top-K Ritz
    values) / (M - K)`` where the Ritz values come from a short block
    Lanczos pass. The approximation is only accurate when the noise
    eigenvalue is small next to ``sigma_K(S)``.

    Raises
    ------
    SingularMatrixError
        When ``S`` is not numerically positive definite
        (reciprocal condition number below ``1e-12``).
    """
    S = check_hermitian(S)
    M = S.shape[0]
    K = _check_rank(K, M)
    t0 = time.perf_counter()
    try:
        cf = sla.cholesky(S, lower=False, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError("covariance is not positive definite; matrix-inverse method unstable") from exc
    anorm = float(np.max(np.sum(np.abs(S), axis=0)))
    rcond, info = lapack.zpocon(cf, anorm)
    if info != 0 or rcond < 1e-12:
        raise SingularMatrixError(f"covariance is numerically singular (rcond={rcond:.2e})")
    S_inv = sla.cho_solve((cf, False), np.eye(M, dtype=np.complex128), check_finite=False)
    ritz = block_lanczos_subspace(S, K, iters=lanczos_steps, require_convergence=False).eigenvalues
    noise_power = max((float(np.real(np.trace(S))) - float(np.sum(ritz))) / (M - K), 0.0)
    Pn = noise_power * S_inv
    Pn = 0.5 * (Pn + Pn.conj().T)
    return NoiseProjectorEstimate(Pn, noise_power, "matrix_inverse", time.perf_counter() - t0)


def propagator_subspace(Y, K):
    """SVD-free signal subspace from the least-squares propagator.

    Split the rows of ``Y`` into the first ``K`` (``Y1``) and the rest
    (``Y2``), solve ``Y2 ~= P^H Y1`` through the normal equations, and
    orthonormalize ``[I_K; P^H]``.

    Raises
    ------
    RankDeficiencyError
        When ``Y1`` lacks full row rank.
    """
    Y = check_matrix(Y, "Y")
    M, N = Y.shape
    K = _check_rank(K, M)
    t0 = time.perf_counter()
    Y1, Y2 = Y[:K], Y[K:]
    G = Y1 @ Y1.conj().T
    s = np.linalg.svd(G, compute_uv=False)
    tol = max(G.shape) * np.finfo(float).eps * max(s[0], 1e-300)
    low = np.flatnonzero(s <= tol)
    if s[0] == 0 or low.size:
        raise RankDeficiencyError("leading sub-array block Y1 is rank deficient", int(low[0]) if low.size else 0)
    PH = (Y2 @ Y1.conj().T) @ pseudo_inverse(G)
    U = qr_orthonormal(np.vstack([np.eye(K, dtype=np.complex128), PH]))
    w = np.sum(np.abs(U.conj().T @ Y) ** 2, axis=1) / N
    order = np.argsort(-w, kind="stable")
    return _finish(U[:, order], w[order], "propagator", t0)


def fft_angle_spectrum(Y, L, grid=None, d=0.5, lam=1.0):
    """Beamforming baseline: snapshot-averaged ``|DFT|^2`` across the array.

    Each column of ``Y`` is zero padded to ``L`` points and transformed
    along the antenna axis; the squared magnitudes are averaged over the
    snapshots. Grid angle ``theta`` reads the bin nearest to
    ``L * d * sin(theta) / lam`` (modulo ``L``).
    """
    from .spectrum import AngleGrid

    Y = check_matrix(Y, "Y")
    M, N = Y.shape
    L = check_count(L, "L", minimum=M)
    grid = AngleGrid() if grid is None else grid
    power = np.mean(np.abs(np.fft.fft(Y, n=L, axis=0)) ** 2, axis=1)
    bins = np.rint(L * d * np.sin(grid.thetas) / lam).astype(int) % L
    return PseudoSpectrum(grid, power[bins], "fft")
