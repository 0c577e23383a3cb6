import numpy as np
import pytest

from fastmusic.cxmat import projector_distance
from fastmusic.estimators import (
    block_lanczos_subspace,
    exact_signal_subspace,
    fast_music_1,
    fast_music_2,
    fft_angle_spectrum,
    matrix_inverse_noise_projector,
    propagator_subspace,
)
from fastmusic.exceptions import ConvergenceError, ParameterError, RankDeficiencyError, SingularMatrixError
from fastmusic.scene import FMCWConfig, TargetScene, random_scene, spatial_covariance, steering_vector, synthesize_beat_signal
from fastmusic.spectrum import AngleGrid, music_spectrum

from conftest import gapped_psd, rank_k_psd, top_projector


def noiseless(thetas, M=16, N=64, seed=0):
    cfg = FMCWConfig.automotive(M, N)
    taus = np.linspace(0.2, 0.8, len(thetas)) * cfg.max_delay
    sc = TargetScene(thetas, taus, np.exp(1j * np.arange(len(thetas))))
    Y = synthesize_beat_signal(cfg, sc, 0.0, seed)
    return Y, spatial_covariance(Y)


def assert_orthonormal(U, tol=1e-8):
    np.testing.assert_allclose(U.conj().T @ U, np.eye(U.shape[1]), atol=tol)


class TestExact:
    def test_diagonal(self):
        est = exact_signal_subspace(np.diag([3.0, 2.0, 1.0]), 2)
        np.testing.assert_allclose(est.eigenvalues, [3, 2])
        np.testing.assert_allclose(np.abs(est.basis), np.eye(3)[:, :2], atol=1e-14)
        assert est.method == "exact" and est.cost >= 0

    def test_rank_one_is_steering(self):
        _, S = noiseless([0.6])
        u = exact_signal_subspace(S, 1).basis[:, 0]
        a = steering_vector(0.6, 16) / 4
        assert abs(np.vdot(a, u)) == pytest.approx(1, abs=1e-10)

    def test_random_against_numpy(self, rng):
        S = rank_k_psd(rng, 10, 10)
        est = exact_signal_subspace(S, 3)
        np.testing.assert_allclose(est.projector(), top_projector(S, 3), atol=1e-9)

    @pytest.mark.parametrize("K", [0, 3])
    def test_bad_K(self, K):
        with pytest.raises(ParameterError):
            exact_signal_subspace(np.eye(3), K)


class TestFast1:
    def test_full_sampling_exact(self, rng):
        S, _, _ = gapped_psd(rng, 30, 4)
        est = fast_music_1(S, 4, 30, 1)
        assert projector_distance(est.basis, exact_signal_subspace(S, 4).basis) <= 1e-8

    def test_rank_one_p_two(self):
        _, S = noiseless([0.6])
        est = fast_music_1(S, 1, 2, 3)
        a = steering_vector(0.6, 16) / 4
        assert abs(np.vdot(a, est.basis[:, 0])) == pytest.approx(1, abs=1e-8)
        grid = AngleGrid(1801, 0, np.pi / 2)
        P = music_spectrum(est, grid)
        assert int(np.argmax(P.values)) == grid.nearest_index(0.6)

    def test_deterministic(self, rng):
        S, _, _ = gapped_psd(rng, 40, 3)
        a, b = fast_music_1(S, 3, 6, 9), fast_music_1(S, 3, 6, 9)
        np.testing.assert_array_equal(a.basis, b.basis)

    def test_p_below_K(self):
        with pytest.raises(ParameterError):
            fast_music_1(np.eye(5), 3, 2, 0)

    def test_singular_block_does_not_abort(self):
        # zero rows make S[I, I] singular for most draws
        S = np.zeros((10, 10), dtype=complex)
        S[:2, :2] = [[2, 1], [1, 2]]
        est = fast_music_1(S, 1, 3, 0)
        assert np.all(np.isfinite(est.basis))
        assert_orthonormal(est.basis)

    def test_error_non_increasing_in_p(self, rng):
        S, _, _ = gapped_psd(rng, 120, 5, gap=0.3)
        U = exact_signal_subspace(S, 5).basis
        meds = [
            np.median([projector_distance(fast_music_1(S, 5, p, s).basis, U) for s in range(50)])
            for p in (6, 15, 40, 120)
        ]
        assert all(b <= a + 1e-12 for a, b in zip(meds, meds[1:]))


class TestFast2:
    def test_exact_rank(self, rng):
        S = rank_k_psd(rng, 20, 3)
        est = fast_music_2(S, 3, 3, 1, 0)
        np.testing.assert_allclose(est.projector(), top_projector(S, 3), atol=1e-8)

    def test_many_iterations(self, rng):
        S, _, _ = gapped_psd(rng, 50, 3, gap=0.3)
        est = fast_music_2(S, 3, 6, 10, 0)
        assert projector_distance(est.basis, exact_signal_subspace(S, 3).basis) <= 1e-6

    def test_decay_per_iteration(self, rng):
        gap = 0.4
        S, _, _ = gapped_psd(rng, 60, 3, gap=gap)
        U = exact_signal_subspace(S, 3).basis
        meds = [
            np.median([projector_distance(fast_music_2(S, 3, 5, t, s).basis, U) for s in range(50)])
            for t in (1, 2, 3, 4)
        ]
        for a, b in zip(meds, meds[1:]):
            assert b <= gap * a

    def test_deterministic_and_generator_seed(self, rng):
        S, _, _ = gapped_psd(rng, 30, 2)
        np.testing.assert_array_equal(fast_music_2(S, 2, 4, 2, 5).basis, fast_music_2(S, 2, 4, 2, 5).basis)
        est = fast_music_2(S, 2, 4, 2, np.random.default_rng(1))
        assert_orthonormal(est.basis)

    def test_low_rank_retries_then_fails(self):
        # a rank-1 matrix cannot fill a 3-column sketch on any draw
        S = np.zeros((6, 6), dtype=complex)
        S[0, 0] = 1.0
        with pytest.raises(RankDeficiencyError):
            fast_music_2(S, 1, 3, 1, 0)

    @pytest.mark.parametrize("t", [0, 21])
    def test_t_range(self, t):
        with pytest.raises(ParameterError):
            fast_music_2(np.eye(4), 1, 2, t, 0)


class TestLanczos:
    def test_dominant_diagonal(self):
        S = np.diag([10.0, 1.0] + [0.1] * 8)
        est = block_lanczos_subspace(S, 1)
        assert abs(est.basis[0, 0]) == pytest.approx(1, abs=1e-8)
        assert est.eigenvalues[0] == pytest.approx(10)

    def test_random_gapped(self, rng):
        S, _, w = gapped_psd(rng, 30, 4)
        est = block_lanczos_subspace(S, 4)
        ex = exact_signal_subspace(S, 4)
        assert projector_distance(est.basis, ex.basis) <= 1e-8
        np.testing.assert_allclose(est.eigenvalues, ex.eigenvalues, rtol=1e-8)

    def test_non_convergence(self, rng):
        S, _, _ = gapped_psd(rng, 200, 4, gap=0.99)
        with pytest.raises(ConvergenceError) as info:
            block_lanczos_subspace(S, 4, iters=1)
        assert np.isfinite(info.value.residual)

    def test_block_smaller_than_K(self):
        with pytest.raises(ParameterError):
            block_lanczos_subspace(np.eye(5), 3, block=2)


class TestMatrixInverse:
    @staticmethod
    def structured(rng, M, K, eps_ratio):
        Q = np.linalg.qr(rng.standard_normal((M, M)) + 1j * rng.standard_normal((M, M)))[0]
        sig = np.linspace(10, 5, K)
        eps2 = eps_ratio * sig[-1]
        S = (Q[:, :K] * sig) @ Q[:, :K].conj().T + eps2 * (np.eye(M) - Q[:, :K] @ Q[:, :K].conj().T)
        return S, np.eye(M) - Q[:, :K] @ Q[:, :K].conj().T

    def test_high_snr_matches_noise_projector(self, rng):
        S, Pn = self.structured(rng, 20, 3, 1e-6)
        est = matrix_inverse_noise_projector(S, 3)
        assert np.linalg.norm(est.projector - Pn, 2) <= 1e-4

    def test_low_snr_is_inaccurate(self, rng):
        S, Pn = self.structured(rng, 20, 3, 0.5)
        est = matrix_inverse_noise_projector(S, 3)
        assert np.linalg.norm(est.projector - Pn, 2) >= 0.1

    def test_identity(self):
        est = matrix_inverse_noise_projector(np.eye(6), 1)
        np.testing.assert_allclose(est.projector, np.eye(6), atol=1e-12)
        assert est.noise_power == pytest.approx(1)

    def test_singular(self):
        with pytest.raises(SingularMatrixError):
            matrix_inverse_noise_projector(np.diag([1.0, 1.0, 0.0]), 1)

    def test_hermitian_psd(self, rng):
        S, _, _ = gapped_psd(rng, 15, 2)
        P = matrix_inverse_noise_projector(S, 2).projector
        np.testing.assert_allclose(P, P.conj().T, atol=1e-12)
        assert np.linalg.eigvalsh(P).min() >= -1e-12


class TestPropagator:
    def test_noiseless_single(self):
        Y, _ = noiseless([0.9])
        U = propagator_subspace(Y, 1).basis
        a = steering_vector(0.9, 16) / 4
        assert np.linalg.norm(a - U @ (U.conj().T @ a)) <= 1e-9

    def test_noiseless_two(self):
        Y, S = noiseless([0.3, 1.0])
        U = propagator_subspace(Y, 2).basis
        assert_orthonormal(U)
        assert projector_distance(U, exact_signal_subspace(S, 2).basis) <= 1e-8

    def test_rank_deficient_Y1(self):
        Y = np.ones((5, 8), dtype=complex)
        Y[0] = 0
        with pytest.raises(RankDeficiencyError):
            propagator_subspace(Y, 1)

    def test_hard_case_records_only(self):
        # 80/85 degrees at 0 dB: resolution failures are allowed, the call must not crash
        cfg = FMCWConfig.automotive(200, 200)
        sc = TargetScene(np.deg2rad([80.0, 85.0]), [0.2 * cfg.max_delay, 0.6 * cfg.max_delay], [0.7, 0.7j])
        Y = synthesize_beat_signal(cfg, sc, 1.0, 0)
        est = propagator_subspace(Y, 2)
        assert_orthonormal(est.basis)


class TestFFT:
    def test_bin_aligned_target(self):
        M, L = 16, 64
        theta = np.arcsin(0.25)  # bin L * 0.5 * sin(theta) = 8
        Y, _ = noiseless([theta], M=M)
        grid = AngleGrid(1801, 0, np.pi / 2)
        P = fft_angle_spectrum(Y, L, grid)
        # all grid angles reading bin 8 share the maximum value
        bins = np.rint(L * 0.5 * np.sin(grid.thetas)).astype(int)
        assert bins[np.argmax(P.values)] == 8
        assert P.values[grid.nearest_index(theta)] == P.values.max()

    def test_close_pair_single_lobe(self):
        M = 32
        s0 = 0.3
        thetas = np.arcsin([s0, s0 + 0.5 / M])  # half a beamwidth apart
        Y, _ = noiseless(thetas, M=M)
        grid = AngleGrid(3601, 0, np.pi / 2)
        P = fft_angle_spectrum(Y, 16 * M, grid)
        lo, hi = grid.nearest_index(thetas[0] - 0.05), grid.nearest_index(thetas[1] + 0.05)
        from fastmusic.spectrum import _local_maxima
        mx = _local_maxima(P.values)
        assert np.count_nonzero((mx >= lo) & (mx <= hi)) == 1

    def test_zero_input(self):
        P = fft_angle_spectrum(np.zeros((4, 3)), 8)
        assert not P.values.any()

    def test_L_below_M(self):
        with pytest.raises(ParameterError):
            fft_angle_spectrum(np.ones((8, 2)), 4)


def test_all_estimators_orthonormal():
    cfg = FMCWConfig.automotive(40, 80)
    sc = random_scene(cfg, 3, 10.0, 2)
    Y = synthesize_beat_signal(cfg, sc, 1.0, 2)
    S = spatial_covariance(Y)
    for est in (
        exact_signal_subspace(S, 3),
        fast_music_1(S, 3, 5, 0),
        fast_music_2(S, 3, 5, 2, 0),
        block_lanczos_subspace(S, 3),
        propagator_subspace(Y, 3),
    ):
        assert_orthonormal(est.basis)
        assert np.all(np.diff(est.eigenvalues) <= 1e-12) or est.method == "propagator"
        assert np.all(est.eigenvalues >= 0)
