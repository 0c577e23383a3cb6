import io
import itertools

import numpy as np
import pytest

from fastmusic.estimators import exact_signal_subspace
from fastmusic.exceptions import ParameterError
from fastmusic.scene import FMCWConfig, TargetScene, random_scene, spatial_covariance, steering_vector, synthesize_beat_signal
from fastmusic.spectrum import (
    MISS_PENALTY,
    AngleGrid,
    PseudoSpectrum,
    aoa_mse,
    extract_peaks,
    music_spectrum,
    normalize_spectrum,
    spectrum_sq_error,
)


def spec(values, L=None):
    values = np.asarray(values, dtype=float)
    return PseudoSpectrum(AngleGrid(L or values.size), values)


class TestGrid:
    def test_default(self):
        g = AngleGrid()
        assert g.L == 1801 and g.thetas[0] == 0 and g.thetas[-1] == pytest.approx(np.pi)
        assert g.spacing == pytest.approx(np.pi / 1800)
        assert np.all(np.diff(g.thetas) > 0)

    def test_with_spacing(self):
        g = AngleGrid.with_spacing(0, 90, 0.1)
        assert g.L == 901
        assert np.rad2deg(g.spacing) == pytest.approx(0.1)
        assert g.nearest_index(np.deg2rad(30.04)) == 300

    def test_invalid(self):
        with pytest.raises(ParameterError):
            AngleGrid(1)
        with pytest.raises(ParameterError):
            AngleGrid(10, 1.0, 0.5)


class TestMusicSpectrum:
    def test_empty_basis_is_flat(self):
        P = music_spectrum(np.zeros((8, 0)), AngleGrid(31))
        np.testing.assert_allclose(P.values, 1 / 8)

    def test_noiseless_peak(self):
        cfg = FMCWConfig.automotive(24, 48)
        theta = 0.71
        Y = synthesize_beat_signal(cfg, TargetScene([theta], [1e-6], [1.0]), 0.0, 0)
        grid = AngleGrid(3601, 0, np.pi / 2)
        P = music_spectrum(exact_signal_subspace(spatial_covariance(Y), 1), grid)
        assert int(np.argmax(P.values)) == grid.nearest_index(theta)
        assert np.all(np.isfinite(P.values)) and np.all(P.values > 0)

    def test_floor_caps_in_subspace_angle(self):
        grid = AngleGrid(181)
        a = steering_vector(grid.thetas[40], 10) / np.sqrt(10)
        P = music_spectrum(a[:, None], grid)
        assert P.values[40] == pytest.approx(1 / (1e-12 * 10))

    def test_rotation_invariance(self, rng):
        U = np.linalg.qr(rng.standard_normal((12, 3)) + 1j * rng.standard_normal((12, 3)))[0]
        Q = np.linalg.qr(rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3)))[0]
        g = AngleGrid(401)
        np.testing.assert_allclose(music_spectrum(U @ Q, g).values, music_spectrum(U, g).values, rtol=1e-10)

    def test_csv(self):
        P = spec([1.0, 2.0, 3.0])
        buf = io.StringIO()
        P.to_csv(buf)
        lines = buf.getvalue().strip().splitlines()
        assert lines[0] == "theta_deg,value" and len(lines) == 4
        assert float(lines[-1].split(",")[0]) == pytest.approx(180.0)

    def test_rejects_negative_values(self):
        with pytest.raises(ParameterError):
            spec([1.0, -1.0])


class TestNormalize:
    def test_three_values(self):
        np.testing.assert_allclose(normalize_spectrum(spec([1, 3, 5])).values, [0, 0.5, 1])

    def test_idempotent(self, rng):
        P = normalize_spectrum(spec(rng.uniform(1, 2, 50)))
        np.testing.assert_array_equal(normalize_spectrum(P).values, P.values)
        assert P.values.min() == 0 and P.values.max() == 1

    def test_constant(self):
        with pytest.warns(RuntimeWarning):
            P = normalize_spectrum(spec([2.0, 2.0, 2.0]))
        assert P.degenerate and not P.values.any()


class TestPeaks:
    def test_triangle(self):
        pk = extract_peaks(spec([0, 1, 2, 3, 2, 1, 0]), 1, 1)
        assert list(pk.indices) == [3] and pk.shortfall == 0

    def test_two_equal_bumps(self):
        v = [0, 1, 3, 1, 0, 0, 1, 3, 1, 0]
        pk = extract_peaks(spec(v), 2, 2)
        assert list(pk.indices) == [2, 7]
        assert list(pk.rank) == [0, 1]  # tie goes to the smaller angle

    def test_plateau_leftmost(self):
        pk = extract_peaks(spec([0, 1, 4, 4, 4, 1, 0]), 1, 1)
        assert list(pk.indices) == [2]

    def test_shortfall(self):
        pk = extract_peaks(spec([0, 1, 2, 1, 0]), 3, 1)
        assert pk.shortfall == 2 and len(pk) == 1

    def test_baseline(self):
        v = np.array([0, 1, 5, 1, 0, 2, 0.5, 0, 0])
        pk = extract_peaks(spec(v), 1, 1)
        assert pk.baseline == pytest.approx(2.0)

    def test_min_separation(self):
        v = [0, 5, 0, 4, 0, 0, 0, 3, 0]
        pk = extract_peaks(spec(v), 2, 2)
        assert list(pk.indices) == [1, 7]

    def test_scale_invariance(self, rng):
        v = rng.uniform(0, 1, 200)
        a = extract_peaks(spec(v), 5)
        b = extract_peaks(spec(7.5 * v), 5)
        np.testing.assert_array_equal(a.indices, b.indices)

    def test_ground_truth_scene(self):
        grid = AngleGrid.with_spacing(0, 90, 0.1)
        worst = []
        for seed in range(20):
            cfg = FMCWConfig.automotive(200, 200)
            sc = random_scene(cfg, 9, 0.0, seed)
            S = spatial_covariance(synthesize_beat_signal(cfg, sc, 1.0, seed))
            pk = extract_peaks(music_spectrum(exact_signal_subspace(S, 9), grid), 9)
            truth = np.array([grid.nearest_index(t) for t in sc.thetas])
            worst.append(np.max(np.abs(pk.indices - truth)) if len(pk) == 9 else np.inf)
        assert np.median(worst) <= 1


class TestAoaMse:
    def test_identical(self):
        assert aoa_mse([0.1, 0.5], [0.5, 0.1]) == 0

    def test_arithmetic(self):
        assert aoa_mse([1.0], [1.1]) == pytest.approx(0.01)

    def test_brute_force(self, rng):
        truth = np.sort(rng.uniform(0, np.pi, 5)) + np.arange(5) * 0.5
        est = truth + rng.uniform(-0.05, 0.05, 5)
        brute = min(sum((truth[i] - est[j]) ** 2 for i, j in enumerate(perm)) for perm in itertools.permutations(range(5)))
        assert aoa_mse(truth, rng.permutation(est)) == pytest.approx(brute, rel=1e-12)

    def test_miss_penalty(self):
        assert aoa_mse([0.2, 1.0, 2.0], [1.05]) == pytest.approx(0.05**2 + 2 * MISS_PENALTY)
        assert aoa_mse([0.2, 1.0], []) == pytest.approx(2 * MISS_PENALTY)

    def test_too_many(self):
        with pytest.raises(ParameterError):
            aoa_mse([1.0], [1.0, 2.0])


class TestSqError:
    def test_identical(self):
        assert spectrum_sq_error(spec([1, 2]), spec([1, 2])) == 0

    def test_shift(self):
        assert spectrum_sq_error(spec([1.1, 2.1, 3.1, 4.1]), spec([1, 2, 3, 4])) == pytest.approx(0.04)

    def test_grid_mismatch(self):
        with pytest.raises(ParameterError):
            spectrum_sq_error(spec([1, 2, 3]), spec([1, 2, 3, 4]))
