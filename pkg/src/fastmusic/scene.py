"""FMCW beat-signal synthesis for a uniform linear array.

The de-chirped signal of antenna ``m`` at sample ``n`` is::

    y[m, n] = sum_k alpha_k * exp(j*(mu*tau_k*n*T_s + w_s*tau_k - mu*tau_k**2/2))
                            * exp(j*2*pi*d*m*sin(theta_k)/lambda_s) + noise

with circular complex Gaussian noise of variance ``noise_var``. Angles are
radians, ``theta = 0`` is broadside. SNR is per element and counts the
total target power: ``SNR = sum_k |alpha_k|^2 / noise_var``.
"""

from dataclasses import dataclass, field

import numpy as np

from ._validation import check_count, check_matrix, check_random_state
from .exceptions import ParameterError

__all__ = [
    "FMCWConfig",
    "TargetScene",
    "PhaseConstants",
    "steering_vector",
    "steering_matrix",
    "phase_constants",
    "synthesize_beat_signal",
    "spatial_covariance",
    "temporal_covariance",
    "random_scene",
    "named_scene",
    "snr_amplitudes",
]

SPEED_OF_LIGHT = 299_792_458.0


@dataclass(frozen=True)
class FMCWConfig:
    """Chirp waveform and array geometry.

    Parameters
    ----------
    w_s : float
        Initial angular frequency of the chirp (rad/s).
    w_B : float
        Swept angular bandwidth (rad/s).
    T_sym : float
        Chirp duration (s).
    f_s : float
        ADC sampling rate (Hz).
    lambda_s : float
        Carrier wavelength (m).
    M : int
        Number of antennas.
    d : float, optional
        Element spacing, half a wavelength by default.
    N : int, optional
        Samples per chirp. Must equal ``round(T_sym * f_s)`` when given.
    """

    w_s: float
    w_B: float
    T_sym: float
    f_s: float
    lambda_s: float
    M: int
    d: float = None
    N: int = None

    def __post_init__(self):
        for name in ("w_s", "w_B", "T_sym", "f_s", "lambda_s"):
            if not np.isfinite(getattr(self, name)) or getattr(self, name) <= 0:
                raise ParameterError(f"{name} must be positive and finite")
        check_count(self.M, "M")
        if self.d is None:
            object.__setattr__(self, "d", self.lambda_s / 2)
        if not self.d > 0:
            raise ParameterError("d must be positive")
        n_expected = int(round(self.T_sym * self.f_s))
        if n_expected < 1:
            raise ParameterError("T_sym * f_s must give at least one sample")
        if self.N is None:
            object.__setattr__(self, "N", n_expected)
        elif self.N != n_expected:
            raise ParameterError(f"N={self.N} inconsistent with T_sym*f_s={self.T_sym * self.f_s:g}")

    @property
    def mu(self):
        """Chirp rate ``w_B / T_sym`` (rad/s^2)."""
        return self.w_B / self.T_sym

    @property
    def T_s(self):
        return 1.0 / self.f_s

    @property
    def max_delay(self):
        """Largest delay whose beat tone stays below the Nyquist rate."""
        return np.pi * self.f_s / self.mu

    @classmethod
    def automotive(cls, M, N, *, carrier_hz=77e9, bandwidth_hz=1e9, f_s=10e6):
        """A 77 GHz chirp sampled ``N`` times at ``f_s`` with ``M`` antennas."""
        return cls(
            w_s=2 * np.pi * carrier_hz,
            w_B=2 * np.pi * bandwidth_hz,
            T_sym=N / f_s,
            f_s=f_s,
            lambda_s=SPEED_OF_LIGHT / carrier_hz,
            M=M,
        )


@dataclass(frozen=True)
class TargetScene:
    """Ground-truth point targets.

    ``thetas`` must lie strictly inside ``(0, pi)`` and be pairwise at least
    ``min_separation`` radians apart. Targets are kept sorted by angle.
    """

    thetas: np.ndarray
    taus: np.ndarray
    alphas: np.ndarray
    min_separation: float = field(default=np.deg2rad(0.2), compare=False)

    def __post_init__(self):
        th = np.atleast_1d(np.asarray(self.thetas, dtype=float))
        tau = np.atleast_1d(np.asarray(self.taus, dtype=float))
        al = np.atleast_1d(np.asarray(self.alphas, dtype=np.complex128))
        if th.ndim != 1 or th.size < 1:
            raise ParameterError("a scene needs at least one target")
        if not (tau.shape == th.shape == al.shape):
            raise ParameterError("thetas, taus and alphas must have equal length")
        if np.any(th <= 0) or np.any(th >= np.pi):
            raise ParameterError("target angles must lie strictly inside (0, pi)")
        if np.any(tau < 0) or not np.all(np.isfinite(tau)):
            raise ParameterError("delays must be finite and non-negative")
        if not np.all(np.isfinite(al)):
            raise ParameterError("gains must be finite")
        order = np.argsort(th, kind="stable")
        th, tau, al = th[order], tau[order], al[order]
        if th.size > 1 and np.min(np.diff(th)) < self.min_separation:
            raise ParameterError("targets closer than min_separation")
        object.__setattr__(self, "thetas", th)
        object.__setattr__(self, "taus", tau)
        object.__setattr__(self, "alphas", al)

    @property
    def K(self):
        return self.thetas.size

    def signal_power(self):
        return float(np.sum(np.abs(self.alphas) ** 2))


@dataclass(frozen=True)
class PhaseConstants:
    """Per-target unit-modulus phase terms (angle, delay-rate, delay)."""

    vartheta: np.ndarray
    kappa: np.ndarray
    rho: np.ndarray


def steering_vector(theta, M, d=0.5, lam=1.0):
    """Array response ``exp(j*2*pi*d*m*sin(theta)/lam)`` for ``m = 0..M-1``."""
    M = check_count(M, "M")
    if not (d > 0 and lam > 0):
        raise ParameterError("d and lam must be positive")
    m = np.arange(M)
    return np.exp(2j * np.pi * d * m * np.sin(theta) / lam)


def steering_matrix(thetas, M, d=0.5, lam=1.0):
    """Steering vectors for several angles as the columns of an ``M x L`` matrix."""
    M = check_count(M, "M")
    if not (d > 0 and lam > 0):
        raise ParameterError("d and lam must be positive")
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    phase = (2 * np.pi * d / lam) * np.sin(thetas)
    return np.exp(1j * np.outer(np.arange(M), phase))


def phase_constants(config, scene):
    """Angle-induced shift, delay-induced shift and delay-induced phase."""
    th, tau = scene.thetas, scene.taus
    vartheta = np.exp(1j * 2 * np.pi / config.lambda_s * config.d * np.sin(th))
    kappa = np.exp(1j * config.mu * tau * config.T_sym)
    rho = np.exp(1j * (-0.5 * config.mu * tau**2 + config.w_s * tau))
    return PhaseConstants(vartheta, kappa, rho)


def synthesize_beat_signal(config, scene, noise_var, seed):
    """Sampled beat signals, one row per antenna.

    Parameters
    ----------
    config : FMCWConfig
    scene : TargetScene
    noise_var : float
        Variance of the circular complex Gaussian noise (real and imaginary
        parts each carry half).
    seed : int or numpy.random.Generator

    Returns
    -------
    Y : ndarray of complex128, shape (config.M, config.N)
    """
    if not (np.isfinite(noise_var) and noise_var >= 0):
        raise ParameterError("noise_var must be finite and non-negative")
    rng = check_random_state(seed)
    M, N = config.M, config.N
    n = np.arange(N)
    tau = scene.taus
    # K x N source waveforms
    phase = np.outer(config.mu * tau * config.T_s, n) + (config.w_s * tau - 0.5 * config.mu * tau**2)[:, None]
    X = scene.alphas[:, None] * np.exp(1j * np.mod(phase, 2 * np.pi))
    A = steering_matrix(scene.thetas, M, config.d, config.lambda_s)
    Y = A @ X
    if noise_var > 0:
        scale = np.sqrt(noise_var / 2)
        Y = Y + scale * (rng.standard_normal((M, N)) + 1j * rng.standard_normal((M, N)))
    return Y


def spatial_covariance(Y):
    """``Y Y^H / N``, symmetrized."""
    Y = check_matrix(Y, "Y")
    S = (Y @ Y.conj().T) / Y.shape[1]
    return 0.5 * (S + S.conj().T)


def temporal_covariance(Y):
    """``Y^H Y / M``, symmetrized."""
    Y = check_matrix(Y, "Y")
    T = (Y.conj().T @ Y) / Y.shape[0]
    return 0.5 * (T + T.conj().T)


def snr_amplitudes(K, snr_db, noise_var=1.0):
    """Equal per-target amplitude giving total per-element SNR ``snr_db``."""
    K = check_count(K, "K")
    return np.sqrt(noise_var * 10 ** (snr_db / 10) / K)


def _draw_separated(rng, K, lo, hi, sep, what, max_tries=10_000):
    if K * sep > hi - lo:
        raise ParameterError(f"cannot place {K} {what} {sep:g} apart inside [{lo:g}, {hi:g}]")
    for _ in range(max_tries):
        x = np.sort(rng.uniform(lo, hi, K))
        if K == 1 or np.min(np.diff(x)) >= sep:
            return x
    # Fall back to a spacing-preserving construction: uniform gaps on top of the minimum.
    slack = (hi - lo) - (K - 1) * sep
    base = np.sort(rng.uniform(0, slack, K))
    return lo + base + sep * np.arange(K)


def random_scene(
    config,
    K,
    snr_db,
    seed,
    *,
    noise_var=1.0,
    fov_deg=(5.0, 85.0),
    min_separation_deg=3.0,
):
    """Draw ``K`` targets with well separated angles and beat frequencies.

    Angles are uniform over ``fov_deg``; with half-wavelength spacing and the
    ``sin`` convention, ``theta`` and ``pi - theta`` are indistinguishable,
    so the default field of view stays in ``(0, pi/2)``. Delays are drawn
    so every beat tone is below Nyquist and tones are at least two DFT bins
    apart, which keeps the sources incoherent over one chirp. All targets
    carry equal power and independent uniform phases.
    """
    K = check_count(K, "K")
    rng = check_random_state(seed)
    lo, hi = np.deg2rad(fov_deg[0]), np.deg2rad(fov_deg[1])
    sep = np.deg2rad(min_separation_deg)
    thetas = _draw_separated(rng, K, lo, hi, sep, "angles")
    # beat tone in cycles/sample is mu*tau*T_s/(2*pi) = tau / (2 * max_delay)
    tau_max = config.max_delay
    tau_sep = min(2.0 * 2 * tau_max / config.N, 0.9 * tau_max / K)
    taus = rng.permutation(_draw_separated(rng, K, 0.05 * tau_max, 0.95 * tau_max, tau_sep, "delays"))
    amp = snr_amplitudes(K, snr_db, noise_var)
    alphas = amp * np.exp(2j * np.pi * rng.uniform(0, 1, K))
    return TargetScene(thetas, taus, alphas, min_separation=min(sep, np.deg2rad(0.2)))


NAMED_SCENES = {
    # two close targets above 70 degrees: the resolution failure case of the propagator method
    "propagator_hard": (80.0, 85.0),
    # nine targets placed off the 0.1 degree grid; 30.03/30.63 sit inside the
    # DFT beamwidth of a 200 element array, so only subspace methods split them
    "spectra_compare": (12.03, 20.03, 30.03, 30.63, 45.03, 55.03, 65.03, 80.03, 85.03),
}


def named_scene(name, config, snr_db, seed, *, noise_var=1.0):
    """Fixed-angle scene from :data:`NAMED_SCENES` with seeded delays and phases."""
    try:
        degs = NAMED_SCENES[name]
    except KeyError:
        raise ParameterError(f"unknown scene {name!r}; choose from {sorted(NAMED_SCENES)}") from None
    rng = check_random_state(seed)
    K = len(degs)
    tau_max = config.max_delay
    tau_sep = min(2.0 * 2 * tau_max / config.N, 0.9 * tau_max / K)
    taus = rng.permutation(_draw_separated(rng, K, 0.05 * tau_max, 0.95 * tau_max, tau_sep, "delays"))
    amp = snr_amplitudes(K, snr_db, noise_var)
    alphas = amp * np.exp(2j * np.pi * rng.uniform(0, 1, K))
    return TargetScene(np.deg2rad(degs), taus, alphas)
