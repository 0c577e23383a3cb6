"""Exact and randomized (fast) MUSIC for large uniform linear arrays."""

from .bounds import (
    BoundInputs,
    BoundReport,
    detection_consistency_check,
    lemma_suite,
    spectral_gap,
    theorem1_bound,
    theorem2_bound,
    theorem3_bound,
    verify_bound,
)
from .cxmat import (
    coherence,
    gaussian_matrix,
    hermitian_eig,
    pseudo_inverse,
    qr_orthonormal,
    thin_svd,
    uniform_sampling_matrix,
)
from .estimators import (
    SubspaceEstimate,
    block_lanczos_subspace,
    exact_signal_subspace,
    fast_music_1,
    fast_music_2,
    fft_angle_spectrum,
    matrix_inverse_noise_projector,
    propagator_subspace,
)
from .exceptions import (
    ConvergenceError,
    FastMusicError,
    ParameterError,
    RankDeficiencyError,
    SingularMatrixError,
)
from .music import MUSIC
from .scene import (
    FMCWConfig,
    TargetScene,
    phase_constants,
    random_scene,
    spatial_covariance,
    steering_vector,
    synthesize_beat_signal,
    temporal_covariance,
)
from .spectrum import (
    AngleGrid,
    PeakSet,
    PseudoSpectrum,
    aoa_mse,
    extract_peaks,
    music_spectrum,
    normalize_spectrum,
    spectrum_sq_error,
)

__version__ = "0.1.0"
