"""Experiment configuration: defaults per experiment and YAML loading.

A config file is a YAML mapping. Only ``experiment`` is required; every
other key overrides the defaults listed in :data:`DEFAULTS`::

    experiment: tune          # runtime_scaling | bound_scatter | robust_k | tune |
                              # tune_p | tune_t | spectra_compare | mse_vs_snr | lemma_suite
    M: 200                    # antennas
    N: 200                    # snapshots per chirp
    K: 11                     # true number of targets
    snr_db: 0.0               # total per-element SNR, sum|alpha|^2 / noise_var
    n_seeds: 50               # seeds 0..n_seeds-1 unless `seeds` is given
    seeds: [3, 5, 8]          # explicit seed list (distinct)
    grid: {L: 1801, lo_deg: 0.0, hi_deg: 180.0}
    fov_deg: [5.0, 85.0]      # where random targets are placed
    min_separation_deg: 3.0   # between random targets
    methods: [exact, fast1]   # estimators to run, where the experiment allows a choice
    p: 12                     # fast1/fast2 sketch width
    t: 2                      # fast2 power iterations
    delta: 0.2                # failure probability in the bounds
    sweep: [250, 500]         # experiment-specific sweep (M, K-guess, p factor, SNR, N)
    t_sweep: [1, 2, 3]        # tune/tune_t only: fast2 iteration counts
    repetitions: 100          # runtime_scaling only: timed repeats per point (capped at 20 for M >= 2000)
    scene: spectra_compare    # named fixed-angle scene instead of random angles

Annotated example files for every experiment live in ``configs/`` at the
repository root.
"""

import copy
from dataclasses import dataclass, field, fields

import yaml

from ..estimators import METHODS
from ..exceptions import ParameterError

EXPERIMENTS = (
    "runtime_scaling",
    "bound_scatter",
    "robust_k",
    "tune",
    "tune_p",
    "tune_t",
    "spectra_compare",
    "mse_vs_snr",
    "lemma_suite",
)

KNOWN_METHODS = METHODS + ("fft",)

_NEEDS_SWEEP = ("runtime_scaling", "robust_k", "spectra_compare", "mse_vs_snr")

_HALF = {"L": 901, "lo_deg": 0.0, "hi_deg": 90.0}
_FULL = {"L": 1801, "lo_deg": 0.0, "hi_deg": 180.0}

DEFAULTS = {
    "runtime_scaling": dict(
        M=None, N=None, K=10, snr_db=0.0, p=12, t=2, n_seeds=5, repetitions=100,
        sweep=[250, 500, 1000, 2000],
        methods=["exact", "fast1", "fast2", "lanczos", "matrix_inverse", "propagator"],
        grid=_FULL,
    ),
    "bound_scatter": dict(
        M=200, N=200, K=11, snr_db=1.0, p=12, t=2, delta=0.2, n_seeds=100,
        methods=["fast1", "fast2"], grid=_FULL,
    ),
    "robust_k": dict(
        M=200, N=400, K=14, snr_db=0.0, n_seeds=50, sweep=[10, 12, 14, 16, 18],
        methods=["fast1"], grid=_HALF,
    ),
    "tune": dict(
        M=200, N=200, K=11, snr_db=0.0, n_seeds=50, sweep=[1, 2, 3], t_sweep=[1, 2, 3],
        methods=["fast1", "fast2"], grid=_FULL,
    ),
    "tune_p": dict(
        M=200, N=200, K=11, snr_db=0.0, n_seeds=50, sweep=[1, 2, 3], t_sweep=[],
        methods=["fast1"], grid=_FULL,
    ),
    "tune_t": dict(
        M=200, N=200, K=11, snr_db=0.0, n_seeds=50, sweep=[], t_sweep=[1, 2, 3],
        methods=["fast2"], grid=_FULL,
    ),
    "spectra_compare": dict(
        M=200, N=None, K=9, snr_db=0.0, p=12, n_seeds=20, sweep=[800, 200], scene="spectra_compare",
        methods=["exact", "fast1", "lanczos", "propagator", "matrix_inverse", "fft"], grid=_HALF,
    ),
    "mse_vs_snr": dict(
        M=200, N=200, K=9, p=12, t=2, n_seeds=100, sweep=[-10, -5, 0, 5, 10, 15, 20],
        methods=["exact", "fast1", "fast2", "lanczos", "propagator", "matrix_inverse"], grid=_HALF,
    ),
    "lemma_suite": dict(n_seeds=1, methods=[], grid=_FULL),
}


@dataclass
class ExperimentConfig:
    experiment: str
    M: int = None
    N: int = None
    K: int = 1
    snr_db: float = 0.0
    noise_var: float = 1.0
    p: int = 12
    t: int = 2
    delta: float = 0.2
    n_seeds: int = 50
    seeds: list = None
    grid: dict = field(default_factory=lambda: dict(_FULL))
    fov_deg: list = field(default_factory=lambda: [5.0, 85.0])
    min_separation_deg: float = 3.0
    peak_separation: int = 3
    methods: list = field(default_factory=list)
    sweep: list = field(default_factory=list)
    t_sweep: list = field(default_factory=list)
    repetitions: int = 100
    scene: str = None
    out_dir: str = "results"

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ParameterError(f"unknown experiment {self.experiment!r}; choose from {EXPERIMENTS}")
        if self.seeds is None:
            self.seeds = list(range(int(self.n_seeds)))
        self.seeds = [int(s) for s in self.seeds]
        if not self.seeds:
            raise ParameterError("at least one seed is required")
        if len(set(self.seeds)) != len(self.seeds):
            raise ParameterError("seeds must be distinct")
        self.n_seeds = len(self.seeds)
        bad = [m for m in self.methods if m not in KNOWN_METHODS]
        if bad:
            raise ParameterError(f"unknown methods {bad}; choose from {KNOWN_METHODS}")
        if self.experiment in _NEEDS_SWEEP and not self.sweep:
            raise ParameterError(f"{self.experiment} needs a non-empty sweep")
        if self.experiment in ("tune", "tune_p") and not self.sweep:
            raise ParameterError(f"{self.experiment} needs a non-empty sweep of p/K factors")
        if self.experiment in ("tune", "tune_t") and not self.t_sweep:
            raise ParameterError(f"{self.experiment} needs a non-empty t_sweep")
        for key in ("L", "lo_deg", "hi_deg"):
            if key not in self.grid:
                raise ParameterError(f"grid needs key {key!r}")
        extra = set(self.grid) - {"L", "lo_deg", "hi_deg"}
        if extra:
            raise ParameterError(f"unknown grid keys {sorted(extra)}")

    def to_dict(self):
        return {f.name: copy.deepcopy(getattr(self, f.name)) for f in fields(self)}


def make_config(experiment, **overrides):
    """Defaults for ``experiment`` updated with ``overrides``."""
    if experiment not in DEFAULTS:
        raise ParameterError(f"unknown experiment {experiment!r}; choose from {EXPERIMENTS}")
    params = copy.deepcopy(DEFAULTS[experiment])
    unknown = set(overrides) - {f.name for f in fields(ExperimentConfig)}
    if unknown:
        raise ParameterError(f"unknown config keys {sorted(unknown)}")
    if "grid" in overrides:
        params["grid"] = {**params["grid"], **overrides.pop("grid")}
    params.update(overrides)
    return ExperimentConfig(experiment=experiment, **params)


def load_config(path, experiment=None):
    """Read a YAML config; ``experiment`` fills in or must match the file's."""
    with open(path) as fh:
        data = yaml.safe_load(fh) or {}
    if not isinstance(data, dict):
        raise ParameterError(f"{path}: config must be a mapping")
    exp = data.pop("experiment", experiment)
    if exp is None:
        raise ParameterError(f"{path}: missing 'experiment'")
    if experiment is not None and exp != experiment:
        raise ParameterError(f"{path}: config is for {exp!r}, not {experiment!r}")
    return make_config(exp, **data)
