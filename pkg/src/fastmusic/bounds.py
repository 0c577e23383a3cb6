"""Pseudo-spectrum error bounds for the randomized estimators and their
empirical verification.

The bounds compare an approximate spectrum ``Pt`` against the exact one
``P`` through the ratio ``sqrt(P / Pt)``:

* uniform sampling (``thm1_lower``): ``ratio <= 1 + 2*sqrt(M**2/p) * gap``
  when ``p >= 4.5 * mu * K * log(K/delta)``;
* power iteration, lower side (``thm2_lower``):
  ``ratio <= 1 + sqrt(M**2 * K)/delta * gap**(t+1)``;
* power iteration, upper side (``thm3_upper``):
  ``ratio >= 1 - sqrt(M**2 * K)/delta * gap**(t+1)``;

each holding with probability at least ``1 - delta``, where
``gap = sigma_{K+1}(S) / sigma_K(S)``.
"""

import json
from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import numpy as np

from ._validation import check_count, check_hermitian, check_random_state
from .cxmat import coherence, gaussian_matrix, hermitian_eig, uniform_sampling_matrix
from .exceptions import ParameterError
from .spectrum import _local_maxima

__all__ = [
    "ETA",
    "BOUND_KINDS",
    "BoundInputs",
    "BoundValue",
    "BoundReport",
    "DetectionReport",
    "LemmaCheck",
    "spectral_gap",
    "theorem1_bound",
    "theorem2_bound",
    "theorem3_bound",
    "verify_bound",
    "detection_consistency_check",
    "lemma_suite",
]

ETA = 0.75
BOUND_KINDS = ("thm1_lower", "thm2_lower", "thm3_upper")


@dataclass(frozen=True)
class BoundInputs:
    M: int
    K: int
    gap: float
    p: int = 1
    t: int = 0
    delta: float = 0.2
    mu: float = 1.0

    def __post_init__(self):
        check_count(self.M, "M")
        check_count(self.K, "K")
        check_count(self.p, "p")
        check_count(self.t, "t", minimum=0)
        if not 0 < self.delta < 1:
            raise ParameterError("delta must lie in (0, 1)")
        if not 0 <= self.gap <= 1:
            raise ParameterError(f"gap must lie in [0, 1], got {self.gap}")
        if not self.mu >= 1:
            raise ParameterError("coherence is at least 1")


class BoundValue(NamedTuple):
    """A bound constant with its side conditions."""

    value: float
    condition_met: bool = True
    vacuous: bool = False


def spectral_gap(S, K):
    """``sigma_{K+1}(S) / sigma_K(S)`` for a Hermitian ``S``."""
    S = check_hermitian(S)
    K = check_count(K, "K", maximum=S.shape[0] - 1)
    sv = np.sort(np.abs(hermitian_eig(S).eigenvalues))[::-1]
    if sv[K - 1] <= 1e-14 * sv[0]:
        raise ParameterError("sigma_K(S) is numerically zero; the gap is undefined")
    return float(sv[K] / sv[K - 1])


def sampling_requirement(K, mu, delta):
    """Smallest ``p`` the uniform-sampling bound asks for."""
    return 4.5 * mu * K * np.log(K / delta)


def theorem1_bound(inputs):
    """``kappa = 1 + 2*sqrt(M**2/p)*gap`` and whether ``p`` meets the sampling condition."""
    kappa = 1.0 + 2.0 * np.sqrt(inputs.M**2 / inputs.p) * inputs.gap
    ok = inputs.p >= sampling_requirement(inputs.K, inputs.mu, inputs.delta)
    return BoundValue(float(kappa), bool(ok))


def _power_term(inputs):
    return np.sqrt(inputs.M**2 * inputs.K) / inputs.delta * inputs.gap ** (inputs.t + 1)


def theorem2_bound(inputs):
    """Lower-side constant ``1 + sqrt(M**2 K)/delta * gap**(t+1)``."""
    return BoundValue(float(1.0 + _power_term(inputs)))


def theorem3_bound(inputs):
    """Upper-side constant ``1 - sqrt(M**2 K)/delta * gap**(t+1)``, clamped at 0.

    A negative raw value makes the bound vacuous; the result is then 0 with
    ``vacuous=True``.
    """
    raw = 1.0 - _power_term(inputs)
    if raw < 0:
        return BoundValue(0.0, True, True)
    return BoundValue(float(raw))


@dataclass
class BoundReport:
    """Outcome of checking one bound against one or more spectrum pairs.

    ``sqrt_p_approx`` and ``sqrt_p_exact`` keep the per-grid-point scatter
    (``x = sqrt(Pt)``, ``y = sqrt(P)/kappa``).
    """

    kind: str
    kappa: float
    ratios: np.ndarray
    n_points: int
    n_violations: int
    max_excess: float
    sqrt_p_approx: np.ndarray = field(repr=False, default=None)
    sqrt_p_exact: np.ndarray = field(repr=False, default=None)
    n_trials: int = 1
    n_failed_trials: int = 0

    @property
    def violation_fraction(self):
        return self.n_violations / self.n_points if self.n_points else 0.0

    @property
    def trial_failure_fraction(self):
        """Share of spectrum pairs with at least one violating grid point."""
        return self.n_failed_trials / self.n_trials if self.n_trials else 0.0

    def histogram(self, bins=20):
        r = np.log10(self.ratios)
        counts, edges = np.histogram(r, bins=bins)
        return {"log10_ratio_edges": edges.tolist(), "counts": counts.tolist()}

    def to_dict(self):
        return {
            "kind": self.kind,
            "kappa": self.kappa,
            "n_points": int(self.n_points),
            "n_violations": int(self.n_violations),
            "max_excess": float(self.max_excess),
            "n_trials": int(self.n_trials),
            "n_failed_trials": int(self.n_failed_trials),
            "ratio_histogram": self.histogram(),
        }

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)

    def scatter_rows(self):
        """``(sqrt(Pt), sqrt(P)/kappa)`` pairs; ``y`` is ``nan`` for a vacuous zero constant."""
        with np.errstate(divide="ignore", invalid="ignore"):
            y = self.sqrt_p_exact / self.kappa if self.kappa > 0 else np.full_like(self.sqrt_p_exact, np.nan)
        return np.column_stack([self.sqrt_p_approx, y])

    @classmethod
    def merge(cls, reports):
        """Pool several reports of the same kind (e.g. across seeds)."""
        reports = list(reports)
        if not reports:
            raise ParameterError("nothing to merge")
        kinds = {r.kind for r in reports}
        if len(kinds) != 1:
            raise ParameterError(f"cannot merge different bound kinds {kinds}")
        return cls(
            kind=reports[0].kind,
            kappa=float(np.max([r.kappa for r in reports])),
            ratios=np.concatenate([r.ratios for r in reports]),
            n_points=sum(r.n_points for r in reports),
            n_violations=sum(r.n_violations for r in reports),
            max_excess=max(r.max_excess for r in reports),
            sqrt_p_approx=np.concatenate([r.sqrt_p_approx for r in reports]),
            sqrt_p_exact=np.concatenate([r.sqrt_p_exact for r in reports]),
            n_trials=sum(r.n_trials for r in reports),
            n_failed_trials=sum(r.n_failed_trials for r in reports),
        )


def verify_bound(P_exact, P_approx, bound, kind):
    """Count grid points where ``sqrt(P/Pt)`` breaks a bound.

    For the lower-side kinds a violation is ``ratio > bound``; for
    ``thm3_upper`` it is ``ratio < bound``.
    """
    if kind not in BOUND_KINDS:
        raise ParameterError(f"kind must be one of {BOUND_KINDS}")
    if P_exact.grid != P_approx.grid:
        raise ParameterError("spectra are sampled on different grids")
    bound = float(getattr(bound, "value", bound))
    sp = np.sqrt(P_exact.values)
    spt = np.sqrt(P_approx.values)
    ratios = sp / spt
    excess = bound - ratios if kind == "thm3_upper" else ratios - bound
    n_viol = int(np.count_nonzero(excess > 0))
    return BoundReport(
        kind=kind,
        kappa=bound,
        ratios=ratios,
        n_points=ratios.size,
        n_violations=n_viol,
        max_excess=float(max(excess.max(), 0.0)),
        sqrt_p_approx=spt,
        sqrt_p_exact=sp,
        n_trials=1,
        n_failed_trials=int(n_viol > 0),
    )


@dataclass
class DetectionReport:
    """Peak-preservation check of an approximate spectrum.

    Attributes
    ----------
    gamma : float
        ``min_k P(theta_k) / P0`` over the exact peaks.
    condition_holds : bool
        Whether ``kappa_l < sqrt(gamma)``, the no-miss condition.
    retained : ndarray of bool
        Per exact peak, whether the approximate spectrum has a local maximum
        within the tolerance window.
    spurious_indices : ndarray of int
        Grid indices of approximate-spectrum maxima outside every window
        that exceed ``(1 + spurious_margin) * P0``.
    """

    gamma: float
    condition_holds: bool
    retained: np.ndarray
    spurious_indices: np.ndarray

    @property
    def n_missed(self):
        return int(np.count_nonzero(~self.retained))

    @property
    def passed(self):
        return self.n_missed == 0 and self.spurious_indices.size == 0


def detection_consistency_check(P_exact, P_approx, peaks, kappa_l, min_separation=3, spurious_margin=0.10):
    """Check that ``P_approx`` keeps every exact peak and adds no false one."""
    if P_exact.grid != P_approx.grid:
        raise ParameterError("spectra are sampled on different grids")
    kappa_l = float(getattr(kappa_l, "value", kappa_l))
    P0 = peaks.baseline
    gamma = float(np.min(peaks.heights) / P0) if len(peaks) and P0 > 0 else float("inf")
    holds = bool(kappa_l < np.sqrt(gamma))

    maxima = _local_maxima(P_approx.values)
    retained = np.array(
        [np.any(np.abs(maxima - i) <= min_separation) for i in peaks.indices], dtype=bool
    )
    outside = np.ones(maxima.size, dtype=bool)
    for i in peaks.indices:
        outside &= np.abs(maxima - i) > min_separation
    cand = maxima[outside]
    spurious = cand[P_approx.values[cand] > (1.0 + spurious_margin) * P0]
    return DetectionReport(gamma, holds, retained, spurious)


@dataclass
class LemmaCheck:
    name: str
    passed: bool
    detail: dict


def _lemma1(points):
    worst = 0.0
    for M, p, seed in points:
        Pi = uniform_sampling_matrix(M, p, seed).matrix
        err = abs(np.linalg.norm(Pi, 2) ** 2 - M / p) / (M / p)
        worst = max(worst, err)
    return LemmaCheck("lemma1_sampling_norm", bool(worst <= 1e-12), {"points": len(points), "max_rel_error": float(worst)})


def _flat_basis(M, K):
    F = np.exp(2j * np.pi * np.outer(np.arange(M), np.arange(K)) / M) / np.sqrt(M)
    return F


def _lemma2(rng, M, K, delta, trials):
    results = {}
    passed = True
    for label, U in (
        ("flat", _flat_basis(M, K)),
        ("random", np.linalg.qr(rng.standard_normal((M, K)) + 1j * rng.standard_normal((M, K)))[0]),
    ):
        mu = coherence(U)
        p = int(np.ceil((6 + 2 * ETA) * mu * K / (3 * ETA**2) * np.log(K / delta)))
        p = min(p, M)
        ok = 0
        for _ in range(trials):
            Pi = uniform_sampling_matrix(M, p, rng).matrix
            G = U.conj().T @ Pi
            smin = np.linalg.svd(G @ G.conj().T, compute_uv=False).min()
            ok += smin >= 1 - ETA
        freq = ok / trials
        results[label] = {"mu": mu, "p": p, "success_rate": freq}
        passed &= freq >= 1 - delta
    return LemmaCheck("lemma2_sampling_subspace", bool(passed), {"eta": ETA, "delta": delta, **results})


def _lemma3(rng, M, K, trials, slack=10.0):
    limit = np.sqrt(M) + np.sqrt(K) + slack
    norms = np.array([np.linalg.norm(gaussian_matrix(M, K, rng).real, 2) for _ in range(trials)])
    freq = float(np.mean(norms <= limit))
    return LemmaCheck(
        "lemma3_gaussian_norm",
        bool(freq >= 0.99),
        {"M": M, "K": K, "limit": float(limit), "max_norm": float(norms.max()), "success_rate": freq},
    )


def _lemma4(rng, K, delta, trials, slack=0.05):
    limit = delta / np.sqrt(K)
    smins = np.array(
        [np.linalg.svd(rng.standard_normal((K, K)), compute_uv=False)[-1] for _ in range(trials)]
    )
    freq = float(np.mean(smins >= limit))
    return LemmaCheck(
        "lemma4_gaussian_smallest_sv",
        bool(freq >= 1 - delta - slack),
        {"K": K, "delta": delta, "limit": float(limit), "success_rate": freq},
    )


def lemma_suite(seed=0, *, lemma2_trials=200, lemma3_trials=200, lemma4_trials=1000):
    """Monte-Carlo checks of the sampling and Gaussian lemmas behind the bounds.

    Returns
    -------
    list of LemmaCheck
    """
    rng = check_random_state(seed)
    sweep = [(M, p, int(rng.integers(2**32))) for M, p in (
        (100, 10), (100, 1), (100, 100), (64, 7), (200, 12), (250, 30), (500, 17), (1000, 12), (37, 5), (2000, 50)
    )]
    return [
        _lemma1(sweep),
        _lemma2(rng, M=1000, K=5, delta=0.1, trials=lemma2_trials),
        _lemma3(rng, M=2000, K=50, trials=lemma3_trials),
        _lemma4(rng, K=20, delta=0.2, trials=lemma4_trials),
    ]


def lemma_report_dict(checks):
    return {"passed": all(c.passed for c in checks), "checks": [asdict(c) for c in checks]}
