"""Monte-Carlo experiments comparing the estimators.

Each ``run_*`` function takes an :class:`ExperimentConfig` and returns an
:class:`ExperimentResult` holding long-format :class:`ResultRow` records,
a summary dict, and any extra tables. Trials are independent per seed and
may run in a thread pool; results are collected in seed order, so the
output never depends on scheduling.
"""

import csv
import io
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .._validation import child_seeds
from ..bounds import (
    BOUND_KINDS,
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
from ..cxmat import coherence
from ..estimators import (
    block_lanczos_subspace,
    exact_signal_subspace,
    fast_music_1,
    fast_music_2,
    fft_angle_spectrum,
    matrix_inverse_noise_projector,
    propagator_subspace,
)
from ..exceptions import FastMusicError
from ..scene import (
    FMCWConfig,
    TargetScene,
    named_scene,
    random_scene,
    snr_amplitudes,
    spatial_covariance,
    synthesize_beat_signal,
)
from ..spectrum import AngleGrid, aoa_mse, extract_peaks, music_spectrum, normalize_spectrum, spectrum_sq_error
from .sink import ResultRow, format_point

log = logging.getLogger(__name__)

__all__ = [
    "ExperimentResult",
    "RUNNERS",
    "run_experiment",
    "run_runtime_scaling",
    "run_bound_scatter",
    "run_robust_k",
    "run_tuning",
    "run_spectra_compare",
    "run_mse_vs_snr",
    "run_lemma_suite",
    "growth_exponent",
]

LARGE_M = 2000
LARGE_M_REPETITIONS = 20
RESOLVE_TOL_DEG = 0.5


@dataclass
class ExperimentResult:
    rows: list
    summary: dict = field(default_factory=dict)
    # extra artifacts: file name -> text content
    files: dict = field(default_factory=dict)

    @property
    def n_failed(self):
        return sum(not r.ok for r in self.rows)

    def frame(self):
        """Rows as a dict of columns, handy for quick analysis."""
        cols = {}
        for r in self.rows:
            for k, v in vars(r).items():
                cols.setdefault(k, []).append(v)
        return cols

    def values(self, metric, method=None, point=None, ok_only=True):
        return np.array([
            r.value for r in self.rows
            if r.metric == metric
            and (method is None or r.method == method)
            and (point is None or r.point == point)
            and (r.ok or not ok_only)
        ])


def _grid(cfg):
    g = cfg.grid
    return AngleGrid(int(g["L"]), math.radians(g["lo_deg"]), math.radians(g["hi_deg"]))


def _map(fn, items, threads):
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _draw(cfg, M, N, K, snr_db, seed):
    """Scene, signal matrix and covariance for one trial."""
    fmcw = FMCWConfig.automotive(M, N)
    rng = np.random.default_rng(seed)
    if cfg.scene:
        scene = named_scene(cfg.scene, fmcw, snr_db, rng, noise_var=cfg.noise_var)
    else:
        scene = random_scene(
            fmcw, K, snr_db, rng, noise_var=cfg.noise_var,
            fov_deg=tuple(cfg.fov_deg), min_separation_deg=cfg.min_separation_deg,
        )
    Y = synthesize_beat_signal(fmcw, scene, cfg.noise_var, rng)
    return scene, Y, spatial_covariance(Y)


def _subspace(method, S, Y, K, p, t, seed):
    if method == "exact":
        return exact_signal_subspace(S, K)
    if method == "fast1":
        return fast_music_1(S, K, min(p, S.shape[0]), seed)
    if method == "fast2":
        return fast_music_2(S, K, min(p, S.shape[0]), t, seed)
    if method == "lanczos":
        return block_lanczos_subspace(S, K, seed=seed)
    if method == "propagator":
        return propagator_subspace(Y, K)
    if method == "matrix_inverse":
        return matrix_inverse_noise_projector(S, K)
    raise ValueError(f"{method} has no subspace step")


def _spectrum(method, S, Y, K, p, t, seed, grid):
    """Pseudo-spectrum of ``method`` and the seconds spent in its subspace step."""
    if method == "fft":
        return fft_angle_spectrum(Y, max(4 * Y.shape[0], 1024), grid), 0.0
    est = _subspace(method, S, Y, K, p, t, seed)
    if method == "matrix_inverse":
        return est.spectrum(grid), est.cost
    return music_spectrum(est, grid), est.cost


def _fail_row(exp, method, point, seed, metric, exc):
    log.warning("%s/%s at %s seed %s failed: %s", exp, method, point, seed, exc)
    return ResultRow(exp, method, point, seed, metric, float("nan"), 0.0, ok=False)


def growth_exponent(sizes, times):
    """Least-squares slope of ``log(time)`` against ``log(size)``."""
    x = np.log(np.asarray(sizes, dtype=float))
    y = np.log(np.asarray(times, dtype=float))
    return float(np.polyfit(x, y, 1)[0])


# ---------------------------------------------------------------- runtime


def _runtime_trial(args):
    cfg, M, seed = args
    N = cfg.N or M
    _, Y, S = _draw(cfg, M, N, cfg.K, cfg.snr_db, seed)
    reps = cfg.repetitions if M < LARGE_M else min(cfg.repetitions, LARGE_M_REPETITIONS)
    rep_seeds = child_seeds(seed, reps)
    rows = []
    point = format_point(M=M, N=N)
    for method in cfg.methods:
        if method == "fft":
            continue
        try:
            costs = [_subspace(method, S, Y, cfg.K, cfg.p, cfg.t, s).cost for s in rep_seeds]
        except FastMusicError as exc:
            rows.append(_fail_row(cfg.experiment, method, point, seed, "subspace_seconds", exc))
            continue
        med = float(np.median(costs))
        rows.append(ResultRow(cfg.experiment, method, point, seed, "subspace_seconds", med, med))
    return rows


def run_runtime_scaling(cfg, threads=1):
    """Median subspace-extraction time per method and array size.

    Timing runs serially regardless of ``threads`` so measurements do not
    contend for cores.
    """
    tasks = [(cfg, int(M), s) for M in cfg.sweep for s in cfg.seeds]
    rows = [r for rs in _map(_runtime_trial, tasks, 1) for r in rs]
    res = ExperimentResult(rows)
    summary = {"median_seconds": {}, "growth_exponent": {}}
    for method in cfg.methods:
        per_M = {}
        for M in cfg.sweep:
            v = res.values("subspace_seconds", method, format_point(M=int(M), N=cfg.N or int(M)))
            if v.size:
                per_M[int(M)] = float(np.median(v))
        if per_M:
            summary["median_seconds"][method] = per_M
        if len(per_M) >= 2:
            summary["growth_exponent"][method] = growth_exponent(list(per_M), list(per_M.values()))
    res.summary = summary
    return res


# ---------------------------------------------------------------- bounds


def _bound_trial(args):
    cfg, seed = args
    grid = _grid(cfg)
    M, N, K = cfg.M, cfg.N or cfg.M, cfg.K
    _, Y, S = _draw(cfg, M, N, K, cfg.snr_db, seed)
    sk = child_seeds(seed, 2)
    exact = exact_signal_subspace(S, K)
    P = music_spectrum(exact, grid)
    gap = spectral_gap(S, K)
    mu = coherence(exact.basis)
    point = format_point(M=M, N=N, K=K, p=cfg.p, t=cfg.t, delta=cfg.delta)
    exp = cfg.experiment
    rows = [ResultRow(exp, "exact", point, seed, "spectral_gap", gap)]
    reports = []
    if "fast1" in cfg.methods:
        b1 = theorem1_bound(BoundInputs(M, K, gap, p=cfg.p, delta=cfg.delta, mu=mu))
        try:
            P1 = music_spectrum(fast_music_1(S, K, cfg.p, sk[0]), grid)
        except FastMusicError as exc:
            rows.append(_fail_row(exp, "fast1", point, seed, "thm1_lower_violations", exc))
        else:
            reports.append(("fast1", verify_bound(P, P1, b1, "thm1_lower")))
        rows.append(ResultRow(exp, "fast1", point, seed, "sampling_condition_met", float(b1.condition_met)))
    if "fast2" in cfg.methods:
        bi = BoundInputs(M, K, gap, p=cfg.p, t=cfg.t, delta=cfg.delta)
        b3 = theorem3_bound(bi)
        try:
            P2 = music_spectrum(fast_music_2(S, K, cfg.p, cfg.t, sk[1]), grid)
        except FastMusicError as exc:
            rows.append(_fail_row(exp, "fast2", point, seed, "thm2_lower_violations", exc))
        else:
            reports.append(("fast2", verify_bound(P, P2, theorem2_bound(bi), "thm2_lower")))
            reports.append(("fast2", verify_bound(P, P2, b3, "thm3_upper")))
        rows.append(ResultRow(exp, "fast2", point, seed, "thm3_vacuous", float(b3.vacuous)))
    for method, rep in reports:
        rows += [
            ResultRow(exp, method, point, seed, f"{rep.kind}_kappa", rep.kappa),
            ResultRow(exp, method, point, seed, f"{rep.kind}_violations", rep.n_violations),
            ResultRow(exp, method, point, seed, f"{rep.kind}_violation_fraction", rep.violation_fraction),
            ResultRow(exp, method, point, seed, f"{rep.kind}_max_excess", rep.max_excess),
        ]
    return rows, [(seed, rep) for _, rep in reports]


def run_bound_scatter(cfg, threads=1):
    """Empirical check of the three spectrum bounds plus the scatter behind them."""
    grid = _grid(cfg)
    out = _map(_bound_trial, [(cfg, s) for s in cfg.seeds], threads)
    rows = [r for rs, _ in out for r in rs]
    by_kind = {}
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["seed", "kind", "theta_deg", "sqrt_p_approx", "sqrt_p_exact_over_kappa"])
    thetas = np.rad2deg(grid.thetas)
    for _, reps in out:
        for seed, rep in reps:
            by_kind.setdefault(rep.kind, []).append(rep)
            for th, (x, y) in zip(thetas, rep.scatter_rows()):
                w.writerow([seed, rep.kind, f"{th:.6g}", repr(float(x)), repr(float(y))])
    merged = {k: BoundReport.merge(v) for k, v in by_kind.items()}
    summary = {
        k: {
            "trial_failure_fraction": m.trial_failure_fraction,
            "mean_violation_fraction": m.violation_fraction,
            "max_excess": m.max_excess,
            "n_trials": m.n_trials,
            "delta": cfg.delta,
        }
        for k, m in merged.items()
    }
    files = {
        "bound_scatter.csv": buf.getvalue(),
        "bound_reports.json": json.dumps({k: m.to_dict() for k, m in merged.items()}, indent=2, sort_keys=True),
    }
    return ExperimentResult(rows, summary, files)


# ---------------------------------------------------------------- robustness to K


def _robust_trial(args):
    cfg, seed = args
    grid = _grid(cfg)
    M, N, K = cfg.M, cfg.N, cfg.K
    _, Y, S = _draw(cfg, M, N, K, cfg.snr_db, seed)
    P = music_spectrum(exact_signal_subspace(S, K), grid)
    peaks = extract_peaks(P, K, cfg.peak_separation)
    sk = child_seeds(seed, len(cfg.sweep))
    rows = []
    for k_guess, s in zip(cfg.sweep, sk):
        k_guess = int(k_guess)
        p = min(int(round(1.2 * k_guess)), M)
        point = format_point(K_true=K, K_guess=k_guess, p=p)
        try:
            est = fast_music_1(S, k_guess, p, s)
        except FastMusicError as exc:
            rows.append(_fail_row(cfg.experiment, "fast1", point, seed, "n_retained", exc))
            continue
        Pt = music_spectrum(est, grid)
        det = detection_consistency_check(P, Pt, peaks, 1.0, min_separation=1)
        n_ret = int(np.count_nonzero(det.retained))
        rows += [
            ResultRow(cfg.experiment, "fast1", point, seed, "n_retained", n_ret, est.cost),
            ResultRow(cfg.experiment, "fast1", point, seed, "all_retained", float(n_ret == len(peaks))),
            ResultRow(cfg.experiment, "fast1", point, seed, "missed", K - n_ret),
            ResultRow(cfg.experiment, "fast1", point, seed, "sq_error", spectrum_sq_error(Pt, P)),
        ]
    return rows


def run_robust_k(cfg, threads=1):
    """Fast-MUSIC 1 with a guessed target count against exact MUSIC with the true one."""
    rows = [r for rs in _map(_robust_trial, [(cfg, s) for s in cfg.seeds], threads) for r in rs]
    res = ExperimentResult(rows)
    summary = {}
    for k_guess in cfg.sweep:
        p = min(int(round(1.2 * int(k_guess))), cfg.M)
        point = format_point(K_true=cfg.K, K_guess=int(k_guess), p=p)
        allr = res.values("all_retained", "fast1", point)
        summary[str(k_guess)] = {
            "retention_rate": float(allr.mean()) if allr.size else float("nan"),
            "median_sq_error": float(np.median(res.values("sq_error", "fast1", point))) if allr.size else float("nan"),
        }
    res.summary = summary
    return res


# ---------------------------------------------------------------- tuning


def _sq_error_row(exp, method, point, seed, P, grid, estimate):
    try:
        est = estimate()
    except FastMusicError as exc:
        return _fail_row(exp, method, point, seed, "sq_error", exc)
    return ResultRow(exp, method, point, seed, "sq_error", spectrum_sq_error(music_spectrum(est, grid), P), est.cost)


def _tune_trial(args):
    cfg, seed = args
    grid = _grid(cfg)
    M, N, K = cfg.M, cfg.N or cfg.M, cfg.K
    _, Y, S = _draw(cfg, M, N, K, cfg.snr_db, seed)
    P = music_spectrum(exact_signal_subspace(S, K), grid)
    sk = child_seeds(seed, len(cfg.sweep) + len(cfg.t_sweep))
    rows = []
    for factor, s in zip(cfg.sweep, sk):
        p = min(int(factor) * K, M)
        point = format_point(p=p, p_over_K=int(factor))
        rows.append(_sq_error_row(cfg.experiment, "fast1", point, seed, P, grid,
                                  lambda: fast_music_1(S, K, p, s)))
    for t, s in zip(cfg.t_sweep, sk[len(cfg.sweep):]):
        point = format_point(p=K, t=int(t))
        rows.append(_sq_error_row(cfg.experiment, "fast2", point, seed, P, grid,
                                  lambda: fast_music_2(S, K, K, int(t), s)))
    return rows


def run_tuning(cfg, threads=1):
    """Spectrum error against exact MUSIC over ``p`` (fast1) and ``t`` (fast2)."""
    rows = [r for rs in _map(_tune_trial, [(cfg, s) for s in cfg.seeds], threads) for r in rs]
    res = ExperimentResult(rows)
    K = cfg.K
    res.summary = {}
    if cfg.sweep:
        res.summary["fast1_median_sq_error"] = {
            int(f): float(np.median(res.values("sq_error", "fast1", format_point(p=min(int(f) * K, cfg.M), p_over_K=int(f)))))
            for f in cfg.sweep
        }
    if cfg.t_sweep:
        res.summary["fast2_median_sq_error"] = {
            int(t): float(np.median(res.values("sq_error", "fast2", format_point(p=K, t=int(t)))))
            for t in cfg.t_sweep
        }
    return res


# ---------------------------------------------------------------- spectra comparison


def _n_resolved(truth, peaks, tol):
    """Targets with a distinct selected peak within ``tol`` radians."""
    free = list(peaks.angles)
    hit = 0
    for th in truth:
        if not free:
            break
        d = np.abs(np.array(free) - th)
        j = int(np.argmin(d))
        if d[j] <= tol:
            hit += 1
            free.pop(j)
    return hit


def _compare_trial(args):
    cfg, seed, keep_spectra = args
    grid = _grid(cfg)
    M, K = cfg.M, cfg.K
    rng = np.random.default_rng(seed)
    ref = FMCWConfig.automotive(M, max(int(n) for n in cfg.sweep))
    if cfg.scene:
        scene = named_scene(cfg.scene, ref, cfg.snr_db, rng, noise_var=cfg.noise_var)
    else:
        scene = random_scene(ref, K, cfg.snr_db, rng, noise_var=cfg.noise_var,
                             fov_deg=tuple(cfg.fov_deg), min_separation_deg=cfg.min_separation_deg)
    sk = child_seeds(seed, len(cfg.sweep))
    rows, spectra, exact_peaks = [], [], {}
    exp = cfg.experiment
    for N, s in zip(cfg.sweep, sk):
        N = int(N)
        fmcw = FMCWConfig.automotive(M, N)
        Y = synthesize_beat_signal(fmcw, scene, cfg.noise_var, s)
        S = spatial_covariance(Y)
        point = format_point(M=M, N=N, K=scene.K)
        normalized = {}
        for method in cfg.methods:
            try:
                P, cost = _spectrum(method, S, Y, scene.K, cfg.p, cfg.t, s, grid)
            except FastMusicError as exc:
                rows.append(_fail_row(exp, method, point, seed, "aoa_mse", exc))
                continue
            peaks = extract_peaks(P, scene.K, cfg.peak_separation)
            Pn = normalize_spectrum(P)
            normalized[method] = Pn
            if method == "exact":
                exact_peaks[N] = peaks
            rows += [
                ResultRow(exp, method, point, seed, "aoa_mse", aoa_mse(scene.thetas, peaks), cost),
                ResultRow(exp, method, point, seed, "n_resolved",
                          _n_resolved(scene.thetas, peaks, math.radians(RESOLVE_TOL_DEG))),
                ResultRow(exp, method, point, seed, "peak_shortfall", peaks.shortfall),
            ]
            if keep_spectra:
                spectra.append((N, method, Pn))
        if "exact" in normalized and N in exact_peaks:
            idx = exact_peaks[N].indices
            for method, Pn in normalized.items():
                if method == "exact":
                    continue
                diff = float(np.max(np.abs(Pn.values[idx] - normalized["exact"].values[idx])))
                rows.append(ResultRow(exp, method, point, seed, "peak_normalized_diff", diff))
    if len(exact_peaks) >= 2:
        first, *rest = [exact_peaks[int(n)] for n in cfg.sweep if int(n) in exact_peaks]
        shift = 0
        for other in rest:
            if len(other) == len(first):
                shift = max(shift, int(np.max(np.abs(other.indices - first.indices))))
            else:
                shift = max(shift, grid.L)
        rows.append(ResultRow(exp, "exact", format_point(M=M, N="/".join(map(str, cfg.sweep))), seed,
                              "peak_shift_cells", shift))
    return rows, spectra


def run_spectra_compare(cfg, threads=1):
    """Normalized spectra of every method on one scene at several snapshot counts."""
    grid = _grid(cfg)
    tasks = [(cfg, s, i == 0) for i, s in enumerate(cfg.seeds)]
    out = _map(_compare_trial, tasks, threads)
    rows = [r for rs, _ in out for r in rs]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["N", "method", "theta_deg", "normalized_value"])
    thetas = np.rad2deg(grid.thetas)
    for _, spectra in out:
        for N, method, Pn in spectra:
            for th, v in zip(thetas, Pn.values):
                w.writerow([N, method, f"{th:.6g}", repr(float(v))])
    res = ExperimentResult(rows, files={"normalized_spectra.csv": buf.getvalue()})
    summary = {}
    for N in cfg.sweep:
        for method in cfg.methods:
            point_rows = [r for r in rows if r.method == method and r.point.startswith(f"M={cfg.M};N={int(N)};")]
            mse = [r.value for r in point_rows if r.metric == "aoa_mse" and r.ok]
            resolved = [r.value for r in point_rows if r.metric == "n_resolved"]
            diff = [r.value for r in point_rows if r.metric == "peak_normalized_diff"]
            summary[f"N={int(N)}/{method}"] = {
                "mean_aoa_mse": float(np.mean(mse)) if mse else float("nan"),
                "median_n_resolved": float(np.median(resolved)) if resolved else float("nan"),
                "median_peak_normalized_diff": float(np.median(diff)) if diff else float("nan"),
                "failures": sum(not r.ok for r in point_rows),
            }
    shifts = res.values("peak_shift_cells", "exact")
    if shifts.size:
        summary["exact_peak_shift_cells_median"] = float(np.median(shifts))
    res.summary = summary
    return res


# ---------------------------------------------------------------- MSE vs SNR


def mse_scenes(cfg, seed):
    """Yield ``(snr_db, noise_seed, scene, Y, S)`` for one seed of an SNR sweep.

    Target angles and delays are drawn once per seed; only the amplitudes
    and the noise change with SNR.
    """
    M, N, K = cfg.M, cfg.N or cfg.M, cfg.K
    fmcw = FMCWConfig.automotive(M, N)
    rng = np.random.default_rng(seed)
    base = random_scene(fmcw, K, 0.0, rng, noise_var=cfg.noise_var,
                        fov_deg=tuple(cfg.fov_deg), min_separation_deg=cfg.min_separation_deg)
    unit = base.alphas / np.abs(base.alphas)
    for snr, s in zip(cfg.sweep, child_seeds(seed, len(cfg.sweep))):
        scene = TargetScene(base.thetas, base.taus, unit * snr_amplitudes(K, float(snr), cfg.noise_var),
                            min_separation=base.min_separation)
        Y = synthesize_beat_signal(fmcw, scene, cfg.noise_var, s)
        yield snr, s, scene, Y, spatial_covariance(Y)


def _mse_trial(args):
    cfg, seed = args
    grid = _grid(cfg)
    K = cfg.K
    rows = []
    for snr, s, scene, Y, S in mse_scenes(cfg, seed):
        point = format_point(snr_db=snr)
        for method in cfg.methods:
            try:
                P, cost = _spectrum(method, S, Y, K, cfg.p, cfg.t, s, grid)
            except FastMusicError as exc:
                rows.append(_fail_row(cfg.experiment, method, point, seed, "aoa_mse", exc))
                continue
            peaks = extract_peaks(P, K, cfg.peak_separation)
            rows.append(ResultRow(cfg.experiment, method, point, seed, "aoa_mse", aoa_mse(scene.thetas, peaks), cost))
    return rows


def run_mse_vs_snr(cfg, threads=1):
    """Mean angle MSE per method over an SNR sweep; the scene geometry is fixed per seed."""
    rows = [r for rs in _map(_mse_trial, [(cfg, s) for s in cfg.seeds], threads) for r in rs]
    res = ExperimentResult(rows)
    summary = {}
    for method in cfg.methods:
        summary[method] = {}
        for snr in cfg.sweep:
            point = format_point(snr_db=snr)
            v = res.values("aoa_mse", method, point)
            fails = len([r for r in rows if r.method == method and r.point == point and not r.ok])
            summary[method][str(snr)] = {
                "mean_mse": float(v.mean()) if v.size else float("nan"),
                "median_mse": float(np.median(v)) if v.size else float("nan"),
                "failures": fails,
            }
    res.summary = summary
    return res


# ---------------------------------------------------------------- lemmas


def run_lemma_suite(cfg, threads=1):
    """Monte-Carlo checks of the sampling and Gaussian lemmas."""
    rows, summary = [], {}
    for seed in cfg.seeds:
        for chk in lemma_suite(seed):
            rows.append(ResultRow(cfg.experiment, "lemma", chk.name, seed, "passed", float(chk.passed)))
            for k, v in chk.detail.items():
                if isinstance(v, (int, float)) and not isinstance(v, bool):
                    rows.append(ResultRow(cfg.experiment, "lemma", chk.name, seed, k, v))
            summary.setdefault(chk.name, []).append({"passed": chk.passed, **chk.detail})
    return ExperimentResult(rows, summary)


RUNNERS = {
    "runtime_scaling": run_runtime_scaling,
    "bound_scatter": run_bound_scatter,
    "robust_k": run_robust_k,
    "tune": run_tuning,
    "tune_p": run_tuning,
    "tune_t": run_tuning,
    "spectra_compare": run_spectra_compare,
    "mse_vs_snr": run_mse_vs_snr,
    "lemma_suite": run_lemma_suite,
}


def run_experiment(cfg, threads=1):
    return RUNNERS[cfg.experiment](cfg, threads=threads)
