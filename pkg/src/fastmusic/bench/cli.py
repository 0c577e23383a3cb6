"""Command line entry point: ``fastmusic-bench <experiment> [options]``.

Writes into ``--out-dir``:

``results.csv`` (or ``results.jsonl``)
    long-format rows with columns :data:`RESULT_COLUMNS`.
``summary.json``
    per-experiment aggregates.
``manifest.json``
    config echo, package version, seeds, schema version and timestamps.

plus experiment-specific tables (bound scatter, normalized spectra).

Exit codes: 0 success, 2 usage or config error (a JSON error record goes to
stderr and nothing is written), 3 finished but some estimator runs failed.
"""

import argparse
import json
import logging
import os
import sys
import time
from datetime import datetime, timezone

from .. import __version__
from .._validation import child_seeds
from ..exceptions import ParameterError
from .config import EXPERIMENTS, load_config, make_config
from .experiments import run_experiment
from .sink import RESULT_COLUMNS, SCHEMA_VERSION, ResultSink

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PARTIAL = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--config", help="YAML config file (see configs/ for annotated examples)")
    common.add_argument("--seed", type=int, help="base seed; trial seeds are derived from it")
    common.add_argument("--n-seeds", type=int, help="number of trial seeds")
    common.add_argument("--out-dir", help="output directory (default: results/<experiment>)")
    common.add_argument("--grid-size", type=int, help="number of angle grid points L")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--threads", type=int, default=1, help="worker threads (runtime_scaling always uses 1)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="fastmusic-bench", description="Fast-MUSIC benchmark experiments.")
    parser.add_argument("--version", action="version", version=f"fastmusic {__version__}")
    sub = parser.add_subparsers(dest="experiment", metavar="experiment")
    sub.required = True
    for name in EXPERIMENTS:
        sub.add_parser(name, parents=[common], help=f"run the {name} experiment")
    return parser


def _resolve_config(ns):
    overrides = {}
    if ns.grid_size is not None:
        overrides["grid"] = {"L": ns.grid_size}
    if ns.n_seeds is not None:
        overrides["n_seeds"] = ns.n_seeds
        overrides["seeds"] = None
    if ns.config:
        if not os.path.isfile(ns.config):
            raise UsageError(f"config file not found: {ns.config}")
        cfg = load_config(ns.config, ns.experiment)
        if overrides:
            base = cfg.to_dict()
            base.pop("experiment")
            if "grid" in overrides:
                overrides["grid"] = {**base["grid"], **overrides["grid"]}
            base.update(overrides)
            cfg = make_config(ns.experiment, **base)
    else:
        cfg = make_config(ns.experiment, **overrides)
    if ns.seed is not None:
        cfg.seeds = child_seeds(ns.seed, cfg.n_seeds)
        cfg.__post_init__()
    if ns.threads < 1:
        raise UsageError("--threads must be at least 1")
    if ns.out_dir:
        cfg.out_dir = ns.out_dir
    else:
        cfg.out_dir = os.path.join(cfg.out_dir, cfg.experiment)
    return cfg


def _usage_error(message):
    sys.stderr.write(json.dumps({"error": "usage", "message": str(message), "exit_code": EXIT_USAGE}) + "\n")
    return EXIT_USAGE


def main(argv=None):
    try:
        ns = build_parser().parse_args(argv)
        cfg = _resolve_config(ns)
    except (UsageError, ParameterError, ValueError, OSError) as exc:
        return _usage_error(exc)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)

    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    started = datetime.now(timezone.utc).isoformat()
    t0 = time.perf_counter()
    result = run_experiment(cfg, threads=ns.threads)
    elapsed = time.perf_counter() - t0

    os.makedirs(cfg.out_dir, exist_ok=True)
    rows_name = "results.csv" if ns.format == "csv" else "results.jsonl"
    with ResultSink(os.path.join(cfg.out_dir, rows_name), ns.format) as sink:
        sink.write_all(result.rows)
    for name, text in result.files.items():
        with open(os.path.join(cfg.out_dir, name), "w", newline="") as fh:
            fh.write(text)
    with open(os.path.join(cfg.out_dir, "summary.json"), "w") as fh:
        json.dump(result.summary, fh, indent=2, sort_keys=True, default=float)
        fh.write("\n")
    manifest = {
        "experiment": cfg.experiment,
        "package": "fastmusic",
        "version": __version__,
        "schema_version": SCHEMA_VERSION,
        "columns": list(RESULT_COLUMNS),
        "config": cfg.to_dict(),
        "seeds": cfg.seeds,
        "n_rows": sink.n_rows,
        "n_failed": sink.n_failed,
        "files": sorted([rows_name, "summary.json", *result.files]),
        "timestamps": {
            "started": started,
            "finished": datetime.now(timezone.utc).isoformat(),
            "elapsed_seconds": elapsed,
        },
    }
    with open(os.path.join(cfg.out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return EXIT_PARTIAL if sink.n_failed else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
