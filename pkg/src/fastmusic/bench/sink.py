"""Result rows and the single writer they are funnelled through."""

import csv
import io
import json
import math
import os
from dataclasses import asdict, dataclass

RESULT_COLUMNS = ("experiment", "method", "point", "seed", "metric", "value", "seconds", "ok")
SCHEMA_VERSION = 1


@dataclass
class ResultRow:
    experiment: str
    method: str
    point: str
    seed: int
    metric: str
    value: float
    seconds: float = 0.0
    ok: bool = True

    def __post_init__(self):
        self.value = float(self.value)
        if self.ok and not math.isfinite(self.value):
            raise ValueError(f"non-finite metric {self.metric}={self.value}")


def format_point(**params):
    return ";".join(f"{k}={v}" for k, v in params.items())


class ResultSink:
    """Append-only CSV or JSON-lines writer.

    Each row is rendered completely in memory and written with one
    ``write`` followed by a flush, so an interrupted run never leaves a
    half-written row behind.
    """

    def __init__(self, path, fmt="csv"):
        if fmt not in ("csv", "json"):
            raise ValueError("fmt must be 'csv' or 'json'")
        self.path = path
        self.fmt = fmt
        self.n_rows = 0
        self.n_failed = 0
        self._fh = open(path, "w", newline="")
        if fmt == "csv":
            self._write_line(RESULT_COLUMNS)

    def _write_line(self, values):
        buf = io.StringIO()
        csv.writer(buf, lineterminator="\n").writerow(values)
        self._fh.write(buf.getvalue())
        self._fh.flush()

    def write(self, row):
        if self.fmt == "csv":
            d = asdict(row)
            d["value"] = repr(d["value"])
            d["seconds"] = repr(d["seconds"])
            d["ok"] = int(d["ok"])
            self._write_line([d[c] for c in RESULT_COLUMNS])
        else:
            self._fh.write(json.dumps(asdict(row), sort_keys=True) + "\n")
            self._fh.flush()
        self.n_rows += 1
        self.n_failed += not row.ok

    def write_all(self, rows):
        for r in rows:
            self.write(r)

    def close(self):
        if not self._fh.closed:
            os.fsync(self._fh.fileno())
            self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
