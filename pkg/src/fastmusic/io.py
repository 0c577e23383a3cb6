"""File formats: scene descriptions and complex matrix dumps.

Scene files (YAML)::

    min_separation_deg: 0.2      # optional
    targets:
      - {theta_deg: 30.0, tau_s: 2.0e-8, alpha_re: 1.0, alpha_im: 0.0}
      - {theta_deg: 42.5, tau_s: 5.5e-8, alpha_re: 0.0, alpha_im: 0.7}

Binary matrices (little endian)::

    offset  size  field
    0       4     magic b"CXM1"
    4       4     uint32 format version (1)
    8       8     uint64 rows
    16      8     uint64 cols
    24      8*r*c complex64 entries, row-major, each as (float32 re, float32 im)

CSV matrices are long format with header ``row,col,re,im``.
"""

import csv
import struct

import numpy as np
import yaml

from .exceptions import ParameterError
from .scene import TargetScene

__all__ = [
    "MATRIX_MAGIC",
    "load_scene",
    "save_scene",
    "write_matrix_binary",
    "read_matrix_binary",
    "write_matrix_csv",
    "read_matrix_csv",
]

MATRIX_MAGIC = b"CXM1"
MATRIX_VERSION = 1
_HEADER = struct.Struct("<4sIQQ")


def scene_to_dict(scene):
    return {
        "min_separation_deg": float(np.rad2deg(scene.min_separation)),
        "targets": [
            {
                "theta_deg": float(np.rad2deg(th)),
                "tau_s": float(tau),
                "alpha_re": float(a.real),
                "alpha_im": float(a.imag),
            }
            for th, tau, a in zip(scene.thetas, scene.taus, scene.alphas)
        ],
    }


def scene_from_dict(data):
    try:
        targets = data["targets"]
        th = [np.deg2rad(float(t["theta_deg"])) for t in targets]
        tau = [float(t.get("tau_s", 0.0)) for t in targets]
        al = [complex(float(t.get("alpha_re", 1.0)), float(t.get("alpha_im", 0.0))) for t in targets]
    except (KeyError, TypeError, ValueError) as exc:
        raise ParameterError(f"malformed scene description: {exc}") from exc
    sep = np.deg2rad(float(data.get("min_separation_deg", 0.2)))
    return TargetScene(np.array(th), np.array(tau), np.array(al), min_separation=sep)


def save_scene(scene, path):
    with open(path, "w") as fh:
        yaml.safe_dump(scene_to_dict(scene), fh, sort_keys=False)


def load_scene(path):
    with open(path) as fh:
        data = yaml.safe_load(fh)
    if not isinstance(data, dict):
        raise ParameterError(f"{path}: expected a mapping with a 'targets' list")
    return scene_from_dict(data)


def write_matrix_binary(A, path):
    A = np.asarray(A, dtype=np.complex64)
    if A.ndim != 2:
        raise ParameterError("only 2-D matrices can be written")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MATRIX_MAGIC, MATRIX_VERSION, A.shape[0], A.shape[1]))
        fh.write(np.ascontiguousarray(A).astype("<c8").tobytes())


def read_matrix_binary(path):
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) != _HEADER.size:
            raise ParameterError(f"{path}: truncated header")
        magic, version, rows, cols = _HEADER.unpack(head)
        if magic != MATRIX_MAGIC:
            raise ParameterError(f"{path}: bad magic {magic!r}")
        if version != MATRIX_VERSION:
            raise ParameterError(f"{path}: unsupported version {version}")
        payload = fh.read()
    if len(payload) != rows * cols * 8:
        raise ParameterError(f"{path}: expected {rows * cols * 8} payload bytes, found {len(payload)}")
    return np.frombuffer(payload, dtype="<c8").reshape(rows, cols).astype(np.complex128)


def write_matrix_csv(A, path):
    A = np.asarray(A)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["row", "col", "re", "im"])
        for (i, j), v in np.ndenumerate(A):
            w.writerow([i, j, repr(float(v.real)), repr(float(v.imag))])


def read_matrix_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ParameterError(f"{path}: empty matrix file")
    r = max(int(x["row"]) for x in rows) + 1
    c = max(int(x["col"]) for x in rows) + 1
    A = np.zeros((r, c), dtype=np.complex128)
    for x in rows:
        A[int(x["row"]), int(x["col"])] = complex(float(x["re"]), float(x["im"]))
    return A
