"""Reading and writing instances, vectors and result tables.

Matrices use the MatrixMarket array format (via :mod:`scipy.io`); vectors
are plain text with one ``%.17g`` value per line, so they round-trip
exactly.
"""

from __future__ import annotations

import csv
import json
import os

import numpy as np
import scipy.io

from .linop import dense_operator
from .problems import ProblemInstance

SCHEMA_VERSION = 1
SCHEMA_LINE = f"# epdsparse results schema={SCHEMA_VERSION}"

RESULT_COLUMNS = (
    "matrix_type", "signal_type", "n", "m", "K", "theta", "seed",
    "relerr", "res", "nnzx", "sgn", "miss", "over", "success",
    "nmat", "outer_iters", "exit_stage",
)
TIMING_COLUMNS = ("n", "m", "seed", "time_s")


class InputError(ValueError):
    """Malformed or inconsistent input files."""


def write_vector(path, x) -> None:
    x = np.asarray(x, dtype=float).reshape(-1)
    with open(path, "w") as fh:
        for val in x:
            fh.write("%.17g\n" % val)


def read_vector(path) -> np.ndarray:
    try:
        x = np.loadtxt(path, dtype=float, comments=("#", "%"), ndmin=1)
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read vector from {path}: {exc}") from exc
    if x.ndim != 1:
        raise InputError(f"{path}: expected one value per line")
    if not np.all(np.isfinite(x)):
        raise InputError(f"{path}: non-finite entries")
    return x


def write_matrix(path, A) -> None:
    scipy.io.mmwrite(path, np.asarray(A, dtype=float), precision=17)


def read_matrix(path) -> np.ndarray:
    try:
        A = scipy.io.mmread(path)
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read matrix from {path}: {exc}") from exc
    if hasattr(A, "toarray"):
        A = A.toarray()
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or not np.all(np.isfinite(A)):
        raise InputError(f"{path}: expected a finite two-dimensional matrix")
    return A


def load_instance(a_path, b_path, x_path=None, delta: float = 0.0) -> ProblemInstance:
    A = read_matrix(a_path)
    b = read_vector(b_path)
    if A.shape[0] != b.size:
        raise InputError(f"A has {A.shape[0]} rows but b has {b.size} entries")
    x_true = None
    if x_path is not None:
        x_true = read_vector(x_path)
        if x_true.size != A.shape[1]:
            raise InputError(f"A has {A.shape[1]} columns but x_true has {x_true.size} entries")
    return ProblemInstance(dense_operator(A), b, delta, x_true,
                           label=os.path.basename(str(a_path)))


def save_instance(directory, instance: ProblemInstance) -> dict:
    """Write ``A.mtx``, ``b.txt``, optional ``x_true.txt`` and ``meta.json``."""
    os.makedirs(directory, exist_ok=True)
    paths = {"A": os.path.join(directory, "A.mtx"), "b": os.path.join(directory, "b.txt")}
    write_matrix(paths["A"], instance.op.to_dense())
    write_vector(paths["b"], instance.b)
    if instance.x_true is not None:
        paths["x_true"] = os.path.join(directory, "x_true.txt")
        write_vector(paths["x_true"], instance.x_true)
    meta = {
        "label": instance.label, "m": instance.m, "n": instance.n,
        "operator": instance.op.kind, "matrix_type": instance.matrix_type,
        "signal_type": instance.signal_type, "seed": instance.seed,
        "theta": instance.theta, "K": instance.K,
    }
    if instance.op.row_selection is not None:
        meta["row_selection"] = instance.op.row_selection.tolist()
    paths["meta"] = os.path.join(directory, "meta.json")
    with open(paths["meta"], "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return paths


def _fmt(val):
    if val is None:
        return ""
    if isinstance(val, bool):
        return "1" if val else "0"
    if isinstance(val, float):
        return "%.17g" % val
    return str(val)


def write_table(path, columns, rows, header_line=None) -> None:
    """CSV with a fixed column order; floats use ``%.17g`` for reproducibility."""
    with open(path, "w", newline="") as fh:
        if header_line:
            fh.write(header_line + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row.get(c)) for c in columns])


def read_table(path) -> list[dict]:
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def read_config(path) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment, blank lines are ignored."""
    out = {}
    try:
        fh = open(path)
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InputError(f"{path}:{lineno}: expected key = value")
            key, val = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = val
    return out
