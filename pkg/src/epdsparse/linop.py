"""Matrix-free linear operators with matvec accounting.

Three storage kinds are supported:

``dense``
    an explicit ``m x n`` array.
``partial-dct``
    ``m`` rows of the orthonormal type-II DCT of size ``n``.
``partial-hadamard``
    ``m`` rows of the Sylvester-ordered Hadamard matrix of size ``n``
    (``n`` a power of two).

Every forward and adjoint application is counted so that solvers can
report ``nMat``, the total number of products with ``A`` and ``A^T``.
"""

from __future__ import annotations

import threading
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.fft

KINDS = ("dense", "partial-dct", "partial-hadamard")


class MatvecCounter:
    """Thread-safe tally of forward and adjoint applications."""

    def __init__(self):
        self._lock = threading.Lock()
        self.n_forward = 0
        self.n_adjoint = 0

    @property
    def nmat(self) -> int:
        return self.n_forward + self.n_adjoint

    def add(self, forward: int = 0, adjoint: int = 0) -> None:
        with self._lock:
            self.n_forward += forward
            self.n_adjoint += adjoint

    def reset(self) -> None:
        with self._lock:
            self.n_forward = 0
            self.n_adjoint = 0

    def __repr__(self):
        return f"MatvecCounter(n_forward={self.n_forward}, n_adjoint={self.n_adjoint})"


def fwht(x: np.ndarray) -> np.ndarray:
    """Unnormalized fast Walsh-Hadamard transform in Sylvester (natural) order.

    Returns ``H @ x`` where ``H[i, j] = (-1) ** popcount(i & j)``.
    """
    x = np.array(x, dtype=float)
    n = x.shape[0]
    if n & (n - 1):
        raise ValueError(f"length {n} is not a power of two")
    h = 1
    while h < n:
        x = x.reshape(-1, 2, h)
        a = x[:, 0, :].copy()
        b = x[:, 1, :]
        x[:, 0, :] += b
        x[:, 1, :] = a - b
        x = x.reshape(n)
        h *= 2
    return x


@dataclass(eq=False)
class LinearOperator:
    """A real ``m x n`` operator ``scale * A``.

    Construct through :func:`dense_operator`, :func:`partial_dct` or
    :func:`partial_hadamard`. Instances are not mutated after
    construction except through their counter.
    """

    kind: str
    m: int
    n: int
    row_selection: np.ndarray | None = None
    dense_values: np.ndarray | None = None
    scale: float = 1.0
    counter: MatvecCounter = field(default_factory=MatvecCounter, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown operator kind {self.kind!r}")
        if not self.scale > 0:
            raise ValueError("scale must be positive")
        if self.kind == "dense":
            vals = np.asarray(self.dense_values, dtype=float)
            if vals.shape != (self.m, self.n):
                raise ValueError(f"dense values have shape {vals.shape}, expected {(self.m, self.n)}")
            self.dense_values = vals
        else:
            rows = np.asarray(self.row_selection, dtype=np.int64)
            if rows.shape != (self.m,):
                raise ValueError("row_selection must list exactly m rows")
            if rows.size and (rows.min() < 0 or rows.max() >= self.n):
                raise ValueError("row_selection entries must lie in [0, n)")
            if np.unique(rows).size != rows.size:
                raise ValueError("row_selection entries must be distinct")
            if self.kind == "partial-hadamard" and self.n & (self.n - 1):
                raise ValueError(f"Hadamard operators need n a power of two, got {self.n}")
            self.row_selection = rows

    @property
    def shape(self) -> tuple[int, int]:
        return (self.m, self.n)

    @property
    def implicit(self) -> bool:
        return self.kind != "dense"

    @property
    def nmat(self) -> int:
        return self.counter.nmat

    def matvec(self, x, count: bool = True):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise ValueError(f"expected vector of length {self.n}, got shape {x.shape}")
        if count:
            self.counter.add(forward=1)
        if self.kind == "dense":
            out = self.dense_values @ x
        elif self.kind == "partial-dct":
            out = scipy.fft.dct(x, type=2, norm="ortho")[self.row_selection]
        else:
            out = fwht(x)[self.row_selection]
        return self.scale * out

    def rmatvec(self, y, count: bool = True):
        y = np.asarray(y, dtype=float)
        if y.shape != (self.m,):
            raise ValueError(f"expected vector of length {self.m}, got shape {y.shape}")
        if count:
            self.counter.add(adjoint=1)
        if self.kind == "dense":
            out = self.dense_values.T @ y
        else:
            full = np.zeros(self.n)
            full[self.row_selection] = y
            if self.kind == "partial-dct":
                out = scipy.fft.idct(full, type=2, norm="ortho")
            else:
                # H is symmetric
                out = fwht(full)
        return self.scale * out

    def to_dense(self) -> np.ndarray:
        """Materialize the operator (testing and export only; not counted)."""
        if self.kind == "dense":
            return self.scale * self.dense_values
        eye = np.eye(self.n)
        if self.kind == "partial-dct":
            full = scipy.fft.dct(eye, type=2, norm="ortho", axis=0)
        else:
            full = np.array([fwht(col) for col in eye]).T
        return self.scale * full[self.row_selection]

    def with_scale(self, scale: float) -> "LinearOperator":
        """Copy with a new scale factor and a fresh counter."""
        return LinearOperator(self.kind, self.m, self.n, self.row_selection,
                              self.dense_values, float(scale))


def dense_operator(values, scale: float = 1.0) -> LinearOperator:
    values = np.atleast_2d(np.asarray(values, dtype=float))
    m, n = values.shape
    return LinearOperator("dense", m, n, dense_values=values, scale=scale)


def partial_dct(n: int, rows, scale: float = 1.0) -> LinearOperator:
    rows = np.asarray(rows, dtype=np.int64)
    return LinearOperator("partial-dct", rows.size, n, row_selection=rows, scale=scale)


def partial_hadamard(n: int, rows, scale: float = 1.0) -> LinearOperator:
    rows = np.asarray(rows, dtype=np.int64)
    return LinearOperator("partial-hadamard", rows.size, n, row_selection=rows, scale=scale)


def apply(op: LinearOperator, x) -> np.ndarray:
    """Return ``op @ x``; counts one forward product."""
    return op.matvec(x)


def apply_adjoint(op: LinearOperator, y) -> np.ndarray:
    """Return ``op.T @ y``; counts one adjoint product."""
    return op.rmatvec(y)


@dataclass
class EigenEstimate:
    value: float
    iterations: int
    converged: bool


def largest_eigenvalue_AAt(op: LinearOperator, tol: float = 1e-8, max_iter: int | None = None,
                           seed: int = 0, block: int = 4) -> EigenEstimate:
    """Largest eigenvalue of ``A A^T`` by block power (subspace) iteration.

    A block of ``block`` vectors is multiplied by ``A A^T`` and
    re-orthonormalized each sweep, with a Rayleigh-Ritz step on the block,
    so convergence depends on ``lambda_{block+1} / lambda_1`` rather than on
    the first spectral gap. Stops when the eigen-residual
    ``||A A^T q - theta q||`` of the leading Ritz pair falls below
    ``tol * theta``. The iteration cap defaults to ``10 * m``; hitting it
    emits a warning and returns the best estimate with ``converged=False``.
    """
    if max_iter is None:
        max_iter = max(10 * op.m, 20)
    k = max(1, min(block, op.m))
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.standard_normal((op.m, k)))
    theta = 0.0
    for it in range(1, max_iter + 1):
        W = np.column_stack([op.matvec(op.rmatvec(Q[:, j])) for j in range(k)])
        H = Q.T @ W
        evals, evecs = np.linalg.eigh(0.5 * (H + H.T))
        theta = float(evals[-1])
        s = evecs[:, -1]
        if theta > 0.0:
            resid = np.linalg.norm(W @ s - theta * (Q @ s))
            if resid <= tol * theta:
                return EigenEstimate(theta, it, True)
        Q, r = np.linalg.qr(W)
        if np.any(np.abs(np.diag(r)) <= 1e-14 * max(1.0, abs(theta))):
            # block collapsed into a null space; refresh the deficient columns
            Q, _ = np.linalg.qr(W + 1e-8 * rng.standard_normal(W.shape))
    warnings.warn(f"power iteration did not reach tol={tol:g} in {max_iter} iterations",
                  RuntimeWarning, stacklevel=2)
    return EigenEstimate(theta, max_iter, False)
