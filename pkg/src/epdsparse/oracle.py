"""Brute-force ground truth for tiny dense instances.

Everything here enumerates supports, vertices or grid points, so it is
exponential in ``n`` and only meant for ``n <= 14``. These routines do
not share code with the solvers they are used to check.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.linalg import qr
from scipy.optimize import linprog

MAX_N = 14
RANK_TOL = 1e-10


class OracleError(ValueError):
    pass


@dataclass
class TinyInstance:
    A: np.ndarray
    b: np.ndarray
    delta: float = 0.0

    def __post_init__(self):
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        self.b = np.asarray(self.b, dtype=float).reshape(-1)
        if self.A.shape[0] != self.b.size:
            raise OracleError("A and b have inconsistent sizes")
        if self.A.shape[1] > MAX_N:
            raise OracleError(f"tiny instances are limited to n <= {MAX_N}")

    @property
    def m(self):
        return self.A.shape[0]

    @property
    def n(self):
        return self.A.shape[1]


def _lstsq(As, b):
    """Least-norm least-squares solution via a rank-revealing SVD."""
    if As.shape[1] == 0:
        return np.zeros(0), float(np.linalg.norm(b))
    xs, *_ = np.linalg.lstsq(As, b, rcond=RANK_TOL)
    return xs, float(np.linalg.norm(As @ xs - b))


def _supports(n, sizes):
    for k in sizes:
        for s in itertools.combinations(range(n), k):
            yield s


@dataclass
class L0Result:
    r: int | None
    x: np.ndarray | None
    support: tuple | None

    @property
    def feasible(self):
        return self.r is not None


def brute_min_l0(tiny: TinyInstance, feas_tol: float = 1e-10) -> L0Result:
    """Smallest support admitting ``||A_S x_S - b|| <= delta``."""
    A, b = tiny.A, tiny.b
    for s in _supports(tiny.n, range(tiny.n + 1)):
        xs, res = _lstsq(A[:, list(s)], b)
        if res <= tiny.delta + feas_tol:
            x = np.zeros(tiny.n)
            x[list(s)] = xs
            return L0Result(len(s), x, s)
    return L0Result(None, None, None)


class PenaltyTable:
    """Least-norm solutions of every feasible support, for fast penalty sweeps."""

    def __init__(self, tiny: TinyInstance, max_n: int = 10, feas_tol: float = 1e-10):
        if tiny.delta != 0:
            raise OracleError("penalty enumeration needs delta = 0")
        if tiny.n > max_n:
            raise OracleError(f"penalty enumeration is limited to n <= {max_n}")
        tol = feas_tol * max(1.0, np.linalg.norm(tiny.b))
        sols = []
        for s in _supports(tiny.n, range(tiny.n + 1)):
            xs, res = _lstsq(tiny.A[:, list(s)], tiny.b)
            if res <= tol:
                x = np.zeros(tiny.n)
                x[list(s)] = xs
                sols.append(x)
        if not sols:
            raise OracleError("no feasible support")
        self.solutions = np.array(sols)
        self.absx = np.abs(self.solutions)

    def minimize(self, rho: float):
        """Return ``(value, x, v)`` for the best support at penalty ``rho``."""
        vals = np.minimum(1.0, rho * self.absx).sum(axis=1)
        i = int(np.argmin(vals))
        v = np.where(rho * self.absx[i] < 1.0, 1.0, 0.0)
        return float(vals[i]), self.solutions[i].copy(), v


def brute_penalty_min(tiny: TinyInstance, rho: float):
    """Minimum of ``<e, e - v> + rho <v, |x|>`` over supports, ``0 <= v <= e``.

    For each feasible support the least-norm solution is used and ``v`` is
    optimized in closed form (``v_i = 1`` iff ``rho |x_i| < 1``).
    Returns ``(value, x, v)``.
    """
    return PenaltyTable(tiny).minimize(rho)


def penalty_sweep(tiny: TinyInstance, rhos) -> np.ndarray:
    table = PenaltyTable(tiny)
    return np.array([table.minimize(r)[0] for r in rhos])


# ------------------------------------------------------------ null space condition


def _cube_surface_grid(d: int, h: float) -> np.ndarray:
    """Grid points with spacing ``h`` on the boundary of ``[-1, 1]^d``."""
    if d == 1:
        return np.array([[1.0], [-1.0]])
    k = max(1, int(np.ceil(2.0 / h)))
    ticks = np.linspace(-1.0, 1.0, k + 1)
    faces = []
    for axis in range(d):
        for sign in (-1.0, 1.0):
            grids = np.meshgrid(*([ticks] * (d - 1)), indexing="ij")
            pts = np.stack([g.ravel() for g in grids], axis=1)
            faces.append(np.insert(pts, axis, sign, axis=1))
    return np.unique(np.concatenate(faces), axis=0)


def check_nsc(tiny: TinyInstance, v, true_support, h0: float = 0.25, h_min: float = 1e-3) -> str:
    """Certify ``<v_I, |y_I|> < <v_Ic, |y_Ic|>`` for all nonzero ``y`` in Null(A).

    The margin ``g(c)`` evaluated at ``y = N c`` (``N`` an orthonormal
    null-space basis) is positively homogeneous, so it is enough to check
    it on the surface of the cube ``[-1, 1]^d``, where ``||c|| >= 1``. The
    surface is gridded with spacing ``h``; every surface point is within
    ``h * sqrt(d - 1) / 2`` of a grid point and ``g`` is Lipschitz with
    constant ``L = sum_i v_i ||N_i||``, so ``min g > L * h * sqrt(d - 1) / 2``
    certifies the condition. Any grid value ``<= 0`` (up to rounding) is a
    violation.
    The grid is refined until one verdict applies or ``h < h_min``.

    Returns ``"certified"``, ``"violated"`` or ``"inconclusive"``.
    """
    A = tiny.A
    v = np.asarray(v, dtype=float)
    inside = np.zeros(tiny.n, dtype=bool)
    inside[list(true_support)] = True
    sign = np.where(inside, -1.0, 1.0)
    _, svals, vt = np.linalg.svd(A)
    rank = int(np.sum(svals > RANK_TOL * max(1.0, svals[0] if svals.size else 0.0)))
    N = vt[rank:].T
    d = N.shape[1]
    if d == 0:
        return "certified"
    if d > 3:
        raise OracleError(f"null space dimension {d} > 3 is not supported")
    lip = float(np.sum(v * np.linalg.norm(N, axis=1)))
    h = h0
    while True:
        C = _cube_surface_grid(d, h)
        g = (np.abs(C @ N.T) * (v * sign)).sum(axis=1)
        # exact ties (g = 0) must count as violations despite rounding
        if np.any(g <= 1e-12 * lip):
            return "violated"
        slack = 0.0 if d == 1 else lip * h * np.sqrt(d - 1) / 2
        if g.min() > slack:
            return "certified"
        if h < h_min:
            return "inconclusive"
        h /= 2


# ------------------------------------------------------------ weighted l1 LP


@dataclass
class LpResult:
    value: float
    x: np.ndarray


def bp_lp_oracle(tiny: TinyInstance, v) -> LpResult:
    """Exact ``min <v, |x|> s.t. A x = b`` by enumerating basic feasible solutions.

    Works on the sign-split program ``[A, -A] z = b, z >= 0`` after
    discarding linearly dependent rows.
    """
    if tiny.delta != 0:
        raise OracleError("the LP oracle only handles delta = 0")
    A, b = tiny.A, tiny.b
    v = np.asarray(v, dtype=float)
    # independent rows through a pivoted QR of A^T
    _, R, piv = qr(A.T, pivoting=True, mode="economic")
    diag = np.abs(np.diag(R)) if R.size else np.zeros(0)
    rank = int(np.sum(diag > RANK_TOL * max(1.0, diag[0] if diag.size else 0.0)))
    rows = np.sort(piv[:rank])
    Ar, br = A[rows], b[rows]
    if np.linalg.norm(A @ np.linalg.lstsq(Ar, br, rcond=None)[0] - b) > 1e-9 * max(1.0, np.linalg.norm(b)):
        raise OracleError("inconsistent system")
    n = tiny.n
    if rank == 0:
        return LpResult(0.0, np.zeros(n))
    M = np.hstack([Ar, -Ar])
    cost = np.concatenate([v, v])
    best = None
    for cols in itertools.combinations(range(2 * n), rank):
        B = M[:, cols]
        if abs(np.linalg.det(B)) < 1e-12:
            continue
        zb = np.linalg.solve(B, br)
        if np.any(zb < -1e-10):
            continue
        val = float(cost[list(cols)] @ np.maximum(zb, 0.0))
        if best is None or val < best[0] - 1e-14:
            z = np.zeros(2 * n)
            z[list(cols)] = np.maximum(zb, 0.0)
            best = (val, z[:n] - z[n:])
    if best is None:
        raise OracleError("no basic feasible solution found")
    return LpResult(*best)


# ------------------------------------------------------------ misc checks


def rth_largest_lower_bound(tiny: TinyInstance, r: int) -> float:
    """Exact ``min |x|_r`` (``r``-th largest magnitude) over ``A x = b``.

    For each set ``T`` of ``r - 1`` indices left free, a linear program
    minimizes ``max_{i not in T} |x_i|``; the bound is the smallest optimum.
    It is positive whenever ``r`` is the sparsest feasible cardinality.
    """
    if tiny.delta != 0:
        raise OracleError("the bound is computed for delta = 0")
    A, b, n = tiny.A, tiny.b, tiny.n
    best = np.inf
    # variables (x, t); minimize t with -t <= x_i <= t off T
    for T in itertools.combinations(range(n), r - 1):
        rest = [i for i in range(n) if i not in T]
        rows = []
        for i in rest:
            e = np.zeros(n + 1)
            e[i], e[n] = 1.0, -1.0
            rows.append(e)
            e = np.zeros(n + 1)
            e[i], e[n] = -1.0, -1.0
            rows.append(e)
        c = np.zeros(n + 1)
        c[n] = 1.0
        res = linprog(c, A_ub=np.array(rows), b_ub=np.zeros(len(rows)),
                      A_eq=np.hstack([A, np.zeros((tiny.m, 1))]), b_eq=b,
                      bounds=[(None, None)] * n + [(0, None)], method="highs")
        if res.status == 0:
            best = min(best, float(res.fun))
    return float(best)
