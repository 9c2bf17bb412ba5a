"""Seeded generators for sensing matrices, sparse signals and test instances.

All randomness comes from :func:`numpy.random.default_rng` (PCG64), so a
given ``(type, dims, seed)`` reproduces the same instance bit for bit on
every platform numpy supports.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .linop import LinearOperator, dense_operator, fwht, partial_dct, partial_hadamard

MATRIX_TYPES = {
    1: "gaussian",
    2: "orthogonalized gaussian",
    3: "bernoulli",
    4: "hadamard",
    5: "dct",
}

SIGNAL_TYPES = {
    1: "gaussian",
    2: "uniform(-1,1)",
    3: "zero-one",
    4: "random signs",
    5: "power-law decay",
    6: "exponential decay",
}

# (n, m, K from the table, magnitude levels)
CALTECH_ROWS = {
    1: (512, 128, 38, ((1e5, 33), (1.0, 5))),
    2: (512, 128, 37, ((1e5, 32), (1.0, 5))),
    3: (512, 128, 32, ((1e5, 31), (1e-6, 1))),
    4: (512, 102, 26, ((1e4, 13), (1.0, 12), (1e-2, 1))),
    5: (1024, 512, 150, ((1.0, 150),)),
    6: (1024, 512, 151, ((1.0, 150),)),
    7: (1024, 512, 152, ((1.0, 150),)),
    8: (1024, 512, 153, ((1.0, 150),)),
    9: (1024, 512, 154, ((1.0, 150),)),
    10: (1024, 512, 154, ((1.0, 150),)),
}


@dataclass
class ProblemInstance:
    op: LinearOperator
    b: np.ndarray
    delta: float = 0.0
    x_true: np.ndarray | None = None
    seed: int | None = None
    matrix_type: int | None = None
    signal_type: int | None = None
    theta: float = 0.0
    label: str = ""
    meta: dict = field(default_factory=dict)

    @property
    def m(self):
        return self.op.m

    @property
    def n(self):
        return self.op.n

    @property
    def K(self):
        return None if self.x_true is None else int(np.count_nonzero(self.x_true))


def matlab_round(x: float) -> int:
    """Round half away from zero."""
    return int(np.sign(x) * np.floor(abs(x) + 0.5))


def _rng(seed, stream: int):
    # independent child streams for matrix, signal and noise draws
    return np.random.default_rng([int(seed), stream])


def gen_matrix(matrix_type: int, m: int, n: int, seed: int) -> LinearOperator:
    """Sensing matrix of the given ensemble with ``m`` randomly selected rows.

    Types 1, 3 and 4 are rescaled by the largest singular value, so
    ``lambda_max(A A^T) = 1`` afterwards; types 2 and 5 already have
    orthonormal rows. Type 5 is returned as an implicit partial DCT.
    """
    if not 0 < m <= n:
        raise ValueError(f"need 0 < m <= n, got m={m}, n={n}")
    rng = _rng(seed, 1)
    if matrix_type == 1:
        a = rng.standard_normal((m, n))
    elif matrix_type == 2:
        g = rng.standard_normal((n, m))
        q, r = np.linalg.qr(g)
        # fix column signs so the factor is unique
        a = (q * np.sign(np.diag(r))).T
        return dense_operator(np.ascontiguousarray(a))
    elif matrix_type == 3:
        a = np.where(rng.random((m, n)) < 0.5, -1.0, 1.0)
    elif matrix_type == 4:
        if n & (n - 1):
            raise ValueError(f"type-4 (Hadamard) matrices need n a power of two, got {n}")
        rows = np.sort(rng.choice(n, size=m, replace=False))
        a = np.array([fwht(e) for e in np.eye(n)[rows]])
    elif matrix_type == 5:
        rows = np.sort(rng.choice(n, size=m, replace=False))
        return partial_dct(n, rows)
    else:
        raise ValueError(f"unknown matrix type {matrix_type}")
    smax = np.linalg.norm(a, 2)
    return dense_operator(a, scale=1.0 / smax)


def gen_hadamard_operator(m: int, n: int, seed: int) -> LinearOperator:
    """Implicit variant of the type-4 ensemble (same rows as :func:`gen_matrix`)."""
    if n & (n - 1):
        raise ValueError(f"Hadamard operators need n a power of two, got {n}")
    rng = _rng(seed, 1)
    rows = np.sort(rng.choice(n, size=m, replace=False))
    return partial_hadamard(n, rows, scale=1.0 / np.sqrt(n))


def gen_signal(signal_type: int, n: int, K: int, seed: int) -> np.ndarray:
    """K-sparse signal with a uniformly random support."""
    if not 0 <= K <= n:
        raise ValueError(f"need 0 <= K <= n, got K={K}, n={n}")
    rng = _rng(seed, 2)
    support = rng.choice(n, size=K, replace=False)
    if signal_type == 1:
        vals = rng.standard_normal(K)
    elif signal_type == 2:
        vals = rng.uniform(-1.0, 1.0, K)
        vals[vals == 0.0] = 0.5
    elif signal_type == 3:
        vals = np.ones(K)
    elif signal_type == 4:
        vals = np.sign(rng.standard_normal(K))
        vals[vals == 0.0] = 1.0
    elif signal_type in (5, 6):
        i = np.arange(1, K + 1, dtype=float)
        mags = 1e5 * i ** -1.5 if signal_type == 5 else np.exp(-0.005 * i)
        signs = np.where(rng.random(K) < 0.5, -1.0, 1.0)
        vals = rng.permutation(mags) * signs
    else:
        raise ValueError(f"unknown signal type {signal_type}")
    x = np.zeros(n)
    x[support] = vals
    return x


def gen_instance(matrix_type: int, signal_type: int, n: int, m: int, K: int, seed: int,
                 theta: float = 0.0) -> ProblemInstance:
    op = gen_matrix(matrix_type, m, n, seed)
    x = gen_signal(signal_type, n, K, seed)
    b = op.matvec(x, count=False)
    inst = ProblemInstance(op, b, 0.0, x, seed, matrix_type, signal_type,
                           label=f"A{matrix_type}-x{signal_type}-n{n}-m{m}-K{K}-s{seed}")
    if theta > 0:
        inst = add_noise(inst, theta, seed)
    return inst


def gen_caltech(row: int, seed: int) -> ProblemInstance:
    """Instance shaped like one row of the pathological test table.

    Uses a type-1 matrix; the sparsity is the total of the level counts.
    """
    if row not in CALTECH_ROWS:
        raise ValueError(f"unknown caltech-style row {row}; expected 1..10")
    n, m, _, levels = CALTECH_ROWS[row]
    K = sum(c for _, c in levels)
    op = gen_matrix(1, m, n, seed)
    rng = _rng(seed, 3)
    support = rng.choice(n, size=K, replace=False)
    mags = np.concatenate([np.full(c, mag) for mag, c in levels])
    signs = np.where(rng.random(K) < 0.5, -1.0, 1.0)
    x = np.zeros(n)
    x[support] = mags * signs
    b = op.matvec(x, count=False)
    return ProblemInstance(op, b, 0.0, x, seed, 1, None, label=f"caltech-style-{row}-s{seed}",
                           meta={"caltech_row": row, "levels": levels})


def add_noise(instance: ProblemInstance, theta: float, seed: int) -> ProblemInstance:
    """Return a copy with ``b = A x_true + theta * xi / ||xi||``."""
    if theta < 0:
        raise ValueError("theta must be nonnegative")
    if instance.x_true is None:
        raise ValueError("adding noise needs the ground-truth signal")
    if theta == 0:
        return instance
    rng = _rng(seed, 4)
    xi = rng.standard_normal(instance.m)
    clean = instance.op.matvec(instance.x_true, count=False)
    return replace(instance, b=clean + theta * xi / np.linalg.norm(xi), theta=float(theta))


# ---------------------------------------------------------------- presets


@dataclass(frozen=True)
class Preset:
    name: str
    matrix_type: int
    signal_type: int
    grid: tuple            # tuple of (n, m, K)
    trials: int = 50
    theta: float = 0.0

    @property
    def noisy(self):
        return self.theta > 0


def _m_sweep(n, K, ms):
    return tuple((n, m, K) for m in ms)


def _n_sweep(signal_type):
    frac = {1: 6, 3: 3, 5: 4}[signal_type]
    out = []
    for p in range(7, 17):
        n = 2 ** p
        m = matlab_round(n / frac)
        out.append((n, m, matlab_round(0.3 * m)))
    return tuple(out)


def _build_presets():
    presets = {}
    for s in range(1, 7):
        for a, fig in ((1, "fig1"), (2, "fig2")):
            name = f"{fig}-atype{a}-stype{s}"
            presets[name] = Preset(name, a, s, _m_sweep(600, 40, range(80, 221, 10)))
        name = f"fig4-atype3-stype{s}"
        presets[name] = Preset(name, 3, s, _m_sweep(600, 40, range(120, 241, 10)), theta=0.01)
    for s in (1, 3, 5):
        name = f"fig3-atype5-stype{s}"
        presets[name] = Preset(name, 5, s, _n_sweep(s))
        name = f"fig5-atype4-stype{s}"
        presets[name] = Preset(name, 4, s, _m_sweep(2 ** 11, 150, range(500, 1101, 50)), theta=0.01)
    # short aliases
    presets["fig1-atype1"] = replace(presets["fig1-atype1-stype3"], name="fig1-atype1")
    presets["fig2-atype2"] = replace(presets["fig2-atype2-stype3"], name="fig2-atype2")
    return presets


PRESETS = _build_presets()


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}") from None
