"""Recovery metrics: nnzx, Relerr, Res and support diagnostics."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

SUCCESS_THRESHOLD = 5e-7


def nnzx(x) -> int:
    """Fewest largest-magnitude entries carrying 99.9% of ``||x||_1``."""
    a = np.sort(np.abs(np.asarray(x, dtype=float)))[::-1]
    total = a.sum()
    if total == 0.0:
        return 0
    csum = np.cumsum(a)
    return int(np.searchsorted(csum, 0.999 * total, side="left") + 1)


def support_diagnostics(x_f, x_star) -> tuple[int, int, int]:
    """``(sgn, miss, over)`` after zeroing entries of ``x_f`` below a tenth of the
    smallest nonzero magnitude of ``x_star``."""
    x_f = np.asarray(x_f, dtype=float)
    x_star = np.asarray(x_star, dtype=float)
    nz = np.abs(x_star[x_star != 0])
    if nz.size == 0:
        raise ValueError("support diagnostics need a nonzero reference signal")
    t = 0.1 * nz.min()
    xf = np.where(np.abs(x_f) < t, 0.0, x_f)
    sgn = int(np.count_nonzero(xf * x_star < 0))
    miss = int(np.count_nonzero((xf == 0) & (x_star != 0)))
    over = int(np.count_nonzero((xf != 0) & (x_star == 0)))
    return sgn, miss, over


def relerr_res(x_f, instance) -> tuple[float | None, float]:
    """Relative error to the ground truth (None when unknown) and ``||A x_f - b||``.

    The residual product is not charged to the operator's counter.
    """
    x_f = np.asarray(x_f, dtype=float)
    res = float(np.linalg.norm(instance.op.matvec(x_f, count=False) - instance.b))
    if instance.x_true is None:
        return None, res
    nrm = np.linalg.norm(instance.x_true)
    relerr = float(np.linalg.norm(x_f - instance.x_true) / nrm) if nrm > 0 else float(np.linalg.norm(x_f))
    return relerr, res


@dataclass
class RecoveryRecord:
    relerr: float | None
    res: float
    nnzx: int
    sgn: int | None
    miss: int | None
    over: int | None
    success: bool | None
    time_s: float = 0.0
    nmat: int = 0

    def as_dict(self):
        return asdict(self)


def recovery_record(x_f, instance, time_s=0.0, nmat=0) -> RecoveryRecord:
    relerr, res = relerr_res(x_f, instance)
    xt = instance.x_true
    if xt is not None and np.any(xt):
        sgn, miss, over = support_diagnostics(x_f, xt)
    else:
        sgn = miss = over = None
    success = None if relerr is None else bool(relerr < SUCCESS_THRESHOLD)
    return RecoveryRecord(relerr, res, nnzx(x_f), sgn, miss, over, success, time_s, nmat)
