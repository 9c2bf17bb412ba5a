"""Dual function of the partial proximal point subproblem.

For fixed ``beta, lam > 0``, anchor ``x0`` and weights ``v``, the subproblem

    min_{u, x}  <v, |x|> + beta/2 ||u||^2 + ||x - x0||^2 / (2 lam)   s.t.  A x + u = b

has the smooth convex dual

    Phi(y) = b^T y + ||y||^2 / (2 beta) + ||shrink(x0 - lam A^T y, v, lam)||^2 / (2 lam)

whose gradient is ``b + y / beta - A shrink(x0 - lam A^T y, v, lam)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linop import LinearOperator
from .shrinkage import shrink


@dataclass(frozen=True, eq=False)
class DualContext:
    op: LinearOperator
    b: np.ndarray
    beta: float
    lam: float
    x_anchor: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        if not (self.beta > 0 and self.lam > 0):
            raise ValueError("beta and lam must be positive")
        b = np.asarray(self.b, dtype=float)
        x0 = np.asarray(self.x_anchor, dtype=float)
        v = np.asarray(self.v, dtype=float)
        if b.shape != (self.op.m,) or x0.shape != (self.op.n,) or v.shape != (self.op.n,):
            raise ValueError("b, x_anchor and v must match the operator dimensions")
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "x_anchor", x0)
        object.__setattr__(self, "v", v)

    @property
    def m(self):
        return self.op.m


@dataclass
class DualPoint:
    """Cached quantities at one dual iterate ``y``.

    ``z = x_anchor - lam A^T y`` and ``x = shrink(z, v, lam)`` are kept so
    that the gradient and the Jacobian mask cost no extra adjoint product.
    """

    y: np.ndarray
    z: np.ndarray
    x: np.ndarray
    value: float
    grad: np.ndarray | None = None


def evaluate(ctx: DualContext, y, with_grad: bool = True) -> DualPoint:
    """Value (one adjoint product) and optionally gradient (one forward product)."""
    y = np.asarray(y, dtype=float)
    z = ctx.x_anchor - ctx.lam * ctx.op.rmatvec(y)
    x = shrink(z, ctx.v, ctx.lam)
    value = float(ctx.b @ y + (y @ y) / (2 * ctx.beta) + (x @ x) / (2 * ctx.lam))
    pt = DualPoint(y, z, x, value)
    if with_grad:
        complete_gradient(ctx, pt)
    return pt


def complete_gradient(ctx: DualContext, pt: DualPoint) -> np.ndarray:
    if pt.grad is None:
        pt.grad = ctx.b + pt.y / ctx.beta - ctx.op.matvec(pt.x)
    return pt.grad


def phi(ctx: DualContext, y) -> float:
    return evaluate(ctx, y, with_grad=False).value


def grad_phi(ctx: DualContext, y) -> np.ndarray:
    return evaluate(ctx, y).grad


def mask_from_z(ctx: DualContext, z) -> np.ndarray:
    # ties |z_i| == lam v_i count as active
    return (np.abs(z) >= ctx.lam * ctx.v).astype(float)


def jacobian_mask(ctx: DualContext, y) -> np.ndarray:
    """Diagonal of the selected generalized Jacobian of the shrinkage map at ``y``."""
    z = ctx.x_anchor - ctx.lam * ctx.op.rmatvec(np.asarray(y, dtype=float))
    return mask_from_z(ctx, z)


def hessian_apply(ctx: DualContext, mask, eps_reg: float, d) -> np.ndarray:
    """Apply ``(1/beta + eps_reg) I + lam A diag(mask) A^T`` to ``d``."""
    if eps_reg < 0:
        raise ValueError("eps_reg must be nonnegative")
    d = np.asarray(d, dtype=float)
    return (1.0 / ctx.beta + eps_reg) * d + ctx.lam * ctx.op.matvec(mask * ctx.op.rmatvec(d))


def recover_primal(ctx: DualContext, y) -> tuple[np.ndarray, np.ndarray]:
    """Primal pair ``(x, u)`` attached to a dual point ``y``."""
    y = np.asarray(y, dtype=float)
    x = shrink(ctx.x_anchor - ctx.lam * ctx.op.rmatvec(y), ctx.v, ctx.lam)
    return x, -y / ctx.beta


def primal_objective(ctx: DualContext, x, u) -> float:
    """Subproblem objective ``<v,|x|> + beta/2 ||u||^2 + ||x - x0||^2 / (2 lam)``."""
    dx = np.asarray(x) - ctx.x_anchor
    u = np.asarray(u)
    return float(ctx.v @ np.abs(x) + 0.5 * ctx.beta * (u @ u) + (dx @ dx) / (2 * ctx.lam))
