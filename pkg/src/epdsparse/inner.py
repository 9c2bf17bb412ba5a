"""Unconstrained minimizers for the dual function ``Phi``.

``newton_cg`` is the semismooth Newton method with a regularized
generalized Hessian and conjugate-gradient directions; ``lbfgs`` is a
limited-memory BFGS with a nonmonotone (max-of-window) Armijo rule.
Both work on a :class:`~epdsparse.dual.DualContext` and only touch the
operator through ``matvec``/``rmatvec``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .dual import DualContext, complete_gradient, evaluate, hessian_apply, mask_from_z


@dataclass
class CgResult:
    x: np.ndarray
    iterations: int
    residual_norm: float
    converged: bool
    negative_curvature: bool = False


def cg_solve(apply_v, rhs, tol: float = 1e-10, max_iter: int | None = None) -> CgResult:
    """Conjugate gradients for ``V x = rhs`` with ``V`` symmetric positive definite.

    Stops once ``||V x - rhs|| <= tol * ||rhs||``. A direction with
    ``<p, V p> <= 0`` aborts the iteration and returns the current iterate
    with ``negative_curvature=True``.
    """
    rhs = np.asarray(rhs, dtype=float)
    if max_iter is None:
        max_iter = rhs.size
    x = np.zeros_like(rhs)
    r = rhs.copy()
    rr = float(r @ r)
    target = tol * np.sqrt(rr)
    if np.sqrt(rr) <= target or rr == 0.0:
        return CgResult(x, 0, np.sqrt(rr), True)
    p = r.copy()
    for it in range(1, max_iter + 1):
        vp = apply_v(p)
        curv = float(p @ vp)
        if curv <= 0.0:
            return CgResult(x, it - 1, np.sqrt(rr), False, negative_curvature=True)
        alpha = rr / curv
        x += alpha * p
        r -= alpha * vp
        rr_new = float(r @ r)
        if np.sqrt(rr_new) <= target:
            return CgResult(x, it, np.sqrt(rr_new), True)
        p = r + (rr_new / rr) * p
        rr = rr_new
    return CgResult(x, max_iter, np.sqrt(rr), False)


@dataclass
class NewtonCgParams:
    tol: float = 1e-6          # gradient tolerance on ||grad Phi||
    j_max: int = 50
    tau1: float = 0.1
    tau2: float = 1e-4
    backtrack: float = 0.5     # step reduction ratio
    mu: float = 1e-4           # sufficient decrease constant
    max_backtracks: int = 50
    cg_max: int | None = None  # defaults to m


@dataclass
class LbfgsParams:
    memory: int = 5
    grad_tol: float = 1e-5
    max_iter: int = 300
    nonmonotone_window: int = 10
    stall_window: int = 10
    stall_ratio: float = 0.01
    mu: float = 1e-4
    backtrack: float = 0.5
    max_backtracks: int = 50

    def __post_init__(self):
        if self.memory < 1:
            raise ValueError("memory must be at least 1")


@dataclass
class InnerReport:
    iterations: int
    grad_norm: float
    nmat: int
    converged: bool
    status: str
    cg_iterations: int = 0
    values: list | None = None


def newton_cg(ctx: DualContext, y0, params: NewtonCgParams | None = None):
    """Semismooth Newton-CG minimization of ``Phi``.

    Returns ``(y, report)``. Each iteration solves
    ``(V + eps I) d = -grad`` with ``eps = tau1 * min(tau2, ||grad||)`` and
    backtracks ``y + rho**l d`` until the Armijo inequality holds.
    """
    p = params or NewtonCgParams()
    nmat0 = ctx.op.nmat
    cg_max = p.cg_max if p.cg_max is not None else ctx.m
    pt = evaluate(ctx, np.array(y0, dtype=float))
    gnorm = float(np.linalg.norm(pt.grad))
    j = 0
    cg_total = 0
    status = "converged"
    steepest_fallbacks = 0
    while True:
        if gnorm <= p.tol:
            break
        if j > p.j_max:
            status = "max_iter"
            break
        g = pt.grad
        mask = mask_from_z(ctx, pt.z)
        eps = p.tau1 * min(p.tau2, gnorm)
        cg = cg_solve(lambda d: hessian_apply(ctx, mask, eps, d), -g,
                      tol=min(0.1, np.sqrt(gnorm)), max_iter=cg_max)
        cg_total += cg.iterations
        d = cg.x
        if not np.any(d) or g @ d >= 0:
            d = -g
        new = _armijo(ctx, pt, d, p.mu, p.backtrack, p.max_backtracks)
        if new is None:
            steepest_fallbacks += 1
            if steepest_fallbacks > 1:
                status = "stagnation"
                break
            new = _armijo(ctx, pt, -g, p.mu, p.backtrack, p.max_backtracks)
            if new is None:
                status = "stagnation"
                break
        pt = new
        complete_gradient(ctx, pt)
        gnorm = float(np.linalg.norm(pt.grad))
        j += 1
    report = InnerReport(j, gnorm, ctx.op.nmat - nmat0, status == "converged", status, cg_total)
    return pt.y, report


def _armijo(ctx, pt, d, mu, ratio, max_backtracks, reference=None):
    """Backtrack along ``d`` from ``pt``; returns the accepted point (no gradient) or None.

    ``reference`` replaces ``Phi(y)`` on the right-hand side (nonmonotone rule).
    """
    slope = float(pt.grad @ d)
    ref = pt.value if reference is None else reference
    t = 1.0
    for _ in range(max_backtracks + 1):
        trial = evaluate(ctx, pt.y + t * d, with_grad=False)
        if trial.value <= ref + mu * t * slope:
            return trial
        t *= ratio
    return None


def lbfgs(ctx: DualContext, y0, params: LbfgsParams | None = None, record_values: bool = False):
    """Limited-memory BFGS minimization of ``Phi``.

    Returns ``(y, report)``. A step ``alpha`` is accepted when
    ``Phi(y + alpha d) <= max(last window values) + mu * alpha * <g, d>``.
    The run also stops early when the best gradient norm over the last
    ``stall_window`` iterations improves by less than ``stall_ratio``.
    """
    p = params or LbfgsParams()
    nmat0 = ctx.op.nmat
    pt = evaluate(ctx, np.array(y0, dtype=float))
    gnorm = float(np.linalg.norm(pt.grad))
    s_hist: deque = deque(maxlen=p.memory)
    g_hist: deque = deque(maxlen=p.memory)
    rho_hist: deque = deque(maxlen=p.memory)
    window: deque = deque([pt.value], maxlen=max(1, p.nonmonotone_window))
    gnorms = [gnorm]
    values = [pt.value] if record_values else None
    status = "converged"
    k = 0
    while gnorm > p.grad_tol:
        if k >= p.max_iter:
            status = "max_iter"
            break
        if _stalled(gnorms, p.stall_window, p.stall_ratio):
            status = "stall"
            break
        g = pt.grad
        if s_hist:
            d = -_two_loop(g, s_hist, g_hist, rho_hist)
        else:
            d = -g / max(1.0, gnorm)
        if g @ d >= 0:
            d = -g / max(1.0, gnorm)
        new = _armijo(ctx, pt, d, p.mu, p.backtrack, p.max_backtracks, reference=max(window))
        if new is None and s_hist:
            # drop curvature memory and retry along the gradient
            s_hist.clear(), g_hist.clear(), rho_hist.clear()
            d = -g / max(1.0, gnorm)
            new = _armijo(ctx, pt, d, p.mu, p.backtrack, p.max_backtracks, reference=max(window))
        if new is None:
            status = "stagnation"
            break
        complete_gradient(ctx, new)
        s = new.y - pt.y
        gd = new.grad - g
        sy = float(s @ gd)
        if sy > 1e-12 * np.linalg.norm(s) * np.linalg.norm(gd):
            s_hist.append(s)
            g_hist.append(gd)
            rho_hist.append(1.0 / sy)
        pt = new
        gnorm = float(np.linalg.norm(pt.grad))
        gnorms.append(gnorm)
        window.append(pt.value)
        if record_values:
            values.append(pt.value)
        k += 1
    report = InnerReport(k, gnorm, ctx.op.nmat - nmat0, status == "converged", status, values=values)
    return pt.y, report


def _two_loop(g, s_hist, g_hist, rho_hist):
    q = g.copy()
    alphas = []
    for s, yv, rho in zip(reversed(s_hist), reversed(g_hist), reversed(rho_hist)):
        a = rho * (s @ q)
        alphas.append(a)
        q -= a * yv
    s, yv = s_hist[-1], g_hist[-1]
    q *= (s @ yv) / (yv @ yv)
    for (s, yv, rho), a in zip(zip(s_hist, g_hist, rho_hist), reversed(alphas)):
        bcoef = rho * (yv @ q)
        q += (a - bcoef) * s
    return q


def _stalled(gnorms, window, ratio):
    if len(gnorms) <= window:
        return False
    recent = min(gnorms[-window:])
    before = min(gnorms[:-window])
    return recent > (1.0 - ratio) * before
