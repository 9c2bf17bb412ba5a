"""Partial proximal point steps for the weighted l1 problem.

One step approximately solves

    min_{u, x} <v, |x|> + beta/2 ||u||^2 + ||x - x_anchor||^2 / (2 lam)   s.t.  A x + u = b

through its dual and maps the dual iterate back to ``(x, u)``. Repeating
the step with the returned ``x`` as the next anchor is the proximal point
method for ``min <v,|x|> + beta/2 ||A x - b||^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .dual import DualContext, recover_primal
from .inner import InnerReport, LbfgsParams, NewtonCgParams, lbfgs, newton_cg


def default_beta(b) -> float:
    """Quadratic penalty weight ``max(5 ||b|| 1e6, 1e10)``."""
    return max(5.0 * float(np.linalg.norm(b)) * 1e6, 1e10)


@dataclass
class PpaStepResult:
    x: np.ndarray
    y: np.ndarray
    u: np.ndarray
    report: InnerReport


def ppa_step(op, b, beta, lam, x_anchor, v, y_warm=None, inner="newton", tol=1e-6,
             params=None) -> PpaStepResult:
    """One proximal point step.

    Parameters
    ----------
    inner : {"newton", "lbfgs"}
        Dual solver. ``params`` may be a :class:`NewtonCgParams` or
        :class:`LbfgsParams`; its tolerance is overridden by ``tol``.
    """
    ctx = DualContext(op, b, beta, lam, x_anchor, v)
    y0 = np.zeros(op.m) if y_warm is None else y_warm
    if inner == "newton":
        p = params if isinstance(params, NewtonCgParams) else NewtonCgParams()
        p = replace(p, tol=tol)
        y, rep = newton_cg(ctx, y0, p)
    elif inner == "lbfgs":
        p = params if isinstance(params, LbfgsParams) else LbfgsParams()
        p = replace(p, grad_tol=tol)
        y, rep = lbfgs(ctx, y0, p)
    else:
        raise ValueError(f"unknown inner solver {inner!r}")
    x, u = recover_primal(ctx, y)
    return PpaStepResult(x, y, u, rep)


@dataclass
class WeightedL1Result:
    x: np.ndarray
    y: np.ndarray
    steps: int
    converged: bool
    stagnated: bool


def solve_weighted_l1(op, b, v, beta=None, lam=1.0, tol=1e-10, x0=None, y0=None,
                      max_steps=200, xtol=1e-9, inner="newton", lam_growth=1.5,
                      lam_max=1e6) -> WeightedL1Result:
    """Repeat proximal point steps until ``x`` stops moving.

    Approximates ``argmin <v,|x|> + beta/2 ||A x - b||^2``, which for large
    ``beta`` is the weighted l1 problem with the constraint ``A x = b``.
    The proximal parameter starts at ``lam`` and grows by ``lam_growth``
    per step up to ``lam_max``; a nondecreasing sequence keeps the proximal
    point iteration convergent and lets it cross long flat directions
    (nearly dependent zero-weight columns) in few steps.
    """
    if beta is None:
        beta = default_beta(b)
    x = np.zeros(op.n) if x0 is None else np.asarray(x0, dtype=float)
    y = np.zeros(op.m) if y0 is None else np.asarray(y0, dtype=float)
    params = NewtonCgParams(j_max=200)
    stagnated = False
    for k in range(1, max_steps + 1):
        res = ppa_step(op, b, beta, lam, x, v, y_warm=y, inner=inner, tol=tol, params=params)
        stagnated |= res.report.status == "stagnation"
        dx = np.linalg.norm(res.x - x)
        x, y = res.x, res.y
        lam = min(lam * lam_growth, lam_max)
        if dx <= xtol * (1.0 + np.linalg.norm(x)):
            return WeightedL1Result(x, y, k, True, stagnated)
    return WeightedL1Result(x, y, max_steps, False, stagnated)


def lambda_schedule(lam0: float, gamma: float, k: int) -> float:
    """Stage-one proximal parameter ``gamma**k * lam0``."""
    return lam0 * math.pow(gamma, k)
