"""Exact penalty decomposition for zero-norm minimization.

The outer loop alternates between a weighted l1 problem in ``x`` and a
closed-form update of the 0/1 weights ``v``, while the penalty parameter
``rho`` grows geometrically. :func:`epd_ideal` solves each weighted l1
problem to high accuracy; :func:`epd_practical` is the two-stage method
used for the benchmarks (L-BFGS proximal steps with a decreasing proximal
parameter, then semismooth Newton-CG steps at fixed parameter).
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .inner import LbfgsParams, NewtonCgParams
from .ppa import default_beta, ppa_step, solve_weighted_l1

log = logging.getLogger(__name__)


@dataclass
class EpdParams:
    eps: float = 1e-2              # complementarity tolerance on <v, |x|>
    eps1: float = 1e-6             # relative residual tolerance
    omega1: float = 1e-5           # L-BFGS gradient tolerance (stage 1)
    omega2: float = 1e-6           # Newton-CG gradient tolerance (stage 2)
    sigma: float = 2.0
    rho0: float = 1.0
    lam_floor: float = 1e-2
    gamma: float = 0.5
    gamma_hat: float = 10.0
    beta0: float = 1e10
    lbfgs_first_iters: int = 300
    lbfgs_iters: int = 50
    lbfgs_memory: int = 5
    newton: NewtonCgParams = field(default_factory=NewtonCgParams)
    stall_outer: int = 30
    max_outer: int = 1000
    noisy_mode: bool = False

    def lam0(self, bnorm: float) -> float:
        return self.gamma_hat * bnorm


def default_params(b, implicit: bool = False, noisy: bool = False, theta: float = 0.01,
                   **overrides) -> EpdParams:
    """Parameter defaults scaled by ``||b||``.

    ``implicit`` selects the schedule used for operator-form matrices;
    ``noisy`` applies the noisy-measurement overrides with noise level ``theta``.
    """
    bnorm = float(np.linalg.norm(b))
    big = max(1.0, bnorm)
    p = EpdParams(
        eps=1e-2 / big,
        rho0=min(1.0, 10.0 / bnorm) if bnorm > 0 else 1.0,
        beta0=default_beta(b),
    )
    if noisy:
        p.eps = 1.0
        p.eps1 = 0.01 * theta / big
        p.newton = replace(p.newton, j_max=5)
        p.noisy_mode = True
        if bnorm >= 1e2:
            p.gamma, p.gamma_hat = 0.5, 1.0
        else:
            p.gamma, p.gamma_hat = 0.8, 10.0
    elif implicit:
        p.gamma, p.gamma_hat = 0.6, 5.0
    elif bnorm > 1e5 or bnorm <= 5:
        p.gamma, p.gamma_hat = 0.5, 10.0
    else:
        p.gamma, p.gamma_hat = 0.8, 1.5
    for key, val in overrides.items():
        if val is None:
            continue
        if not hasattr(p, key):
            raise TypeError(f"unknown parameter {key!r}")
        setattr(p, key, val)
    return p


def update_weights(x, rho: float) -> np.ndarray:
    """Weights ``v_i = 0`` where ``|x_i| > 1/rho`` and ``1`` elsewhere."""
    if not rho > 0:
        raise ValueError("rho must be positive")
    return np.where(np.abs(np.asarray(x, dtype=float)) > 1.0 / rho, 0.0, 1.0)


def termination_bound(n: int, eps: float, rho0: float, sigma: float) -> int:
    """Worst-case number of penalty increases before ``<v,|x|> <= eps``."""
    return max(0, math.ceil((math.log(n) - math.log(eps * rho0)) / math.log(sigma)))


@dataclass
class TraceEntry:
    k: int
    stage: int
    rho: float
    lam: float
    residual: float
    complementarity: float
    objective: float
    inner_iterations: int
    inner_status: str


@dataclass
class SolverReport:
    x: np.ndarray
    residual: float
    outer_iterations: int
    stage1_iterations: int
    stage2_iterations: int
    inner_iterations: int
    nmat: int
    time_s: float
    exit_stage: int
    success: bool
    reason: str
    trace: list = field(default_factory=list, repr=False)


def _residual(op, x, b):
    return float(np.linalg.norm(op.matvec(x) - b))


def epd_practical(instance, params: EpdParams | None = None) -> tuple[np.ndarray, SolverReport]:
    """Two-stage exact penalty decomposition.

    Stage 1 runs while the relative residual exceeds ``eps1`` and the
    proximal parameter is above ``lam_floor``, using L-BFGS on the dual
    with ``lam = gamma**k * lam0``. Stage 2 keeps ``lam`` fixed and uses
    Newton-CG until both the residual and complementarity tests pass.
    """
    op, b = instance.op, np.asarray(instance.b, dtype=float)
    if params is None:
        params = default_params(b, implicit=op.implicit)
    p = params
    op.counter.reset()
    t0 = time.perf_counter()
    n, m = op.n, op.m
    bnorm = float(np.linalg.norm(b))
    big = max(1.0, bnorm)
    x = np.zeros(n)
    if bnorm == 0.0:
        return x, SolverReport(x, 0.0, 0, 0, 0, 0, 0, time.perf_counter() - t0, 0, True, "zero data")

    v = np.ones(n)
    y = np.ones(m)
    rho = p.rho0
    lam = p.lam0(bnorm)
    lam0 = lam
    beta = p.beta0
    k = 0
    trace = []
    res = bnorm
    inner_total = 0
    stage1 = stage2 = 0

    def record(stage, rep):
        comp = float(v @ np.abs(x))
        trace.append(TraceEntry(k, stage, rho, lam, res, comp, float(np.sum(1 - v)),
                                rep.iterations, rep.status))
        log.debug("k=%d stage=%d rho=%.3g lam=%.3g res=%.3e comp=%.3e inner=%d (%s)",
                  k, stage, rho, lam, res, comp, rep.iterations, rep.status)

    while res / big > p.eps1 and lam > p.lam_floor and k < p.max_outer:
        lam = lam0 * p.gamma ** k
        if k == 0:
            # the first (l1) subproblem is solved as accurately as the budget allows
            lb = LbfgsParams(memory=p.lbfgs_memory, max_iter=p.lbfgs_first_iters,
                             stall_window=p.lbfgs_first_iters)
        else:
            lb = LbfgsParams(memory=p.lbfgs_memory, max_iter=p.lbfgs_iters)
        step = ppa_step(op, b, beta, lam, x, v, y_warm=y, inner="lbfgs", tol=p.omega1, params=lb)
        x, y = step.x, step.y
        v = update_weights(x, rho)
        rho *= p.sigma
        k += 1
        stage1 += 1
        inner_total += step.report.iterations
        res = _residual(op, x, b)
        record(1, step.report)

    reason = "converged"
    best = math.inf
    since_best = 0
    comp = float(v @ np.abs(x))
    exit_stage = 1
    # at least one Newton-CG step follows stage 1 (the handover to stage 2)
    while stage2 == 0 or res / big > p.eps1 or comp > p.eps:
        if k >= p.max_outer:
            reason = "outer iteration cap"
            break
        if since_best >= p.stall_outer:
            reason = "stage-2 stagnation"
            break
        step = ppa_step(op, b, beta, lam, x, v, y_warm=y, inner="newton", tol=p.omega2,
                        params=p.newton)
        x, y = step.x, step.y
        v = update_weights(x, rho)
        rho *= p.sigma
        k += 1
        stage2 += 1
        exit_stage = 2
        inner_total += step.report.iterations
        res = _residual(op, x, b)
        comp = float(v @ np.abs(x))
        record(2, step.report)
        merit = max(res / big / p.eps1, comp / p.eps)
        if merit < 0.999 * best:
            best, since_best = merit, 0
        else:
            since_best += 1

    ok = reason == "converged"
    report = SolverReport(x, res, k, stage1, stage2, inner_total, op.nmat,
                          time.perf_counter() - t0, exit_stage, ok, reason, trace)
    return x, report


@dataclass
class IdealResult:
    x: np.ndarray
    iterations: int
    trace: list
    stagnated: bool
    first_solution: np.ndarray


def epd_ideal(instance, params: EpdParams | None = None, subproblem_tol: float = 1e-10,
              lam: float = 1.0, max_outer: int = 200) -> IdealResult:
    """Exact penalty decomposition with accurately solved weighted l1 subproblems.

    ``iterations`` is the final penalty index ``k`` at which
    ``<v^{k+1}, |x^{k+1}|> <= eps`` held, so it is directly comparable
    with :func:`termination_bound`.
    """
    op, b = instance.op, np.asarray(instance.b, dtype=float)
    if params is None:
        params = default_params(b, implicit=op.implicit)
    p = params
    v = np.ones(op.n)
    rho = p.rho0
    x = y = None
    trace = []
    stagnated = False
    first = None
    for k in range(max_outer + 1):
        sol = solve_weighted_l1(op, b, v, beta=p.beta0, lam=lam, tol=subproblem_tol, x0=x, y0=y)
        x, y = sol.x, sol.y
        stagnated |= sol.stagnated or not sol.converged
        if first is None:
            first = x.copy()
        objective = float(v @ np.abs(x))
        v = update_weights(x, rho)
        comp = float(v @ np.abs(x))
        trace.append({"k": k, "rho": rho, "objective": objective, "complementarity": comp,
                      "ppa_steps": sol.steps})
        if comp <= p.eps:
            return IdealResult(x, k, trace, stagnated, first)
        rho *= p.sigma
    return IdealResult(x, max_outer, trace, True, first)
