"""Acceptance suite: one test per numbered criterion.

Each test records a one-line PASS/FAIL verdict (printed at the end of the
pytest run by ``conftest.py``, or directly when this file is executed as a
script). Tolerances are the ones stated for each criterion; nothing is
relaxed to make a criterion pass.
"""

import json
import os
import sys
import time

import numpy as np
import pytest

from epdsparse.cli import main as cli_main
from epdsparse.dual import DualContext, grad_phi, hessian_apply, phi
from epdsparse.epd import default_params, epd_ideal, epd_practical, termination_bound
from epdsparse.inner import LbfgsParams, NewtonCgParams, lbfgs, newton_cg
from epdsparse.io import read_table
from epdsparse.linop import dense_operator
from epdsparse.metrics import recovery_record
from epdsparse.oracle import (TinyInstance, bp_lp_oracle, brute_min_l0, brute_penalty_min, check_nsc)
from epdsparse.ppa import solve_weighted_l1
from epdsparse.problems import ProblemInstance, gen_caltech
from epdsparse.shrinkage import shrink

VERDICTS = {}


def verdict(num, ok, detail):
    line = f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    VERDICTS[num] = line
    print(line, flush=True)
    return ok


# -------------------------------------------------------------------- 1


def test_c01_prox_grid_search():
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    points = 10 ** 6
    unit = np.linspace(-1.0, 1.0, points)
    # preallocated buffers keep the 1000 dense evaluations inside the time budget
    xs = np.empty(points)
    f = np.empty(points)
    tmp = np.empty(points)
    worst = 0.0
    ok = True
    for _ in range(1000):
        z = rng.uniform(-5, 5)
        v = rng.uniform(0, 1)
        lam = rng.uniform(0.01, 3)
        # the prox lies between 0 and z, so this window always contains it
        lo, hi = min(0.0, z) - 1.0, max(0.0, z) + 1.0
        np.multiply(unit, 0.5 * (hi - lo), out=xs)
        xs += 0.5 * (lo + hi)
        step = xs[1] - xs[0]
        np.abs(xs, out=f)
        f *= v
        np.subtract(xs, z, out=tmp)
        tmp *= tmp
        tmp *= 1.0 / (2 * lam)
        f += tmp
        ref = xs[np.argmin(f)]
        err = abs(shrink(np.array([z]), np.array([v]), lam)[0] - ref)
        worst = max(worst, err / step)
        ok &= err <= step
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 10
    verdict(1, ok, f"max error / grid step = {worst:.3f} over 1000 triples, {elapsed:.1f}s (< 10s)")
    assert ok


# -------------------------------------------------------------------- 2


def test_c02_gradient_finite_differences():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    h = 1e-6
    worst = 0.0
    checked = 0
    for _ in range(10):
        m = int(rng.integers(5, 31))
        n = int(rng.integers(m + 1, 91))
        A = rng.standard_normal((m, n)) / np.sqrt(m)
        ctx = DualContext(dense_operator(A), rng.standard_normal(m), rng.uniform(0.5, 10),
                          rng.uniform(0.1, 2), rng.standard_normal(n),
                          (rng.random(n) < 0.6).astype(float))
        margin = 10 * h * ctx.lam * np.max(np.abs(A))
        pts = 0
        while pts < 50:
            y = rng.standard_normal(m)
            z = ctx.x_anchor - ctx.lam * A.T @ y
            # keep the FD stencil away from the kinks |z_i| = lam v_i
            if np.min(np.abs(np.abs(z) - ctx.lam * ctx.v)) <= max(margin, 1e-8):
                continue
            g = grad_phi(ctx, y)
            fd = np.array([(phi(ctx, y + h * e) - phi(ctx, y - h * e)) / (2 * h) for e in np.eye(m)])
            worst = max(worst, np.max(np.abs(g - fd)) / (1 + np.max(np.abs(g))))
            pts += 1
        checked += pts
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-4 and elapsed < 30
    verdict(2, ok, f"max |grad - FD|/(1+|grad|) = {worst:.2e} at {checked} points (<= 1e-4), {elapsed:.1f}s")
    assert ok


# -------------------------------------------------------------------- 3


def test_c03_hessian_dense_assembly():
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(20):
        m, n = int(rng.integers(3, 25)), int(rng.integers(25, 60))
        A = rng.standard_normal((m, n))
        ctx = DualContext(dense_operator(A), rng.standard_normal(m), rng.uniform(0.1, 1e4),
                          rng.uniform(0.1, 10), rng.standard_normal(n), rng.uniform(0, 1, n))
        mask = (rng.random(n) < 0.5).astype(float)
        eps = rng.uniform(0, 1e-3)
        V = (1 / ctx.beta + eps) * np.eye(m) + ctx.lam * A @ np.diag(mask) @ A.T
        d = rng.standard_normal(m)
        ref = V @ d
        worst = max(worst, np.max(np.abs(hessian_apply(ctx, mask, eps, d) - ref)) / max(1, np.max(np.abs(ref))))
    ok = worst <= 1e-12
    verdict(3, ok, f"max relative deviation from dense (1/beta+eps)I + lam A D A^T = {worst:.1e} (<= 1e-12)")
    assert ok


# -------------------------------------------------------------------- 4


def test_c04_quadratic_limit():
    worst_n = worst_l = 0.0
    for seed in range(20):
        rng = np.random.default_rng(400 + seed)
        m, n = int(rng.integers(5, 30)), int(rng.integers(30, 80))
        A = rng.standard_normal((m, n)) / np.sqrt(n)
        ctx = DualContext(dense_operator(A), rng.standard_normal(m), rng.uniform(1, 100),
                          rng.uniform(0.2, 3), rng.standard_normal(n), np.zeros(n))
        M = np.eye(m) / ctx.beta + ctx.lam * A @ A.T
        ref = np.linalg.solve(M, A @ ctx.x_anchor - ctx.b)
        y1, _ = newton_cg(ctx, np.zeros(m), NewtonCgParams())
        y2, _ = lbfgs(ctx, np.zeros(m), LbfgsParams())
        worst_n = max(worst_n, np.linalg.norm(y1 - ref) / np.linalg.norm(ref))
        worst_l = max(worst_l, np.linalg.norm(y2 - ref) / np.linalg.norm(ref))
    ok = worst_n <= 1e-4 and worst_l <= 1e-4
    verdict(4, ok, f"v=0 relative error: Newton-CG {worst_n:.1e}, L-BFGS {worst_l:.1e} (<= 1e-4, 20 seeds)")
    assert ok


# -------------------------------------------------------------------- 5


def test_c05_weighted_l1_vs_lp():
    worst = 0.0
    for seed in range(50):
        rng = np.random.default_rng(500 + seed)
        m = int(rng.integers(1, 5))
        n = int(rng.integers(m + 1, 9))
        A = rng.standard_normal((m, n))
        b = A @ rng.standard_normal(n)
        v = (rng.random(n) < 0.75).astype(float)
        lp = bp_lp_oracle(TinyInstance(A, b), v)
        sol = solve_weighted_l1(dense_operator(A), b, v, tol=1e-10)
        worst = max(worst, abs(v @ np.abs(sol.x) - lp.value))
    ok = worst <= 1e-6
    verdict(5, ok, f"max |PPA value - LP optimum| = {worst:.1e} on 50 tiny systems (<= 1e-6)")
    assert ok


# -------------------------------------------------------------------- 6


def test_c06_exact_penalty_desk_scale():
    exact_ok = 0
    monotone_ok = 0
    increasing = 0
    for seed in range(50):
        rng = np.random.default_rng(600 + seed)
        n = int(rng.integers(5, 11))
        m = int(rng.integers(2, min(6, n)))
        k = int(rng.integers(1, m))
        A = rng.standard_normal((m, n))
        x = np.zeros(n)
        x[rng.choice(n, k, replace=False)] = rng.standard_normal(k)
        tiny = TinyInstance(A, A @ x)
        r = brute_min_l0(tiny).r
        rho0 = default_params(tiny.b).rho0
        rhos = rho0 * 2.0 ** np.arange(21)
        vals = np.array([brute_penalty_min(tiny, rho)[0] for rho in rhos])
        exact_ok += bool(np.all(vals[10:] == r))
        monotone_ok += bool(np.all(np.diff(vals) <= 1e-12))
        increasing += bool(np.all(np.diff(vals) >= -1e-12))
    ok = exact_ok == 50 and monotone_ok == 50
    verdict(6, ok, f"value == r for rho >= 2^10 rho0 on {exact_ok}/50; nonincreasing in rho on "
                   f"{monotone_ok}/50 (the minimum is nondecreasing on {increasing}/50)")
    assert ok


# -------------------------------------------------------------------- 7


def test_c07_finite_termination(tmp_path):
    assert termination_bound(600, 0.01, 1.0, 2.0) == 16
    worst = -np.inf
    runs = 0
    for mtype, stype in ((1, 1), (2, 3), (3, 4)):
        out = tmp_path / f"a{mtype}s{stype}"
        code = cli_main(["sweep", "--matrix-type", str(mtype), "--signal-type", str(stype),
                         "--n", "128", "--m", "24:64:20", "--K", "8", "--trials", "4",
                         "--check-bound", "--out", str(out)])
        assert code == 0
        for row in read_table(out / "results.csv"):
            worst = max(worst, int(row["ideal_iters"]) - int(row["ideal_bound"]))
            runs += 1
    for seed in range(20):
        rng = np.random.default_rng(700 + seed)
        A = rng.standard_normal((4, 9))
        x = np.zeros(9)
        x[rng.choice(9, 2, replace=False)] = rng.standard_normal(2)
        inst = ProblemInstance(dense_operator(A), A @ x, 0.0, x)
        p = default_params(inst.b)
        res = epd_ideal(inst, p)
        worst = max(worst, res.iterations - termination_bound(9, p.eps, p.rho0, p.sigma))
        runs += 1
    ok = worst <= 0
    verdict(7, ok, f"max (iterations - bound) = {worst} over {runs} runs; n=600 example bound = 16")
    assert ok


# -------------------------------------------------------------------- 8


def test_c08_nsc_recovery():
    certified = failures = 0
    for seed in range(120):
        rng = np.random.default_rng(800 + seed)
        A = rng.standard_normal((6, 8))
        x = np.zeros(8)
        x[rng.integers(8)] = rng.uniform(0.5, 2) * rng.choice([-1, 1])
        tiny = TinyInstance(A, A @ x)
        l0 = brute_min_l0(tiny)
        if check_nsc(tiny, np.ones(8), l0.support) != "certified":
            continue
        certified += 1
        inst = ProblemInstance(dense_operator(A), A @ x, 0.0, x)
        first = epd_ideal(inst).first_solution
        supp = tuple(np.flatnonzero(np.abs(first) > 1e-6 * np.abs(first).max()))
        if supp != tuple(l0.support) or np.linalg.norm(first - l0.x) > 1e-6 * np.linalg.norm(l0.x):
            failures += 1
    ok = certified >= 30 and failures == 0
    verdict(8, ok, f"{certified} certified instances (>= 30), {failures} first-iterate mismatches (0)")
    assert ok


# -------------------------------------------------------------------- 9 and 12


def _sweep9(out, jobs):
    code = cli_main(["sweep", "--matrix-type", "2", "--signal-type", "3", "--n", "600",
                     "--m", "80,140,220", "--K", "40", "--trials", "20", "--seed", "0",
                     "--jobs", str(jobs), "--out", str(out)])
    assert code == 0
    return json.loads((out / "summary.json").read_text())


@pytest.fixture(scope="module")
def sweep9(tmp_path_factory):
    out = tmp_path_factory.mktemp("c09")
    t0 = time.perf_counter()
    summary = _sweep9(out, 1)
    return out, summary, time.perf_counter() - t0


def test_c09_noiseless_recovery_curve(sweep9):
    _, summary, elapsed = sweep9
    freq = {g["m"]: g["frequency"] for g in summary["grid"]}
    ok = freq[80] <= 0.2 and freq[220] >= 0.9 and elapsed < 15 * 60
    verdict(9, ok, f"success frequency m=80: {freq[80]:.2f} (<= 0.2), m=140: {freq[140]:.2f}, "
                   f"m=220: {freq[220]:.2f} (>= 0.9), {elapsed:.0f}s")
    assert ok


def test_c12_determinism(sweep9, tmp_path):
    out, _, _ = sweep9
    _sweep9(tmp_path / "rerun", 2)
    first = (out / "results.csv").read_bytes()
    second = (tmp_path / "rerun" / "results.csv").read_bytes()
    ok = first == second
    verdict(12, ok, f"rerun of the criterion-9 sweep (serial vs 2 workers): results.csv "
                    f"{'byte-identical' if ok else 'differs'} ({len(first)} bytes)")
    assert ok


# -------------------------------------------------------------------- 10


def test_c10_caltech_style():
    good = []
    details = []
    for seed in range(10):
        inst = gen_caltech(1, seed)
        x, _ = epd_practical(inst)
        rec = recovery_record(x, inst)
        hit = rec.relerr <= 1e-6 and (rec.sgn, rec.miss, rec.over) == (0, 0, 0) and rec.nnzx == 33
        good.append(hit)
        if not hit:
            details.append(f"seed {seed}: relerr {rec.relerr:.1e}, nnzx {rec.nnzx}, "
                           f"(sgn,miss,over)=({rec.sgn},{rec.miss},{rec.over})")
    ok = sum(good) >= 8
    verdict(10, ok, f"{sum(good)}/10 seeds meet relerr <= 1e-6, (0,0,0), nnzx = 33 (need >= 8)"
                    + ("; misses: " + "; ".join(details) if details else ""))
    assert ok


# -------------------------------------------------------------------- 11


def test_c11_noisy_protocol(tmp_path):
    code = cli_main(["sweep", "--matrix-type", "3", "--signal-type", "1", "--n", "600", "--m", "240",
                     "--K", "40", "--trials", "20", "--theta", "0.01", "--noisy", "--out", str(tmp_path)])
    assert code == 0
    rows = read_table(tmp_path / "results.csv")
    res = np.mean([float(r["res"]) for r in rows])
    rel = np.mean([float(r["relerr"]) for r in rows])
    ok = len(rows) == 20 and res <= 0.02 and rel < 1e-2
    verdict(11, ok, f"mean Res = {res:.2e} (<= 0.02), mean Relerr = {rel:.2e} (< 1e-2), 20 trials")
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([os.path.abspath(__file__), "-q", "-p", "no:cacheprovider"]))
