"""Command-line front end: ``solve``, ``sweep``, ``oracle`` and ``gen``.

Exit codes: 0 on success, 1 on malformed input, 2 when the solver
reports failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import plotting
from .epd import default_params, epd_ideal, epd_practical, termination_bound
from .io import (RESULT_COLUMNS, SCHEMA_LINE, TIMING_COLUMNS, InputError, load_instance,
                 read_config, save_instance, write_table, write_vector)
from .metrics import recovery_record
from .oracle import (MAX_N, OracleError, TinyInstance, bp_lp_oracle, brute_min_l0,
                     check_nsc, penalty_sweep)
from .problems import gen_caltech, gen_instance, get_preset

log = logging.getLogger("epdsparse")

SOLVER_KEYS = ("rho0", "sigma", "eps", "eps1", "omega1", "omega2")
# option name -> converter, for values coming from a config file
CONFIG_TYPES = {
    "preset": str, "seed": int, "jobs": int, "out": str, "noisy": lambda s: s.lower() in ("1", "true", "yes", "on"),
    "theta": float, "matrix_type": int, "signal_type": int, "n": int, "m": str, "K": int,
    "trials": int, "rho0": float, "sigma": float, "eps": float, "eps1": float,
    "omega1": float, "omega2": float, "check_bound": lambda s: s.lower() in ("1", "true", "yes", "on"),
}


# ---------------------------------------------------------------- helpers


def _parse_m_list(text):
    """``"80,100"`` or ``"80:220:10"`` (inclusive) -> strictly increasing list."""
    if text is None:
        return None
    text = str(text).strip()
    if ":" in text:
        parts = [int(p) for p in text.split(":")]
        if len(parts) != 3 or parts[2] <= 0:
            raise InputError(f"bad m range {text!r}; use start:stop:step")
        ms = list(range(parts[0], parts[1] + 1, parts[2]))
    else:
        ms = [int(p) for p in text.split(",") if p.strip()]
    if not ms or any(b <= a for a, b in zip(ms, ms[1:])):
        raise InputError("the m list must be nonempty and strictly increasing")
    return ms


def _merge_config(args):
    if not getattr(args, "config", None):
        return args
    cfg = read_config(args.config)
    for key, raw in cfg.items():
        if key not in CONFIG_TYPES:
            raise InputError(f"unknown config key {key!r}")
        # command-line values win over the file
        if getattr(args, key, None) in (None, False):
            try:
                setattr(args, key, CONFIG_TYPES[key](raw))
            except ValueError as exc:
                raise InputError(f"config key {key}: {exc}") from exc
    return args


def _overrides(args):
    return {k: getattr(args, k) for k in SOLVER_KEYS if getattr(args, k, None) is not None}


def _params_for(instance, noisy, theta, overrides):
    return default_params(instance.b, implicit=instance.op.implicit, noisy=noisy,
                          theta=theta if theta else 0.01, **overrides)


def _row(instance, rec, report):
    return {
        "matrix_type": instance.matrix_type, "signal_type": instance.signal_type,
        "n": instance.n, "m": instance.m, "K": instance.K, "theta": float(instance.theta),
        "seed": instance.seed, "relerr": rec.relerr, "res": rec.res, "nnzx": rec.nnzx,
        "sgn": rec.sgn, "miss": rec.miss, "over": rec.over, "success": rec.success,
        "nmat": report.nmat, "outer_iters": report.outer_iterations,
        "exit_stage": report.exit_stage,
    }


# ---------------------------------------------------------------- solve


def _solve_instance(args):
    if args.A or args.b:
        if not (args.A and args.b):
            raise InputError("--A and --b must be given together")
        inst = load_instance(args.A, args.b, args.x_true)
        if args.theta:
            inst.theta = float(args.theta)
        return inst
    seed = 0 if args.seed is None else args.seed
    if args.preset and args.preset.startswith("caltech:"):
        try:
            row = int(args.preset.split(":", 1)[1])
        except ValueError:
            raise InputError(f"bad preset {args.preset!r}") from None
        return gen_caltech(row, seed)
    if args.preset:
        pre = get_preset(args.preset)
        grid = pre.grid
        if args.m is not None:
            ms = _parse_m_list(args.m)
            grid = [g for g in grid if g[1] == ms[0]]
            if not grid:
                raise InputError(f"m={ms[0]} is not on the grid of {pre.name}")
        n, m, K = grid[0]
        theta = args.theta if args.theta is not None else pre.theta
        return gen_instance(pre.matrix_type, pre.signal_type, n, m, K, seed, theta=theta or 0.0)
    need = ("matrix_type", "signal_type", "n", "m", "K")
    missing = [k for k in need if getattr(args, k) is None]
    if missing:
        raise InputError("give --A/--b, --preset, or all of " + ", ".join("--" + k.replace("_", "-") for k in missing))
    m = _parse_m_list(args.m)[0]
    return gen_instance(args.matrix_type, args.signal_type, args.n, m, args.K, seed,
                        theta=args.theta or 0.0)


def cmd_solve(args) -> int:
    inst = _solve_instance(args)
    noisy = bool(args.noisy) or inst.theta > 0
    params = _params_for(inst, noisy, inst.theta or args.theta, _overrides(args))
    x, report = epd_practical(inst, params)
    rec = recovery_record(x, inst, report.time_s, report.nmat)
    out = args.out or "."
    os.makedirs(out, exist_ok=True)
    write_vector(os.path.join(out, "solution.txt"), x)
    write_table(os.path.join(out, "result.csv"), RESULT_COLUMNS, [_row(inst, rec, report)], SCHEMA_LINE)
    print(f"{inst.label}: reason={report.reason} res={rec.res:.3e} relerr="
          f"{'--' if rec.relerr is None else format(rec.relerr, '.3e')} nnzx={rec.nnzx} "
          f"(sgn,miss,over)=({rec.sgn},{rec.miss},{rec.over}) nmat={report.nmat} "
          f"outer={report.outer_iterations} time={report.time_s:.3f}s")
    return 0 if report.success else 2


# ---------------------------------------------------------------- sweep


def _sweep_grid(args):
    if args.preset:
        pre = get_preset(args.preset)
        grid = list(pre.grid)
        if args.m is not None:
            keep = set(_parse_m_list(args.m))
            grid = [g for g in grid if g[1] in keep]
        trials = args.trials if args.trials is not None else pre.trials
        theta = args.theta if args.theta is not None else pre.theta
        return pre.matrix_type, pre.signal_type, grid, trials, theta, pre.name
    need = ("matrix_type", "signal_type", "n", "m", "K")
    missing = [k for k in need if getattr(args, k) is None]
    if missing:
        raise InputError("give --preset or all of " + ", ".join("--" + k.replace("_", "-") for k in missing))
    grid = [(args.n, m, args.K) for m in _parse_m_list(args.m)]
    trials = args.trials if args.trials is not None else 1
    return (args.matrix_type, args.signal_type, grid, trials, args.theta or 0.0,
            f"atype{args.matrix_type}-stype{args.signal_type}")


def run_trial(task):
    """Generate and solve one sweep trial (top-level so worker processes can pickle it)."""
    matrix_type, signal_type, n, m, K, seed, theta, noisy, overrides, check_bound = task
    inst = gen_instance(matrix_type, signal_type, n, m, K, seed, theta=theta)
    params = _params_for(inst, noisy, theta, overrides)
    x, report = epd_practical(inst, params)
    rec = recovery_record(x, inst, report.time_s, report.nmat)
    row = _row(inst, rec, report)
    if check_bound:
        ideal = epd_ideal(inst, params)
        row["ideal_iters"] = ideal.iterations
        row["ideal_bound"] = termination_bound(n, params.eps, params.rho0, params.sigma)
    timing = {"n": n, "m": m, "seed": seed, "time_s": report.time_s}
    return row, timing


def summarize(rows, timings):
    """Per grid point: success frequency and mean successful time (or mean total time)."""
    out = []
    keys = []
    for r in rows:
        key = (r["n"], r["m"], r["K"])
        if key not in keys:
            keys.append(key)
    for key in keys:
        idx = [i for i, r in enumerate(rows) if (r["n"], r["m"], r["K"]) == key]
        succ = [bool(rows[i]["success"]) for i in idx]
        times = [timings[i]["time_s"] for i in idx]
        ok_times = [t for t, s in zip(times, succ) if s]
        relerrs = [rows[i]["relerr"] for i in idx if rows[i]["relerr"] is not None]
        out.append({
            "n": key[0], "m": key[1], "K": key[2], "trials": len(idx),
            "successes": int(sum(succ)),
            "frequency": float(np.mean(succ)),
            "mean_time": float(np.mean(ok_times if ok_times else times)),
            "time_basis": "successful" if ok_times else "all",
            "mean_relerr": float(np.mean(relerrs)) if relerrs else None,
            "mean_res": float(np.mean([rows[i]["res"] for i in idx])),
            "mean_nmat": float(np.mean([rows[i]["nmat"] for i in idx])),
        })
    return out


def cmd_sweep(args) -> int:
    matrix_type, signal_type, grid, trials, theta, name = _sweep_grid(args)
    if trials < 1:
        raise InputError("trials must be at least 1")
    if not grid:
        raise InputError("empty sweep grid")
    seed0 = 0 if args.seed is None else args.seed
    noisy = bool(args.noisy) or theta > 0
    overrides = _overrides(args)
    tasks = [(matrix_type, signal_type, n, m, K, seed0 + t, theta, noisy, overrides, args.check_bound)
             for (n, m, K) in grid for t in range(trials)]
    jobs = max(1, args.jobs or 1)
    t0 = time.perf_counter()
    if jobs == 1:
        results = [run_trial(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run_trial, tasks))
    rows = [r for r, _ in results]
    timings = [t for _, t in results]
    out = args.out or "."
    os.makedirs(out, exist_ok=True)
    cols = RESULT_COLUMNS + (("ideal_iters", "ideal_bound") if args.check_bound else ())
    write_table(os.path.join(out, "results.csv"), cols, rows, SCHEMA_LINE)
    write_table(os.path.join(out, "timings.csv"), TIMING_COLUMNS, timings)
    summary = summarize(rows, timings)
    doc = {"name": name, "matrix_type": matrix_type, "signal_type": signal_type,
           "theta": theta, "trials": trials, "seed0": seed0, "grid": summary,
           "wall_time_s": time.perf_counter() - t0}
    if args.check_bound:
        doc["bound_violations"] = sum(1 for r in rows if r["ideal_iters"] > r["ideal_bound"])
    with open(os.path.join(out, "summary.json"), "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    ns = {s["n"] for s in summary}
    ms = {s["m"] for s in summary}
    if len(ms) > 1:
        plotting.success_vs_m(summary, os.path.join(out, "success_vs_m.svg"), name)
        if noisy:
            plotting.relerr_vs_m(summary, os.path.join(out, "relerr_vs_m.svg"), name)
    if len(ns) > 1:
        plotting.time_vs_n(summary, os.path.join(out, "time_vs_n.svg"), name)
    for s in summary:
        print(f"n={s['n']} m={s['m']} K={s['K']}: {s['successes']}/{s['trials']} succeeded, "
              f"mean time {s['mean_time']:.3f}s ({s['time_basis']})")
    return 0


# ---------------------------------------------------------------- oracle


def cmd_oracle(args) -> int:
    if not (args.A and args.b):
        raise InputError("oracle needs --A and --b")
    inst = load_instance(args.A, args.b)
    A = inst.op.to_dense()
    if A.shape[1] > MAX_N:
        raise InputError(f"oracle instances are limited to n <= {MAX_N}, got n={A.shape[1]}")
    tiny = TinyInstance(A, inst.b)
    checks = [c.strip() for c in args.checks.split(",") if c.strip()]
    l0 = brute_min_l0(tiny)
    if not l0.feasible:
        print("infeasible")
        return 2
    print(f"r = {l0.r}  support = {list(l0.support)}")
    rho0 = args.rho0 if args.rho0 is not None else default_params(inst.b).rho0
    if "penalty" in checks:
        if tiny.n > 10:
            print("penalty sweep skipped (n > 10)")
        else:
            rhos = rho0 * 2.0 ** np.arange(21)
            vals = penalty_sweep(tiny, rhos)
            for rho, val in zip(rhos, vals):
                print(f"rho = {rho:.6g}  penalty min = {val:.12g}")
    v = np.ones(tiny.n)
    if "nsc" in checks:
        try:
            verdict = check_nsc(tiny, v, l0.support)
        except OracleError as exc:
            verdict = f"unsupported ({exc})"
        print(f"NSC (v = e, I* = witness support): {verdict}")
    if "lp" in checks:
        lp = bp_lp_oracle(tiny, v)
        print(f"LP min ||x||_1 s.t. Ax = b: {lp.value:.12g}")
    return 0


# ---------------------------------------------------------------- gen


def cmd_gen(args) -> int:
    inst = _solve_instance(args)
    out = args.out or "."
    paths = save_instance(out, inst)
    print("wrote " + ", ".join(paths[k] for k in sorted(paths)))
    return 0


# ---------------------------------------------------------------- parser


def build_parser():
    parser = argparse.ArgumentParser(prog="epdsparse", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="key = value file; command-line flags take precedence")
        p.add_argument("--preset", help="figure preset name or caltech:ROW")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="output directory")
        p.add_argument("--noisy", action="store_true", default=None)
        p.add_argument("--theta", type=float)
        p.add_argument("--matrix-type", type=int)
        p.add_argument("--signal-type", type=int)
        p.add_argument("--n", type=int)
        p.add_argument("--m", help="one value, a list a,b,c or a range start:stop:step")
        p.add_argument("--K", type=int)
        for key in SOLVER_KEYS:
            p.add_argument("--" + key, type=float)

    p = sub.add_parser("solve", help="solve one instance")
    common(p)
    p.add_argument("--A", help="MatrixMarket file with the sensing matrix")
    p.add_argument("--b", help="measurement vector, one value per line")
    p.add_argument("--x-true", help="ground-truth signal, optional")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="run a recovery experiment over a grid")
    common(p)
    p.add_argument("--trials", type=int)
    p.add_argument("--jobs", type=int)
    p.add_argument("--check-bound", action="store_true", default=None,
                   help="also run the accurate-subproblem variant and record its iteration count")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("oracle", help="brute-force checks on a tiny instance")
    p.add_argument("--A", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--rho0", type=float)
    p.add_argument("--checks", default="l0,penalty,nsc,lp")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("gen", help="export a generated instance")
    common(p)
    p.add_argument("--A", help=argparse.SUPPRESS)
    p.add_argument("--b", help=argparse.SUPPRESS)
    p.add_argument("--x-true", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_gen)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    for key in ("jobs", "trials", "check_bound", "x_true", "A", "b"):
        if not hasattr(args, key):
            setattr(args, key, None)
    try:
        args = _merge_config(args)
        return args.func(args)
    except (InputError, OracleError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
