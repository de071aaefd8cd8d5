#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
lotforge command line
---------------------
- gen       write a seeded random instance
- solve     run one method on an instance file and write the solution
- validate  check a solution file against an instance file
- bench     run an experiment suite and write the CSV report
- report    turn a CSV report into a markdown (or CSV) table
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import asdict
from multiprocessing import freeze_support, get_start_method, set_start_method
from pathlib import Path
from typing import List, Optional, Sequence

from pydantic import ValidationError

from . import backend
from .bench import METHODS, SuiteConfig, parse_report, render_report, run_suite
from .bigbucket import build_model1, decode_model1
from .bounds import LbChoice, solve_lower_bound
from .compact import build_model2, decode_model2
from .domain import Instance, Solution, load_instance, load_solution, save_instance, save_solution
from .errors import LotforgeError
from .generator import GenSpec, generate
from .local_search import LocalSearchOptions, run_rh1_lo_detailed
from .milp import SolveOptions, model_dimensions
from .rolling import RhOptions, Trajectory, run_rolling_horizon
from .settings import K_CONST, configure_logging
from .validation import validate_solution

SOLVE_METHODS = ("model1", "model1-cut", "model2", "lb1", "lb2", "rh1", "rh2", "rh1-lo")


# =========================
# Utilities
# =========================
def parse_selection(selection: str) -> List[int]:
    """
    Turn '3', '1,3,5-7' into a list of integers (order kept, duplicates dropped).
    """
    s = selection.strip().lower()
    if s in ("none", "n", ""):
        return []
    picked: List[int] = []
    for chunk in s.split(","):
        chunk = chunk.strip()
        if "-" in chunk:
            start, end = chunk.split("-", 1)
            i, j = int(start), int(end)
            if i < 0 or i > j:
                raise ValueError(f"Invalid range: {chunk}")
            picked.extend(range(i, j + 1))
        else:
            k = int(chunk)
            if k < 0:
                raise ValueError(f"Invalid seed: {chunk}")
            picked.append(k)
    seen = set()
    out: List[int] = []
    for x in picked:
        if x not in seen:
            out.append(x)
            seen.add(x)
    return out


def _csv_list(text: str) -> List[str]:
    return [p.strip() for p in text.split(",") if p.strip()]


def _learning_list(text: Optional[str]) -> List[Optional[float]]:
    if not text:
        return [None]
    return [None if p.lower() == "none" else float(p) for p in _csv_list(text)]


def _summary(lines: Sequence[str]) -> None:
    print("\n==== Summary ====")
    for line in lines:
        print(f"  {line}")


# =========================
# Commands
# =========================
def cmd_gen(args: argparse.Namespace) -> int:
    spec = GenSpec(
        alpha=args.alpha,
        beta=args.beta,
        gamma=args.gamma,
        delta=args.delta,
        seed=args.seed,
        rho=args.rho,
        pattern=args.pattern,
        learning=args.learning,
        distinct_machines=args.distinct_machines,
    )
    inst = generate(spec)
    save_instance(inst, args.out)
    _summary(
        [
            f"instance: {inst.label} (seed {spec.seed})",
            f"period length: {inst.period_length:.3f}, positions R: {inst.R}",
            f"total demand: {sum(inst.total_demand(j) for j in range(inst.jobs)):.0f}",
            f"written to: {args.out}",
        ]
    )
    return 0


def _solve_exact(method: str, inst: Instance, opts: SolveOptions) -> tuple[Solution, str, str]:
    if method == "model2":
        model, v2 = build_model2(inst)
        result = backend.solve(model, opts)
        if not result.has_solution:
            raise LotforgeError(f"Model-II ended with status {result.status}")
        return decode_model2(inst, v2, result), result.status, "precedence"
    with_cut = method == "model1-cut"
    model, v1 = build_model1(inst, with_cut=with_cut)
    dims = model_dimensions(model)
    print(f"Model-I rows={dims.constraints} continuous={dims.continuous} binary={dims.binary}")
    result = backend.solve(model, opts)
    if not result.has_solution:
        raise LotforgeError(f"Model-I ended with status {result.status}")
    return decode_model1(inst, v1, result), result.status, "precedence" if with_cut else "inventory"


def cmd_solve(args: argparse.Namespace) -> int:
    inst = load_instance(args.inp)
    method = args.method
    lines = [f"instance: {inst.label}", f"method: {method}"]

    if method in ("lb1", "lb2"):
        opts = SolveOptions(seed=args.seed, **({"time_limit": args.time_limit} if args.time_limit else {}))
        outcome = solve_lower_bound(inst, LbChoice(kind=method.upper(), k_const=args.k_const), opts)
        if args.out:
            Path(args.out).write_text(json.dumps(asdict(outcome), indent=1), encoding="utf-8")
        lines += [f"status: {outcome.status}", f"lower bound: {outcome.objective}", f"certified: {outcome.certified}"]
        _summary(lines)
        return 0 if outcome.objective is not None else 1

    trajectory: Optional[Trajectory] = None
    if method in ("model1", "model1-cut", "model2"):
        opts = SolveOptions(seed=args.seed, **({"time_limit": args.time_limit} if args.time_limit else {}))
        sol, status, mode = _solve_exact(method, inst, opts)
    else:
        rh_opts = RhOptions(
            lb_choice=LbChoice(kind="LB2" if method == "rh2" else "LB1", k_const=args.k_const),
            iteration_time_limit=args.time_limit,
            seed=args.seed,
        )
        mode = "precedence"
        if method == "rh1-lo":
            outcome = run_rh1_lo_detailed(inst, rh_opts, LocalSearchOptions(seed=args.seed))
            sol, trajectory = outcome.solution, outcome.trajectory
            lines.append(f"RH1 objective: {outcome.rh_solution.objective:.4f}")
            lines.append(f"local search: {len(outcome.rounds)} round(s), {outcome.improvement_percent:.2f}% better")
        else:
            sol, trajectory = run_rolling_horizon(inst, rh_opts)
        status = "budget-exhausted" if trajectory.budget_exhausted else trajectory.records[-1].status

    report = validate_solution(inst, sol, mode)
    if args.out:
        save_solution(sol, args.out)
    if trajectory is not None and args.trajectory:
        trajectory.write_jsonl(args.trajectory)
    lines += [f"status: {status}", f"objective: {sol.objective:.4f}", f"validation: {report.summary()}"]
    if args.out:
        lines.append(f"written to: {args.out}")
    _summary(lines)
    return 0 if report.is_feasible else 1


def cmd_validate(args: argparse.Namespace) -> int:
    inst = load_instance(args.instance)
    sol = load_solution(args.solution)
    report = validate_solution(inst, sol, args.mode)
    _summary([f"instance: {inst.label}", f"mode: {args.mode}", report.summary(limit=args.limit)])
    return 0 if report.is_feasible else 1


def cmd_bench(args: argparse.Namespace) -> int:
    config = SuiteConfig(
        specs=_csv_list(args.specs),
        methods=_csv_list(args.methods) if args.methods else list(METHODS),
        seeds=parse_selection(args.seeds),
        learning=_learning_list(args.learning),
        k_const=args.k_const,
        rho=args.rho,
        pattern=args.pattern,
        workers=args.workers,
        **({"time_scale": args.time_scale} if args.time_scale is not None else {}),
    )
    t0 = time.time()
    report = run_suite(config)
    render_report(report, args.out)
    failed = [r for r in report.rows if r.status.startswith("failed")]
    for r in report.rows:
        mark = "[X]" if r in failed else "[OK]"
        print(f"{mark} {r.instance} seed={r.seed} {r.method}: {r.status} obj={r.objective} in {r.seconds:.1f}s")
    _summary(
        [
            f"cells: {len(report)} ({len(failed)} failed)",
            f"report: {args.out}",
            f"finished in {time.time() - t0:.1f}s",
        ]
    )
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    report = parse_report(args.inp)
    out = render_report(report, args.out, fmt=args.format, layout=args.layout)
    _summary([f"rows: {len(report)}", f"{args.format} ({args.layout}) written to: {out}"])
    return 0


# =========================
# Orchestration
# =========================
def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lotforge",
        description="Lot-sizing and job-shop scheduling with a period-based learning effect.",
    )
    parser.add_argument("--log-level", help="Override LOTFORGE_LOG_LEVEL.")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="Generate a seeded random instance.")
    gen.add_argument("--alpha", type=int, required=True, help="Number of jobs.")
    gen.add_argument("--beta", type=int, required=True, help="Total number of operations.")
    gen.add_argument("--gamma", type=int, required=True, help="Number of machines.")
    gen.add_argument("--delta", type=int, required=True, help="Number of periods.")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--rho", type=float, default=0.8, help="Target utilization of regular capacity.")
    gen.add_argument("--pattern", choices=("all-periods", "single-period", "none"), default="all-periods")
    gen.add_argument("--learning", type=float, help="Fixed learning index for every operation.")
    gen.add_argument("--distinct-machines", action="store_true", help="Route each job over distinct machines.")
    gen.add_argument("--out", required=True)
    gen.set_defaults(func=cmd_gen)

    solve = sub.add_parser("solve", help="Solve an instance with one method.")
    solve.add_argument("--method", choices=SOLVE_METHODS, required=True)
    solve.add_argument("--in", dest="inp", required=True, help="Instance JSON file.")
    solve.add_argument("--out", help="Solution JSON file (bound summary for lb1/lb2).")
    solve.add_argument(
        "--time-limit", type=float, help="Seconds per exact solve; per iteration for the rolling-horizon methods."
    )
    solve.add_argument("--seed", type=int, default=0)
    solve.add_argument("--k-const", type=float, default=K_CONST)
    solve.add_argument("--trajectory", help="JSON-lines file for the rolling-horizon iterations.")
    solve.set_defaults(func=cmd_solve)

    val = sub.add_parser("validate", help="Validate a solution against an instance.")
    val.add_argument("--instance", required=True)
    val.add_argument("--solution", required=True)
    val.add_argument("--mode", choices=("precedence", "inventory"), default="precedence")
    val.add_argument("--limit", type=int, default=10, help="Violations shown in the summary.")
    val.set_defaults(func=cmd_validate)

    bench = sub.add_parser("bench", help="Run an experiment suite.")
    bench.add_argument("--specs", required=True, help="Comma list of alpha:beta:gamma:delta, e.g. '2:8:2:3,3:9:3:3'.")
    bench.add_argument("--methods", help=f"Comma list out of {', '.join(METHODS)} (default: all).")
    bench.add_argument("--seeds", default="0", help="Seeds, e.g. '1,3,5-7'.")
    bench.add_argument("--learning", help="Comma list of fixed learning indices, e.g. '0,-0.2,-0.4'.")
    bench.add_argument("--time-scale", type=float, help="Multiplier on the desk-scale limits (default: LOTFORGE_TIME_SCALE).")
    bench.add_argument("--k-const", type=float, default=K_CONST)
    bench.add_argument("--rho", type=float, default=0.8)
    bench.add_argument("--pattern", choices=("all-periods", "single-period", "none"), default="all-periods")
    bench.add_argument("--workers", type=int, default=1)
    bench.add_argument("--out", required=True, help="CSV report file.")
    bench.set_defaults(func=cmd_bench)

    rep = sub.add_parser("report", help="Render a CSV report.")
    rep.add_argument("--in", dest="inp", required=True)
    rep.add_argument("--out", required=True)
    rep.add_argument("--format", choices=("csv", "markdown"), default="markdown")
    rep.add_argument("--layout", choices=("rows", "methods", "bounds"), default="methods")
    rep.set_defaults(func=cmd_report)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    # Windows: safer start method for multiprocessing
    try:
        if get_start_method(allow_none=True) != "spawn":
            set_start_method("spawn", force=True)
    except Exception:
        pass

    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)

    started = time.time()
    try:
        code = args.func(args)
    except (LotforgeError, ValidationError, ValueError, OSError) as e:
        print(f"[X] {args.command} failed: {e} (after {time.time() - started:.1f}s).")
        return 1
    if code == 0:
        print(f"[OK] {args.command} completed in {time.time() - started:.1f}s.")
    else:
        print(f"[X] {args.command} finished with code {code} (after {time.time() - started:.1f}s).")
    return code


if __name__ == "__main__":
    freeze_support()
    sys.exit(main())
