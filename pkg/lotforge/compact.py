"""Compact formulation (Model-II): one lot per operation and period, chain order inside a period."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from itertools import combinations
from typing import Dict, Iterable, List, Optional, Set, Tuple

from .domain import Instance, Solution, evaluate_objective
from .errors import DecodeError
from .milp import OPTIMAL, MilpModel, SolveResult, vname
from .validation import validate_solution

logger = logging.getLogger("lotforge.compact")

PairKey = Tuple[int, int, int, int, int]  # (j, h, k, l, t)


@dataclass(frozen=True)
class Model2Vars:
    """Name handles of a Model-II build."""

    inst: Instance
    z_pairs: Tuple[PairKey, ...]
    g_time: float
    g_qty: float

    def x(self, j: int, h: int, t: int) -> str:
        return vname("x", j=j, h=h, t=t)

    def y(self, j: int, h: int, t: int) -> str:
        return vname("y", j=j, h=h, t=t)

    def s(self, j: int, h: int, t: int) -> str:
        return vname("s", j=j, h=h, t=t)

    def f(self, j: int, h: int, t: int) -> str:
        return vname("f", j=j, h=h, t=t)

    def z(self, j: int, h: int, k: int, l: int, t: int) -> str:
        return vname("z", j=j, h=h, k=k, l=l, t=t)

    def o(self, m: int, t: int) -> str:
        return vname("o", m=m, t=t)

    def F(self, j: int, t: int) -> str:
        return vname("F", j=j, t=t)

    def Tr(self, j: int, t: int) -> str:
        return vname("Tr", j=j, t=t)

    def tardiness_row(self, j: int, t: int) -> str:
        return vname("tard", j=j, t=t)

    # --- binary groups used by the matheuristics ---
    def period_binaries(self, t: int) -> List[str]:
        names = [self.y(j, h, t) for (j, h) in self.inst.ops]
        names += [self.z(*p) for p in self.z_pairs if p[4] == t]
        return names

    def job_binaries(self, jobs: Iterable[int]) -> List[str]:
        """y of the given jobs plus z pairs whose both operations belong to them."""
        js: Set[int] = set(jobs)
        names = [self.y(j, h, t) for (j, h) in self.inst.ops if j in js for t in range(self.inst.periods)]
        names += [self.z(*p) for p in self.z_pairs if p[0] in js and p[2] in js]
        return names


def big_ms(inst: Instance) -> Tuple[float, float]:
    g_time = inst.horizon_end
    g_qty = max(1.0, float(sum(sum(row) for row in inst.demand)))
    return g_time, g_qty


def build_model2(inst: Instance, prune: bool = False) -> Tuple[MilpModel, Model2Vars]:
    """Emit Model-II; with ``prune`` jobs without demand lose their setups and sequencing pairs."""
    J, M, T, L = inst.jobs, inst.machines, inst.periods, inst.period_length
    g_time, g_qty = big_ms(inst)
    idle_jobs = {j for j in range(J) if inst.total_demand(j) <= 0} if prune else set()

    pairs: List[PairKey] = []
    for m in range(M):
        on_m = [op for op in inst.machine_ops(m) if op[0] not in idle_jobs]
        for t in range(T):
            for (j, h), (k, l) in combinations(on_m, 2):
                pairs.append((j, h, k, l, t))
                pairs.append((k, l, j, h, t))
    v = Model2Vars(inst, tuple(pairs), g_time, g_qty)
    model = MilpModel(name="model2")

    # === Variables ===
    for j, h in inst.ops:
        for t in range(T):
            model.add_var(v.x(j, h, t))
            model.add_var(v.y(j, h, t), "binary", ub=0.0 if j in idle_jobs else 1.0)
            model.add_var(v.s(j, h, t), ub=g_time)
            model.add_var(v.f(j, h, t), ub=g_time)
    for p in pairs:
        model.add_var(v.z(*p), "binary")
    for m in range(M):
        for t in range(T):
            model.add_var(v.o(m, t))
    for j in range(J):
        for t in range(T):
            model.add_var(v.F(j, t), ub=g_time)
            model.add_var(v.Tr(j, t))

    obj: Dict[str, float] = {v.Tr(j, t): inst.tc[j] for j in range(J) for t in range(T)}
    obj.update({v.o(m, t): inst.oc[m] for m in range(M) for t in range(T)})
    model.set_objective(obj)

    # === Rows ===
    for j in range(J):
        hj = inst.final_op(j)
        total = inst.total_demand(j)
        for h in range(inst.ops_of(j)):
            model.add_constr(vname("dem", j=j, h=h), {v.x(j, h, t): 1.0 for t in range(T)}, "=", total)
        for h in range(hj):
            for t in range(T):
                # cumulative output of h+1 never exceeds that of h
                row = {v.x(j, h + 1, tt): 1.0 for tt in range(t + 1)}
                for tt in range(t + 1):
                    row[v.x(j, h, tt)] = row.get(v.x(j, h, tt), 0.0) - 1.0
                model.add_constr(vname("bal", j=j, h=h, t=t), row, "<=", 0.0)
                model.add_constr(
                    vname("chain", j=j, h=h, t=t), {v.s(j, h + 1, t): 1.0, v.f(j, h, t): -1.0}, ">=", 0.0
                )

    for m in range(M):
        for t in range(T):
            row = {v.x(j, h, t): inst.unit_time(j, h, t) for (j, h) in inst.machine_ops(m)}
            row[v.o(m, t)] = -1.0
            model.add_constr(vname("cap", m=m, t=t), row, "<=", inst.capacity[m][t])
            model.add_constr(vname("ot", m=m, t=t), {v.o(m, t): 1.0}, "<=", inst.overtime_limit[m][t])

    for j, h in inst.ops:
        for t in range(T):
            model.add_constr(vname("setup", j=j, h=h, t=t), {v.x(j, h, t): 1.0, v.y(j, h, t): -g_qty}, "<=", 0.0)
            model.add_constr(
                vname("dur", j=j, h=h, t=t),
                {v.f(j, h, t): 1.0, v.s(j, h, t): -1.0, v.x(j, h, t): -inst.unit_time(j, h, t)},
                "=",
                0.0,
            )
            model.add_constr(vname("wins", j=j, h=h, t=t), {v.s(j, h, t): 1.0}, ">=", L * t)
            model.add_constr(vname("winf", j=j, h=h, t=t), {v.f(j, h, t): 1.0}, "<=", L * (t + 1))

    for j, h, k, l, t in pairs:
        if (j, h) < (k, l):
            model.add_constr(
                vname("seq", j=j, h=h, k=k, l=l, t=t),
                {v.z(j, h, k, l, t): 1.0, v.z(k, l, j, h, t): 1.0, v.y(j, h, t): -1.0, v.y(k, l, t): -1.0},
                ">=",
                -1.0,
            )
        model.add_constr(
            vname("disj", j=j, h=h, k=k, l=l, t=t),
            {v.f(j, h, t): 1.0, v.s(k, l, t): -1.0, v.z(j, h, k, l, t): g_time},
            "<=",
            g_time,
        )

    for j in range(J):
        hj = inst.final_op(j)
        for t in range(T):
            model.add_constr(
                vname("fin", j=j, t=t),
                {v.F(j, t): 1.0, v.f(j, hj, t): -1.0, v.y(j, hj, t): -g_time},
                ">=",
                -g_time,
            )
            model.add_constr(v.tardiness_row(j, t), {v.Tr(j, t): 1.0, v.F(j, t): -1.0}, ">=", -inst.due[j][t])

    logger.debug("Built Model-II for %s: %d rows, %d columns", inst.label, len(model.constraints), len(model.variables))
    return model, v


# ================= Decode =================
def _clip(value: float, lo: float, hi: Optional[float] = None) -> float:
    value = max(lo, value)
    return value if hi is None else min(hi, value)


def solution_from_schedule(
    inst: Instance,
    lots: Dict[Tuple[int, int, int], float],
    starts: Dict[Tuple[int, int, int], float],
    performed: Set[Tuple[int, int, int]],
    order: List[Tuple[int, int, int, int, int]],
    overtime: List[List[float]],
) -> Solution:
    """Assemble a Solution; finishes are recomputed from start, lot and learning."""
    T = inst.periods
    x, s, f, y = [], [], [], []
    for j in range(inst.jobs):
        xj, sj, fj, yj = [], [], [], []
        for h in range(inst.ops_of(j)):
            xr, sr, fr, yr = [], [], [], []
            for t in range(T):
                on = (j, h, t) in performed
                qty = _clip(lots.get((j, h, t), 0.0), 0.0) if on else 0.0
                start = inst.period_start(t)
                if on:
                    start = _clip(starts.get((j, h, t), start), inst.period_start(t), inst.period_end(t))
                xr.append(qty)
                sr.append(start)
                fr.append(start + qty * inst.unit_time(j, h, t))
                yr.append(1 if on else 0)
            xj.append(xr)
            sj.append(sr)
            fj.append(fr)
            yj.append(yr)
        x.append(xj)
        s.append(sj)
        f.append(fj)
        y.append(yj)
    o = [[_clip(overtime[m][t], 0.0, inst.overtime_limit[m][t]) for t in range(T)] for m in range(inst.machines)]
    sol = Solution(x=x, s=s, f=f, y=y, z=list(order), o=o)
    return sol.model_copy(update={"objective": evaluate_objective(inst, sol)})


def check_objective(inst: Instance, sol: Solution, result: SolveResult, label: str) -> None:
    """Recomputed objective must match the solver's at optimality."""
    if result.objective is None:
        return
    diff = abs(sol.objective - result.objective)
    if diff <= 1e-5 * max(1.0, abs(result.objective)):
        return
    if result.status == OPTIMAL:
        raise DecodeError(
            f"{label}: recomputed objective {sol.objective:.6f} differs from solver objective {result.objective:.6f}"
        )
    logger.warning(
        "%s: recomputed objective %.6f differs from solver objective %.6f (status %s)",
        label,
        sol.objective,
        result.objective,
        result.status,
    )


def decode_model2(inst: Instance, v: Model2Vars, result: SolveResult) -> Solution:
    if not result.has_solution:
        raise DecodeError(f"cannot decode a result with status {result.status}")
    T = inst.periods
    performed = {(j, h, t) for (j, h) in inst.ops for t in range(T) if result.binary(v.y(j, h, t))}
    lots = {(j, h, t): result.value(v.x(j, h, t)) for (j, h) in inst.ops for t in range(T)}
    starts = {(j, h, t): result.value(v.s(j, h, t)) for (j, h) in inst.ops for t in range(T)}
    order = [
        p
        for p in v.z_pairs
        if result.binary(v.z(*p)) and (p[0], p[1], p[4]) in performed and (p[2], p[3], p[4]) in performed
    ]
    overtime = [[result.value(v.o(m, t)) for t in range(T)] for m in range(inst.machines)]
    sol = solution_from_schedule(inst, lots, starts, performed, order, overtime)

    check_objective(inst, sol, result, "Model-II")
    report = validate_solution(inst, sol, "precedence")
    if not report.is_feasible:
        raise DecodeError(f"decoded Model-II solution is infeasible: {report.summary()}", report)
    return sol


def incumbent_assignments(v: Model2Vars, sol: Solution, names: Iterable[str]) -> List[Tuple[str, int]]:
    """Values a Solution implies for the given y/z names of a Model-II build."""
    inst = v.inst
    lookup: Dict[str, int] = {}
    for j, h in inst.ops:
        for t in range(inst.periods):
            lookup[v.y(j, h, t)] = int(sol.performed(j, h, t))
    active = set(map(tuple, sol.z))
    for p in v.z_pairs:
        lookup[v.z(*p)] = int(p in active)
    return [(n, lookup[n]) for n in names]

