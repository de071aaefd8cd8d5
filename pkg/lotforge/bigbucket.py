"""Big-bucket formulation (Model-I) with machine positions, and the chain-order cut.

Each machine offers R positions per period. A position holds at most one
operation; inventories between consecutive operations are tracked at the
positions of the successor's machine so a successor only consumes lots that
finished before it starts.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict, List, Tuple

from .compact import big_ms, check_objective, solution_from_schedule
from .domain import Instance, Solution
from .errors import DecodeError, ModelBuildError
from .milp import Dimensions, MilpModel, SolveResult, model_dimensions, vname

logger = logging.getLogger("lotforge.bigbucket")

__all__ = ["Model1Vars", "build_model1", "decode_model1", "model_dimensions", "Dimensions", "max_machine_load"]


@dataclass(frozen=True)
class Model1Vars:
    inst: Instance
    R: int
    with_cut: bool
    g_time: float
    g_qty: float

    def X(self, j: int, h: int, t: int, r: int) -> str:
        return vname("X", j=j, h=h, t=t, r=r)

    def y(self, j: int, h: int, t: int, r: int) -> str:
        return vname("y", j=j, h=h, t=t, r=r)

    def s(self, t: int, m: int, r: int) -> str:
        return vname("s", t=t, m=m, r=r)

    def f(self, t: int, m: int, r: int) -> str:
        return vname("f", t=t, m=m, r=r)

    def I(self, j: int, h: int, t: int) -> str:  # noqa: E743
        return vname("I", j=j, h=h, t=t)

    def phi(self, j: int, t: int) -> str:
        return vname("phi", j=j, t=t)

    def inv(self, j: int, h: int, t: int, r: int) -> str:
        return vname("i", j=j, h=h, t=t, r=r)

    def eta(self, j: int, h: int, t: int, r: int, rr: int) -> str:
        return vname("eta", j=j, h=h, t=t, r=r, rr=rr)

    def q(self, j: int, h: int, t: int, r: int, rr: int) -> str:
        return vname("q", j=j, h=h, t=t, r=r, rr=rr)

    def o(self, m: int, t: int) -> str:
        return vname("o", m=m, t=t)

    def F(self, j: int, t: int) -> str:
        return vname("F", j=j, t=t)

    def Tr(self, j: int, t: int) -> str:
        return vname("Tr", j=j, t=t)


def max_machine_load(inst: Instance) -> int:
    """Largest number of operations routed to one machine."""
    return max(len(inst.machine_ops(m)) for m in range(inst.machines))


def build_model1(inst: Instance, with_cut: bool = False) -> Tuple[MilpModel, Model1Vars]:
    J, M, T, L, R = inst.jobs, inst.machines, inst.periods, inst.period_length, inst.R
    need = max_machine_load(inst)
    if R < need:
        raise ModelBuildError(
            f"R={R} positions cannot hold the {need} operations routed to one machine; raise R to at least {need}"
        )
    g_time, g_qty = big_ms(inst)
    v = Model1Vars(inst, R, with_cut, g_time, g_qty)
    model = MilpModel(name="model1-cut" if with_cut else "model1")
    positions = range(R)

    # === Variables ===
    for j, h in inst.ops:
        for t in range(T):
            model.add_var(v.I(j, h, t))
            for r in positions:
                model.add_var(v.X(j, h, t, r))
                model.add_var(v.y(j, h, t, r), "binary")
        if h < inst.final_op(j):
            for t in range(T):
                for rr in positions:
                    model.add_var(v.inv(j, h, t, rr))
                    for r in positions:
                        model.add_var(v.eta(j, h, t, r, rr))
                        model.add_var(v.q(j, h, t, r, rr), "binary")
    for m in range(M):
        for t in range(T):
            model.add_var(v.o(m, t))
            for r in positions:
                model.add_var(v.s(t, m, r), ub=g_time)
                model.add_var(v.f(t, m, r), ub=g_time)
    for j in range(J):
        for t in range(T):
            model.add_var(v.phi(j, t))
            model.add_var(v.F(j, t), ub=g_time)
            model.add_var(v.Tr(j, t))

    obj: Dict[str, float] = {v.Tr(j, t): inst.tc[j] for j in range(J) for t in range(T)}
    obj.update({v.o(m, t): inst.oc[m] for m in range(M) for t in range(T)})
    model.set_objective(obj)

    def lot(j: int, h: int, t: int) -> Dict[str, float]:
        return {v.X(j, h, t, r): 1.0 for r in positions}

    # === Balances and demand ===
    for j in range(J):
        hj = inst.final_op(j)
        for t in range(T):
            # final operation: stock minus backlog follows output minus demand
            row = {v.I(j, hj, t): 1.0, v.phi(j, t): -1.0}
            if t > 0:
                row[v.I(j, hj, t - 1)] = -1.0
                row[v.phi(j, t - 1)] = 1.0
            for name in lot(j, hj, t):
                row[name] = row.get(name, 0.0) - 1.0
            model.add_constr(vname("balf", j=j, t=t), row, "=", -inst.demand[j][t])
            for h in range(hj):
                row = {v.I(j, h, t): 1.0}
                if t > 0:
                    row[v.I(j, h, t - 1)] = -1.0
                for name in lot(j, h, t):
                    row[name] = row.get(name, 0.0) - 1.0
                for name in lot(j, h + 1, t):
                    row[name] = row.get(name, 0.0) + 1.0
                model.add_constr(vname("bal", j=j, h=h, t=t), row, "=", 0.0)
        total = inst.total_demand(j)
        for h in range(inst.ops_of(j)):
            row = {}
            for t in range(T):
                row.update(lot(j, h, t))
            model.add_constr(vname("dem", j=j, h=h), row, "=", total)

    # === Capacity, positions and timing ===
    for m in range(M):
        on_m = inst.machine_ops(m)
        for t in range(T):
            row = {v.X(j, h, t, r): inst.unit_time(j, h, t) for (j, h) in on_m for r in positions}
            row[v.o(m, t)] = -1.0
            model.add_constr(vname("cap", m=m, t=t), row, "<=", inst.capacity[m][t])
            model.add_constr(vname("ot", m=m, t=t), {v.o(m, t): 1.0}, "<=", inst.overtime_limit[m][t])
            for r in positions:
                model.add_constr(vname("pos", t=t, m=m, r=r), {v.y(j, h, t, r): 1.0 for (j, h) in on_m}, "<=", 1.0)
                row = {v.f(t, m, r): 1.0, v.s(t, m, r): -1.0}
                row.update({v.X(j, h, t, r): -inst.unit_time(j, h, t) for (j, h) in on_m})
                model.add_constr(vname("dur", t=t, m=m, r=r), row, "=", 0.0)
                if r + 1 < R:
                    model.add_constr(
                        vname("next", t=t, m=m, r=r), {v.s(t, m, r + 1): 1.0, v.f(t, m, r): -1.0}, ">=", 0.0
                    )
                model.add_constr(vname("wins", t=t, m=m, r=r), {v.s(t, m, r): 1.0}, ">=", L * t)
                model.add_constr(vname("winf", t=t, m=m, r=r), {v.f(t, m, r): 1.0}, "<=", L * (t + 1))

    for j, h in inst.ops:
        for t in range(T):
            for r in positions:
                model.add_constr(
                    vname("setup", j=j, h=h, t=t, r=r), {v.X(j, h, t, r): 1.0, v.y(j, h, t, r): -g_qty}, "<=", 0.0
                )
            model.add_constr(vname("once", j=j, h=h, t=t), {v.y(j, h, t, r): 1.0 for r in positions}, "<=", 1.0)

    # === Within-period inventory between consecutive operations ===
    for j, h in inst.ops:
        if h == inst.final_op(j):
            continue
        m, mm = inst.machine_of(j, h), inst.machine_of(j, h + 1)
        for t in range(T):
            for rr in positions:
                row = {v.inv(j, h, t, rr): 1.0}
                if t > 0:
                    row[v.I(j, h, t - 1)] = -1.0
                for r in positions:
                    row[v.eta(j, h, t, r, rr)] = -1.0
                for r2 in range(rr):
                    row[v.X(j, h + 1, t, r2)] = 1.0
                model.add_constr(vname("avail", j=j, h=h, t=t, r=rr), row, "=", 0.0)
                model.add_constr(
                    vname("use", j=j, h=h, t=t, r=rr), {v.inv(j, h, t, rr): 1.0, v.X(j, h + 1, t, rr): -1.0}, ">=", 0.0
                )
                for r in positions:
                    idx = dict(j=j, h=h, t=t, r=r, rr=rr)
                    model.add_constr(
                        vname("vis", **idx), {v.eta(j, h, t, r, rr): 1.0, v.X(j, h, t, r): -1.0}, "<=", 0.0
                    )
                    model.add_constr(
                        vname("qon", **idx),
                        {v.f(t, m, r): 1.0, v.s(t, mm, rr): -1.0, v.q(j, h, t, r, rr): g_time},
                        "<=",
                        g_time,
                    )
                    model.add_constr(
                        vname("qoff", **idx),
                        {v.s(t, mm, rr): 1.0, v.f(t, m, r): -1.0, v.q(j, h, t, r, rr): -g_time},
                        "<=",
                        0.0,
                    )
                    model.add_constr(
                        vname("qvis", **idx), {v.eta(j, h, t, r, rr): 1.0, v.q(j, h, t, r, rr): -g_qty}, "<=", 0.0
                    )
                    if with_cut:
                        # both performed in t: predecessor position finishes before the successor's starts
                        model.add_constr(
                            vname("cut", **idx),
                            {
                                v.s(t, mm, rr): 1.0,
                                v.f(t, m, r): -1.0,
                                v.y(j, h, t, r): -g_time,
                                v.y(j, h + 1, t, rr): -g_time,
                            },
                            ">=",
                            -2.0 * g_time,
                        )

    # === Finish and tardiness ===
    for j in range(J):
        hj = inst.final_op(j)
        m = inst.machine_of(j, hj)
        for t in range(T):
            for r in positions:
                model.add_constr(
                    vname("fin", j=j, t=t, r=r),
                    {v.F(j, t): 1.0, v.f(t, m, r): -1.0, v.y(j, hj, t, r): -g_time},
                    ">=",
                    -g_time,
                )
            model.add_constr(vname("tard", j=j, t=t), {v.Tr(j, t): 1.0, v.F(j, t): -1.0}, ">=", -inst.due[j][t])

    logger.debug("Built %s for %s: %d rows, %d columns", model.name, inst.label, len(model.constraints), len(model.variables))
    return model, v


def decode_model1(inst: Instance, v: Model1Vars, result: SolveResult) -> Solution:
    """Aggregate position lots per operation and read timings off the occupied position."""
    if not result.has_solution:
        raise DecodeError(f"cannot decode a result with status {result.status}")
    T = inst.periods
    lots: Dict[Tuple[int, int, int], float] = {}
    starts: Dict[Tuple[int, int, int], float] = {}
    slot: Dict[Tuple[int, int, int], int] = {}
    for j, h in inst.ops:
        m = inst.machine_of(j, h)
        for t in range(T):
            lots[(j, h, t)] = sum(result.value(v.X(j, h, t, r)) for r in range(v.R))
            used = [r for r in range(v.R) if result.binary(v.y(j, h, t, r))]
            if used:
                slot[(j, h, t)] = used[0]
                starts[(j, h, t)] = result.value(v.s(t, m, used[0]))

    order: List[Tuple[int, int, int, int, int]] = []
    for m in range(inst.machines):
        for t in range(T):
            placed = sorted((slot[(j, h, t)], j, h) for (j, h) in inst.machine_ops(m) if (j, h, t) in slot)
            for a in range(len(placed)):
                for b in range(a + 1, len(placed)):
                    order.append((placed[a][1], placed[a][2], placed[b][1], placed[b][2], t))

    overtime = [[result.value(v.o(m, t)) for t in range(T)] for m in range(inst.machines)]
    sol = solution_from_schedule(inst, lots, starts, set(slot), order, overtime)
    check_objective(inst, sol, result, "Model-I")
    return sol
