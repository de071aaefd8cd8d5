"""Engine-independent feasibility checks for a Solution.

Two modes: ``precedence`` demands chain order inside a period whenever both
operations of a link run there; ``inventory`` only demands that a successor
never consumes more than its predecessor has made available (carried stock
plus lots finished before the successor starts, finish-before-start on ties).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import List, Literal, Optional, Tuple

import numpy as np

from .domain import Instance, Solution, check_dimensions, machine_load
from .settings import EPS_FEAS

Mode = Literal["precedence", "inventory"]


@dataclass(frozen=True)
class Violation:
    rule: str
    indices: Tuple[int, ...]
    lhs: float
    rhs: float
    slack: float


@dataclass(frozen=True)
class ViolationReport:
    mode: str
    violations: Tuple[Violation, ...] = field(default_factory=tuple)

    @property
    def is_feasible(self) -> bool:
        return not self.violations

    def rules(self) -> List[str]:
        return sorted({v.rule for v in self.violations})

    def summary(self, limit: int = 5) -> str:
        if self.is_feasible:
            return f"feasible ({self.mode})"
        shown = "; ".join(
            f"{v.rule}{list(v.indices)} lhs={v.lhs:.6g} rhs={v.rhs:.6g}" for v in self.violations[:limit]
        )
        more = len(self.violations) - limit
        return f"{len(self.violations)} violation(s) ({self.mode}): {shown}" + (f" ... +{more}" if more > 0 else "")


def _tol(ref: float) -> float:
    return EPS_FEAS * max(1.0, abs(ref))


def _finishes_by(finish: float, start: float) -> bool:
    """Same acceptance as the chain rule: finish <= start within tolerance."""
    return start - finish >= -_tol(max(abs(finish), abs(start)))


class _Collector:
    def __init__(self) -> None:
        self.items: List[Violation] = []

    def le(self, rule: str, idx: Tuple[int, ...], lhs: float, rhs: float, ref: Optional[float] = None) -> None:
        """Record a violation unless lhs <= rhs within tolerance."""
        slack = rhs - lhs
        scale = max(abs(lhs), abs(rhs)) if ref is None else ref
        if slack < -_tol(scale):
            self.items.append(Violation(rule, idx, float(lhs), float(rhs), float(slack)))


def validate_solution(inst: Instance, sol: Solution, mode: Mode = "precedence") -> ViolationReport:
    if mode not in ("precedence", "inventory"):
        raise ValueError(f"unknown validation mode {mode!r}")
    check_dimensions(inst, sol)
    T = inst.periods
    out = _Collector()

    # Setup, sign, windows and durations per operation cell.
    for j, h, t in sol.iter_cells():
        x, s, f = sol.x[j][h][t], sol.s[j][h][t], sol.f[j][h][t]
        out.le("nonnegative", (j, h, t), -x, 0.0, ref=inst.total_demand(j))
        if not sol.performed(j, h, t):
            out.le("setup", (j, h, t), x, 0.0, ref=inst.total_demand(j))
        out.le("window-start", (j, h, t), inst.period_start(t), s)
        out.le("window-end", (j, h, t), f, inst.period_end(t))
        out.le("start-before-finish", (j, h, t), s, f)
        dur = max(x, 0.0) * inst.unit_time(j, h, t)
        out.le("duration", (j, h, t), abs(f - s - dur), 0.0, ref=f)

    # (a) machine non-overlap of performed operations.
    for m in range(inst.machines):
        on_m = inst.machine_ops(m)
        for t in range(T):
            active = [(j, h) for (j, h) in on_m if sol.performed(j, h, t)]
            for (j, h), (k, l) in combinations(active, 2):
                overlap = min(sol.f[j][h][t], sol.f[k][l][t]) - max(sol.s[j][h][t], sol.s[k][l][t])
                out.le("overlap", (m, t, j, h, k, l), overlap, 0.0, ref=inst.period_end(t))

    for j in range(inst.jobs):
        for h in range(inst.ops_of(j) - 1):
            pred = np.asarray(sol.x[j][h], dtype=float)
            succ = np.asarray(sol.x[j][h + 1], dtype=float)
            for t in range(T):
                # (c) cross-period balance.
                out.le("balance", (j, h, t), succ[: t + 1].sum(), pred[: t + 1].sum())
                # (b) within-period order.
                if mode == "precedence":
                    if sol.performed(j, h, t) and sol.performed(j, h + 1, t):
                        out.le("chain", (j, h, t), sol.f[j][h][t], sol.s[j][h + 1][t])
                elif succ[t] > 0:
                    carry = pred[:t].sum() - succ[:t].sum()
                    finished_first = _finishes_by(sol.f[j][h][t], sol.s[j][h + 1][t])
                    available = carry + (pred[t] if finished_first else 0.0)
                    out.le("inventory", (j, h, t), succ[t], available)

    # (d) total demand.
    for j in range(inst.jobs):
        total = inst.total_demand(j)
        for h in range(inst.ops_of(j)):
            produced = float(np.sum(sol.x[j][h]))
            out.le("demand", (j, h), abs(produced - total), 0.0, ref=total)

    # (e) capacity and overtime range.
    load = machine_load(inst, sol)
    for m in range(inst.machines):
        for t in range(T):
            o = sol.o[m][t]
            out.le("capacity", (m, t), load[m, t], inst.capacity[m][t] + o)
            out.le("overtime", (m, t), o, inst.overtime_limit[m][t])
            out.le("overtime-sign", (m, t), -o, 0.0)

    return ViolationReport(mode=mode, violations=tuple(out.items))
