"""Lower-bound relaxations of Model-II and their objectives.

LB1 prices a job's tardiness in period t from the work its operations book in
t, starting at the period start. LB2 prices the work still missing to cover
cumulative demand, at the end-of-horizon learning rate. Both replace the exact
tardiness link and stay below the Model-II optimum; the t-rate variant of LB2
and the rollover rows used past a job's last demand period are heuristic.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from time import perf_counter
from typing import Dict, List, Literal, Optional, Sequence, Tuple

from pydantic import BaseModel, Field, field_validator

from . import backend
from .compact import Model2Vars, build_model2
from .domain import Instance
from .errors import ModelError, SolverError
from .milp import MilpModel, SolveOptions, vname
from .settings import K_CONST

logger = logging.getLogger("lotforge.bounds")

LbKind = Literal["LB1", "LB2", "LB2-40"]
COVERAGE_RESOLUTION = 1e-3


class LbChoice(BaseModel):
    kind: LbKind = "LB1"
    k_const: float = Field(default=K_CONST, gt=0)
    periods: Optional[List[int]] = None
    activation: Literal["final", "any"] = "final"

    @field_validator("periods")
    @classmethod
    def _nonempty(cls, v: Optional[List[int]]) -> Optional[List[int]]:
        if v is not None and not v:
            raise ValueError("target periods must be nonempty when given")
        return v

    @property
    def certified(self) -> bool:
        if self.kind == "LB1":
            return self.activation == "final"
        return self.kind == "LB2"


@dataclass
class LbAux:
    u: Dict[Tuple[int, int], str] = field(default_factory=dict)
    v: Dict[Tuple[int, int], str] = field(default_factory=dict)
    fr: Dict[Tuple[int, int], str] = field(default_factory=dict)
    certified: bool = True
    notes: List[str] = field(default_factory=list)


def _check_periods(inst: Instance, periods: Sequence[int]) -> List[int]:
    out = sorted(set(periods))
    if not out:
        raise ModelError("lower bound needs at least one target period")
    bad = [t for t in out if not (0 <= t < inst.periods)]
    if bad:
        raise ModelError(f"periods {bad} outside 0..{inst.periods - 1}")
    return out


def _drop_tardiness_rows(model: MilpModel, v: Model2Vars, j: int, t: int) -> None:
    name = v.tardiness_row(j, t)
    if name in model.constraints:
        model.remove_constraints([name])


def _activity(model: MilpModel, v: Model2Vars, aux: LbAux, j: int, t: int, activation: str) -> str:
    """u[j,t] = 1 whenever the job's final operation (or, with "any", any operation) makes a lot in t."""
    if (j, t) in aux.u:
        return aux.u[(j, t)]
    inst = v.inst
    u = model.add_var(vname("u", j=j, t=t), "binary")
    hs = range(inst.ops_of(j)) if activation == "any" else [inst.final_op(j)]
    row = {v.x(j, h, t): 1.0 for h in hs}
    row[u] = -v.g_qty * len(hs)
    model.add_constr(vname("act", j=j, t=t), row, "<=", 0.0)
    aux.u[(j, t)] = u
    return u


def apply_lb1(
    model: MilpModel, v: Model2Vars, periods: Sequence[int], activation: str = "final"
) -> Tuple[MilpModel, LbAux]:
    """Replace the tardiness link of the given periods with the work-from-period-start bound."""
    inst = v.inst
    periods = _check_periods(inst, periods)
    out = model.copy()
    aux = LbAux(certified=activation == "final")
    if not aux.certified:
        logger.warning("LB1 with activation=%r is not a certified lower bound", activation)
    L, G = inst.period_length, v.g_time
    for t in periods:
        for j in range(inst.jobs):
            _drop_tardiness_rows(out, v, j, t)
            u = _activity(out, v, aux, j, t, activation)
            # Tr >= L*t + sum_h x*p*t^a - d - (1 - u)*G
            row = {v.Tr(j, t): 1.0, u: -G}
            for h in range(inst.ops_of(j)):
                row[v.x(j, h, t)] = -inst.unit_time(j, h, t)
            out.add_constr(vname("lb1", j=j, t=t), row, ">=", L * t - inst.due[j][t] - G)
    return out, aux


def apply_lb2(
    model: MilpModel,
    v: Model2Vars,
    current_period: int,
    choice: LbChoice,
    rolling: bool = False,
) -> Tuple[MilpModel, LbAux]:
    """Replace the tardiness link of demand periods from ``current_period`` on.

    With ``rolling`` the periods after a job's last demand period get the
    remaining-lot rows as well; those are heuristic.
    """
    if choice.kind not in ("LB2", "LB2-40"):
        raise ModelError(f"apply_lb2 needs an LB2 choice, got {choice.kind}")
    if choice.k_const <= 0:
        raise ModelError(f"k_const must be positive, got {choice.k_const}")
    inst = v.inst
    T, L = inst.periods, inst.period_length
    if not (0 <= current_period <= T):
        raise ModelError(f"current period {current_period} outside 0..{T}")
    targets = set(range(current_period, T))
    if choice.periods is not None:
        targets &= set(_check_periods(inst, choice.periods))

    out = model.copy()
    aux = LbAux(certified=choice.kind == "LB2")
    if choice.kind == "LB2-40":
        logger.warning("LB2 with the period-rate factor is not a certified lower bound")
        aux.notes.append("variant40")
    last_rate = choice.kind == "LB2"

    for j in range(inst.jobs):
        tp = inst.demand_periods(j)
        if not tp:
            continue
        hj = inst.final_op(j)
        cum = [sum(inst.demand[j][: t + 1]) for t in range(T)]
        for t in sorted(targets):
            if t in tp:
                rate = {h: inst.proc_rates[j][h] * _factor(inst, j, h, T - 1 if last_rate else t) for h in range(hj + 1)}
                g = sum(cum[T - 1] * inst.proc_rates[j][h] for h in range(hj + 1)) + T * L
                u = _activity(out, v, aux, j, t, "final")
                cover = out.add_var(vname("v", j=j, t=t), "binary")
                aux.v[(j, t)] = cover
                final_cum = {v.x(j, hj, tt): 1.0 for tt in range(t + 1)}
                # cover = 1 forces final output through t to meet demand through t
                out.add_constr(vname("cov", j=j, t=t), {**final_cum, cover: -v.g_qty}, ">=", cum[t] - v.g_qty)
                # and meeting it forces cover = 1
                out.add_constr(
                    vname("covon", j=j, t=t), {**final_cum, cover: -(v.g_qty + 1.0)}, "<=", cum[t] - COVERAGE_RESOLUTION
                )
                _drop_tardiness_rows(out, v, j, t)
                row: Dict[str, float] = {v.Tr(j, t): 1.0, u: -g, cover: -g}
                for h in range(hj + 1):
                    for tt in range(t):
                        row[v.x(j, h, tt)] = row.get(v.x(j, h, tt), 0.0) + rate[h]
                rhs = sum(rate[h] * cum[t] for h in range(hj + 1)) + L * t - inst.due[j][t] - 2 * g
                out.add_constr(vname("lb2", j=j, t=t), row, ">=", rhs)
            elif rolling and t > max(tp):
                _rollover(out, v, aux, j, t, cum[max(tp)], choice.k_const)
    return out, aux


def _factor(inst: Instance, j: int, h: int, t: int) -> float:
    return inst.unit_time(j, h, t) / inst.proc_rates[j][h]


def _rollover(model: MilpModel, v: Model2Vars, aux: LbAux, j: int, t: int, cum_last: float, k_const: float) -> None:
    inst = v.inst
    T, L = inst.periods, inst.period_length
    hj = inst.final_op(j)
    fr = model.add_var(vname("fr", j=j, t=t))
    aux.fr[(j, t)] = fr
    aux.certified = False
    # fr = sum_h (D through the last demand period - output through t)
    row = {fr: 1.0}
    for h in range(hj + 1):
        for tt in range(t + 1):
            row[v.x(j, h, tt)] = row.get(v.x(j, h, tt), 0.0) + 1.0
    model.add_constr(vname("frdef", j=j, t=t), row, "=", (hj + 1) * cum_last)
    _drop_tardiness_rows(model, v, j, t)
    weight = (inst.due[j][t] - L * t) / (k_const * (t + 1))
    row = {v.Tr(j, t): 1.0, fr: weight}
    rhs = 0.0
    for h in range(hj + 1):
        rate = inst.proc_rates[j][h] * _factor(inst, j, h, T - 1)
        rhs += rate * cum_last
        for tt in range(t + 1):
            row[v.x(j, h, tt)] = row.get(v.x(j, h, tt), 0.0) + rate
    model.add_constr(vname("lb2r", j=j, t=t), row, ">=", rhs)
    aux.notes.append(f"rollover j={j + 1} t={t + 1}: remaining lot measured against demand through the last demand period")
    logger.warning("LB2 rollover for job %d period %d uses the last demand period", j + 1, t + 1)


# ================= Bound objectives =================
@dataclass(frozen=True)
class LbOutcome:
    kind: str
    objective: Optional[float]
    status: str
    seconds: float
    certified: bool


def build_lower_bound(inst: Instance, choice: LbChoice) -> Tuple[MilpModel, Model2Vars, LbAux]:
    """Model-II with the chosen bound over the whole horizon."""
    model, v = build_model2(inst)
    if choice.kind == "LB1":
        periods = choice.periods if choice.periods is not None else range(inst.periods)
        lb_model, aux = apply_lb1(model, v, periods, choice.activation)
    else:
        lb_model, aux = apply_lb2(model, v, 0, choice)
    lb_model.name = choice.kind.lower()
    return lb_model, v, aux


def solve_lower_bound(inst: Instance, choice: LbChoice, opts: Optional[SolveOptions] = None) -> LbOutcome:
    t0 = perf_counter()
    model, _, aux = build_lower_bound(inst, choice)
    result = backend.solve(model, opts)
    outcome = LbOutcome(choice.kind, result.objective, result.status, perf_counter() - t0, aux.certified)
    logger.info("%s on %s: status=%s obj=%s", choice.kind, inst.label, outcome.status, outcome.objective)
    return outcome


def lb_objective(inst: Instance, choice: LbChoice, opts: Optional[SolveOptions] = None) -> float:
    outcome = solve_lower_bound(inst, choice, opts)
    if outcome.objective is None:
        raise SolverError(f"{choice.kind} solve on {inst.label} ended with status {outcome.status}")
    return outcome.objective


def gap_percent(opt: float, lb: float) -> float:
    """100 * (opt - lb) / lb; the bound is the denominator."""
    if lb <= 0:
        raise ValueError(f"GAP is undefined for a lower bound <= 0, got {lb}")
    return 100.0 * (opt - lb) / lb
