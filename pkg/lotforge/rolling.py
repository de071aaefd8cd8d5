"""Static rolling horizon over periods: freeze behind, solve exactly now, relax ahead."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from time import perf_counter
from typing import Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, Field, model_validator

from . import backend
from .bounds import LbChoice, apply_lb1, apply_lb2
from .compact import Model2Vars, build_model2, decode_model2
from .domain import Instance, Solution
from .errors import RollingHorizonError
from .milp import MilpModel, SolveOptions, SolveResult, fix_binaries, relax_binaries
from .settings import DEFAULT_REL_GAP, RH_ITERATION_TIME_LIMIT, scaled

logger = logging.getLogger("lotforge.rolling")

Tactic = Literal["freeze", "full", "relax"]


@dataclass(frozen=True)
class TacticPlan:
    iteration: int
    tactics: Tuple[Tactic, ...]

    def periods(self, tactic: Tactic) -> List[int]:
        return [t for t, x in enumerate(self.tactics) if x == tactic]


def plan_tactics(T: int, k: int) -> TacticPlan:
    """Iteration k (1..T): periods before k frozen, period k full, later periods relaxed."""
    if not (1 <= k <= T):
        raise ValueError(f"iteration {k} outside 1..{T}")
    tactics: List[Tactic] = ["freeze"] * (k - 1) + ["full"] + ["relax"] * (T - k)
    return TacticPlan(k, tuple(tactics))


class RhOptions(BaseModel):
    lb_choice: LbChoice = Field(default_factory=LbChoice)
    iteration_time_limit: Optional[float] = Field(default=None, gt=0)
    total_budget: Optional[float] = Field(default=None, gt=0)
    seed: int = Field(default=0, ge=0)
    rel_gap: float = Field(default=DEFAULT_REL_GAP, ge=0)
    exact_full_period: bool = True

    @model_validator(mode="after")
    def _limits(self) -> "RhOptions":
        if self.iteration_time_limit is not None and self.total_budget is not None:
            if self.iteration_time_limit > self.total_budget:
                raise ValueError("iteration_time_limit cannot exceed total_budget")
        return self

    def per_iteration(self, T: int) -> float:
        if self.iteration_time_limit is not None:
            return self.iteration_time_limit
        if self.total_budget is not None:
            return self.total_budget / T
        return scaled(RH_ITERATION_TIME_LIMIT)

    def budget(self, T: int) -> float:
        return self.total_budget if self.total_budget is not None else self.per_iteration(T) * T


class IterationRecord(BaseModel):
    iteration: int
    objective: Optional[float]
    bound: Optional[float]
    seconds: float
    frozen: int
    relaxed: int
    status: str


@dataclass
class Trajectory:
    method: str
    records: List[IterationRecord] = field(default_factory=list)
    budget_exhausted: bool = False

    def lines(self, with_time: bool = True) -> List[str]:
        """One JSON object per iteration; without wall time the lines replay identically."""
        exclude = None if with_time else {"seconds"}
        return [r.model_dump_json(exclude=exclude) for r in self.records]

    def write_jsonl(self, path: Union[str, Path]) -> Path:
        out = Path(path)
        out.write_text("".join(line + "\n" for line in self.lines()), encoding="utf-8")
        return out


def method_name(choice: LbChoice) -> str:
    return {"LB1": "RH1", "LB2": "RH2"}.get(choice.kind, f"RH-{choice.kind}")


# ================= Helpers =================
def _iteration_model(
    base: MilpModel, v: Model2Vars, plan: TacticPlan, frozen: Dict[str, int], opts: RhOptions
) -> Tuple[MilpModel, int]:
    """Apply the bound to the relaxed periods, then relax and freeze binaries."""
    relaxed_periods = plan.periods("relax")
    lb_periods = list(relaxed_periods)
    full = plan.periods("full")
    if not opts.exact_full_period and relaxed_periods:
        lb_periods = full + lb_periods

    model = base
    if lb_periods:
        choice = opts.lb_choice
        if choice.kind == "LB1":
            model, _ = apply_lb1(model, v, lb_periods, choice.activation)
        else:
            model, _ = apply_lb2(model, v, min(lb_periods), choice, rolling=True)

    relaxed = [n for t in relaxed_periods for n in v.period_binaries(t)]
    model = relax_binaries(model, relaxed)
    model = fix_binaries(model, frozen.items())
    return model, len(relaxed)


def _check_frozen(result: SolveResult, frozen: Dict[str, int], iteration: int) -> None:
    for name, value in frozen.items():
        if result.binary(name) != value:
            raise RollingHorizonError(f"frozen binary {name} moved to {result.value(name)}", iteration)


# ================= Orchestrator =================
def run_rolling_horizon(inst: Instance, opts: Optional[RhOptions] = None) -> Tuple[Solution, Trajectory]:
    opts = opts or RhOptions()
    T = inst.periods
    method = method_name(opts.lb_choice)
    per_iter = opts.per_iteration(T)
    budget = opts.budget(T)
    trajectory = Trajectory(method)
    base, v = build_model2(inst)
    frozen: Dict[str, int] = {}
    t_start = perf_counter()
    result: Optional[SolveResult] = None

    k = 1
    while k <= T:
        remaining = budget - (perf_counter() - t_start)
        if remaining <= 0 and k < T:
            # out of budget: one completion solve with every later period exact
            logger.warning("%s: budget exhausted before iteration %d; completing remaining periods at once", method, k)
            trajectory.budget_exhausted = True
            k = T
        plan = plan_tactics(T, k)
        model, n_relaxed = _iteration_model(base, v, plan, frozen, opts)
        model.name = f"{method.lower()}-it{k}"
        limit = per_iter if not trajectory.budget_exhausted else max(per_iter, 1.0)
        result = backend.solve(model, SolveOptions(time_limit=limit, rel_gap=opts.rel_gap, seed=opts.seed))
        trajectory.records.append(
            IterationRecord(
                iteration=k,
                objective=result.objective,
                bound=result.best_bound,
                seconds=result.seconds,
                frozen=len(frozen),
                relaxed=n_relaxed,
                status=result.status,
            )
        )
        logger.info(
            "%s iteration %d/%d: status=%s obj=%s frozen=%d relaxed=%d",
            method,
            k,
            T,
            result.status,
            result.objective,
            len(frozen),
            n_relaxed,
        )
        if not result.has_solution:
            raise RollingHorizonError(f"sub-problem ended with status {result.status}", k)
        _check_frozen(result, frozen, k)
        for t in plan.periods("full"):
            for name in v.period_binaries(t):
                frozen[name] = result.binary(name)
        k += 1

    assert result is not None
    sol = decode_model2(inst, v, result)
    logger.info("%s finished on %s: objective %.4f", method, inst.label, sol.objective)
    return sol, trajectory
