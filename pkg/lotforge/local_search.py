"""Job-based local search on top of a rolling-horizon schedule (RH1-LO)."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from time import perf_counter
from typing import List, Optional, Set, Tuple

import numpy as np
from pydantic import BaseModel, Field, model_validator

from . import backend
from .compact import build_model2, decode_model2, incumbent_assignments
from .domain import Instance, Solution, evaluate_objective, job_tardiness_cost
from .milp import SolveOptions, fix_binaries
from .rolling import RhOptions, Trajectory, run_rolling_horizon
from .settings import LOCAL_SEARCH_TIME_LIMIT, scaled

logger = logging.getLogger("lotforge.local_search")

CUTOFF_SLACK = 1e-6


class LocalSearchOptions(BaseModel):
    release_fraction: float = Field(default=0.15, gt=0, le=1)
    bands: Tuple[float, float, float] = (0.05, 0.05, 0.05)
    time_limit: float = Field(default_factory=lambda: scaled(LOCAL_SEARCH_TIME_LIMIT), gt=0)
    step_time_limit: Optional[float] = Field(default=None, gt=0)
    max_rounds: int = Field(default=20, ge=1)
    seed: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def _bands(self) -> "LocalSearchOptions":
        if any(b <= 0 for b in self.bands):
            raise ValueError("every band must release a positive fraction")
        if abs(sum(self.bands) - self.release_fraction) > 1e-9:
            raise ValueError(f"bands {self.bands} must sum to release_fraction {self.release_fraction}")
        return self


# ================= Ranking and selection =================
def rank_jobs_by_tardiness(inst: Instance, sol: Solution) -> List[int]:
    """Jobs by descending total tardiness cost, ties by index."""
    cost = job_tardiness_cost(inst, sol)
    return sorted(range(inst.jobs), key=lambda j: (-float(cost[j]), j))


def _pick(band: List[int], quota: int, rng: np.random.Generator) -> List[int]:
    if len(band) <= quota:
        return list(band)
    return [int(j) for j in rng.choice(band, size=quota, replace=False)]


def select_release_jobs(ranking: List[int], opts: LocalSearchOptions, seed: int = 0) -> Set[int]:
    """Top, median and bottom bands of the ranking, each releasing ceil(fraction * J) jobs."""
    J = len(ranking)
    if J == 0:
        raise ValueError("ranking is empty")
    if J < 3:
        return set(ranking)
    rng = np.random.default_rng(seed)
    q_high, q_mid, q_low = (max(1, math.ceil(round(b * J, 9))) for b in opts.bands)

    top = ranking[:q_high]
    bottom = ranking[J - q_low :]
    taken = set(top) | set(bottom)
    lo, hi = (J - q_mid) // 2, math.ceil((J + q_mid) / 2)
    middle = [j for j in ranking[lo:hi] if j not in taken]

    released = set(_pick(top, q_high, rng))
    released |= set(_pick(middle, q_mid, rng))
    released |= set(_pick([j for j in bottom if j not in released], q_low, rng))
    return released


# ================= Improvement step =================
def local_search_step(
    inst: Instance, incumbent: Solution, released: Set[int], time_limit: float, seed: int = 0
) -> Solution:
    """Re-solve Model-II with every job outside ``released`` pinned to the incumbent; never worsens."""
    if not released:
        return incumbent
    inc_obj = evaluate_objective(inst, incumbent)
    model, v = build_model2(inst)
    fixed_jobs = [j for j in range(inst.jobs) if j not in released]
    model = fix_binaries(model, incumbent_assignments(v, incumbent, v.job_binaries(fixed_jobs)))
    model.add_constr("cutoff", dict(model.objective), "<=", inc_obj * (1 + CUTOFF_SLACK) + CUTOFF_SLACK)
    model.name = "local-search"

    result = backend.solve(model, SolveOptions(time_limit=time_limit, seed=seed))
    if not result.has_solution:
        logger.warning("Local search step ended with status %s; keeping the incumbent", result.status)
        return incumbent
    candidate = decode_model2(inst, v, result)
    if candidate.objective < inc_obj:
        return candidate
    return incumbent


@dataclass
class RoundRecord:
    round: int
    released: List[int]
    objective: float
    improvement: float
    seconds: float


@dataclass
class LocalSearchOutcome:
    solution: Solution
    rh_solution: Solution
    trajectory: Trajectory
    rounds: List[RoundRecord] = field(default_factory=list)

    @property
    def improvement_percent(self) -> float:
        base = self.rh_solution.objective
        if base <= 0:
            return 0.0
        return 100.0 * (base - self.solution.objective) / base


def improve_with_local_search(
    inst: Instance, start: Solution, opts: LocalSearchOptions
) -> Tuple[Solution, List[RoundRecord]]:
    incumbent = start
    rounds: List[RoundRecord] = []
    deadline = perf_counter() + opts.time_limit
    previous: Optional[Set[int]] = None
    seed = opts.seed

    for r in range(1, opts.max_rounds + 1):
        remaining = deadline - perf_counter()
        if remaining <= 0:
            logger.info("Local search stopped on time after %d round(s)", r - 1)
            break
        ranking = rank_jobs_by_tardiness(inst, incumbent)
        released = select_release_jobs(ranking, opts, seed)
        if released == previous and len(released) < inst.jobs:
            # same neighbourhood as last round: draw again
            for _ in range(5):
                seed += 1
                released = select_release_jobs(ranking, opts, seed)
                if released != previous:
                    break
        seed += 1
        previous = released

        t0 = perf_counter()
        step_limit = min(opts.step_time_limit or remaining, remaining)
        before = incumbent.objective
        incumbent = local_search_step(inst, incumbent, released, step_limit, seed=opts.seed)
        gain = before - incumbent.objective
        rounds.append(RoundRecord(r, sorted(released), incumbent.objective, gain, perf_counter() - t0))
        logger.info("Local search round %d: released=%s obj=%.4f gain=%.4f", r, sorted(released), incumbent.objective, gain)
        if gain <= 1e-9 * max(1.0, abs(before)):
            break
    return incumbent, rounds


def run_rh1_lo_detailed(
    inst: Instance, rh_opts: Optional[RhOptions] = None, ls_opts: Optional[LocalSearchOptions] = None
) -> LocalSearchOutcome:
    rh_opts = rh_opts or RhOptions()
    ls_opts = ls_opts or LocalSearchOptions()
    rh_sol, trajectory = run_rolling_horizon(inst, rh_opts)
    best, rounds = improve_with_local_search(inst, rh_sol, ls_opts)
    outcome = LocalSearchOutcome(best, rh_sol, trajectory, rounds)
    logger.info(
        "RH1-LO on %s: %.4f -> %.4f (%.2f%% better)",
        inst.label,
        rh_sol.objective,
        best.objective,
        outcome.improvement_percent,
    )
    return outcome


def run_rh1_lo(
    inst: Instance, rh_opts: Optional[RhOptions] = None, ls_opts: Optional[LocalSearchOptions] = None
) -> Solution:
    return run_rh1_lo_detailed(inst, rh_opts, ls_opts).solution
