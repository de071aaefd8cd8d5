"""Problem and solution data model, learning arithmetic and cost evaluation.

Indices are zero-based everywhere in Python and in files: job j, operation h
(position in the job's chain), machine m, period index t. Formulas that need
the period *number* use ``t + 1``.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Iterator, List, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationError, model_validator

from .errors import DimensionError, DomainError

OpKey = Tuple[int, int]


# ================= Learning arithmetic =================
def learning_multiplier(t: int, a: float) -> float:
    """t**a for a one-based period number t and a learning index a <= 0."""
    if isinstance(t, bool) or int(t) != t:
        raise DomainError(f"period number must be an integer, got {t!r}")
    if t < 1:
        raise DomainError(f"period number must be >= 1, got {t}")
    if not math.isfinite(a) or a > 0:
        raise DomainError(f"learning index must be finite and <= 0, got {a}")
    return float(t) ** a


def actual_processing_time(qty: float, p: float, a: float, t: int) -> float:
    """Time to process qty items at rate p in period number t."""
    if qty < 0:
        raise DomainError(f"quantity must be >= 0, got {qty}")
    if p <= 0:
        raise DomainError(f"processing rate must be > 0, got {p}")
    return qty * p * learning_multiplier(t, a)


# ================= Instance =================
class Instance(BaseModel):
    """Immutable lot-sizing/scheduling instance; field names are the file keys."""

    model_config = ConfigDict(frozen=True)

    jobs: int
    machines: int
    periods: int
    period_length: float
    routes: List[List[int]]
    proc_rates: List[List[float]]
    learning: List[List[float]]
    demand: List[List[float]]
    due: List[List[float]]
    tc: List[float]
    oc: List[float]
    capacity: List[List[float]]
    overtime_limit: List[List[float]]
    R: int

    @model_validator(mode="after")
    def _check(self) -> "Instance":
        J, M, T, L = self.jobs, self.machines, self.periods, self.period_length
        if min(J, M, T, self.R) <= 0 or L <= 0:
            raise ValueError("jobs, machines, periods, period_length and R must be positive")
        for name in ("routes", "proc_rates", "learning", "demand", "due", "tc"):
            if len(getattr(self, name)) != J:
                raise ValueError(f"{name} must have one entry per job")
        for name in ("oc", "capacity", "overtime_limit"):
            if len(getattr(self, name)) != M:
                raise ValueError(f"{name} must have one entry per machine")
        for j in range(J):
            n_ops = len(self.routes[j])
            if n_ops < 1:
                raise ValueError(f"job {j} has no operations")
            if len(self.proc_rates[j]) != n_ops or len(self.learning[j]) != n_ops:
                raise ValueError(f"job {j}: proc_rates/learning must match its route")
            if any(not (0 <= m < M) for m in self.routes[j]):
                raise ValueError(f"job {j}: machine index out of range")
            if any(p <= 0 for p in self.proc_rates[j]):
                raise ValueError(f"job {j}: processing rates must be positive")
            if any(a > 0 or not math.isfinite(a) for a in self.learning[j]):
                raise ValueError(f"job {j}: learning indices must be <= 0")
            if len(self.demand[j]) != T or len(self.due[j]) != T:
                raise ValueError(f"job {j}: demand/due must have one entry per period")
            if any(dm < 0 for dm in self.demand[j]):
                raise ValueError(f"job {j}: negative demand")
            if any(not (0 <= d <= T * L + 1e-9) for d in self.due[j]):
                raise ValueError(f"job {j}: due dates must lie in [0, T*L]")
            if self.tc[j] < 0:
                raise ValueError(f"job {j}: negative tardiness cost")
        for m in range(M):
            if len(self.capacity[m]) != T or len(self.overtime_limit[m]) != T:
                raise ValueError(f"machine {m}: capacity/overtime_limit must have one entry per period")
            if any(c < 0 for c in self.capacity[m]) or any(o < 0 for o in self.overtime_limit[m]):
                raise ValueError(f"machine {m}: negative capacity or overtime limit")
            if self.oc[m] < 0:
                raise ValueError(f"machine {m}: negative overtime cost")
        return self

    # --- derived helpers ---
    def ops_of(self, j: int) -> int:
        return len(self.routes[j])

    @property
    def ops(self) -> List[OpKey]:
        return [(j, h) for j in range(self.jobs) for h in range(self.ops_of(j))]

    @property
    def num_ops(self) -> int:
        return sum(len(r) for r in self.routes)

    def final_op(self, j: int) -> int:
        return self.ops_of(j) - 1

    def machine_of(self, j: int, h: int) -> int:
        return self.routes[j][h]

    def machine_ops(self, m: int) -> List[OpKey]:
        return [(j, h) for (j, h) in self.ops if self.routes[j][h] == m]

    def total_demand(self, j: int) -> float:
        return float(sum(self.demand[j]))

    def demand_periods(self, j: int) -> List[int]:
        """tp_j: period indices carrying demand for job j."""
        return [t for t in range(self.periods) if self.demand[j][t] > 0]

    @property
    def horizon_end(self) -> float:
        return self.periods * self.period_length

    def period_start(self, t: int) -> float:
        return self.period_length * t

    def period_end(self, t: int) -> float:
        return self.period_length * (t + 1)

    def unit_time(self, j: int, h: int, t: int) -> float:
        """Processing time of one item of O_{j,h} in period index t."""
        return self.proc_rates[j][h] * learning_multiplier(t + 1, self.learning[j][h])

    @property
    def label(self) -> str:
        return f"TP {self.jobs}:{self.num_ops}:{self.machines}:{self.periods}"


# ================= Solution =================
class Solution(BaseModel):
    """Lots, timings and sequences of a schedule; arrays are [j][h][t] / [m][t].

    ``z`` lists the active precedences as (j, h, k, l, t): O_{j,h} before
    O_{k,l} on their shared machine in period t.
    """

    model_config = ConfigDict(frozen=True)

    x: List[List[List[float]]]
    s: List[List[List[float]]]
    f: List[List[List[float]]]
    y: List[List[List[int]]]
    z: List[Tuple[int, int, int, int, int]] = []
    o: List[List[float]]
    objective: float = 0.0

    @classmethod
    def empty(cls, inst: Instance) -> "Solution":
        T = inst.periods
        starts = [inst.period_start(t) for t in range(T)]
        return cls(
            x=[[[0.0] * T for _ in range(inst.ops_of(j))] for j in range(inst.jobs)],
            s=[[list(starts) for _ in range(inst.ops_of(j))] for j in range(inst.jobs)],
            f=[[list(starts) for _ in range(inst.ops_of(j))] for j in range(inst.jobs)],
            y=[[[0] * T for _ in range(inst.ops_of(j))] for j in range(inst.jobs)],
            z=[],
            o=[[0.0] * T for _ in range(inst.machines)],
            objective=0.0,
        )

    def performed(self, j: int, h: int, t: int) -> bool:
        return bool(self.y[j][h][t])

    def duration(self, j: int, h: int, t: int) -> float:
        """Busy time of the lot, finish minus start; zero when not performed."""
        return self.f[j][h][t] - self.s[j][h][t] if self.performed(j, h, t) else 0.0

    def iter_cells(self) -> Iterator[Tuple[int, int, int]]:
        for j, per_job in enumerate(self.x):
            for h, per_op in enumerate(per_job):
                for t in range(len(per_op)):
                    yield j, h, t


def check_dimensions(inst: Instance, sol: Solution) -> None:
    T = inst.periods
    if len(sol.o) != inst.machines or any(len(row) != T for row in sol.o):
        raise DimensionError("overtime array does not match machines x periods")
    for name in ("x", "s", "f", "y"):
        arr = getattr(sol, name)
        if len(arr) != inst.jobs:
            raise DimensionError(f"{name} has {len(arr)} jobs, instance has {inst.jobs}")
        for j in range(inst.jobs):
            if len(arr[j]) != inst.ops_of(j):
                raise DimensionError(f"{name}[{j}] has {len(arr[j])} operations, expected {inst.ops_of(j)}")
            if any(len(per_op) != T for per_op in arr[j]):
                raise DimensionError(f"{name}[{j}] does not have {T} periods")
    for key in sol.z:
        j, h, k, l, t = key
        if not (0 <= j < inst.jobs and 0 <= k < inst.jobs and 0 <= t < T):
            raise DimensionError(f"z entry {key} out of range")
        if not (0 <= h < inst.ops_of(j) and 0 <= l < inst.ops_of(k)):
            raise DimensionError(f"z entry {key} out of range")


# ================= Cost evaluation =================
def compute_job_finish(inst: Instance, sol: Solution) -> np.ndarray:
    """F[j, t]: finish of the final operation when performed in t, else 0."""
    check_dimensions(inst, sol)
    F = np.zeros((inst.jobs, inst.periods))
    for j in range(inst.jobs):
        hj = inst.final_op(j)
        for t in range(inst.periods):
            if sol.performed(j, hj, t):
                F[j, t] = sol.f[j][hj][t]
    return F


def compute_tardiness(inst: Instance, sol: Solution) -> np.ndarray:
    F = compute_job_finish(inst, sol)
    due = np.asarray(inst.due, dtype=float)
    return np.maximum(0.0, F - due)


def evaluate_objective(inst: Instance, sol: Solution) -> float:
    """Total tardiness cost plus overtime cost, with Tr recomputed from F."""
    tr = compute_tardiness(inst, sol)
    tardiness_cost = float(np.asarray(inst.tc, dtype=float) @ tr.sum(axis=1))
    overtime_cost = float(np.asarray(inst.oc, dtype=float) @ np.asarray(sol.o, dtype=float).sum(axis=1))
    return tardiness_cost + overtime_cost


def job_tardiness_cost(inst: Instance, sol: Solution) -> np.ndarray:
    """Per-job Σ_t TC_j·Tr_{j,t}."""
    return np.asarray(inst.tc, dtype=float) * compute_tardiness(inst, sol).sum(axis=1)


def machine_load(inst: Instance, sol: Solution) -> np.ndarray:
    """Processing time with learning booked on each (machine, period)."""
    check_dimensions(inst, sol)
    load = np.zeros((inst.machines, inst.periods))
    for j, h, t in sol.iter_cells():
        qty = sol.x[j][h][t]
        if qty > 0:
            load[inst.machine_of(j, h), t] += qty * inst.unit_time(j, h, t)
    return load


def overtime_needed(inst: Instance, sol: Solution) -> np.ndarray:
    return np.maximum(0.0, machine_load(inst, sol) - np.asarray(inst.capacity, dtype=float))


# ================= Files =================
PathLike = Union[str, Path]


def load_instance(path: PathLike) -> Instance:
    try:
        return Instance.model_validate_json(Path(path).read_text(encoding="utf-8"))
    except ValidationError as e:
        raise DomainError(f"invalid instance file {path}: {e}") from e


def save_instance(inst: Instance, path: PathLike) -> None:
    Path(path).write_text(inst.model_dump_json(indent=1), encoding="utf-8")


def load_solution(path: PathLike) -> Solution:
    try:
        return Solution.model_validate_json(Path(path).read_text(encoding="utf-8"))
    except ValidationError as e:
        raise DomainError(f"invalid solution file {path}: {e}") from e


def save_solution(sol: Solution, path: PathLike) -> None:
    Path(path).write_text(sol.model_dump_json(indent=1), encoding="utf-8")
