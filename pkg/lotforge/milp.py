"""Solver-agnostic MILP model: named variables, linear rows, a minimization objective.

Builders address everything by name (``x[j=1,h=1,t=1]``); the backend adapter
translates a MilpModel into its engine's objects at solve time.
"""

from __future__ import annotations

import copy as _copy
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Literal, Mapping, NamedTuple, Optional, Tuple

from pydantic import BaseModel, Field

from .errors import ModelError
from .settings import DEFAULT_REL_GAP, EPS_INT, EXACT_TIME_LIMIT, THREADS, scaled

Kind = Literal["continuous", "binary"]
Sense = Literal["<=", "=", ">="]

OPTIMAL = "optimal"
FEASIBLE = "feasible-at-limit"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
UNKNOWN = "unknown"
ERROR = "error"
STATUSES = (OPTIMAL, FEASIBLE, INFEASIBLE, UNBOUNDED, UNKNOWN, ERROR)


@dataclass
class Variable:
    name: str
    kind: Kind = "continuous"
    lb: float = 0.0
    ub: Optional[float] = None


@dataclass
class Constraint:
    name: str
    coeffs: Dict[str, float]
    sense: Sense
    rhs: float

    def activity(self, values: Mapping[str, float]) -> float:
        return sum(c * values.get(v, 0.0) for v, c in self.coeffs.items())


@dataclass
class MilpModel:
    name: str = "model"
    variables: Dict[str, Variable] = field(default_factory=dict)
    constraints: Dict[str, Constraint] = field(default_factory=dict)
    objective: Dict[str, float] = field(default_factory=dict)
    objective_constant: float = 0.0

    # --- building ---
    def add_var(self, name: str, kind: Kind = "continuous", lb: float = 0.0, ub: Optional[float] = None) -> str:
        if name in self.variables:
            raise ModelError(f"duplicate variable {name!r}")
        if kind == "binary":
            lb = max(0.0, lb)
            ub = 1.0 if ub is None else min(1.0, ub)
        if ub is not None and ub < lb:
            raise ModelError(f"variable {name!r}: upper bound {ub} below lower bound {lb}")
        self.variables[name] = Variable(name, kind, float(lb), None if ub is None else float(ub))
        return name

    def add_constr(self, name: str, coeffs: Mapping[str, float], sense: Sense, rhs: float) -> str:
        if name in self.constraints:
            raise ModelError(f"duplicate constraint {name!r}")
        if sense not in ("<=", "=", ">="):
            raise ModelError(f"constraint {name!r}: bad sense {sense!r}")
        merged: Dict[str, float] = {}
        for v, c in coeffs.items():
            if v not in self.variables:
                raise ModelError(f"constraint {name!r} references undeclared variable {v!r}")
            if c != 0:
                merged[v] = merged.get(v, 0.0) + float(c)
        self.constraints[name] = Constraint(name, merged, sense, float(rhs))
        return name

    def set_objective(self, coeffs: Mapping[str, float], constant: float = 0.0) -> None:
        for v in coeffs:
            if v not in self.variables:
                raise ModelError(f"objective references undeclared variable {v!r}")
        self.objective = {v: float(c) for v, c in coeffs.items() if c != 0}
        self.objective_constant = float(constant)

    def copy(self) -> "MilpModel":
        return _copy.deepcopy(self)

    def remove_constraints(self, names: Iterable[str]) -> None:
        for n in names:
            if n not in self.constraints:
                raise ModelError(f"unknown constraint {n!r}")
            del self.constraints[n]

    # --- lookup ---
    def var(self, name: str) -> Variable:
        try:
            return self.variables[name]
        except KeyError:
            raise ModelError(f"unknown variable {name!r}") from None

    def has_var(self, name: str) -> bool:
        return name in self.variables

    def constraint_names(self, prefix: Optional[str] = None) -> List[str]:
        return [n for n in self.constraints if prefix is None or n.startswith(prefix)]

    def binary_names(self, prefix: Optional[str] = None) -> List[str]:
        return [
            n for n, v in self.variables.items() if v.kind == "binary" and (prefix is None or n.startswith(prefix))
        ]

    def objective_value(self, values: Mapping[str, float]) -> float:
        return self.objective_constant + sum(c * values.get(v, 0.0) for v, c in self.objective.items())


# ================= Transforms =================
def fix_binaries(model: MilpModel, assignments: Iterable[Tuple[str, int]]) -> MilpModel:
    """Copy of ``model`` with each named binary pinned to its value."""
    out = model.copy()
    for name, value in assignments:
        v = out.var(name)
        if v.kind != "binary":
            raise ModelError(f"cannot fix non-binary variable {name!r}")
        if value not in (0, 1):
            raise ModelError(f"binary {name!r} can only be fixed to 0 or 1, got {value!r}")
        v.lb = v.ub = float(value)
    return out


def relax_binaries(model: MilpModel, names: Iterable[str]) -> MilpModel:
    """Copy of ``model`` with the named binaries made continuous on their current bounds."""
    out = model.copy()
    for name in names:
        v = out.var(name)
        if v.kind != "binary":
            raise ModelError(f"cannot relax non-binary variable {name!r}")
        v.kind = "continuous"
        v.ub = 1.0 if v.ub is None else v.ub
    return out


class Dimensions(NamedTuple):
    constraints: int
    continuous: int
    binary: int


def model_dimensions(model: MilpModel) -> Dimensions:
    binary = sum(1 for v in model.variables.values() if v.kind == "binary")
    return Dimensions(len(model.constraints), len(model.variables) - binary, binary)


# ================= Solve records =================
class SolveOptions(BaseModel):
    time_limit: float = Field(default_factory=lambda: scaled(EXACT_TIME_LIMIT), gt=0)
    rel_gap: float = Field(default=DEFAULT_REL_GAP, ge=0)
    seed: int = Field(default=0, ge=0)
    threads: int = Field(default=THREADS, ge=1)
    msg: bool = False


@dataclass(frozen=True)
class SolveResult:
    status: str
    objective: Optional[float] = None
    best_bound: Optional[float] = None
    values: Dict[str, float] = field(default_factory=dict)
    seconds: float = 0.0
    message: str = ""

    @property
    def has_solution(self) -> bool:
        return self.status in (OPTIMAL, FEASIBLE)

    def value(self, name: str) -> float:
        try:
            return self.values[name]
        except KeyError:
            raise ModelError(f"no value for variable {name!r}") from None

    def binary(self, name: str) -> int:
        """Snap a binary value to {0,1}; values off by more than EPS_INT are rounded anyway."""
        return 1 if self.value(name) >= 0.5 else 0


def max_integrality_violation(model: MilpModel, result: SolveResult) -> float:
    worst = 0.0
    for name in model.binary_names():
        v = result.values.get(name)
        if v is not None:
            worst = max(worst, min(abs(v), abs(1.0 - v)))
    return worst


def integral_within_tolerance(model: MilpModel, result: SolveResult) -> bool:
    return max_integrality_violation(model, result) <= EPS_INT


def vname(symbol: str, **idx: int) -> str:
    """Model-facing name with one-based indices: vname("x", j=0, t=2) -> "x[j=1,t=3]"."""
    return f"{symbol}[" + ",".join(f"{k}={v + 1}" for k, v in idx.items()) + "]"
