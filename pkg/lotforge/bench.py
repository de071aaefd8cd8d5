"""Experiment suite: generate instances, run methods, score RPD/GAP, emit tables."""

from __future__ import annotations

import logging
import math
import traceback
from dataclasses import dataclass
from multiprocessing import get_context
from pathlib import Path
from time import perf_counter
from typing import Dict, List, Literal, Optional, Tuple, Union

import pandas as pd
from pydantic import BaseModel, Field, field_validator

from . import backend, settings
from .bigbucket import build_model1, decode_model1
from .bounds import LbChoice, gap_percent, solve_lower_bound
from .compact import build_model2, decode_model2
from .domain import Instance, Solution
from .generator import GenSpec, generate
from .local_search import LocalSearchOptions, run_rh1_lo_detailed
from .milp import OPTIMAL, SolveOptions
from .rolling import RhOptions, run_rolling_horizon
from .settings import EXACT_TIME_LIMIT, K_CONST, LOCAL_SEARCH_TIME_LIMIT, RH_ITERATION_TIME_LIMIT, scaled
from .validation import validate_solution

logger = logging.getLogger("lotforge.bench")

METHODS = ("Model-I", "Model-I+cut", "Model-II", "LB1", "LB2", "LB2-40", "RH1", "RH2", "RH1-LO")
BOUND_METHODS = ("LB1", "LB2", "LB2-40")
ZERO_COST = 1e-9
Method = Literal["Model-I", "Model-I+cut", "Model-II", "LB1", "LB2", "LB2-40", "RH1", "RH2", "RH1-LO"]

COLUMNS = [
    "instance",
    "seed",
    "learning",
    "method",
    "objective",
    "seconds",
    "status",
    "feasible",
    "certified",
    "rpd",
    "gap",
]


# ================= Metrics =================
def rpd_percent(obj: float, best: float) -> float:
    """Relative percentage deviation from the best objective."""
    if best <= 0:
        raise ValueError(f"RPD is undefined for best <= 0, got {best}")
    return 100.0 * (obj - best) / best


# ================= Config and rows =================
class SuiteConfig(BaseModel):
    specs: List[str]
    methods: List[Method]
    seeds: List[int] = Field(default_factory=lambda: [0])
    learning: List[Optional[float]] = Field(default_factory=lambda: [None])
    time_scale: float = Field(default_factory=lambda: settings.TIME_SCALE, gt=0)
    k_const: float = Field(default=K_CONST, gt=0)
    rho: float = Field(default=0.8, gt=0, le=1)
    pattern: Literal["all-periods", "single-period", "none"] = "all-periods"
    workers: int = Field(default=1, ge=1)

    @field_validator("specs", "methods", "seeds")
    @classmethod
    def _nonempty(cls, v: list) -> list:
        if not v:
            raise ValueError("must list at least one entry")
        return v

    @field_validator("specs")
    @classmethod
    def _labels(cls, v: List[str]) -> List[str]:
        for text in v:
            GenSpec.from_label(text)
        return v

    @field_validator("learning")
    @classmethod
    def _learning(cls, v: List[Optional[float]]) -> List[Optional[float]]:
        if not v:
            return [None]
        if any(a is not None and a > 0 for a in v):
            raise ValueError("learning indices must be <= 0")
        return v

    @property
    def exact_time_limit(self) -> float:
        return scaled(EXACT_TIME_LIMIT, self.time_scale)

    @property
    def rh_iteration_time_limit(self) -> float:
        return scaled(RH_ITERATION_TIME_LIMIT, self.time_scale)

    @property
    def local_search_time_limit(self) -> float:
        return scaled(LOCAL_SEARCH_TIME_LIMIT, self.time_scale)


class ExperimentRow(BaseModel):
    instance: str
    seed: int
    learning: Optional[float] = None
    method: str
    objective: Optional[float] = None
    seconds: float = 0.0
    status: str
    feasible: Optional[bool] = None
    certified: Optional[bool] = None
    rpd: Optional[float] = None
    gap: Optional[float] = None


@dataclass
class ExperimentReport:
    rows: List[ExperimentRow]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([r.model_dump() for r in self.rows], columns=COLUMNS)

    def __len__(self) -> int:
        return len(self.rows)


# ================= Cells =================
@dataclass(frozen=True)
class Cell:
    spec: GenSpec
    learning: Optional[float]
    method: str
    config: SuiteConfig


def _solution_row(cell: Cell, inst: Instance, sol: Solution, status: str, seconds: float, mode: str) -> ExperimentRow:
    report = validate_solution(inst, sol, mode)  # type: ignore[arg-type]
    if not report.is_feasible:
        logger.warning("%s on %s failed %s validation: %s", cell.method, inst.label, mode, report.summary())
    return ExperimentRow(
        instance=inst.label,
        seed=cell.spec.seed,
        learning=cell.learning,
        method=cell.method,
        objective=sol.objective,
        seconds=seconds,
        status=status,
        feasible=report.is_feasible,
    )


def run_cell(cell: Cell) -> ExperimentRow:
    """Run one (instance, method) cell; failures come back as a status."""
    inst = generate(cell.spec)
    cfg = cell.config
    exact = SolveOptions(time_limit=cfg.exact_time_limit, seed=cell.spec.seed)
    t0 = perf_counter()
    try:
        if cell.method in ("Model-I", "Model-I+cut"):
            with_cut = cell.method == "Model-I+cut"
            model, v = build_model1(inst, with_cut=with_cut)
            result = backend.solve(model, exact)
            if not result.has_solution:
                return _failed(cell, inst, result.status, perf_counter() - t0)
            sol = decode_model1(inst, v, result)
            mode = "precedence" if with_cut else "inventory"
            return _solution_row(cell, inst, sol, result.status, perf_counter() - t0, mode)

        if cell.method == "Model-II":
            model, v = build_model2(inst)
            result = backend.solve(model, exact)
            if not result.has_solution:
                return _failed(cell, inst, result.status, perf_counter() - t0)
            sol = decode_model2(inst, v, result)
            return _solution_row(cell, inst, sol, result.status, perf_counter() - t0, "precedence")

        if cell.method in BOUND_METHODS:
            outcome = solve_lower_bound(inst, LbChoice(kind=cell.method, k_const=cfg.k_const), exact)
            return ExperimentRow(
                instance=inst.label,
                seed=cell.spec.seed,
                learning=cell.learning,
                method=cell.method,
                objective=outcome.objective,
                seconds=outcome.seconds,
                status=outcome.status,
                certified=outcome.certified,
            )

        kind = "LB2" if cell.method == "RH2" else "LB1"
        rh_opts = RhOptions(
            lb_choice=LbChoice(kind=kind, k_const=cfg.k_const),
            iteration_time_limit=cfg.rh_iteration_time_limit,
            seed=cell.spec.seed,
        )
        if cell.method == "RH1-LO":
            ls_opts = LocalSearchOptions(time_limit=cfg.local_search_time_limit, seed=cell.spec.seed)
            outcome = run_rh1_lo_detailed(inst, rh_opts, ls_opts)
            sol, trajectory = outcome.solution, outcome.trajectory
        else:
            sol, trajectory = run_rolling_horizon(inst, rh_opts)
        status = "budget-exhausted" if trajectory.budget_exhausted else trajectory.records[-1].status
        return _solution_row(cell, inst, sol, status, perf_counter() - t0, "precedence")
    except Exception as e:
        logger.error("Cell %s / %s failed: %s", inst.label, cell.method, e)
        logger.debug(traceback.format_exc())
        return _failed(cell, inst, f"failed: {e}", perf_counter() - t0)


def _failed(cell: Cell, inst: Instance, status: str, seconds: float) -> ExperimentRow:
    return ExperimentRow(
        instance=inst.label,
        seed=cell.spec.seed,
        learning=cell.learning,
        method=cell.method,
        seconds=seconds,
        status=status,
    )


def build_cells(config: SuiteConfig) -> List[Cell]:
    cells: List[Cell] = []
    for text in config.specs:
        for learning in config.learning:
            for seed in config.seeds:
                spec = GenSpec.from_label(text, seed=seed, rho=config.rho, pattern=config.pattern, learning=learning)
                cells.extend(Cell(spec, learning, m, config) for m in config.methods)
    return cells


# ================= Scoring =================
def score_rows(rows: List[ExperimentRow]) -> List[ExperimentRow]:
    """Fill RPD for solution methods and GAP for bound rows, per (instance, seed, learning)."""
    groups: Dict[Tuple[str, int, Optional[float]], List[int]] = {}
    for i, r in enumerate(rows):
        groups.setdefault((r.instance, r.seed, r.learning), []).append(i)

    out = list(rows)
    for idxs in groups.values():
        solved = [i for i in idxs if out[i].method not in BOUND_METHODS and out[i].objective is not None]
        if solved:
            best = min(out[i].objective for i in solved)  # type: ignore[type-var]
            for i in solved:
                obj = out[i].objective
                if best > ZERO_COST:
                    rpd = rpd_percent(obj, best)
                else:
                    rpd = 0.0 if abs(obj - best) <= ZERO_COST else None
                out[i] = out[i].model_copy(update={"rpd": rpd})
        exact = [i for i in idxs if out[i].method == "Model-II" and out[i].status == OPTIMAL]
        if exact:
            opt = out[exact[0]].objective
            for i in idxs:
                lb = out[i].objective
                if out[i].method in BOUND_METHODS and lb is not None and opt is not None and lb > ZERO_COST:
                    out[i] = out[i].model_copy(update={"gap": gap_percent(opt, lb)})
    return out


def run_suite(config: SuiteConfig) -> ExperimentReport:
    cells = build_cells(config)
    logger.info("Running %d cell(s) on %d worker(s)", len(cells), config.workers)
    if config.workers > 1:
        with get_context("spawn").Pool(config.workers) as pool:
            rows = pool.map(run_cell, cells)
    else:
        rows = [run_cell(c) for c in cells]
    return ExperimentReport(score_rows(rows))


# ================= Rendering =================
def _fmt(value: object) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return "-"
    if isinstance(value, float):
        return f"{value:.1f}"
    return str(value)


def _markdown(frame: pd.DataFrame) -> str:
    header = "| " + " | ".join(str(c) for c in frame.columns) + " |"
    sep = "|" + "|".join("---" for _ in frame.columns) + "|"
    body = ["| " + " | ".join(_fmt(v) for v in row) + " |" for row in frame.itertuples(index=False)]
    return "\n".join([header, sep, *body]) + "\n"


def _key(frame: pd.DataFrame) -> pd.Series:
    label = frame["instance"] + " s" + frame["seed"].astype(str)
    learned = frame["learning"].notna()
    label[learned] = label[learned] + " a=" + frame.loc[learned, "learning"].astype(str)
    return label


def methods_table(report: ExperimentReport) -> pd.DataFrame:
    """One line per instance; time / objective / RPD per method."""
    df = report.to_frame()
    df = df[~df["method"].isin(BOUND_METHODS)].copy()
    df["key"] = _key(df)
    out = pd.DataFrame({"Instance": df["key"].drop_duplicates().tolist()})
    for method in [m for m in METHODS if m in set(df["method"])]:
        part = df[df["method"] == method].set_index("key")
        out[f"{method} Time"] = out["Instance"].map(part["seconds"])
        out[f"{method} Obj"] = out["Instance"].map(part["objective"])
        out[f"{method} RPD"] = out["Instance"].map(part["rpd"])
    return out


def bounds_table(report: ExperimentReport) -> pd.DataFrame:
    """One line per instance; exact optimum, GAPs, and bound times / objectives."""
    df = report.to_frame()
    df["key"] = _key(df)
    out = pd.DataFrame({"Instance": df["key"].drop_duplicates().tolist()})
    exact = df[df["method"] == "Model-II"].set_index("key")
    out["Time"] = out["Instance"].map(exact["seconds"])
    out["Obj"] = out["Instance"].map(exact["objective"])
    present = [m for m in BOUND_METHODS if m in set(df["method"])]
    for n, method in enumerate(present, 1):
        part = df[df["method"] == method].set_index("key")
        out[f"GAP{n} ({method})"] = out["Instance"].map(part["gap"])
    for method in present:
        part = df[df["method"] == method].set_index("key")
        out[f"{method} Time"] = out["Instance"].map(part["seconds"])
        out[f"{method} Obj"] = out["Instance"].map(part["objective"])
    return out


def render_report(
    report: ExperimentReport,
    path: Union[str, Path],
    fmt: Literal["csv", "markdown"] = "csv",
    layout: Literal["rows", "methods", "bounds"] = "rows",
) -> Path:
    if not report.rows:
        raise ValueError("cannot render an empty report")
    out = Path(path)
    if fmt == "csv":
        report.to_frame().to_csv(out, index=False)
        return out
    if layout == "methods":
        frame = methods_table(report)
    elif layout == "bounds":
        frame = bounds_table(report)
    else:
        frame = report.to_frame()
    out.write_text(_markdown(frame), encoding="utf-8")
    return out


def parse_report(path: Union[str, Path]) -> ExperimentReport:
    df = pd.read_csv(path, float_precision="round_trip")
    df = df.astype(object).where(df.notna(), None)
    return ExperimentReport([ExperimentRow(**rec) for rec in df.to_dict(orient="records")])
