"""PuLP/CBC adapter behind the MilpModel abstraction."""

from __future__ import annotations

import logging
import re
from pathlib import Path
from time import perf_counter
from typing import Dict, Optional, Tuple, Union

import pulp
from tenacity import retry, retry_if_exception_type, stop_after_attempt, wait_exponential

from .errors import SolverError
from .milp import ERROR, FEASIBLE, INFEASIBLE, OPTIMAL, UNBOUNDED, UNKNOWN, MilpModel, SolveOptions, SolveResult
from .settings import CBC_PATH, EPS_FEAS, check_backend

logger = logging.getLogger("lotforge.backend")

_SENSES = {"<=": pulp.LpConstraintLE, "=": pulp.LpConstraintEQ, ">=": pulp.LpConstraintGE}
_SOL_STATUS = {
    pulp.LpSolutionOptimal: OPTIMAL,
    pulp.LpSolutionIntegerFeasible: FEASIBLE,
    pulp.LpSolutionInfeasible: INFEASIBLE,
    pulp.LpSolutionUnbounded: UNBOUNDED,
    pulp.LpSolutionNoSolutionFound: UNKNOWN,
}


# ================= Helpers =================
def sanitize(name: str) -> str:
    """x[j=1,h=2,t=3] -> x_j1_h2_t3"""
    out = name.replace("[", "_").replace("]", "").replace("=", "").replace(",", "_")
    return re.sub(r"[^A-Za-z0-9_]", "_", out)


def _row_trivially_ok(sense: str, rhs: float) -> bool:
    tol = EPS_FEAS * max(1.0, abs(rhs))
    if sense == "<=":
        return 0.0 <= rhs + tol
    if sense == ">=":
        return 0.0 >= rhs - tol
    return abs(rhs) <= tol


def to_pulp(model: MilpModel) -> Tuple[Optional[pulp.LpProblem], Dict[str, pulp.LpVariable]]:
    """Translate the model; returns (None, {}) when an empty row can never hold."""
    prob = pulp.LpProblem(sanitize(model.name) or "model", pulp.LpMinimize)
    lp_vars: Dict[str, pulp.LpVariable] = {}
    used = set()
    for i, v in enumerate(model.variables.values()):
        lp_name = sanitize(v.name)
        if lp_name in used:
            lp_name = f"{lp_name}__{i}"
        used.add(lp_name)
        cat = pulp.LpBinary if v.kind == "binary" else pulp.LpContinuous
        lp_vars[v.name] = pulp.LpVariable(lp_name, lowBound=v.lb, upBound=v.ub, cat=cat)
    prob.addVariables(list(lp_vars.values()))

    prob.setObjective(
        pulp.LpAffineExpression([(lp_vars[n], c) for n, c in model.objective.items()], constant=model.objective_constant)
    )
    for i, c in enumerate(model.constraints.values()):
        if not c.coeffs:
            if not _row_trivially_ok(c.sense, c.rhs):
                logger.warning("Empty row %s cannot hold (rhs=%s); model is infeasible", c.name, c.rhs)
                return None, {}
            continue
        expr = pulp.LpAffineExpression([(lp_vars[n], k) for n, k in c.coeffs.items()])
        prob.addConstraint(pulp.LpConstraint(e=expr, sense=_SENSES[c.sense], rhs=c.rhs), name=f"c{i}_{sanitize(c.name)}")
    return prob, lp_vars


def _cbc(opts: SolveOptions) -> pulp.PULP_CBC_CMD:
    return pulp.PULP_CBC_CMD(
        msg=opts.msg,
        timeLimit=opts.time_limit,
        gapRel=opts.rel_gap,
        threads=opts.threads,
        path=CBC_PATH,
        options=[f"randomSeed {opts.seed + 1}", f"randomCbcSeed {opts.seed + 1}", "integerTolerance 1e-9"],
    )


@retry(
    retry=retry_if_exception_type(SolverError),
    wait=wait_exponential(multiplier=0.5, min=0.5, max=5),
    stop=stop_after_attempt(2),
    reraise=True,
)
def _run_cbc(prob: pulp.LpProblem, opts: SolveOptions) -> int:
    try:
        prob.solve(_cbc(opts))
    except pulp.PulpSolverError as e:
        logger.warning("CBC run failed, retrying: %s", e)
        raise SolverError(str(e)) from e
    return prob.sol_status


# ================= API =================
def solve(model: MilpModel, opts: Optional[SolveOptions] = None) -> SolveResult:
    opts = opts or SolveOptions()
    check_backend()
    t0 = perf_counter()

    if not model.variables:
        return _finish(model, SolveResult(OPTIMAL, model.objective_constant, model.objective_constant, {}, 0.0))

    prob, lp_vars = to_pulp(model)
    if prob is None:
        return _finish(model, SolveResult(INFEASIBLE, seconds=perf_counter() - t0, message="empty row violated"))

    try:
        sol_status = _run_cbc(prob, opts)
    except SolverError as e:
        return _finish(model, SolveResult(ERROR, seconds=perf_counter() - t0, message=str(e)))
    seconds = perf_counter() - t0

    status = _SOL_STATUS.get(sol_status, UNKNOWN)
    if status not in (OPTIMAL, FEASIBLE):
        return _finish(model, SolveResult(status, seconds=seconds, message=pulp.LpStatus.get(prob.status, "")))

    values: Dict[str, float] = {}
    for name, lv in lp_vars.items():
        val = lv.varValue
        values[name] = float(model.variables[name].lb if val is None else val)
    obj = model.objective_value(values)
    bound = obj if status == OPTIMAL else None
    return _finish(model, SolveResult(status, obj, bound, values, seconds))


def _finish(model: MilpModel, result: SolveResult) -> SolveResult:
    log = logger.info if result.status == OPTIMAL else logger.warning
    log(
        "Solved %s rows=%d cols=%d status=%s obj=%s in %.2fs",
        model.name,
        len(model.constraints),
        len(model.variables),
        result.status,
        "-" if result.objective is None else f"{result.objective:.6g}",
        result.seconds,
    )
    return result


def write_lp(model: MilpModel, path: Union[str, Path]) -> Path:
    """Export the model in LP file syntax."""
    prob, _ = to_pulp(model)
    if prob is None:
        raise SolverError(f"model {model.name} has a violated empty row; nothing to export")
    out = Path(path)
    prob.writeLP(str(out))
    return out
