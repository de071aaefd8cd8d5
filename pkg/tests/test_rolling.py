import json

import pytest

from lotforge import backend
from lotforge.bounds import LbChoice, lb_objective
from lotforge.compact import build_model2
from lotforge.errors import RollingHorizonError
from lotforge.generator import GenSpec, generate
from lotforge.milp import OPTIMAL, SolveOptions, SolveResult
from lotforge.rolling import RhOptions, method_name, plan_tactics, run_rolling_horizon
from lotforge.validation import validate_solution

RH1 = RhOptions(lb_choice=LbChoice(kind="LB1"), iteration_time_limit=20)
RH2 = RhOptions(lb_choice=LbChoice(kind="LB2"), iteration_time_limit=20)


@pytest.mark.parametrize(
    "T,k,expected",
    [
        (1, 1, ("full",)),
        (3, 2, ("freeze", "full", "relax")),
        (5, 5, ("freeze", "freeze", "freeze", "freeze", "full")),
    ],
)
def test_plan_tactics(T, k, expected):
    plan = plan_tactics(T, k)
    assert plan.tactics == expected
    assert plan.periods("full") == [k - 1]


@pytest.mark.parametrize("k", [0, 4])
def test_plan_tactics_out_of_range(k):
    with pytest.raises(ValueError):
        plan_tactics(3, k)


def test_method_names():
    assert method_name(LbChoice(kind="LB1")) == "RH1"
    assert method_name(LbChoice(kind="LB2")) == "RH2"


def test_options_reject_iteration_limit_above_budget():
    with pytest.raises(ValueError):
        RhOptions(iteration_time_limit=10, total_budget=5)


def test_single_period_equals_exact_optimum(make_instance):
    inst = make_instance(routes=[[0, 1], [1, 0]], demand=[[4.0], [3.0]], due=[[6.0], [5.0]])
    model, _ = build_model2(inst)
    exact = backend.solve(model, SolveOptions(time_limit=20))
    sol, trajectory = run_rolling_horizon(inst, RH1)
    assert sol.objective == pytest.approx(exact.objective, abs=1e-5)
    assert [r.iteration for r in trajectory.records] == [1]


def test_zero_demand_every_iteration_is_zero(zero_demand_instance):
    sol, trajectory = run_rolling_horizon(zero_demand_instance, RH2)
    assert sol.objective == pytest.approx(0.0, abs=1e-6)
    assert all(abs(r.objective) <= 1e-6 for r in trajectory.records)


@pytest.mark.parametrize("opts", [RH1, RH2], ids=["RH1", "RH2"])
def test_result_is_feasible_and_not_below_optimum(opts, learning_instance):
    model, _ = build_model2(learning_instance)
    exact = backend.solve(model, SolveOptions(time_limit=60))
    sol, trajectory = run_rolling_horizon(learning_instance, opts)
    assert validate_solution(learning_instance, sol, "precedence").is_feasible
    assert sol.objective >= exact.objective - 1e-5
    assert [r.iteration for r in trajectory.records] == [1, 2, 3]
    assert [r.frozen for r in trajectory.records] == sorted(r.frozen for r in trajectory.records)
    assert trajectory.records[0].frozen == 0
    assert trajectory.records[-1].relaxed == 0


def test_replay_is_deterministic(tmp_path):
    inst = generate(GenSpec(alpha=2, beta=4, gamma=2, delta=3, seed=4))
    _, first = run_rolling_horizon(inst, RH1)
    _, second = run_rolling_horizon(inst, RH1)
    assert first.lines(with_time=False) == second.lines(with_time=False)

    path = first.write_jsonl(tmp_path / "rh1.jsonl")
    rows = [json.loads(line) for line in path.read_text().splitlines()]
    assert [r["iteration"] for r in rows] == [1, 2, 3]
    assert "seconds" in rows[0]


def test_failed_subproblem_names_the_iteration(mocker, two_job_instance):
    mocker.patch("lotforge.rolling.backend.solve", return_value=SolveResult("infeasible"))
    with pytest.raises(RollingHorizonError, match="iteration 1") as err:
        run_rolling_horizon(two_job_instance, RH1)
    assert err.value.iteration == 1


def test_budget_exhaustion_completes_in_one_solve(mocker, learning_instance):
    clock = iter([0.0, 0.0] + [1000.0] * 10)
    mocker.patch("lotforge.rolling.perf_counter", side_effect=lambda: next(clock))
    opts = RhOptions(lb_choice=LbChoice(kind="LB1"), total_budget=30)
    sol, trajectory = run_rolling_horizon(learning_instance, opts)
    assert trajectory.budget_exhausted
    assert [r.iteration for r in trajectory.records] == [1, 3]
    assert validate_solution(learning_instance, sol, "precedence").is_feasible


def test_heuristic_full_period_bound_still_ends_exact(two_job_instance):
    opts = RhOptions(lb_choice=LbChoice(kind="LB1"), iteration_time_limit=20, exact_full_period=False)
    sol, trajectory = run_rolling_horizon(two_job_instance, opts)
    assert trajectory.records[-1].status == OPTIMAL
    assert validate_solution(two_job_instance, sol).is_feasible


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(10))
@pytest.mark.parametrize("opts", [RH1, RH2], ids=["RH1", "RH2"])
def test_bound_exact_heuristic_ordering(seed, opts):
    inst = generate(GenSpec(alpha=3, beta=6, gamma=2, delta=3, seed=seed))
    exact = backend.solve(build_model2(inst)[0], SolveOptions(time_limit=60))
    assert exact.status == OPTIMAL
    tol = 1e-5 * max(1.0, exact.objective)
    lb = lb_objective(inst, opts.lb_choice, SolveOptions(time_limit=60))
    sol, _ = run_rolling_horizon(inst, opts)
    assert lb <= exact.objective + tol
    assert exact.objective <= sol.objective + tol
