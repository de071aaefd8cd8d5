import pulp
import pytest

from lotforge import backend
from lotforge.compact import build_model2
from lotforge.errors import ConfigError, SolverError
from lotforge.milp import ERROR, INFEASIBLE, OPTIMAL, MilpModel, SolveOptions, fix_binaries, relax_binaries


def _lower_bounded() -> MilpModel:
    model = MilpModel(name="bounded")
    model.add_var("x")
    model.add_constr("floor", {"x": 1.0}, ">=", 3.0)
    model.set_objective({"x": 1.0})
    return model


def test_sanitize():
    assert backend.sanitize("x[j=1,h=2,t=3]") == "x_j1_h2_t3"


def test_continuous_minimum():
    result = backend.solve(_lower_bounded())
    assert result.status == OPTIMAL
    assert result.objective == pytest.approx(3.0)
    assert result.value("x") == pytest.approx(3.0)


def test_empty_model_is_optimal_at_zero():
    result = backend.solve(MilpModel())
    assert result.status == OPTIMAL
    assert result.objective == 0.0


def test_infeasible_model():
    model = _lower_bounded()
    model.add_constr("ceiling", {"x": 1.0}, "<=", 1.0)
    assert backend.solve(model).status == INFEASIBLE


def test_violated_empty_row_is_infeasible():
    model = _lower_bounded()
    model.add_constr("empty", {}, ">=", 1.0)
    assert backend.solve(model).status == INFEASIBLE


def test_single_operation_finishes_on_due_date(single_op_instance):
    model, v = build_model2(single_op_instance)
    result = backend.solve(model, SolveOptions(time_limit=20))
    assert result.status == OPTIMAL
    assert result.objective == pytest.approx(0.0, abs=1e-6)
    assert result.value(v.x(0, 0, 0)) == pytest.approx(10.0)


def test_fixing_and_relaxing_order_objectives(two_job_instance):
    model, v = build_model2(two_job_instance)
    exact = backend.solve(model, SolveOptions(time_limit=30))
    lp = backend.solve(relax_binaries(model, model.binary_names()), SolveOptions(time_limit=30))
    partial = backend.solve(relax_binaries(model, v.period_binaries(1)), SolveOptions(time_limit=30))
    assert lp.objective <= partial.objective + 1e-6 <= exact.objective + 2e-6

    pinned = fix_binaries(model, [(n, exact.binary(n)) for n in model.binary_names()])
    again = backend.solve(pinned, SolveOptions(time_limit=30))
    assert again.objective >= exact.objective - 1e-6
    assert again.binary(v.y(0, 0, 0)) == exact.binary(v.y(0, 0, 0))


def test_solver_failure_is_retried_then_reported(mocker):
    run = mocker.patch.object(pulp.LpProblem, "solve", side_effect=pulp.PulpSolverError("cbc crashed"))
    mocker.patch.object(backend._run_cbc.retry, "sleep", return_value=None)
    result = backend.solve(_lower_bounded())
    assert result.status == ERROR
    assert "cbc crashed" in result.message
    assert run.call_count == 2


def test_run_cbc_reraises_after_retries(mocker):
    mocker.patch.object(pulp.LpProblem, "solve", side_effect=pulp.PulpSolverError("boom"))
    mocker.patch.object(backend._run_cbc.retry, "sleep", return_value=None)
    prob, _ = backend.to_pulp(_lower_bounded())
    with pytest.raises(SolverError):
        backend._run_cbc(prob, SolveOptions())


def test_unknown_backend_is_a_config_error(mocker):
    mocker.patch("lotforge.settings.BACKEND", "gurobi")
    with pytest.raises(ConfigError):
        backend.solve(_lower_bounded())


def test_write_lp(tmp_path):
    out = backend.write_lp(_lower_bounded(), tmp_path / "m.lp")
    assert "floor" in out.read_text()
