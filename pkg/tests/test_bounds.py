import pytest

from lotforge import backend
from lotforge.bounds import (
    LbChoice,
    apply_lb1,
    apply_lb2,
    build_lower_bound,
    gap_percent,
    lb_objective,
    solve_lower_bound,
)
from lotforge.compact import build_model2
from lotforge.errors import ModelError, SolverError
from lotforge.generator import GenSpec, generate
from lotforge.milp import OPTIMAL, SolveOptions, SolveResult

OPTS = SolveOptions(time_limit=60)


def _optimum(inst) -> float:
    model, _ = build_model2(inst)
    result = backend.solve(model, OPTS)
    assert result.status == OPTIMAL
    return result.objective


# ================= GAP =================
@pytest.mark.parametrize(
    "opt,lb,expected",
    [(100.0, 100.0, 0.0), (15102.3, 12736.5, 18.6), (23789.8, 22892.2, 3.9)],
)
def test_gap_percent(opt, lb, expected):
    assert gap_percent(opt, lb) == pytest.approx(expected, abs=0.05)


def test_gap_needs_positive_bound():
    with pytest.raises(ValueError):
        gap_percent(10.0, 0.0)


# ================= Choices =================
def test_certification_flags():
    assert LbChoice(kind="LB1").certified
    assert not LbChoice(kind="LB1", activation="any").certified
    assert LbChoice(kind="LB2").certified
    assert not LbChoice(kind="LB2-40").certified


def test_empty_target_periods_are_rejected():
    with pytest.raises(ValueError):
        LbChoice(periods=[])


# ================= Model surgery =================
def test_lb1_replaces_tardiness_rows(two_job_instance):
    model, v = build_model2(two_job_instance)
    out, aux = apply_lb1(model, v, [1])
    assert v.tardiness_row(0, 1) not in out.constraints
    assert v.tardiness_row(0, 0) in out.constraints
    assert set(aux.u) == {(0, 1), (1, 1)}
    assert len(out.constraint_names("lb1")) == 2
    assert v.tardiness_row(0, 1) in model.constraints


def test_lb1_rejects_out_of_range_periods(two_job_instance):
    model, v = build_model2(two_job_instance)
    with pytest.raises(ModelError):
        apply_lb1(model, v, [2])
    with pytest.raises(ModelError):
        apply_lb1(model, v, [])


def test_lb2_touches_demand_periods_only(two_job_instance):
    model, v = build_model2(two_job_instance)
    out, aux = apply_lb2(model, v, 0, LbChoice(kind="LB2"))
    # job 0 has demand in period 1 only, job 1 in both
    assert set(aux.v) == {(0, 0), (1, 0), (1, 1)}
    assert v.tardiness_row(0, 1) in out.constraints
    assert aux.certified and not aux.fr


def test_lb2_rollover_is_heuristic(two_job_instance, caplog):
    model, v = build_model2(two_job_instance)
    with caplog.at_level("WARNING", logger="lotforge.bounds"):
        out, aux = apply_lb2(model, v, 1, LbChoice(kind="LB2"), rolling=True)
    assert any("rollover" in r.getMessage() and r.levelname == "WARNING" for r in caplog.records)
    assert (0, 1) in aux.fr
    assert not aux.certified
    assert out.constraint_names("lb2r")
    assert aux.notes


def test_lb2_rejects_lb1_choice_and_bad_period(two_job_instance):
    model, v = build_model2(two_job_instance)
    with pytest.raises(ModelError):
        apply_lb2(model, v, 0, LbChoice(kind="LB1"))
    with pytest.raises(ModelError):
        apply_lb2(model, v, 5, LbChoice(kind="LB2"))


def test_k_const_must_be_positive():
    with pytest.raises(ValueError):
        LbChoice(kind="LB2", k_const=0.0)


# ================= Bound values =================
def test_zero_demand_bounds_are_zero(zero_demand_instance):
    for kind in ("LB1", "LB2"):
        assert lb_objective(zero_demand_instance, LbChoice(kind=kind), OPTS) == pytest.approx(0.0, abs=1e-6)


@pytest.mark.parametrize("kind", ["LB1", "LB2"])
def test_bounds_stay_below_optimum(kind, two_job_instance, learning_instance):
    for inst in (two_job_instance, learning_instance):
        assert lb_objective(inst, LbChoice(kind=kind), OPTS) <= _optimum(inst) + 1e-5


@pytest.mark.parametrize("seed", range(2))
def test_bounds_below_optimum_on_generated_instances(seed):
    inst = generate(GenSpec(alpha=2, beta=4, gamma=2, delta=2, seed=seed))
    opt = _optimum(inst)
    for kind in ("LB1", "LB2"):
        outcome = solve_lower_bound(inst, LbChoice(kind=kind), OPTS)
        assert outcome.certified
        assert outcome.objective <= opt + 1e-5


def test_build_lower_bound_names_the_model(two_job_instance):
    model, _, aux = build_lower_bound(two_job_instance, LbChoice(kind="LB2-40"))
    assert model.name == "lb2-40"
    assert not aux.certified


def test_lb_objective_without_solution(mocker, two_job_instance):
    mocker.patch("lotforge.bounds.backend.solve", return_value=SolveResult("infeasible"))
    with pytest.raises(SolverError):
        lb_objective(two_job_instance, LbChoice(kind="LB1"))



# ================= Seeded sweeps =================
@pytest.mark.slow
@pytest.mark.parametrize("seed", range(20))
def test_bounds_below_optimum_sweep(seed):
    inst = generate(GenSpec(alpha=3, beta=6, gamma=2, delta=3, seed=seed))
    opt = _optimum(inst)
    for kind in ("LB1", "LB2"):
        outcome = solve_lower_bound(inst, LbChoice(kind=kind), OPTS)
        assert outcome.status == OPTIMAL
        assert outcome.objective <= opt + 1e-5 * max(1.0, opt)


LEARNING_GRID = (0.0, -0.2, -0.4, -0.6)


def _mean_gap(values):
    assert values, "no instance with a positive bound"
    return sum(values) / len(values)


@pytest.fixture(scope="module")
def gap_table():
    """Mean GAP per learning index over seeded instances with positive bounds."""
    table = {}
    for a in LEARNING_GRID:
        gaps = {"LB1": [], "LB2": []}
        for seed in range(10):
            inst = generate(GenSpec(alpha=3, beta=6, gamma=2, delta=3, seed=seed, rho=0.9, learning=a))
            opt = _optimum(inst)
            for kind in gaps:
                lb = lb_objective(inst, LbChoice(kind=kind), OPTS)
                if lb > 1e-9:
                    gaps[kind].append(gap_percent(opt, lb))
                elif opt <= 1e-9:
                    gaps[kind].append(0.0)
        table[a] = {kind: _mean_gap(values) for kind, values in gaps.items()}
    return table


@pytest.mark.slow
def test_lb2_gap_widens_with_learning(gap_table):
    means = [gap_table[a]["LB2"] for a in LEARNING_GRID]
    assert all(later >= earlier - 1e-9 for earlier, later in zip(means, means[1:])), means


@pytest.mark.slow
def test_lb2_is_tighter_without_learning(gap_table):
    assert gap_table[0.0]["LB2"] <= gap_table[-0.4]["LB2"]


@pytest.mark.slow
def test_lb1_gap_stays_small_and_below_lb2(gap_table):
    for a in LEARNING_GRID:
        assert -1e-4 <= gap_table[a]["LB1"] <= 15.0, (a, gap_table[a])
        if a < 0:
            assert gap_table[a]["LB1"] < gap_table[a]["LB2"], (a, gap_table[a])
