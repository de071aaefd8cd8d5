import pytest

from lotforge.bench import (
    ExperimentReport,
    ExperimentRow,
    SuiteConfig,
    build_cells,
    bounds_table,
    methods_table,
    parse_report,
    render_report,
    rpd_percent,
    run_suite,
    score_rows,
)


def _row(method, objective, status="optimal", **kw) -> ExperimentRow:
    base = dict(instance="TP 2:4:2:2", seed=0, method=method, objective=objective, seconds=1.5, status=status)
    base.update(kw)
    return ExperimentRow(**base)


@pytest.fixture
def scored() -> ExperimentReport:
    rows = [
        _row("Model-II", 100.0, feasible=True),
        _row("RH1", 110.0, feasible=True),
        _row("LB1", 80.0, certified=True),
        _row("LB2", 0.0, certified=True),
    ]
    return ExperimentReport(score_rows(rows))


# ================= Metrics =================
@pytest.mark.parametrize(
    "obj,best,expected",
    [(100.0, 100.0, 0.0), (36605.6, 33029.2, 10.8), (72145.3, 47132.9, 53.1)],
)
def test_rpd_percent(obj, best, expected):
    assert rpd_percent(obj, best) == pytest.approx(expected, abs=0.05)


def test_rpd_needs_positive_best():
    with pytest.raises(ValueError):
        rpd_percent(5.0, 0.0)


def test_scoring(scored):
    by_method = {r.method: r for r in scored.rows}
    assert by_method["Model-II"].rpd == 0.0
    assert by_method["RH1"].rpd == pytest.approx(10.0)
    assert by_method["LB1"].gap == pytest.approx(25.0)
    assert by_method["LB1"].rpd is None
    assert by_method["LB2"].gap is None


def test_zero_best_gives_zero_rpd():
    rows = score_rows([_row("Model-II", 0.0), _row("RH2", 0.0), _row("RH1", 3.0)])
    assert [r.rpd for r in rows] == [0.0, 0.0, None]


# ================= Config =================
def test_config_validation():
    with pytest.raises(ValueError):
        SuiteConfig(specs=[], methods=["LB1"])
    with pytest.raises(ValueError):
        SuiteConfig(specs=["2:8:2"], methods=["LB1"])
    with pytest.raises(ValueError):
        SuiteConfig(specs=["2:8:2:3"], methods=["LB3"])
    with pytest.raises(ValueError):
        SuiteConfig(specs=["2:8:2:3"], methods=["LB1"], learning=[0.3])


def test_cells_cover_the_grid():
    config = SuiteConfig(specs=["2:4:2:2", "3:6:2:2"], methods=["Model-II", "LB1"], seeds=[0, 1], learning=[None, -0.2])
    cells = build_cells(config)
    assert len(cells) == 2 * 2 * 2 * 2
    assert {c.spec.learning for c in cells} == {None, -0.2}


def test_time_limits_follow_the_scale():
    config = SuiteConfig(specs=["2:4:2:2"], methods=["RH1"], time_scale=0.5)
    assert config.exact_time_limit == pytest.approx(30.0)
    assert config.rh_iteration_time_limit == pytest.approx(5.0)


# ================= Suite =================
def test_zero_demand_suite_scores_everything_zero():
    config = SuiteConfig(specs=["2:4:2:2"], methods=["Model-I", "Model-II", "LB1", "LB2", "RH1", "RH2", "RH1-LO"], pattern="none")
    report = run_suite(config)
    assert len(report) == 7
    for row in report.rows:
        assert row.objective == pytest.approx(0.0, abs=1e-6), row
        if row.method.startswith("LB"):
            assert row.rpd is None
        else:
            assert row.feasible
            assert row.rpd == 0.0


def test_suite_scores_against_the_best_method():
    config = SuiteConfig(specs=["2:4:2:2"], methods=["Model-II", "LB1", "RH1"], seeds=[3])
    report = run_suite(config)
    solved = [r for r in report.rows if r.method != "LB1"]
    assert min(r.rpd for r in solved if r.rpd is not None) == 0.0
    lb = next(r for r in report.rows if r.method == "LB1")
    exact = next(r for r in report.rows if r.method == "Model-II")
    assert lb.objective <= exact.objective + 1e-5


def test_failing_cell_is_recorded(mocker):
    mocker.patch("lotforge.bench.build_model2", side_effect=RuntimeError("broken builder"))
    report = run_suite(SuiteConfig(specs=["2:4:2:2"], methods=["Model-II", "LB1"]))
    exact = next(r for r in report.rows if r.method == "Model-II")
    assert exact.status == "failed: broken builder"
    assert exact.objective is None


# ================= Rendering =================
def test_render_single_row_csv(tmp_path):
    out = render_report(ExperimentReport([_row("Model-II", 12.5)]), tmp_path / "r.csv")
    assert len(out.read_text().splitlines()) == 2


def test_render_empty_report(tmp_path):
    with pytest.raises(ValueError):
        render_report(ExperimentReport([]), tmp_path / "r.csv")


def test_csv_round_trip(tmp_path, scored):
    rows = scored.rows + [_row("RH2", None, status="failed: boom", learning=-0.2, seed=4)]
    report = ExperimentReport(rows)
    assert parse_report(render_report(report, tmp_path / "r.csv")).rows == report.rows


def test_markdown_layouts(tmp_path, scored):
    methods = methods_table(scored)
    assert list(methods.columns) == ["Instance", "Model-II Time", "Model-II Obj", "Model-II RPD", "RH1 Time", "RH1 Obj", "RH1 RPD"]
    bounds = bounds_table(scored)
    assert "GAP1 (LB1)" in bounds.columns and "GAP2 (LB2)" in bounds.columns

    text = render_report(scored, tmp_path / "t.md", fmt="markdown", layout="bounds").read_text()
    lines = text.splitlines()
    assert lines[0].startswith("| Instance | Time | Obj |")
    assert len(lines) == 3
    assert "25.0" in lines[2]
