from typing import Callable, List, Optional

import pytest

from lotforge.domain import Instance


def build_instance(
    routes: List[List[int]],
    demand: List[List[float]],
    due: List[List[float]],
    machines: Optional[int] = None,
    period_length: float = 20.0,
    proc: float = 1.0,
    learning: float = 0.0,
    capacity: Optional[float] = None,
    tc: float = 50.0,
    oc: float = 40.0,
    R: Optional[int] = None,
) -> Instance:
    """Small handcrafted instance; every operation shares one rate and one learning index."""
    J, T = len(routes), len(demand[0])
    M = machines or (max(max(r) for r in routes) + 1)
    C = period_length if capacity is None else capacity
    load = max(sum(1 for r in routes for m in r if m == mm) for mm in range(M))
    return Instance(
        jobs=J,
        machines=M,
        periods=T,
        period_length=period_length,
        routes=routes,
        proc_rates=[[proc] * len(r) for r in routes],
        learning=[[learning] * len(r) for r in routes],
        demand=demand,
        due=due,
        tc=[tc] * J,
        oc=[oc] * M,
        capacity=[[C] * T for _ in range(M)],
        overtime_limit=[[period_length - C] * T for _ in range(M)],
        R=R or load,
    )


@pytest.fixture
def make_instance() -> Callable[..., Instance]:
    return build_instance


@pytest.fixture
def single_op_instance() -> Instance:
    # 1 job, 1 op, 1 machine, 1 period, D=10, p=1, a=0, C=20, d=10, L=20
    return build_instance(routes=[[0]], demand=[[10.0]], due=[[10.0]])


@pytest.fixture
def zero_demand_instance() -> Instance:
    return build_instance(routes=[[0, 1], [1, 0]], demand=[[0.0, 0.0], [0.0, 0.0]], due=[[10.0, 30.0], [10.0, 30.0]])


@pytest.fixture
def two_job_instance() -> Instance:
    # both jobs compete for machine 0 in period 1; job 1 is more expensive to delay
    inst = build_instance(
        routes=[[0, 1], [0, 1]],
        demand=[[6.0, 0.0], [4.0, 4.0]],
        due=[[8.0, 40.0], [12.0, 30.0]],
        capacity=16.0,
    )
    return inst.model_copy(update={"tc": [100.0, 60.0]})


@pytest.fixture
def learning_instance() -> Instance:
    return build_instance(
        routes=[[0, 1], [1, 0], [0]],
        demand=[[5.0, 5.0, 5.0], [0.0, 8.0, 4.0], [6.0, 0.0, 6.0]],
        due=[[15.0, 40.0, 60.0], [10.0, 35.0, 55.0], [12.0, 38.0, 58.0]],
        period_length=20.0,
        proc=1.2,
        learning=-0.3,
        capacity=14.0,
    )
