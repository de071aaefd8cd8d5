"""Seeded random instances labelled (jobs:operations:machines:periods)."""

from __future__ import annotations

import logging
import math
from typing import Dict, Literal, Optional

import numpy as np
from pydantic import BaseModel, Field, model_validator

from .domain import Instance

logger = logging.getLogger("lotforge.generator")

Pattern = Literal["all-periods", "single-period", "none"]

MEAN_PROC_RATE = 0.5 + 1.5 * (4 / 6)
MEAN_CAPACITY_SHARE = 2 / 5
DEFAULT_PERIOD_LENGTH = 100.0


class GenSpec(BaseModel):
    alpha: int = Field(gt=0)
    beta: int = Field(gt=0)
    gamma: int = Field(gt=0)
    delta: int = Field(gt=0)
    seed: int = Field(default=0, ge=0)
    rho: float = Field(default=0.8, gt=0, le=1)
    pattern: Pattern = "all-periods"
    learning: Optional[float] = Field(default=None, le=0)
    demand_mean: float = Field(default=30.0, ge=0)
    demand_sd: float = Field(default=8.0, ge=0)
    demand_cap: Optional[float] = Field(default=None, ge=0)
    distinct_machines: bool = False

    @model_validator(mode="after")
    def _shape(self) -> "GenSpec":
        if self.beta % self.alpha:
            raise ValueError(f"beta={self.beta} operations cannot be split evenly over alpha={self.alpha} jobs")
        if self.distinct_machines and self.ops_per_job > self.gamma:
            raise ValueError(f"{self.ops_per_job} distinct machines per job requested but only {self.gamma} exist")
        return self

    @property
    def ops_per_job(self) -> int:
        return self.beta // self.alpha

    @property
    def label(self) -> str:
        return f"TP {self.alpha}:{self.beta}:{self.gamma}:{self.delta}"

    @classmethod
    def from_label(cls, text: str, **kwargs) -> "GenSpec":
        """Parse "a:b:g:d" (an optional "TP " prefix is ignored)."""
        parts = text.replace("TP", "").strip().split(":")
        if len(parts) != 4:
            raise ValueError(f"expected alpha:beta:gamma:delta, got {text!r}")
        a, b, g, d = (int(p) for p in parts)
        return cls(alpha=a, beta=b, gamma=g, delta=d, **kwargs)


def expected_demand(spec: GenSpec) -> float:
    """Mean demand per job and period under the configured demand pattern."""
    if spec.pattern == "none":
        return 0.0
    if spec.pattern == "single-period":
        return spec.demand_mean / spec.delta
    return spec.demand_mean


def derive_period_length(spec: GenSpec) -> float:
    """L such that expected nominal workload fills a share rho of expected regular capacity."""
    per_job = expected_demand(spec)
    if per_job <= 0:
        return DEFAULT_PERIOD_LENGTH
    workload = spec.beta * MEAN_PROC_RATE * per_job * spec.delta
    return workload / (spec.rho * MEAN_CAPACITY_SHARE * spec.gamma * spec.delta)


def _demand(rng: np.random.Generator, spec: GenSpec, size: int) -> np.ndarray:
    d = np.maximum(0.0, np.round(rng.normal(spec.demand_mean, spec.demand_sd, size=size)))
    if spec.demand_cap is not None:
        d = np.minimum(d, spec.demand_cap)
    return d


def generate(spec: GenSpec) -> Instance:
    rng = np.random.default_rng(spec.seed)
    J, M, T, n = spec.alpha, spec.gamma, spec.delta, spec.ops_per_job
    L = derive_period_length(spec)

    capacity = rng.beta(2, 3, size=(M, T)) * L
    overtime = L - capacity
    tc = rng.uniform(50, 200, size=J)
    oc = rng.uniform(30, 60, size=M)
    proc = 0.5 + 1.5 * rng.beta(4, 2, size=(J, n))
    if spec.learning is None:
        learning = rng.uniform(-0.5, -0.05, size=(J, n))
    else:
        learning = np.full((J, n), float(spec.learning))
    periods = np.arange(1, T + 1)
    due = rng.beta(2, 4, size=(J, T)) * periods * L

    demand = np.zeros((J, T))
    if spec.pattern == "all-periods":
        demand = _demand(rng, spec, J * T).reshape(J, T)
    elif spec.pattern == "single-period":
        at = rng.integers(0, T, size=J)
        demand[np.arange(J), at] = _demand(rng, spec, J)

    if spec.distinct_machines:
        routes = np.stack([rng.permutation(M)[:n] for _ in range(J)])
    else:
        routes = rng.integers(0, M, size=(J, n))

    load = max(int(np.sum(routes == m)) for m in range(M))
    R = max(math.ceil(spec.beta / M), load)

    inst = Instance(
        jobs=J,
        machines=M,
        periods=T,
        period_length=float(L),
        routes=routes.astype(int).tolist(),
        proc_rates=proc.tolist(),
        learning=learning.tolist(),
        demand=demand.tolist(),
        due=due.tolist(),
        tc=tc.tolist(),
        oc=oc.tolist(),
        capacity=capacity.tolist(),
        overtime_limit=overtime.tolist(),
        R=R,
    )
    logger.debug("Generated %s seed=%d L=%.3f R=%d", inst.label, spec.seed, L, R)
    return inst


def label(inst: Instance) -> str:
    return inst.label


def draw_statistics(draws: int = 10_000, seed: int = 0, spec: Optional[GenSpec] = None) -> Dict[str, float]:
    """Empirical means of the generator's draws for p, C/L and D."""
    spec = spec or GenSpec(alpha=1, beta=1, gamma=1, delta=1)
    rng = np.random.default_rng(seed)
    return {
        "mean_proc_rate": float(np.mean(0.5 + 1.5 * rng.beta(4, 2, size=draws))),
        "mean_capacity_share": float(np.mean(rng.beta(2, 3, size=draws))),
        "mean_demand": float(np.mean(_demand(rng, spec, draws))),
    }
