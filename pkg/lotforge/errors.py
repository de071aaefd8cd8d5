"""Exception hierarchy shared by every lotforge module."""

from __future__ import annotations

from typing import Optional


class LotforgeError(Exception):
    pass


class ConfigError(LotforgeError):
    pass


class DomainError(LotforgeError):
    pass


class DimensionError(DomainError):
    pass


class ModelError(LotforgeError):
    pass


class ModelBuildError(ModelError):
    pass


class SolverError(LotforgeError):
    pass


class DecodeError(LotforgeError):
    def __init__(self, message: str, report: Optional[object] = None):
        super().__init__(message)
        self.report = report


class RollingHorizonError(LotforgeError):
    def __init__(self, message: str, iteration: int):
        super().__init__(f"iteration {iteration}: {message}")
        self.iteration = iteration
