"""Energy scaling law toolkit for a martensitic nucleus in an austenitic matrix."""

from .scaling import (
    ALL_REGIMES,
    DomainError,
    LogParams,
    Params,
    RegimeId,
    ScalingResult,
    eval_scaling,
    eval_scaling_log,
    reduced_scaling,
    regime_reduction_check,
    regime_value,
)

__version__ = "0.1.0"

__all__ = [
    "ALL_REGIMES",
    "DomainError",
    "LogParams",
    "Params",
    "RegimeId",
    "ScalingResult",
    "eval_scaling",
    "eval_scaling_log",
    "reduced_scaling",
    "regime_reduction_check",
    "regime_value",
]
