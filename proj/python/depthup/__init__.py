"""Guided depth-map upsampling."""

from ._core import (
    ConfigError,
    DimensionError,
    DomainError,
    InputRangeError,
    IoError,
    SolverConfig,
    bicubic_upsample,
    default_alpha_for_factor,
    default_max_iters_for_factor,
    degrade,
    gradient_check,
    mrf_upsample,
    objective,
    rmse,
    synthetic_scene,
    upsample,
)

__all__ = [
    "ConfigError",
    "DimensionError",
    "DomainError",
    "InputRangeError",
    "IoError",
    "SolverConfig",
    "bicubic_upsample",
    "default_alpha_for_factor",
    "default_max_iters_for_factor",
    "degrade",
    "gradient_check",
    "mrf_upsample",
    "objective",
    "rmse",
    "synthetic_scene",
    "upsample",
]
