"""Focused information criterion model search."""

from ._core import (
    ConfigError,
    DataError,
    FocusficError,
    NumericalError,
    enumerate,
    fit,
    model_average,
    poisson_upper_tail,
    run_config,
    search,
)

__all__ = [
    "ConfigError",
    "DataError",
    "FocusficError",
    "NumericalError",
    "enumerate",
    "fit",
    "model_average",
    "poisson_upper_tail",
    "run_config",
    "search",
]
