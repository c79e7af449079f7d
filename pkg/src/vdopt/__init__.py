"""Virus Diffusion Optimizer with baselines, engineering design problems and
a seeded benchmark harness."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    BudgetExhausted,
    ConfigurationError,
    RngStream,
    RunResult,
    SearchSpace,
)
from .problems import Problem, get_problem  # noqa: E402
from .vdo import VdoParams, optimize  # noqa: E402

__all__ = [
    "BudgetExhausted",
    "ConfigurationError",
    "Problem",
    "RngStream",
    "RunResult",
    "SearchSpace",
    "VdoParams",
    "get_problem",
    "optimize",
]
