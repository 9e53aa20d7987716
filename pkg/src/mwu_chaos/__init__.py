"""Multiplicative Weights Update dynamics in congestion games.

Iterates the learning maps, classifies their long-run behaviour (periods,
Lyapunov exponents, chaos certificates, period-doubling ratios) and measures
the economic cost of non-convergence (regret, social cost).
"""

from __future__ import annotations

__version__ = "0.1.0"

from .dynamics import (
    CriticalStructure,
    GameEconomics,
    HeteroParams,
    LinearTwoParams,
    MapSpec,
    PolynomialParams,
    SimplexParams,
    critical_structure,
    normalize_economics,
    reduce_atomic_m,
    reduce_atomic_two,
    step_linear2,
)
from .errors import CascadeError, DomainError, MWUError, PreconditionError
from .orbits import Orbit, PeriodResult, detect_period, iterate, lyapunov
from .metrics import MetricsReport, metrics_report

__all__ = [
    "CascadeError",
    "CriticalStructure",
    "DomainError",
    "GameEconomics",
    "HeteroParams",
    "LinearTwoParams",
    "MWUError",
    "MapSpec",
    "MetricsReport",
    "Orbit",
    "PeriodResult",
    "PolynomialParams",
    "PreconditionError",
    "SimplexParams",
    "critical_structure",
    "detect_period",
    "iterate",
    "lyapunov",
    "metrics_report",
    "normalize_economics",
    "reduce_atomic_m",
    "reduce_atomic_two",
    "step_linear2",
    "__version__",
]
