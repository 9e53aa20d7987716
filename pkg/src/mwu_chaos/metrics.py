"""Economic observables of MWU orbits.

All averages are plain time averages over the recorded samples of an orbit.
Regret is computed from realized and fixed-action costs over the finite
horizon; ``N * variance`` is its large-T limit and serves only as a check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels as K
from .dynamics import (
    GameEconomics,
    HeteroParams,
    LinearTwoParams,
    MapSpec,
    PolynomialParams,
    SimplexParams,
    critical_structure,
)
from .errors import DomainError, PreconditionError
from .orbits import Orbit, default_start, iterate

SLOPE_WINDOW = 0.2
SLOPE_POINTS = 20
SLOPE_T = 10**6
SLOPE_TRANSIENT = 10**5


@dataclass(frozen=True)
class MetricsReport:
    cesaro_mean: float
    variance: float
    regret_avg: float
    regret_bound: float  # nan when a <= 1/(b(1-b)) (no absorbing interval)
    norm_social_cost: float
    T: int
    demand_N: float


@dataclass(frozen=True)
class NormalFormCoeffs:
    gamma1: float
    gamma2: float
    gamma3: float


def _scalar_samples(orbit: Orbit) -> np.ndarray:
    x = np.asarray(orbit.samples, dtype=float)
    if x.ndim != 1:
        raise DomainError("this metric needs a scalar orbit")
    if x.size == 0:
        raise DomainError("orbit has no samples")
    return x


def cesaro_average(orbit: Orbit) -> float:
    return float(np.mean(_scalar_samples(orbit)))


def variance(orbit: Orbit, b: float) -> float:
    """Mean squared deviation from the equilibrium ``b`` (not from the sample mean)."""
    x = _scalar_samples(orbit)
    return float(np.mean((x - b) ** 2))


def time_avg_regret(orbit: Orbit, econ: GameEconomics) -> float:
    """Average realized cost minus the best fixed path's average cost.

    Costs are ``alpha*N*x`` on path 1 and ``beta*N*(1-x)`` on path 2; the
    population pays ``x*c1 + (1-x)*c2`` each day.
    """
    x = _scalar_samples(orbit)
    N = econ.demand_N
    realized = np.mean(econ.alpha * N * x * x + econ.beta * N * (1.0 - x) ** 2)
    fixed = min(np.mean(econ.alpha * N * x), np.mean(econ.beta * N * (1.0 - x)))
    return float(realized - fixed)


def regret_upper_bound(p: LinearTwoParams, N: float) -> float:
    """``N (y_max - b)(b - y_min)``, valid once ``[y_min, y_max]`` is absorbing."""
    if not p.a > 1.0 / (p.b * (1.0 - p.b)):
        raise PreconditionError(
            f"no absorbing interval established: need a > 1/(b(1-b)) = {1.0 / (p.b * (1.0 - p.b)):.6g}, got a={p.a}"
        )
    cs = critical_structure(p)
    return N * (cs.y_max - p.b) * (p.b - cs.y_min)


def normalized_social_cost(orbit: Orbit, p: LinearTwoParams) -> float:
    x = _scalar_samples(orbit)
    b = p.b
    return float(np.mean(x * x - 2.0 * b * x + b) / (b * (1.0 - b)))


def carrying_capacity(b: float) -> float:
    if not 0.0 < b < 1.0:
        raise DomainError(f"b must lie in (0, 1), got {b!r}")
    return 2.0 / (b * (1.0 - b))


def metrics_report(
    orbit: Orbit, p: LinearTwoParams, econ: Optional[GameEconomics] = None
) -> MetricsReport:
    """All scalar observables of one orbit. ``econ`` defaults to ``alpha+beta=1, N=a``."""
    if econ is None:
        econ = GameEconomics.normalized(p)
    try:
        bound = regret_upper_bound(p, econ.demand_N)
    except PreconditionError:
        bound = math.nan
    return MetricsReport(
        cesaro_mean=cesaro_average(orbit),
        variance=variance(orbit, p.b),
        regret_avg=time_avg_regret(orbit, econ),
        regret_bound=bound,
        norm_social_cost=normalized_social_cost(orbit, p),
        T=orbit.T,
        demand_N=econ.demand_N,
    )


def normal_form_coeffs(p: LinearTwoParams) -> NormalFormCoeffs:
    """Coefficients of ``f(b+u) - b = (g1 - 1) u + g2 u^2 + g3 u^3 + O(u^4)``.

    ``g2`` is the exact Taylor coefficient ``f''(b)/2 = a(b - 1/2) g1``. It
    vanishes at the first doubling, which is what makes the closed-form
    slopes of :func:`bifurcation_analytics` come out of ``-g1/(g2^2 + g3)``.
    """
    a, b = p.a, p.b
    g1 = 2.0 + a * b * (b - 1.0)
    g2 = a * (b - 0.5) * g1
    g3 = a * (1.0 + a * (1.0 / 6.0 + b * (b - 1.0)) * (3.0 + a * b * (b - 1.0)))
    return NormalFormCoeffs(g1, g2, g3)


def bifurcation_analytics(b: float) -> tuple[float, float, float]:
    """Right derivatives in ``a`` at the first doubling: (variance, social cost, regret)."""
    if not 0.0 < b < 1.0:
        raise DomainError(f"b must lie in (0, 1), got {b!r}")
    q = b * (1.0 - b)
    d_var = 3.0 * q**3 / (2.0 - 6.0 * q)
    d_sc = 3.0 * q**2 / (2.0 - 6.0 * q)
    d_regret = 3.0 * q**2 / (1.0 - 3.0 * q)
    return d_var, d_sc, d_regret


@dataclass(frozen=True)
class SlopeFit:
    a: np.ndarray
    norm_sc: np.ndarray
    regret: np.ndarray
    variance: np.ndarray
    sc_slope: float
    regret_slope: float
    var_slope: float


def empirical_bifurcation_slope(
    b: float,
    window: float = SLOPE_WINDOW,
    points: int = SLOPE_POINTS,
    T: int = SLOPE_T,
    transient: int = SLOPE_TRANSIENT,
) -> SlopeFit:
    """Least-squares slopes of SC, regret and variance over ``a in (a*, a*+window]``."""
    a_star = carrying_capacity(b)
    grid = a_star + window * np.arange(1, points + 1) / points
    sc, reg, var = [], [], []
    for a in grid:
        p = LinearTwoParams(float(a), b)
        spec = MapSpec("linear2", p)
        orb = iterate(spec, default_start(spec), transient, T)
        sc.append(normalized_social_cost(orb, p))
        reg.append(time_avg_regret(orb, GameEconomics.normalized(p)))
        var.append(variance(orb, b))
    sc, reg, var = np.array(sc), np.array(reg), np.array(var)
    slope = lambda y: float(np.polyfit(grid, y, 1)[0])
    return SlopeFit(grid, sc, reg, var, slope(sc), slope(reg), slope(var))


def cost_gap_average(
    orbit: Orbit, p: PolynomialParams, econ: Optional[GameEconomics] = None
) -> float:
    """Time average of ``c1(x_n) - c2(x_n)`` for monomial costs.

    Without ``econ`` the gap is in normalized units ``P_b(x)``; with it, it is
    scaled by ``(alpha+beta) N^p``.
    """
    x = _scalar_samples(orbit)
    deg = p.degree_p
    gap = (1.0 - p.b) * x**deg - p.b * (1.0 - x) ** deg
    scale = 1.0 if econ is None else (econ.alpha + econ.beta) * econ.demand_N**deg
    return float(scale * np.mean(gap))


def simplex_cost_averages(orbit: Orbit, p: SimplexParams) -> np.ndarray:
    """Per-path time-average flows."""
    x = np.asarray(orbit.samples)
    if x.ndim != 2 or x.shape[1] != p.m:
        raise DomainError(f"expected an orbit of {p.m}-vectors")
    return x.mean(axis=0)


def hetero_mixture_average(orbit: Orbit, p: HeteroParams) -> float:
    x = np.asarray(orbit.samples)
    if x.ndim != 2 or x.shape[1] != 2:
        raise DomainError("expected an orbit of (x, y) pairs")
    return float(np.mean(p.eta1 * x[:, 0] + p.eta2 * x[:, 1]))


def hetero_invariant_drift(orbit: Orbit, p: HeteroParams) -> float:
    """Largest |log I(x_n, y_n) - log I(x_0, y_0)| along the orbit."""
    x0, y0 = orbit.x0
    ref = p.a1 * K.logit(y0) - p.a2 * K.logit(x0)
    s = np.asarray(orbit.samples)
    logit = lambda u: np.log(u) - np.log1p(-u)
    vals = p.a1 * logit(s[:, 1]) - p.a2 * logit(s[:, 0])
    return float(np.max(np.abs(vals - ref)))
