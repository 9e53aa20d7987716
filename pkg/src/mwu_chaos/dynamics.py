"""Map families generated by MWU in parallel-link congestion games.

Four families are covered:

* ``linear2``: two paths with linear costs, ``f(x) = x / (x + (1-x) exp(a(x-b)))``
* ``polynomial2``: two paths with monomial costs of common degree ``p``
* ``hetero2``: two populations with different learning rates sharing the paths
* ``simplex``: ``m`` paths with linear costs, ``x_i -> x_i exp(-a_i x_i) / Y``

plus the change of variables from raw game economics and the reductions of
atomic games to the non-atomic maps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from . import _kernels as K
from .errors import DomainError, PreconditionError

SIMPLEX_SUM_TOL = 1e-9


def _check_open_unit(name: str, value: float) -> None:
    if not 0.0 < value < 1.0:
        raise DomainError(f"{name} must lie in (0, 1), got {value!r}")


def _check_positive(name: str, value: float) -> None:
    if not value > 0.0 or not math.isfinite(value):
        raise DomainError(f"{name} must be a positive finite number, got {value!r}")


@dataclass(frozen=True)
class GameEconomics:
    """Raw two-path game: costs ``alpha*N*x`` and ``beta*N*(1-x)``, learning rate ``epsilon``."""

    alpha: float
    beta: float
    demand_N: float
    epsilon: float

    def __post_init__(self) -> None:
        _check_positive("alpha", self.alpha)
        _check_positive("beta", self.beta)
        _check_positive("demand_N", self.demand_N)
        _check_open_unit("epsilon", self.epsilon)

    @classmethod
    def normalized(cls, p: "LinearTwoParams") -> "GameEconomics":
        """Economics with ``alpha + beta = 1`` and ``epsilon = 1 - 1/e`` (so ``N = a``)."""
        return cls(alpha=1.0 - p.b, beta=p.b, demand_N=p.a, epsilon=1.0 - math.exp(-1.0))


@dataclass(frozen=True)
class LinearTwoParams:
    a: float
    b: float

    def __post_init__(self) -> None:
        _check_positive("a", self.a)
        _check_open_unit("b", self.b)


@dataclass(frozen=True)
class CriticalStructure:
    x_l: float
    x_r: float
    y_min: float
    y_max: float


@dataclass(frozen=True)
class SimplexParams:
    rates: tuple[float, ...]

    def __post_init__(self) -> None:
        rates = tuple(float(r) for r in self.rates)
        if len(rates) < 2:
            raise DomainError("simplex family needs at least two strategies")
        for i, r in enumerate(rates):
            _check_positive(f"rates[{i}]", r)
        object.__setattr__(self, "rates", rates)

    @property
    def m(self) -> int:
        return len(self.rates)


@dataclass(frozen=True)
class PolynomialParams:
    a: float
    b: float
    degree_p: int

    def __post_init__(self) -> None:
        _check_positive("a", self.a)
        _check_open_unit("b", self.b)
        if int(self.degree_p) != self.degree_p or self.degree_p < 1:
            raise DomainError(f"degree_p must be a positive integer, got {self.degree_p!r}")
        object.__setattr__(self, "degree_p", int(self.degree_p))


@dataclass(frozen=True)
class HeteroParams:
    a1: float
    a2: float
    b: float
    eta1: float = 0.5
    eta2: float = 0.5

    def __post_init__(self) -> None:
        _check_positive("a1", self.a1)
        _check_positive("a2", self.a2)
        _check_open_unit("b", self.b)
        _check_open_unit("eta1", self.eta1)
        _check_open_unit("eta2", self.eta2)
        if abs(self.eta1 + self.eta2 - 1.0) > 1e-12:
            raise DomainError(f"eta1 + eta2 must equal 1, got {self.eta1 + self.eta2!r}")


Params = Union[LinearTwoParams, SimplexParams, PolynomialParams, HeteroParams]

_FAMILIES = {
    "linear2": LinearTwoParams,
    "simplex": SimplexParams,
    "polynomial2": PolynomialParams,
    "hetero2": HeteroParams,
}


@dataclass(frozen=True)
class MapSpec:
    """Tagged map family plus its parameter record."""

    family: str
    params: Params

    def __post_init__(self) -> None:
        expected = _FAMILIES.get(self.family)
        if expected is None:
            raise DomainError(f"unknown map family {self.family!r}; expected one of {sorted(_FAMILIES)}")
        if not isinstance(self.params, expected):
            raise DomainError(
                f"family {self.family!r} needs {expected.__name__}, got {type(self.params).__name__}"
            )

    @classmethod
    def of(cls, params: Params) -> "MapSpec":
        for family, kind in _FAMILIES.items():
            if isinstance(params, kind):
                return cls(family, params)
        raise DomainError(f"no map family for {type(params).__name__}")

    @property
    def is_scalar(self) -> bool:
        return self.family in ("linear2", "polynomial2")

    def kernel_args(self) -> tuple[int, float, float, float]:
        """(kind, a, b, p) for the compiled scalar kernels."""
        p = self.params
        if isinstance(p, LinearTwoParams):
            return K.LINEAR, float(p.a), float(p.b), 1.0
        if isinstance(p, PolynomialParams):
            return K.POLYNOMIAL, float(p.a), float(p.b), float(p.degree_p)
        raise DomainError(f"family {self.family!r} is not a scalar map")


# -- linear two-path family -------------------------------------------------


def normalize_economics(econ: GameEconomics) -> LinearTwoParams:
    s = econ.alpha + econ.beta
    a = s * econ.demand_N * -math.log1p(-econ.epsilon)
    return LinearTwoParams(a=a, b=econ.beta / s)


def logit(x: float) -> float:
    return K.logit(x)


def step_linear2(x: float, p: LinearTwoParams) -> float:
    """One MWU day: ``logit(x') = logit(x) - a(x - b)``."""
    _check_open_unit("x", x)
    return K.step(float(x), K.LINEAR, p.a, p.b, 1.0)[0]


def step_linear2_closed(x: float, p: LinearTwoParams) -> float:
    """Boundary-aware variant on ``[0, 1]``: the repelling fixed points 0 and 1 stay put."""
    if x == 0.0 or x == 1.0:
        return float(x)
    return step_linear2(x, p)


def step_linear2_direct(x: float, p: LinearTwoParams) -> float:
    """Rational form of the map, kept as a cross-check of the logit evaluation."""
    return x / (x + (1.0 - x) * math.exp(p.a * (x - p.b)))


def derivative_linear2(x: float, p: LinearTwoParams) -> float:
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"x must lie in [0, 1], got {x!r}")
    return K.deriv(float(x), K.LINEAR, p.a, p.b, 1.0)


def critical_structure(p: LinearTwoParams) -> CriticalStructure:
    if p.a <= 4.0:
        raise PreconditionError(
            f"a={p.a} <= 4: the map is a homeomorphism, no critical points"
        )
    x_l = 0.5 * (1.0 - math.sqrt(1.0 - 4.0 / p.a))
    x_r = 1.0 - x_l
    return CriticalStructure(
        x_l=x_l, x_r=x_r, y_min=step_linear2(x_r, p), y_max=step_linear2(x_l, p)
    )


def potential(x: float, p: LinearTwoParams) -> float:
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"x must lie in [0, 1], got {x!r}")
    return 0.5 * p.a**2 * ((1.0 - p.b) * x * x + p.b * (1.0 - x) ** 2)


# -- polynomial costs --------------------------------------------------------


def cost_gap_poly(x: float, p: PolynomialParams) -> float:
    """``P_b(x) = (1-b) x^p - b (1-x)^p``, the normalized cost difference."""
    return K.drive(float(x), K.POLYNOMIAL, p.b, float(p.degree_p))


def step_polynomial(x: float, p: PolynomialParams) -> float:
    _check_open_unit("x", x)
    return K.step(float(x), K.POLYNOMIAL, p.a, p.b, float(p.degree_p))[0]


def polynomial_equilibrium(p: PolynomialParams) -> float:
    r = p.b ** (1.0 / p.degree_p)
    s = (1.0 - p.b) ** (1.0 / p.degree_p)
    return r / (r + s)


# -- heterogeneous populations ----------------------------------------------


def step_hetero(x: float, y: float, p: HeteroParams) -> tuple[float, float]:
    _check_open_unit("x", x)
    _check_open_unit("y", y)
    d = p.eta1 * x + p.eta2 * y - p.b
    return K.expit(K.logit(x) - p.a1 * d), K.expit(K.logit(y) - p.a2 * d)


def hetero_invariant(x: float, y: float, p: HeteroParams) -> float:
    """``log I(x, y) = a1 logit(y) - a2 logit(x)``; conserved by :func:`step_hetero`."""
    _check_open_unit("x", x)
    _check_open_unit("y", y)
    return p.a1 * K.logit(y) - p.a2 * K.logit(x)


# -- m strategies ------------------------------------------------------------


def _check_simplex_point(x: np.ndarray, m: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (m,):
        raise DomainError(f"state must have shape ({m},), got {x.shape}")
    if np.any(x <= 0.0):
        raise DomainError("simplex state must be strictly interior (all coordinates > 0)")
    if abs(x.sum() - 1.0) > SIMPLEX_SUM_TOL:
        raise DomainError(f"simplex state must sum to 1, got {x.sum()!r}")
    return x


def step_simplex(x: Sequence[float], p: SimplexParams) -> np.ndarray:
    x = _check_simplex_point(np.asarray(x, dtype=float), p.m)
    return K.simplex_step(x, np.asarray(p.rates))[0]


def simplex_equilibrium(rates: Sequence[float]) -> np.ndarray:
    """Equal-cost flow: ``b_i`` proportional to ``1/a_i``."""
    inv = 1.0 / np.asarray(SimplexParams(tuple(rates)).rates)
    return inv / inv.sum()


def embed_segment(x: float, p: SimplexParams, special_index: int) -> np.ndarray:
    """Point of the invariant segment ``x_i = p* x / a_i`` (i != special), ``x_special = 1 - x``."""
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"x must lie in [0, 1], got {x!r}")
    rates = np.asarray(p.rates)
    k = _special(special_index, p.m)
    others = np.delete(rates, k)
    p_star = 1.0 / np.sum(1.0 / others)
    out = p_star * x / rates
    out[k] = 1.0 - x
    return out


def segment_conjugate(p: SimplexParams, special_index: int) -> LinearTwoParams:
    """Two-path parameters whose map equals the simplex map restricted to the segment."""
    rates = np.asarray(p.rates)
    k = _special(special_index, p.m)
    p_star = 1.0 / np.sum(1.0 / np.delete(rates, k))
    total = p_star + rates[k]
    return LinearTwoParams(a=float(total), b=float(rates[k] / total))


def segment_coordinate(x: Sequence[float], special_index: int) -> float:
    k = _special(special_index, len(x))
    return 1.0 - float(x[k])


def _special(index: int, m: int) -> int:
    # 1-based, matching the path labels of the game
    if not 1 <= index <= m:
        raise DomainError(f"special_index must be in 1..{m}, got {index}")
    return index - 1


# -- raw MWU and atomic games ------------------------------------------------


def mwu_update(x: Sequence[float], costs: Sequence[float], epsilon: float) -> np.ndarray:
    """Plain multiplicative weights: ``x_i (1-eps)^c_i`` renormalized."""
    _check_open_unit("epsilon", epsilon)
    x = np.asarray(x, dtype=float)
    w = np.log(x) + np.asarray(costs, dtype=float) * math.log1p(-epsilon)
    w -= w.max()
    y = np.exp(w)
    return y / y.sum()


def atomic_costs(x: Sequence[float], alphas: Sequence[float], N: int) -> np.ndarray:
    """Expected cost ``alpha_i (1 + (N-1) x_i)`` of each path when all N agents play x."""
    x = np.asarray(x, dtype=float)
    return np.asarray(alphas, dtype=float) * (1.0 + (N - 1) * x)


def step_atomic(x: Sequence[float], alphas: Sequence[float], N: int, epsilon: float) -> np.ndarray:
    """One MWU day of the symmetric atomic game, computed from raw costs."""
    return mwu_update(x, atomic_costs(x, alphas, N), epsilon)


def reduce_atomic_two(alpha1: float, alpha2: float, N: int, epsilon: float) -> LinearTwoParams:
    _check_positive("alpha1", alpha1)
    _check_positive("alpha2", alpha2)
    _check_open_unit("epsilon", epsilon)
    if int(N) != N or N < 2:
        raise DomainError(f"N must be an integer >= 2, got {N!r}")
    if not (alpha2 < N * alpha1 and alpha1 < N * alpha2):
        raise PreconditionError(
            f"no symmetric interior equilibrium: need alpha2 < N*alpha1 and alpha1 < N*alpha2 "
            f"(alpha1={alpha1}, alpha2={alpha2}, N={N})"
        )
    s = alpha1 + alpha2
    a = (N - 1) * s * -math.log1p(-epsilon)
    b = (alpha2 * N - alpha1) / (s * (N - 1))
    return LinearTwoParams(a=a, b=b)


def reduce_atomic_m(alpha: float, N: int, epsilon: float, m: int) -> SimplexParams:
    _check_positive("alpha", alpha)
    _check_open_unit("epsilon", epsilon)
    if int(N) != N or N < 2:
        raise DomainError(f"N must be an integer >= 2, got {N!r}")
    if int(m) != m or m < 2:
        raise DomainError(f"m must be an integer >= 2, got {m!r}")
    rate = (N - 1) * alpha * -math.log1p(-epsilon)
    return SimplexParams(rates=(rate,) * int(m))
