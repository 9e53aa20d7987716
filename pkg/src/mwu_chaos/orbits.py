"""Orbit iteration and orbit-level diagnostics.

Period detection follows the rule used for the period diagrams: discard a
transient, then call the state periodic of period n if ``|f^n(x) - x| < tol``
and no smaller n passes. "Aperiodic" therefore also covers periods above
``max_period``; the Lyapunov exponent disambiguates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.optimize import brentq

from . import _kernels as K
from .dynamics import (
    CriticalStructure,
    HeteroParams,
    LinearTwoParams,
    MapSpec,
    PolynomialParams,
    SimplexParams,
    _check_simplex_point,
    critical_structure,
    potential,
)
from .errors import DomainError

DEFAULT_TRANSIENT = 20000
DEFAULT_TOL = 1e-10
DEFAULT_MAX_PERIOD = 8
DEFAULT_LYAPUNOV_T = 2000
SUPERSTABLE_TOL = 1e-6

State = Union[float, np.ndarray]


@dataclass(frozen=True)
class Orbit:
    map: MapSpec
    x0: State
    transient: int
    samples: np.ndarray
    saturated: bool = False  # some sample was rounded into the open interval for storage

    @property
    def T(self) -> int:
        return len(self.samples)


@dataclass(frozen=True)
class PeriodResult:
    period: Optional[int]  # None means aperiodic (or period > max_period)
    orbit_points: tuple
    residual: float
    superstable: bool = False

    @property
    def is_periodic(self) -> bool:
        return self.period is not None

    @property
    def code(self) -> int:
        """Period 1..max_period, or 0 for aperiodic."""
        return self.period or 0

    def __str__(self) -> str:
        return "aperiodic" if self.period is None else f"period {self.period}"


def default_start(spec: MapSpec, rule: str = "x_l") -> float:
    """Starting point named by ``rule`` ('x_l' or 'x_r'); 0.5 when the map has no critical points."""
    crit = critical_points(spec)
    if not crit:
        return 0.5
    if rule == "x_l":
        return crit[0]
    if rule == "x_r":
        return crit[-1]
    raise DomainError(f"unknown init rule {rule!r}")


def critical_points(spec: MapSpec) -> list[float]:
    """Zeros of f' in (0, 1), ascending; empty when f is monotone."""
    p = spec.params
    if isinstance(p, LinearTwoParams):
        if p.a <= 4.0:
            return []
        cs = critical_structure(p)
        return [cs.x_l, cs.x_r]
    if isinstance(p, PolynomialParams):
        kind, a, b, deg = spec.kernel_args()
        g = lambda x: 1.0 - a * x * (1.0 - x) * K.drive_slope(x, kind, b, deg)
        grid = np.linspace(1e-9, 1 - 1e-9, 4001)
        vals = np.array([g(x) for x in grid])
        roots = []
        for i in np.nonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))[0]:
            roots.append(brentq(g, grid[i], grid[i + 1], xtol=1e-15))
        return roots
    raise DomainError(f"family {spec.family!r} is not a scalar map")


def _as_interior_scalar(x0: float) -> float:
    x0 = float(x0)
    if not 0.0 < x0 < 1.0:
        raise DomainError(f"initial state must lie in (0, 1), got {x0!r}")
    return x0


def iterate(
    spec: MapSpec,
    x0: State,
    transient: int = 0,
    samples: int = 1,
    a_schedule: Optional[Callable[[int], float]] = None,
) -> Orbit:
    """Apply the map ``transient`` times silently, then record ``samples`` states.

    ``a_schedule`` (linear family only) overrides ``a`` per step, e.g. to model a
    shrinking learning rate folded into a growing effective demand.
    """
    if transient < 0 or samples < 0:
        raise DomainError("transient and samples must be non-negative")
    p = spec.params
    if a_schedule is not None:
        if not isinstance(p, LinearTwoParams):
            raise DomainError("a_schedule is only supported for the linear2 family")
        return _iterate_scheduled(spec, _as_interior_scalar(x0), transient, samples, a_schedule)
    if spec.is_scalar:
        kind, a, b, deg = spec.kernel_args()
        out, sat = K.orbit(_as_interior_scalar(x0), kind, a, b, deg, transient, samples)
        return Orbit(spec, float(x0), transient, out, bool(sat))
    if isinstance(p, HeteroParams):
        x, y = (float(v) for v in x0)
        _as_interior_scalar(x)
        _as_interior_scalar(y)
        out, sat = K.hetero_orbit(x, y, p.a1, p.a2, p.b, p.eta1, p.eta2, transient, samples)
        return Orbit(spec, np.array([x, y]), transient, out, bool(sat))
    if isinstance(p, SimplexParams):
        start = _check_simplex_point(np.asarray(x0, dtype=float), p.m)
        out, sat = K.simplex_orbit(start, np.asarray(p.rates), transient, samples)
        return Orbit(spec, start.copy(), transient, out, bool(sat))
    raise DomainError(f"unsupported family {spec.family!r}")


def _iterate_scheduled(spec, x0, transient, samples, a_schedule):
    b = spec.params.b
    z = K.logit(x0)
    sat = False
    out = np.empty(samples)
    for n in range(transient + samples):
        z = K.zstep(z, K.LINEAR, float(a_schedule(n)), b, 1.0)
        if n >= transient:
            out[n - transient], s = K.to_x(z)
            sat = sat or s
    return Orbit(spec, x0, transient, out, bool(sat))


def detect_period(
    spec: MapSpec,
    x0: Optional[State] = None,
    max_period: int = DEFAULT_MAX_PERIOD,
    tol: float = DEFAULT_TOL,
    transient: int = DEFAULT_TRANSIENT,
    adaptive: bool = False,
    superstable_tol: float = SUPERSTABLE_TOL,
) -> PeriodResult:
    """Least period ``n <= max_period`` of the state reached after ``transient`` steps.

    ``x0`` defaults to the left critical point. With ``adaptive`` the transient
    stops early once the orbit closes within ``tol`` for some period.
    """
    if max_period < 1:
        raise DomainError("max_period must be >= 1")
    if not spec.is_scalar:
        return _detect_vector(spec, x0, max_period, tol, transient)
    if x0 is None:
        x0 = default_start(spec)
    kind, a, b, deg = spec.kernel_args()
    n, z, res = K.detect(_as_interior_scalar(x0), kind, a, b, deg, transient, max_period, tol, adaptive)
    if n == 0:
        return PeriodResult(None, (), float(res), False)
    zs = [z]
    for _ in range(n - 1):
        zs.append(K.zstep(zs[-1], kind, a, b, deg))
    pts = [K.to_x(w)[0] for w in zs]
    crit = critical_points(spec)
    ss = any(abs(u - c) < superstable_tol for u in pts for c in crit)
    return PeriodResult(int(n), tuple(pts), float(res), ss)


def _detect_vector(spec, x0, max_period, tol, transient):
    if x0 is None:
        raise DomainError(f"family {spec.family!r} needs an explicit initial state")
    orb = iterate(spec, x0, transient, max_period + 1)
    start = orb.samples[0]
    for n in range(1, max_period + 1):
        res = float(np.max(np.abs(orb.samples[n] - start)))
        if res < tol:
            return PeriodResult(n, tuple(np.array(s) for s in orb.samples[:n]), res, False)
    best = min(float(np.max(np.abs(orb.samples[n] - start))) for n in range(1, max_period + 1))
    return PeriodResult(None, (), best, False)


def lyapunov(
    spec: MapSpec,
    x0: Optional[float] = None,
    T: int = DEFAULT_LYAPUNOV_T,
    transient: int = DEFAULT_TRANSIENT,
) -> float:
    """``(1/T) sum log|f'(x_n)|`` over post-transient states; ``-inf`` if some f'(x_n) == 0."""
    if T < 1:
        raise DomainError("T must be >= 1")
    if x0 is None:
        x0 = default_start(spec)
    kind, a, b, deg = spec.kernel_args()
    return float(K.lyapunov(_as_interior_scalar(x0), kind, a, b, deg, transient, T))


def orbit_lyapunov(spec: MapSpec, points: Sequence[float]) -> float:
    """Mean of ``log|f'|`` over the points of a periodic orbit."""
    kind, a, b, deg = spec.kernel_args()
    d = [abs(K.deriv(float(x), kind, a, b, deg)) for x in points]
    if min(d) == 0.0:
        return -math.inf
    return float(np.mean(np.log(d)))


def symbolic_code(orbit: Orbit, cs: CriticalStructure) -> str:
    """Itinerary over {A, B, C}: A on [x_l, x_r], B left of x_l, C right of x_r."""
    x = np.asarray(orbit.samples)
    if x.ndim != 1:
        raise DomainError("symbolic coding needs a scalar orbit")
    letters = np.full(x.shape, "A")
    letters[x < cs.x_l] = "B"
    letters[x > cs.x_r] = "C"
    return "".join(letters.tolist())


@dataclass(frozen=True)
class CobwebTrace:
    pairs: np.ndarray  # rows (x_n, x_{n+1})
    potential: Optional[np.ndarray]  # Phi(x_n), linear family only

    def segments(self) -> np.ndarray:
        """Polyline vertices of the cobweb: (x0,x0) -> (x0,x1) -> (x1,x1) -> ..."""
        pts = [(self.pairs[0, 0], self.pairs[0, 0])]
        for u, v in self.pairs:
            pts.append((u, v))
            pts.append((v, v))
        return np.array(pts)


def cobweb_trace(spec: MapSpec, x0: float, steps: int) -> CobwebTrace:
    if steps < 1:
        raise DomainError("steps must be >= 1")
    kind, a, b, deg = spec.kernel_args()
    xs = np.empty(steps + 1)
    xs[0] = _as_interior_scalar(x0)
    xs[1:] = K.orbit(xs[0], kind, a, b, deg, 0, steps)[0]
    pairs = np.column_stack([xs[:-1], xs[1:]])
    phi = None
    if isinstance(spec.params, LinearTwoParams):
        phi = np.array([potential(float(x), spec.params) for x in xs[:-1]])
    return CobwebTrace(pairs, phi)
