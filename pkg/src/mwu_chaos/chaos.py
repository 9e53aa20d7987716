"""Chaos certificates and fine structure of the two-path map.

* period-3 witnesses ``f^3(x0) < x0 < f(x0)`` (period 3, hence all periods)
* a symbolic-word entropy estimate over the partition {B | A | C}
* the period-doubling cascade in ``b`` at fixed ``a`` and its scaling ratios
* the superstable level function and the Schwarzian derivative
* coexisting attractors from the two critical points
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from . import _kernels as K
from .dynamics import LinearTwoParams, MapSpec, critical_structure
from .errors import CascadeError, DomainError, PreconditionError
from .orbits import (
    DEFAULT_MAX_PERIOD,
    DEFAULT_TOL,
    DEFAULT_TRANSIENT,
    PeriodResult,
    critical_points,
    default_start,
    detect_period,
)

FEIGENBAUM_A = 20.0
MAX_CASCADE_LEVEL = 12
COEXIST_TOL = 1e-8


# -- period three ------------------------------------------------------------


@dataclass(frozen=True)
class Period3Witness:
    x0: float
    x1: float
    x3: float
    satisfied: bool


def _step_array(x: np.ndarray, spec: MapSpec) -> np.ndarray:
    kind, a, b, deg = spec.kernel_args()
    if kind == K.LINEAR:
        gap = x - b
    else:
        gap = (1.0 - b) * x**deg - b * (1.0 - x) ** deg
    z = np.log(x) - np.log1p(-x) - a * gap
    y = np.exp(-np.logaddexp(0.0, -z))
    return np.clip(y, K.X_MIN, K.X_MAX)


def find_period3_witness(spec: MapSpec, grid_size: int = 100_000) -> Optional[Period3Witness]:
    """Scan an open grid of x0 for ``f^3(x0) < x0 < f(x0)``; ``None`` if no grid point works.

    Among passing points the one with the widest margin is returned.
    """
    if not spec.is_scalar:
        raise DomainError("period-3 witnesses are defined for scalar families")
    x0 = (np.arange(grid_size) + 0.5) / grid_size
    x1 = _step_array(x0, spec)
    x3 = _step_array(_step_array(x1, spec), spec)
    margin = np.minimum(x0 - x3, x1 - x0)
    ok = margin > 0.0
    if not ok.any():
        return None
    i = int(np.argmax(np.where(ok, margin, -np.inf)))
    return Period3Witness(float(x0[i]), float(x1[i]), float(x3[i]), True)


def scan_period3(
    b: float, a_values: Iterable[float], grid_size: int = 20_000, degree_p: int = 1
) -> Optional[tuple[float, Period3Witness]]:
    """First ``a`` (in the given order) at which a period-3 witness exists."""
    from .dynamics import PolynomialParams

    for a in a_values:
        params = LinearTwoParams(float(a), b) if degree_p == 1 else PolynomialParams(float(a), b, degree_p)
        w = find_period3_witness(MapSpec.of(params), grid_size)
        if w is not None:
            return float(a), w
    return None


# -- entropy -----------------------------------------------------------------


@dataclass(frozen=True)
class EntropyEstimate:
    value: float
    word_lengths: np.ndarray
    counts: np.ndarray


def estimate_entropy(
    spec: MapSpec,
    word_length: int = 16,
    init_grid: int = 1000,
    transient: int = 1000,
    segment: int = 256,
) -> EntropyEstimate:
    """Growth rate of distinct {A,B,C} words seen on the attractor.

    Each of ``init_grid`` evenly spaced starts is iterated ``transient`` times,
    then ``segment`` symbols are recorded. All windows of length n are
    counted, and the estimate is the least-squares slope of ``log count(n)``
    over ``n`` in ``[word_length/2, word_length]``.
    """
    if not 2 <= word_length <= 39:
        raise DomainError("word_length must lie in 2..39")
    if segment < word_length:
        raise DomainError("segment must be at least word_length")
    crit = critical_points(spec)
    if len(crit) != 2:
        raise PreconditionError("symbolic partition needs two critical points (a > 4)")
    kind, a, b, deg = spec.kernel_args()
    starts = (np.arange(init_grid) + 0.5) / init_grid
    codes = K.itinerary_words(starts, kind, a, b, deg, crit[0], crit[1], transient, segment).astype(np.int64)
    words = np.zeros((init_grid, segment), dtype=np.int64)
    counts = []
    for n in range(1, word_length + 1):
        width = segment - n + 1
        words = words[:, :width] * 3 + codes[:, n - 1 : n - 1 + width]
        counts.append(len(np.unique(words)))
    ns = np.arange(1, word_length + 1)
    counts = np.array(counts)
    lo = word_length // 2
    slope = float(np.polyfit(ns[lo - 1 :], np.log(counts[lo - 1 :]), 1)[0])
    return EntropyEstimate(max(slope, 0.0), ns, counts)


# -- period-doubling cascade -------------------------------------------------


@dataclass(frozen=True)
class FeigenbaumEstimate:
    a_fixed: float
    direction: int
    n_max: int
    birth_points: tuple[float, ...]  # b_1, b_2, ...: period 2^n orbit appears
    superstable_points: tuple[float, ...]  # B_0, B_1, ...: critical point on the 2^n orbit
    distances: tuple[float, ...]  # d_1, d_2, ...: f^(2^(n-1))(c) - c at B_n
    delta_n: tuple[float, ...]  # delta_1 .. delta_n_max
    alpha_n: tuple[float, ...]  # alpha_1 .. alpha_n_max
    residuals: tuple[float, ...] = field(default=())  # |f^(2^n)(c) - c| at B_n

    @property
    def delta(self) -> float:
        return self.delta_n[-1]

    @property
    def alpha(self) -> float:
        return self.alpha_n[-1]


def _superstable_b(a: float, c: float, period: int, guess: float, lo: float, hi: float) -> float:
    """Newton in b on ``f^period(c) - c`` starting from ``guess``, kept inside (lo, hi)."""
    b = guess
    for _ in range(100):
        y, _dx, db = K.orbit_and_tangent(c, a, b, period)
        step = (y - c) / db
        b_new = b - step
        if not lo < b_new < hi:
            b_new = 0.5 * (b + (lo if b_new <= lo else hi))
        if abs(b_new - b) <= 4e-16 * abs(b):
            return b_new
        b = b_new
    return b


def _cycle_multiplier(a: float, b: float, period: int, x: float) -> tuple[float, float]:
    """Locate the period-``period`` cycle near ``x`` by Newton; return (point, multiplier)."""
    for _ in range(60):
        y, dx, _db = K.orbit_and_tangent(x, a, b, period)
        s = (y - x) / (dx - 1.0)
        x = min(max(x - s, K.X_MIN), K.X_MAX)
        if abs(s) < 1e-15:
            break
    _y, dx, _db = K.orbit_and_tangent(x, a, b, period)
    return x, dx


def feigenbaum_cascade(
    a_fixed: float = FEIGENBAUM_A,
    b_start: Optional[float] = None,
    direction: int = 1,
    n_max: int = MAX_CASCADE_LEVEL,
) -> FeigenbaumEstimate:
    """Follow the doubling cascade in ``b`` at fixed ``a``.

    ``direction=+1`` starts where the left critical point is a superstable
    fixed point (``b = x_l``) and increases ``b``; ``-1`` mirrors this from
    ``x_r``. Levels are resolved up to ``n_max + 2`` so that ``delta_n`` and
    ``alpha_n`` exist for every ``n <= n_max``.
    """
    if direction not in (1, -1):
        raise DomainError("direction must be +1 or -1")
    if not 1 <= n_max <= MAX_CASCADE_LEVEL:
        raise DomainError(f"n_max must lie in 1..{MAX_CASCADE_LEVEL}")
    if a_fixed <= 8.0:
        raise PreconditionError("a_fixed must exceed 8 for the fixed point to lose stability")
    cs = critical_structure(LinearTwoParams(a_fixed, 0.5))
    c = cs.x_l if direction == 1 else cs.x_r
    top = n_max + 2
    # first doubling where a b (1-b) = 2, on the side of the chosen critical point
    root = 0.5 * math.sqrt(1.0 - 8.0 / a_fixed)
    b1 = 0.5 - direction * root
    B = [c if b_start is None else float(b_start)]
    lo, hi = (B[0], 0.5) if direction == 1 else (0.5, B[0])
    guess = b1 + 0.3 * (b1 - B[0])
    for n in range(1, top + 1):
        bn = _superstable_b(a_fixed, c, 2**n, guess, lo, hi)
        if direction * (bn - B[-1]) <= 0 or (n >= 3 and not 2.0 < (B[-1] - B[-2]) / (bn - B[-1]) < 8.0):
            raise CascadeError("superstable parameter left the cascade", n - 1)
        B.append(bn)
        if direction == 1:
            lo = bn
        else:
            hi = bn
        guess = bn + (bn - B[-2]) / (4.0 if n == 1 else 4.669)
    births = [b1]
    for n in range(2, top + 1):
        period = 2 ** (n - 1)

        def h(b: float) -> float:
            return _cycle_multiplier(a_fixed, b, period, c)[1] + 1.0

        lo_b, hi_b = sorted((B[n - 1], B[n]))
        try:
            births.append(brentq(h, lo_b, hi_b, xtol=1e-16, rtol=1e-15, maxiter=200))
        except ValueError as exc:
            raise CascadeError(f"no multiplier crossing for the period-{period} orbit", n - 1) from exc
    d = []
    res = []
    for n in range(1, top + 1):
        d.append(K.advance(c, K.LINEAR, a_fixed, B[n], 1.0, 2 ** (n - 1)) - c)
        res.append(abs(K.advance(c, K.LINEAR, a_fixed, B[n], 1.0, 2**n) - c))
    # births[k] is b_{k+1}; d[k] is d_{k+1}
    delta = tuple((births[n] - births[n - 1]) / (births[n + 1] - births[n]) for n in range(1, n_max + 1))
    alpha = tuple(d[n - 1] / d[n] for n in range(1, n_max + 1))
    return FeigenbaumEstimate(
        a_fixed=a_fixed,
        direction=direction,
        n_max=n_max,
        birth_points=tuple(births),
        superstable_points=tuple(B),
        distances=tuple(d),
        delta_n=delta,
        alpha_n=alpha,
        residuals=tuple(res),
    )


def find_cascade_a(
    candidates: Sequence[float] = (20.0, 16.0, 25.0, 30.0, 12.0, 40.0), n_max: int = MAX_CASCADE_LEVEL
) -> FeigenbaumEstimate:
    """First candidate ``a`` whose cascade resolves to ``n_max``."""
    last: Optional[CascadeError] = None
    for a in candidates:
        try:
            return feigenbaum_cascade(a, n_max=n_max)
        except CascadeError as exc:
            last = exc
    raise CascadeError("no candidate a produced a complete cascade", last.last_level if last else 0)


# -- superstable skeleton ----------------------------------------------------


def superstable_level(a: float, b: float) -> float:
    """``S(a,b) = 1/(ab) + 1/(b + ab exp(1-ab))``; ``S ~ p`` on period-p superstable curves."""
    ab = a * b
    return 1.0 / ab + 1.0 / (b + ab * math.exp(1.0 - ab))


def both_critical_curve(a: float) -> float:
    """``b = (2 ln(a-1) + 1)/a``: both critical points on the superstable orbit."""
    if a <= 1.0:
        raise DomainError("a must exceed 1")
    return (2.0 * math.log(a - 1.0) + 1.0) / a


def level_curve_a(b: float, level: float, a_lo: float = 4.0, a_hi: float = 500.0) -> float:
    """``a`` with ``S(a, b) = level`` (largest-``a`` branch found by bracketing from above)."""
    g = lambda a: superstable_level(a, b) - level
    grid = np.linspace(a_hi, a_lo, 2000)
    vals = np.array([g(a) for a in grid])
    idx = np.nonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))[0]
    if len(idx) == 0:
        raise PreconditionError(f"S(a, {b}) = {level} has no root for a in [{a_lo}, {a_hi}]")
    i = idx[0]
    return float(brentq(g, grid[i + 1], grid[i], xtol=1e-14))


def refine_superstable_a(b: float, period: int, a_guess: float, span: float = 2.0) -> float:
    """``a`` near ``a_guess`` where the left critical point is on a period-``period`` orbit."""

    def g(a: float) -> float:
        c = 0.5 * (1.0 - math.sqrt(1.0 - 4.0 / a))
        return K.advance(c, K.LINEAR, a, b, 1.0, period) - c

    grid = np.linspace(max(a_guess - span, 4.0 + 1e-9), a_guess + span, 801)
    vals = np.array([g(a) for a in grid])
    idx = np.nonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))[0]
    if len(idx) == 0:
        raise PreconditionError(f"no superstable period-{period} parameter near a={a_guess}")
    i = idx[np.argmin(np.abs(grid[idx] - a_guess))]
    return float(brentq(g, grid[i], grid[i + 1], xtol=1e-15))


# -- Schwarzian --------------------------------------------------------------


def map_derivatives(p: LinearTwoParams, x: float) -> tuple[float, float, float]:
    """Closed-form ``f', f'', f'''`` using ``f = s(u)``, ``u = logit(x) - a(x-b)``."""
    if not 0.0 < x < 1.0:
        raise DomainError(f"x must lie in (0, 1), got {x!r}")
    s = K.expit(K.logit(x) - p.a * (x - p.b))
    u1 = 1.0 / (x * (1.0 - x)) - p.a
    u2 = -1.0 / x**2 + 1.0 / (1.0 - x) ** 2
    u3 = 2.0 / x**3 + 2.0 / (1.0 - x) ** 3
    g = s * (1.0 - s)
    f1 = g * u1
    f2 = g * ((1.0 - 2.0 * s) * u1**2 + u2)
    f3 = g * ((1.0 - 6.0 * s + 6.0 * s * s) * u1**3 + 3.0 * (1.0 - 2.0 * s) * u1 * u2 + u3)
    return f1, f2, f3


def schwarzian(p: LinearTwoParams, x: float) -> float:
    """``Sf = f'''/f' - 1.5 (f''/f')^2``; undefined at critical points."""
    if not 0.0 < x < 1.0:
        raise DomainError(f"x must lie in (0, 1), got {x!r}")
    s = K.expit(K.logit(x) - p.a * (x - p.b))
    u1 = 1.0 / (x * (1.0 - x)) - p.a
    # f' = s(1-s) u1, and s(1-s) can underflow far from any critical point,
    # so only the factor that actually vanishes at x_l, x_r is tested
    if abs(x * (1.0 - x) * u1) < 1e-12:
        raise PreconditionError(f"x={x} is a critical point: Schwarzian undefined")
    u2 = -1.0 / x**2 + 1.0 / (1.0 - x) ** 2
    u3 = 2.0 / x**3 + 2.0 / (1.0 - x) ** 3
    # f''/f' and f'''/f' with the common factor s(1-s) cancelled
    r2 = (1.0 - 2.0 * s) * u1 + u2 / u1
    r3 = (1.0 - 6.0 * s + 6.0 * s * s) * u1**2 + 3.0 * (1.0 - 2.0 * s) * u2 + u3 / u1
    return r3 - 1.5 * r2 * r2


# -- coexistence -------------------------------------------------------------


@dataclass(frozen=True)
class Coexistence:
    left: PeriodResult
    right: PeriodResult
    coexist: bool


def _same_attractor(u: PeriodResult, v: PeriodResult, tol: float) -> bool:
    if u.period != v.period:
        return False
    if u.period is None:
        return True  # two aperiodic results cannot be told apart here
    return all(min(abs(x - y) for y in v.orbit_points) < tol for x in u.orbit_points)


def coexisting_attractors(
    p: LinearTwoParams,
    max_period: int = DEFAULT_MAX_PERIOD,
    tol: float = DEFAULT_TOL,
    transient: int = DEFAULT_TRANSIENT,
    adaptive: bool = False,
) -> Coexistence:
    """Attractors reached from ``x_l`` and from ``x_r``."""
    spec = MapSpec.of(p)
    if p.a <= 4.0:
        raise PreconditionError("coexistence analysis needs a > 4")
    kw = dict(max_period=max_period, tol=tol, transient=transient, adaptive=adaptive)
    left = detect_period(spec, default_start(spec, "x_l"), **kw)
    right = detect_period(spec, default_start(spec, "x_r"), **kw)
    return Coexistence(left, right, not _same_attractor(left, right, COEXIST_TOL))


def coexistence_window(
    b: float, a_values: Sequence[float], min_run: int = 3, **kw
) -> Optional[tuple[float, float]]:
    """Longest run of consecutive ``a`` values (at least ``min_run``) showing coexistence.

    Values ``a <= 4`` have a single (global) attractor and count as no coexistence.
    """
    flags = [a > 4.0 and coexisting_attractors(LinearTwoParams(float(a), b), **kw).coexist for a in a_values]
    best: Optional[tuple[int, int]] = None
    start = None
    for i, f in enumerate(flags + [False]):
        if f and start is None:
            start = i
        elif not f and start is not None:
            if i - start >= min_run and (best is None or i - start > best[1] - best[0]):
                best = (start, i)
            start = None
    if best is None:
        return None
    return float(a_values[best[0]]), float(a_values[best[1] - 1])
