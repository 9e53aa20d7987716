"""Compiled inner loops shared by the map, orbit and sweep modules.

Every scalar map is evaluated in logit space:
``logit(x') = logit(x) - a * P(x)`` with ``P(x) = x - b`` (linear family)
or ``P(x) = (1-b) x^p - b (1-x)^p`` (polynomial family). Results that round
to 0 or 1 are pushed back to the nearest interior double and flagged.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

LINEAR = 0
POLYNOMIAL = 1

X_MIN = 5e-324  # smallest positive subnormal
X_MAX = 1.0 - 2.0**-53  # largest double below 1


@njit(cache=True, nogil=True)
def logit(x):
    return math.log(x) - math.log1p(-x)


@njit(cache=True, nogil=True)
def expit(z):
    if z >= 0.0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


@njit(cache=True, nogil=True)
def log_expit(z):
    """log(expit(z)) without underflow."""
    if z >= 0.0:
        return -math.log1p(math.exp(-z))
    return z - math.log1p(math.exp(z))


@njit(cache=True, nogil=True)
def drive(x, kind, b, p):
    """Cost gap P(x) of the scalar family."""
    if kind == LINEAR:
        return x - b
    return (1.0 - b) * x**p - b * (1.0 - x) ** p


@njit(cache=True, nogil=True)
def drive_z(z, kind, b, p):
    """P at x = expit(z); 1-x is taken as expit(-z) so it keeps its digits near x = 1."""
    x = expit(z)
    if kind == LINEAR:
        return x - b
    return (1.0 - b) * x**p - b * expit(-z) ** p


@njit(cache=True, nogil=True)
def drive_slope(x, kind, b, p):
    if kind == LINEAR:
        return 1.0
    return p * ((1.0 - b) * x ** (p - 1) + b * (1.0 - x) ** (p - 1))


@njit(cache=True, nogil=True)
def zstep(z, kind, a, b, p):
    """The map in logit coordinates: z' = z - a P(expit(z))."""
    return z - a * drive_z(z, kind, b, p)


@njit(cache=True, nogil=True)
def to_x(z):
    """Interior double nearest expit(z); flags when rounding would hit 0 or 1."""
    y = expit(z)
    if y <= 0.0:
        return X_MIN, True
    if y >= 1.0:
        return X_MAX, True
    return y, False


@njit(cache=True, nogil=True)
def step(x, kind, a, b, p):
    """One map application. Returns (x', saturated)."""
    return to_x(zstep(logit(x), kind, a, b, p))


@njit(cache=True, nogil=True)
def deriv(x, kind, a, b, p):
    """f'(x) via f' = f(1-f) * (1/(x(1-x)) - a P'(x))."""
    if x <= 0.0:
        return math.exp(-a * drive(0.0, kind, b, p))
    if x >= 1.0:
        return math.exp(a * drive(1.0, kind, b, p))
    y = expit(logit(x) - a * drive(x, kind, b, p))
    q = x * (1.0 - x)
    return y * (1.0 - y) * (1.0 - a * q * drive_slope(x, kind, b, p)) / q


@njit(cache=True, nogil=True)
def log_abs_deriv_z(z, kind, a, b, p):
    """log|f'| at x = expit(z), evaluated from logs so it survives extreme z."""
    lx = log_expit(z)
    lxc = log_expit(-z)
    x = math.exp(lx)
    xc = math.exp(lxc)
    if kind == LINEAR:
        slope = 1.0
    else:
        slope = p * ((1.0 - b) * x ** (p - 1) + b * xc ** (p - 1))
    g = abs(1.0 - a * x * xc * slope)
    if g == 0.0:
        return -np.inf
    w = zstep(z, kind, a, b, p)
    return log_expit(w) + log_expit(-w) - lx - lxc + math.log(g)


@njit(cache=True, nogil=True)
def orbit(x0, kind, a, b, p, transient, samples):
    z = logit(x0)
    sat = False
    for _ in range(transient):
        z = zstep(z, kind, a, b, p)
    out = np.empty(samples)
    for i in range(samples):
        z = zstep(z, kind, a, b, p)
        out[i], s = to_x(z)
        sat = sat or s
    return out, sat


@njit(cache=True, nogil=True)
def advance_z(z, kind, a, b, p, n):
    for _ in range(n):
        z = zstep(z, kind, a, b, p)
    return z


@njit(cache=True, nogil=True)
def advance(x0, kind, a, b, p, n):
    return to_x(advance_z(logit(x0), kind, a, b, p, n))[0]


# A cycle must also close in logit coordinates. Near x = 0 or 1 consecutive
# states can differ by less than any x-tolerance while the orbit is still
# moving (the logit changes by about a*b per step there); a converged cycle
# closes in logit to rounding level.
LOGIT_GUARD = 1e-6


@njit(cache=True, nogil=True)
def closure(z, kind, a, b, p, max_period, tol):
    """Least n <= max_period such that every point x_k of the candidate n-cycle
    satisfies |f^n(x_k) - x_k| < tol (and the logit guard). Returns (n or 0, residual).

    Checking all n points, not only the first, keeps a pass near the boundary
    from certifying a cycle whose other points do not close.
    """
    m = 2 * max_period + 1
    zs = np.empty(m)
    xs = np.empty(m)
    w = z
    for k in range(m):
        zs[k] = w
        xs[k] = expit(w)
        w = zstep(w, kind, a, b, p)
    guard = LOGIT_GUARD * tol / 1e-10 if tol < 1e-10 else LOGIT_GUARD
    best = np.inf
    for n in range(1, max_period + 1):
        r = 0.0
        g = 0.0
        for k in range(n):
            d = abs(xs[k + n] - xs[k])
            if d > r:
                r = d
            e = abs(zs[k + n] - zs[k])
            if e > g:
                g = e
        if r < tol and g < guard:
            return n, r
        if r < best:
            best = r
    return 0, best


# The adaptive exit demands closure this much tighter than ``tol``. Near a
# period doubling the approach to an n-cycle alternates (multiplier near -1),
# so f^(2n) closes long before f^n; stopping at the first closure would then
# report 2n. With the margin, f^n is within tol by the time anything closes.
ADAPTIVE_MARGIN = 1e-3


@njit(cache=True, nogil=True)
def settle(z0, kind, a, b, p, transient, max_period, tol, adaptive):
    """Run the transient from logit state ``z0``; with ``adaptive`` stop once some period closes."""
    z = z0
    if not adaptive:
        return advance_z(z, kind, a, b, p, transient)
    done = 0
    block = 256
    while done < transient:
        n = min(block, transient - done)
        z = advance_z(z, kind, a, b, p, n)
        done += n
        if done >= transient:
            break
        if closure(z, kind, a, b, p, max_period, tol * ADAPTIVE_MARGIN)[0] > 0:
            break
    return z


@njit(cache=True, nogil=True)
def detect(x0, kind, a, b, p, transient, max_period, tol, adaptive):
    """Period after the transient (0 if none up to max_period).

    Returns (period, logit of the start point, residual at the accepted
    period or the smallest residual seen).
    """
    z = settle(logit(x0), kind, a, b, p, transient, max_period, tol, adaptive)
    n, r = closure(z, kind, a, b, p, max_period, tol)
    return n, z, r


@njit(cache=True, nogil=True)
def lyapunov_from_z(z, kind, a, b, p, T):
    acc = 0.0
    for _ in range(T):
        acc += log_abs_deriv_z(z, kind, a, b, p)
        if acc == -np.inf:
            return -np.inf
        z = zstep(z, kind, a, b, p)
    return acc / T


@njit(cache=True, nogil=True)
def lyapunov(x0, kind, a, b, p, transient, T):
    return lyapunov_from_z(advance_z(logit(x0), kind, a, b, p, transient), kind, a, b, p, T)


@njit(cache=True, nogil=True)
def orbit_and_tangent(x0, a, b, n):
    """Linear family: f^n(x0), d f^n/dx0 and d f^n/db with x0 held fixed.

    Tangents are carried in logit coordinates: z' = z - a(x - b).
    """
    x = x0
    dz_db = 0.0
    dz_dx0 = 1.0 / (x0 * (1.0 - x0))
    for _ in range(n):
        q = x * (1.0 - x)
        dx_db = q * dz_db
        dx_dx0 = q * dz_dx0
        z = logit(x) - a * (x - b)
        dz_db = dz_db - a * (dx_db - 1.0)
        dz_dx0 = dz_dx0 - a * dx_dx0
        x = expit(z)
    q = x * (1.0 - x)
    return x, q * dz_dx0, q * dz_db


@njit(cache=True, nogil=True)
def hetero_orbit(x0, y0, a1, a2, b, eta1, eta2, transient, samples):
    # state carried as logits so that a1*z_y - a2*z_x is conserved to rounding
    zx = logit(x0)
    zy = logit(y0)
    x = x0
    y = y0
    sat = False
    out = np.empty((samples, 2))
    for i in range(transient + samples):
        d = eta1 * x + eta2 * y - b
        zx = zx - a1 * d
        zy = zy - a2 * d
        x = expit(zx)
        y = expit(zy)
        if x <= 0.0 or x >= 1.0 or y <= 0.0 or y >= 1.0:
            sat = True
            x = min(max(x, X_MIN), X_MAX)
            y = min(max(y, X_MIN), X_MAX)
        if i >= transient:
            out[i - transient, 0] = x
            out[i - transient, 1] = y
    return out, sat


@njit(cache=True, nogil=True)
def simplex_step(x, rates):
    m = x.shape[0]
    logs = np.empty(m)
    top = -np.inf
    for i in range(m):
        logs[i] = math.log(x[i]) - rates[i] * x[i]
        if logs[i] > top:
            top = logs[i]
    total = 0.0
    for i in range(m):
        total += math.exp(logs[i] - top)
    lz = top + math.log(total)
    y = np.empty(m)
    sat = False
    for i in range(m):
        y[i] = math.exp(logs[i] - lz)
        if y[i] <= 0.0:
            y[i] = X_MIN
            sat = True
    return y, sat


@njit(cache=True, nogil=True)
def simplex_orbit(x0, rates, transient, samples):
    x = x0.copy()
    sat = False
    out = np.empty((samples, x0.shape[0]))
    for i in range(transient + samples):
        x, s = simplex_step(x, rates)
        sat = sat or s
        if i >= transient:
            out[i - transient, :] = x
    return out, sat


@njit(cache=True, nogil=True)
def itinerary_words(x0s, kind, a, b, p, x_l, x_r, transient, length):
    """Symbol codes 0=A, 1=B, 2=C for post-transient segments, one row per start."""
    out = np.empty((x0s.shape[0], length), dtype=np.int8)
    zl = logit(x_l)
    zr = logit(x_r)
    for k in range(x0s.shape[0]):
        z = advance_z(logit(x0s[k]), kind, a, b, p, transient)
        for i in range(length):
            z = zstep(z, kind, a, b, p)
            if z < zl:
                out[k, i] = 1
            elif z > zr:
                out[k, i] = 2
            else:
                out[k, i] = 0
    return out


INIT_XL = 0
INIT_XR = 1
INIT_FIXED = 2


@njit(cache=True, nogil=True)
def start_point(a, rule, x_fixed):
    if rule == INIT_FIXED:
        return x_fixed
    if a <= 4.0:
        return 0.5
    xl = 0.5 * (1.0 - math.sqrt(1.0 - 4.0 / a))
    if rule == INIT_XL:
        return xl
    return 1.0 - xl


@njit(cache=True, nogil=True)
def grid_row(a_vals, b, rule, x_fixed, transient, max_period, tol, adaptive, T, codes, lyap):
    """One b-row of a 2D sweep over the linear family; fills ``codes`` and/or ``lyap``.

    Either output may be a zero-length array to skip that diagnostic.
    """
    for j in range(a_vals.shape[0]):
        a = a_vals[j]
        z = settle(logit(start_point(a, rule, x_fixed)), LINEAR, a, b, 1.0, transient, max_period, tol, adaptive)
        if codes.shape[0] > 0:
            codes[j] = closure(z, LINEAR, a, b, 1.0, max_period, tol)[0]
        if lyap.shape[0] > 0:
            lyap[j] = lyapunov_from_z(z, LINEAR, a, b, 1.0, T)
