"""Independent oracles shared by the test modules.

These deliberately avoid the package's own kernels: high-precision mpmath
evaluation of the maps, plain bisection, and brute-force loops.
"""

from __future__ import annotations

import mpmath as mp
import pytest

mp.mp.dps = 50


def mp_linear(x, a, b):
    """Two-path map in 50-digit arithmetic, straight from the rational form."""
    x, a, b = mp.mpf(x), mp.mpf(a), mp.mpf(b)
    return x / (x + (1 - x) * mp.e ** (a * (x - b)))


def mp_poly(x, a, b, p):
    x, a, b = mp.mpf(x), mp.mpf(a), mp.mpf(b)
    gap = (1 - b) * x**p - b * (1 - x) ** p
    return x / (x + (1 - x) * mp.e ** (a * gap))


def mp_iterate(f, x, n):
    for _ in range(n):
        x = f(x)
    return x


def bisect(g, lo, hi, iters=200):
    """Plain bisection on a sign change; no scipy involved."""
    glo = g(lo)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        if (gm < 0) == (glo < 0):
            lo, glo = mid, gm
        else:
            hi = mid
    return 0.5 * (lo + hi)


@pytest.fixture
def tmp_out(tmp_path):
    return tmp_path


# PASS/FAIL lines recorded by the acceptance suite, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
