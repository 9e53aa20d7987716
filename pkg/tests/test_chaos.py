from __future__ import annotations

import mpmath as mp
import numpy as np
import pytest

from conftest import mp_linear, mp_poly
from mwu_chaos.chaos import (
    coexistence_window,
    coexisting_attractors,
    both_critical_curve,
    estimate_entropy,
    feigenbaum_cascade,
    find_period3_witness,
    level_curve_a,
    map_derivatives,
    refine_superstable_a,
    scan_period3,
    schwarzian,
    superstable_level,
)
from mwu_chaos.dynamics import LinearTwoParams, MapSpec, PolynomialParams, critical_structure
from mwu_chaos.errors import CascadeError, DomainError, PreconditionError
from mwu_chaos.metrics import metrics_report
from mwu_chaos.orbits import default_start, detect_period, iterate


def linear(a, b):
    return MapSpec.of(LinearTwoParams(a, b))


class TestPeriodThree:
    def test_none_in_convergent_regime(self):
        assert find_period3_witness(linear(8.0, 0.5), 100_000) is None

    def test_witness_large_a(self):
        w = find_period3_witness(linear(40.0, 0.7))
        assert w is not None and w.satisfied
        assert w.x3 < w.x0 < w.x1

    @pytest.mark.parametrize("a,b", [(40.0, 0.7), (30.0, 0.7), (60.0, 0.3)])
    def test_witness_in_high_precision(self, a, b):
        w = find_period3_witness(linear(a, b))
        f = lambda u: mp_linear(u, a, mp.mpf(b))
        x1 = f(mp.mpf(w.x0))
        x3 = f(f(x1))
        assert x3 < w.x0 < x1

    def test_scan_finds_first(self):
        hit = scan_period3(0.7, np.arange(5.0, 101.0, 1.0))
        assert hit is not None and hit[0] <= 100

    def test_polynomial_witness(self):
        hit = scan_period3(0.3, np.arange(10.0, 201.0, 5.0), degree_p=2)
        assert hit is not None
        a, w = hit
        f = lambda u: mp_poly(u, a, mp.mpf("0.3"), 2)
        assert f(f(f(mp.mpf(w.x0)))) < w.x0 < f(mp.mpf(w.x0))

    def test_vector_family_rejected(self):
        from mwu_chaos.dynamics import SimplexParams

        with pytest.raises(DomainError):
            find_period3_witness(MapSpec.of(SimplexParams((1.0, 2.0))))


class TestEntropy:
    def test_converged_regime(self):
        assert estimate_entropy(linear(6.0, 0.5)).value < 0.01

    def test_period_two(self):
        assert estimate_entropy(linear(10.0, 0.5)).value < 0.01

    def test_chaotic_cell_positive(self):
        spec = linear(40.0, 0.7)
        assert find_period3_witness(spec) is not None
        assert estimate_entropy(spec).value > 0.05

    @pytest.mark.parametrize("a,b", [(12.0, 0.7), (20.0, 0.5), (9.0, 0.4), (15.0, 0.2)])
    def test_power_of_two_periods(self, a, b):
        spec = linear(a, b)
        r = detect_period(spec)
        assert r.period in (1, 2, 4, 8)
        assert estimate_entropy(spec).value < 0.01

    def test_counts_monotone(self):
        est = estimate_entropy(linear(40.0, 0.7), word_length=12)
        assert np.all(np.diff(est.counts) >= 0)
        assert est.counts[0] <= 3

    def test_needs_partition(self):
        with pytest.raises(PreconditionError):
            estimate_entropy(linear(3.0, 0.5))

    def test_word_length_range(self):
        with pytest.raises(ValueError):
            estimate_entropy(linear(10.0, 0.5), word_length=1)


@pytest.fixture(scope="module")
def cascade():
    return feigenbaum_cascade(20.0, direction=1, n_max=12)


class TestFeigenbaum:

    def test_ratios(self, cascade):
        assert abs(cascade.delta - 4.669) <= 0.01
        assert abs(cascade.alpha + 2.5029) <= 0.01

    def test_birth_points_monotone(self, cascade):
        assert np.all(np.diff(cascade.birth_points) > 0)
        assert np.all(np.diff(cascade.superstable_points) > 0)

    def test_births_interleave_superstable(self, cascade):
        # B_{n-1} < b_n < B_n
        for n in range(1, len(cascade.birth_points) + 1):
            assert cascade.superstable_points[n - 1] < cascade.birth_points[n - 1] < cascade.superstable_points[n]

    def test_superstable_residuals(self, cascade):
        assert max(cascade.residuals) < 1e-10

    def test_alternating_distances(self, cascade):
        signs = np.sign(cascade.distances)
        assert np.all(signs[1:] == -signs[:-1])

    def test_gap_shrink(self, cascade):
        gaps = np.diff(cascade.birth_points)
        ratios = gaps[:-1] / gaps[1:]
        assert np.all(np.abs(ratios[3:] - 4.669) < 0.1)

    def test_other_direction(self):
        est = feigenbaum_cascade(20.0, direction=-1, n_max=12)
        assert abs(est.delta - 4.669) <= 0.01
        assert abs(est.alpha + 2.5029) <= 0.01

    def test_period_detection_agrees_with_births(self, cascade):
        # just past b_n the detected period is 2^n
        for n in range(1, 4):
            b = cascade.birth_points[n - 1] + 0.3 * (cascade.superstable_points[n] - cascade.birth_points[n - 1])
            r = detect_period(linear(20.0, b), max_period=16, transient=200_000)
            assert r.period == 2**n

    def test_failure_reports_level(self):
        with pytest.raises(CascadeError, match="last resolved level n=") as info:
            feigenbaum_cascade(10.0)
        assert info.value.last_level >= 0

    def test_validation(self):
        with pytest.raises(ValueError):
            feigenbaum_cascade(20.0, direction=0)
        with pytest.raises(ValueError):
            feigenbaum_cascade(20.0, n_max=13)
        with pytest.raises(PreconditionError):
            feigenbaum_cascade(7.0)


class TestSuperstableSkeleton:
    @pytest.mark.parametrize("b", [0.3, 0.5, 0.8])
    def test_large_a_limit(self, b):
        # both correction terms vanish except 1/b
        assert superstable_level(1e4, b) == pytest.approx(1.0 / b, rel=1e-3)

    @pytest.mark.parametrize("a", [20.0, 50.0, 100.0])
    def test_both_critical_curve(self, a):
        b = both_critical_curve(a)
        assert superstable_level(a, b) == pytest.approx(1.0 / b, rel=0.05)

    @pytest.mark.parametrize("b", [0.2, 0.3])
    def test_level_three_is_period_three(self, b):
        a = level_curve_a(b, 3.0)
        assert superstable_level(a, b) == pytest.approx(3.0, abs=1e-10)
        assert detect_period(linear(a, b)).period == 3
        a_ss = refine_superstable_a(b, 3, a)
        assert abs(a_ss - a) < 1.0
        r = detect_period(linear(a_ss, b))
        assert r.period == 3 and r.superstable

    def test_no_root(self):
        with pytest.raises(PreconditionError):
            level_curve_a(0.5, 100.0)


def symmetric_sg(a, x):
    # alternative closed form of the Schwarzian at b = 1/2
    q = x * (x - 1)
    return -a * (-12 + 6 * a + 4 * a * a * q + a**3 * q * q) / (2 * (1 + a * q) ** 2)


class TestSchwarzian:
    def test_symmetric_center(self):
        assert schwarzian(LinearTwoParams(8.0, 0.5), 0.5) == pytest.approx(-16.0)

    @pytest.mark.parametrize("a", [4.5, 8.0, 20.0])
    def test_matches_independent_formula(self, a):
        p = LinearTwoParams(a, 0.5)
        for x in np.linspace(0.02, 0.98, 49):
            if min(abs(x - c) for c in critical_structure(p).__dict__.values()) < 1e-3:
                continue
            assert schwarzian(p, float(x)) == pytest.approx(symmetric_sg(a, float(x)), rel=1e-9)

    @pytest.mark.parametrize("a,b,x", [(8.0, 0.5, 0.3), (20.0, 0.7, 0.5), (50.0, 0.3, 0.9), (4.5, 0.5, 0.1)])
    def test_derivatives_vs_mpmath(self, a, b, x):
        f = lambda u: mp_linear(u, a, mp.mpf(b))
        d = map_derivatives(LinearTwoParams(a, b), x)
        for k in range(3):
            assert d[k] == pytest.approx(float(mp.diff(f, x, k + 1)), rel=1e-9, abs=1e-14)

    def test_finite_difference_richardson(self):
        p = LinearTwoParams(8.0, 0.5)
        f = lambda u: float(mp_linear(u, 8, mp.mpf("0.5")))

        def derivs(x, h):
            f1 = (f(x + h) - f(x - h)) / (2 * h)
            f2 = (f(x + h) - 2 * f(x) + f(x - h)) / h**2
            f3 = (f(x + 2 * h) - 2 * f(x + h) + 2 * f(x - h) - f(x - 2 * h)) / (2 * h**3)
            return f1, f2, f3

        x, h = 0.5, 1e-4
        coarse, fine = derivs(x, h), derivs(x, h / 2)
        rich = [(4 * b - a) / 3 for a, b in zip(coarse, fine)]
        fd = rich[2] / rich[0] - 1.5 * (rich[1] / rich[0]) ** 2
        assert schwarzian(p, x) < 0
        assert schwarzian(p, x) == pytest.approx(fd, rel=1e-4)

    def test_negative_on_grid(self):
        xs = (np.arange(10_000) + 0.5) / 10_000
        for a in (4.5, 8.0, 20.0, 50.0):
            for b in (0.3, 0.5, 0.7):
                p = LinearTwoParams(a, b)
                cs = critical_structure(p)
                for x in xs[::7]:
                    if min(abs(x - cs.x_l), abs(x - cs.x_r)) < 1e-6:
                        continue
                    assert schwarzian(p, float(x)) < 0

    def test_undefined_at_critical_point(self):
        p = LinearTwoParams(8.0, 0.5)
        with pytest.raises(PreconditionError, match="critical point"):
            schwarzian(p, critical_structure(p).x_l)


class TestCoexistence:
    def test_none_at_symmetric(self):
        c = coexisting_attractors(LinearTwoParams(8.5, 0.5))
        assert not c.coexist

    def test_window_in_asymmetric_band(self):
        w = coexistence_window(0.61, np.linspace(4.0, 54.0, 201))
        assert w is not None
        a = 0.5 * (w[0] + w[1])
        c = coexisting_attractors(LinearTwoParams(a, 0.61))
        assert c.coexist
        p = LinearTwoParams(a, 0.61)
        spec = MapSpec.of(p)
        left = metrics_report(iterate(spec, default_start(spec, "x_l"), 20_000, 100_000), p)
        right = metrics_report(iterate(spec, default_start(spec, "x_r"), 20_000, 100_000), p)
        assert abs(left.variance - right.variance) > 1e-3
        assert abs(left.norm_social_cost - right.norm_social_cost) > 1e-3

    def test_needs_critical_points(self):
        with pytest.raises(PreconditionError):
            coexisting_attractors(LinearTwoParams(3.0, 0.5))
