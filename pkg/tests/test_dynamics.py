from __future__ import annotations

import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import mp_linear, mp_poly
from mwu_chaos.dynamics import (
    GameEconomics,
    HeteroParams,
    LinearTwoParams,
    MapSpec,
    PolynomialParams,
    SimplexParams,
    atomic_costs,
    critical_structure,
    derivative_linear2,
    embed_segment,
    hetero_invariant,
    mwu_update,
    normalize_economics,
    polynomial_equilibrium,
    reduce_atomic_m,
    reduce_atomic_two,
    segment_conjugate,
    segment_coordinate,
    simplex_equilibrium,
    step_atomic,
    step_hetero,
    step_linear2,
    step_linear2_closed,
    step_linear2_direct,
    step_polynomial,
    step_simplex,
)
from mwu_chaos.errors import DomainError, PreconditionError

EULER_EPS = 1.0 - math.exp(-1.0)

unit = st.floats(min_value=1e-6, max_value=1 - 1e-6)
demand = st.floats(min_value=0.1, max_value=80.0)


class TestParameterValidation:
    def test_frozen(self):
        p = LinearTwoParams(10.0, 0.5)
        with pytest.raises(AttributeError):
            p.a = 3.0

    @pytest.mark.parametrize("a,b", [(0.0, 0.5), (-1.0, 0.5), (10.0, 0.0), (10.0, 1.0), (math.inf, 0.5)])
    def test_linear_rejects(self, a, b):
        with pytest.raises(ValueError):
            LinearTwoParams(a, b)

    def test_economics_rejects_eps(self):
        with pytest.raises(ValueError, match="epsilon"):
            GameEconomics(1.0, 1.0, 10.0, 1.0)

    def test_hetero_weights_sum(self):
        with pytest.raises(ValueError, match="eta1 \\+ eta2"):
            HeteroParams(10.0, 20.0, 0.5, 0.3, 0.3)

    def test_polynomial_degree(self):
        with pytest.raises(ValueError, match="degree_p"):
            PolynomialParams(10.0, 0.5, 0)

    def test_simplex_needs_two(self):
        with pytest.raises(ValueError, match="at least two"):
            SimplexParams((1.0,))

    def test_mapspec_family_mismatch(self):
        with pytest.raises(DomainError):
            MapSpec("simplex", LinearTwoParams(5.0, 0.5))
        assert MapSpec.of(PolynomialParams(5.0, 0.5, 2)).family == "polynomial2"

    def test_step_rejects_boundary(self):
        with pytest.raises(ValueError):
            step_linear2(0.0, LinearTwoParams(5.0, 0.5))


class TestNormalization:
    def test_euler_eps_gives_demand(self):
        p = normalize_economics(GameEconomics(0.3, 0.7, 30.0, EULER_EPS))
        assert p.a == pytest.approx(30.0, rel=1e-15)
        assert p.b == pytest.approx(0.7, rel=1e-15)

    def test_general(self):
        p = normalize_economics(GameEconomics(2.0, 1.0, 4.0, 0.5))
        assert p.a == pytest.approx(3.0 * 4.0 * math.log(2.0), rel=1e-15)
        assert p.b == pytest.approx(1.0 / 3.0, rel=1e-15)

    def test_normalized_economics_roundtrip(self):
        p = LinearTwoParams(17.0, 0.3)
        q = normalize_economics(GameEconomics.normalized(p))
        assert q.a == pytest.approx(17.0, rel=1e-14)
        assert q.b == pytest.approx(0.3, rel=1e-15)

    def test_raw_mwu_matches_map(self):
        # costs alpha N x and beta N (1-x) through plain MWU
        econ = GameEconomics(0.6, 0.9, 7.0, 0.3)
        p = normalize_economics(econ)
        x = 0.37
        y = mwu_update([x, 1 - x], [econ.alpha * econ.demand_N * x, econ.beta * econ.demand_N * (1 - x)], econ.epsilon)
        assert y[0] == pytest.approx(step_linear2(x, p), abs=1e-15)


class TestLinearMap:
    @pytest.mark.parametrize("a,b", [(3.0, 0.5), (10.0, 0.5), (30.0, 0.7), (80.0, 0.15)])
    def test_against_high_precision(self, a, b):
        p = LinearTwoParams(a, b)
        for x in np.linspace(0.001, 0.999, 101):
            ref = float(mp_linear(x, a, b))
            assert step_linear2(float(x), p) == pytest.approx(ref, rel=1e-13, abs=1e-300)

    def test_direct_form_agrees(self):
        p = LinearTwoParams(12.0, 0.4)
        for x in np.linspace(0.01, 0.99, 50):
            assert step_linear2(float(x), p) == pytest.approx(step_linear2_direct(float(x), p), rel=1e-13)

    def test_equilibrium_fixed(self):
        p = LinearTwoParams(25.0, 0.37)
        assert step_linear2(0.37, p) == pytest.approx(0.37, abs=1e-16)

    def test_closed_keeps_endpoints(self):
        p = LinearTwoParams(25.0, 0.37)
        assert step_linear2_closed(0.0, p) == 0.0
        assert step_linear2_closed(1.0, p) == 1.0

    @settings(max_examples=200, deadline=None)
    @given(x=unit, a=demand, b=st.floats(min_value=0.01, max_value=0.99))
    def test_stays_in_open_interval(self, x, a, b):
        y = step_linear2(x, LinearTwoParams(a, b))
        assert 0.0 < y < 1.0

    @settings(max_examples=100, deadline=None)
    @given(x=unit, a=demand, b=st.floats(min_value=0.01, max_value=0.99))
    def test_moves_toward_b(self, x, a, b):
        # logit(f(x)) - logit(x) = -a(x - b): the update never pushes away from b
        y = step_linear2(x, LinearTwoParams(a, b))
        if x > b:
            assert y <= x
        elif x < b:
            assert y >= x

    def test_derivative_matches_mpmath(self):
        p = LinearTwoParams(9.0, 0.6)
        for x in (0.05, 0.3, 0.6, 0.85):
            ref = mp.diff(lambda u: mp_linear(u, 9, mp.mpf("0.6")), x)
            assert derivative_linear2(x, p) == pytest.approx(float(ref), rel=1e-12)


class TestCriticalStructure:
    def test_points(self):
        cs = critical_structure(LinearTwoParams(8.0, 0.5))
        assert cs.x_l == pytest.approx((1 - math.sqrt(0.5)) / 2, rel=1e-15)
        assert cs.x_l + cs.x_r == pytest.approx(1.0, abs=1e-16)

    @pytest.mark.parametrize("a,b", [(4.5, 0.3), (20.0, 0.7), (60.0, 0.5)])
    def test_derivative_vanishes(self, a, b):
        p = LinearTwoParams(a, b)
        cs = critical_structure(p)
        slope_scale = abs(derivative_linear2(0.5 * (cs.x_l + b), p)) + 1.0
        assert abs(derivative_linear2(cs.x_l, p)) < 1e-12 * slope_scale
        assert abs(derivative_linear2(cs.x_r, p)) < 1e-12 * slope_scale

    def test_extremes_bound_image(self):
        p = LinearTwoParams(20.0, 0.6)
        cs = critical_structure(p)
        ys = [step_linear2(float(x), p) for x in np.linspace(0.001, 0.999, 5001)]
        assert max(ys) <= cs.y_max + 1e-15
        assert min(ys) >= cs.y_min - 1e-15

    def test_homeomorphism_regime(self):
        with pytest.raises(PreconditionError, match="a=4.0"):
            critical_structure(LinearTwoParams(4.0, 0.5))


class TestPolynomial:
    def test_degree_one_is_linear(self):
        lin = LinearTwoParams(33.0, 0.7)
        pol = PolynomialParams(33.0, 0.7, 1)
        for x in (np.arange(1000) + 0.5) / 1000:
            assert abs(step_polynomial(float(x), pol) - step_linear2(float(x), lin)) <= 1e-15

    @pytest.mark.parametrize("deg,b", [(2, 0.3), (3, 0.7), (5, 0.5)])
    def test_equilibrium_is_fixed(self, deg, b):
        p = PolynomialParams(40.0, b, deg)
        x = polynomial_equilibrium(p)
        assert step_polynomial(x, p) == pytest.approx(x, abs=1e-14)

    def test_against_high_precision(self):
        p = PolynomialParams(40.0, 0.7, 2)
        for x in np.linspace(0.01, 0.99, 33):
            assert step_polynomial(float(x), p) == pytest.approx(float(mp_poly(x, 40, mp.mpf("0.7"), 2)), rel=1e-12)


class TestHetero:
    def test_invariant_one_step(self):
        p = HeteroParams(20.0, 30.0, 0.8)
        x, y = 0.3, 0.6
        for _ in range(50):
            before = hetero_invariant(x, y, p)
            x, y = step_hetero(x, y, p)
            assert hetero_invariant(x, y, p) == pytest.approx(before, abs=1e-9)

    def test_equal_rates_collapse(self):
        # with a1 == a2 and x == y the two populations move as one linear map
        p = HeteroParams(15.0, 15.0, 0.4)
        x1, y1 = step_hetero(0.25, 0.25, p)
        assert x1 == y1 == pytest.approx(step_linear2(0.25, LinearTwoParams(15.0, 0.4)), abs=1e-15)


class TestSimplex:
    def test_equilibrium(self):
        np.testing.assert_allclose(simplex_equilibrium((1.0, 2.0, 4.0)), [4 / 7, 2 / 7, 1 / 7], rtol=1e-15)

    def test_equilibrium_fixed(self):
        p = SimplexParams((1.0, 2.0, 4.0))
        b = simplex_equilibrium(p.rates)
        np.testing.assert_allclose(step_simplex(b, p), b, atol=1e-15)

    def test_rejects_off_simplex(self):
        with pytest.raises(ValueError, match="sum to 1"):
            step_simplex([0.5, 0.6], SimplexParams((1.0, 2.0)))

    @settings(max_examples=100, deadline=None)
    @given(w=st.lists(st.floats(min_value=0.01, max_value=1.0), min_size=3, max_size=3))
    def test_step_stays_on_simplex(self, w):
        x = np.array(w) / sum(w)
        y = step_simplex(x, SimplexParams((3.0, 5.0, 9.0)))
        assert abs(y.sum() - 1.0) < 1e-14
        assert np.all(y > 0)

    def test_brute_force_step(self):
        p = SimplexParams((1.5, 2.5, 7.0))
        x = np.array([0.2, 0.5, 0.3])
        w = x * np.exp(-np.array(p.rates) * x)
        np.testing.assert_allclose(step_simplex(x, p), w / w.sum(), rtol=1e-14)

    def test_segment_conjugacy(self):
        p = SimplexParams((1.0, 2.0, 4.0))
        q = segment_conjugate(p, 1)
        x = 0.3
        v = embed_segment(x, p, 1)
        assert abs(v.sum() - 1.0) < 1e-15
        w = step_simplex(v, p)
        assert segment_coordinate(w, 1) == pytest.approx(step_linear2(x, q), abs=1e-15)
        np.testing.assert_allclose(w, embed_segment(segment_coordinate(w, 1), p, 1), atol=1e-15)

    def test_segment_index_range(self):
        with pytest.raises(ValueError, match="special_index"):
            embed_segment(0.3, SimplexParams((1.0, 2.0)), 3)


class TestAtomic:
    def test_reduction_numbers(self):
        p = reduce_atomic_two(1.0, 2.0, 11, EULER_EPS)
        assert p.a == pytest.approx(30.0, rel=1e-14)
        assert p.b == pytest.approx(0.7, rel=1e-15)

    def test_reduction_step_agrees(self):
        p = reduce_atomic_two(1.0, 2.0, 11, EULER_EPS)
        for x in np.linspace(0.01, 0.99, 99):
            y = step_atomic([x, 1 - x], [1.0, 2.0], 11, EULER_EPS)
            assert abs(y[0] - step_linear2(float(x), p)) <= 1e-12

    def test_reduction_precondition(self):
        with pytest.raises(PreconditionError, match="alpha2 < N\\*alpha1"):
            reduce_atomic_two(1.0, 20.0, 11, EULER_EPS)

    def test_reduction_needs_integer_players(self):
        with pytest.raises(ValueError, match="integer"):
            reduce_atomic_two(1.0, 2.0, 10.5, EULER_EPS)

    def test_cost_shift_invariance(self):
        x = np.array([0.1, 0.2, 0.3, 0.4])
        c = atomic_costs(x, [1.0] * 4, 9)
        for shift in (-3.0, 0.5, 100.0):
            np.testing.assert_allclose(mwu_update(x, c + shift, 0.4), mwu_update(x, c, 0.4), atol=1e-12, rtol=0)

    def test_m_path_reduction(self):
        sp = reduce_atomic_m(1.0, 6, EULER_EPS, 3)
        x = np.array([0.5, 0.3, 0.2])
        np.testing.assert_allclose(
            step_atomic(x, [1.0] * 3, 6, EULER_EPS), step_simplex(x, sp), atol=1e-12, rtol=0
        )
        assert sp.rates == pytest.approx((5.0, 5.0, 5.0))
