"""Special-function layer: Gamma, Mittag-Leffler, Wright density."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hilfersolve.errors import DomainError
from hilfersolve.specfun import (
    SeriesConfig,
    gamma,
    mittag_leffler,
    wright_m,
    wright_moment,
)
from oracles import ml_asymptotic, ml_reference, wright_reference


class TestGamma:
    def test_integers(self):
        assert gamma(1.0) == 1.0
        assert gamma(5.0) == 24.0

    def test_half(self):
        assert gamma(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-14)

    def test_nonpositive_pole_rejected(self):
        with pytest.raises(DomainError):
            gamma(0.0)
        with pytest.raises(DomainError):
            gamma(-2.0)


class TestMittagLeffler:
    def test_exponential_special_case(self):
        for z in (-3.0, -0.5, 1.2):
            assert mittag_leffler(1.0, 1.0, z) == pytest.approx(
                math.exp(z), rel=1e-13
            )

    def test_erfc_special_case(self):
        # E_{1/2,1}(-x) = exp(x^2) erfc(x)
        for x in (0.5, 2.0, 4.0):
            expect = math.exp(x * x) * math.erfc(x)
            assert mittag_leffler(0.5, 1.0, -x) == pytest.approx(
                expect, rel=1e-12
            )

    def test_at_zero(self):
        assert mittag_leffler(0.7, 0.9, 0.0) == pytest.approx(
            1.0 / gamma(0.9), rel=1e-14
        )

    @pytest.mark.parametrize(
        "alpha,beta,z",
        [
            (0.4, 0.74, -2.0),
            (0.4, 0.4, -8.0),
            (0.7, 0.91, -6.0),
            (0.5, 1.0, -12.0),
            (0.6, 0.6, -5.5),
            (0.9, 0.9, -7.0),
        ],
    )
    def test_against_series_reference(self, alpha, beta, z):
        ref = ml_reference(alpha, beta, z)
        assert mittag_leffler(alpha, beta, z) == pytest.approx(ref, rel=1e-9)

    @pytest.mark.parametrize(
        "alpha,beta,z",
        [(0.7, 0.7, -50.0), (0.8, 1.3, -40.0), (0.4, 1.0, -200.0),
         (0.6, 0.8, -1000.0)],
    )
    def test_against_asymptotic_reference(self, alpha, beta, z):
        ref = ml_asymptotic(alpha, beta, z)
        assert mittag_leffler(alpha, beta, z) == pytest.approx(ref, rel=1e-7)

    def test_beta_above_one_plus_alpha(self):
        # exercises the downward recursion branch of the tail representation
        ref = ml_reference(0.5, 2.3, -9.0)
        assert mittag_leffler(0.5, 2.3, -9.0) == pytest.approx(ref, rel=1e-9)

    @given(
        alpha=st.floats(0.3, 0.95),
        x=st.floats(0.1, 30.0),
    )
    @settings(max_examples=40, deadline=None)
    def test_completely_monotone_range(self, alpha, x):
        # E_{a,1}(-x) is completely monotone: values stay in (0, 1]
        val = mittag_leffler(alpha, 1.0, -x)
        assert 0.0 < val <= 1.0

    @given(
        alpha=st.floats(0.3, 0.95),
        x=st.floats(0.1, 15.0),
        bump=st.floats(0.05, 5.0),
    )
    @settings(max_examples=40, deadline=None)
    def test_decreasing_on_negative_axis(self, alpha, x, bump):
        a = mittag_leffler(alpha, 1.0, -x)
        b = mittag_leffler(alpha, 1.0, -(x + bump))
        assert b <= a + 1e-12

    def test_alpha_domain(self):
        with pytest.raises(DomainError):
            mittag_leffler(0.0, 1.0, -1.0)
        with pytest.raises(DomainError):
            mittag_leffler(-0.3, 1.0, -1.0)


class TestWrightDensity:
    def test_value_at_origin(self):
        # M_a(0) = 1/Gamma(1-a)
        for a in (0.3, 0.5, 0.7):
            assert wright_m(a, 0.0) == pytest.approx(
                1.0 / gamma(1.0 - a), rel=1e-14
            )

    def test_half_alpha_closed_form(self):
        # M_{1/2}(x) = exp(-x^2/4)/sqrt(pi)
        for x in (0.0, 0.3, 1.5, 4.0, 7.0, 9.0):
            expect = math.exp(-x * x / 4.0) / math.sqrt(math.pi)
            assert wright_m(0.5, x) == pytest.approx(expect, rel=1e-10)

    @pytest.mark.parametrize(
        "alpha,theta",
        [
            (0.3, 0.2), (0.3, 1.0), (0.3, 2.5),
            (0.7, 0.2), (0.7, 1.0), (0.7, 2.5),
            (0.9, 0.2), (0.9, 0.8), (0.9, 1.5),
        ],
    )
    def test_against_series_reference(self, alpha, theta):
        ref = wright_reference(alpha, theta)
        assert wright_m(alpha, theta) == pytest.approx(ref, rel=1e-10)

    def test_far_tail_against_reference(self):
        # the saddle-point branch: absolute agreement at density scale
        for alpha, theta in ((0.3, 14.0), (0.7, 6.0), (0.9, 2.0)):
            ref = wright_reference(alpha, theta, n_terms=200000)
            assert wright_m(alpha, theta) == pytest.approx(
                ref, rel=3e-2, abs=1e-9
            )

    @given(
        alpha=st.floats(0.25, 0.9),
        theta=st.floats(0.0, 6.0),
    )
    @settings(max_examples=50, deadline=None)
    def test_nonnegative_density(self, alpha, theta):
        assert wright_m(alpha, theta) >= 0.0

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            wright_m(1.0, 0.5)
        with pytest.raises(DomainError):
            wright_m(0.5, -0.1)

    def test_series_budget_is_configurable(self):
        cfg = SeriesConfig(max_terms=4000)
        val = wright_m(0.9, 1.2, cfg)
        assert val == pytest.approx(wright_reference(0.9, 1.2), rel=1e-9)


class TestWrightMoments:
    @pytest.mark.parametrize("alpha", [0.3, 0.5, 0.7, 0.9])
    @pytest.mark.parametrize("delta", [0.0, 0.5, 1.0, 2.0])
    def test_moment_formula(self, alpha, delta):
        expect = gamma(1.0 + delta) / gamma(1.0 + alpha * delta)
        assert wright_moment(alpha, delta) == pytest.approx(expect, rel=1e-13)

    def test_zeroth_moment_is_one(self):
        for a in (0.35, 0.65):
            assert wright_moment(a, 0.0) == pytest.approx(1.0, rel=1e-14)
