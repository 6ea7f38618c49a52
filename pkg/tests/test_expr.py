"""Expression language: parsing, precedence, evaluation, estimates."""

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hilfersolve.errors import DomainError
from hilfersolve.expr import (
    EvalError,
    ParseError,
    evaluate,
    lipschitz_estimate,
    parse,
    to_text,
    variables,
    vector_lipschitz_estimate,
)


def ev(text, **env):
    return evaluate(parse(text), env)


class TestParsingAndPrecedence:
    def test_sum_and_product(self):
        assert ev("1 + 2 * 3") == 7.0
        assert ev("(1 + 2) * 3") == 9.0

    def test_power_right_associative(self):
        assert ev("2 ^ 3 ^ 2") == 512.0

    def test_unary_minus_binds_tighter_than_power(self):
        assert ev("-2 ^ 2") == 4.0
        assert ev("2 ^ -2") == 0.25
        assert ev("-(2 ^ 2)") == -4.0

    def test_division_left_associative(self):
        assert ev("8 / 4 / 2") == 1.0

    def test_scientific_notation(self):
        assert ev("1.5e2 + 2.5E-1") == 150.25

    def test_function_calls(self):
        assert ev("sin(0)") == 0.0
        assert ev("max(2, 3) + min(1, -1)") == 2.0
        assert ev("pow(2, 10)") == 1024.0
        assert ev("sqrt(abs(-9))") == 3.0

    def test_variables_in_environment(self):
        assert ev("t * u1 - u2", t=2.0, u1=3.0, u2=1.0) == 5.0

    @pytest.mark.parametrize(
        "bad,pos_hint",
        [
            ("1 +", None),
            ("(1 + 2", None),
            ("foo(1)", 0),
            ("sin(1, 2)", 0),
            ("2 $ 3", 2),
        ],
    )
    def test_parse_errors_carry_position(self, bad, pos_hint):
        with pytest.raises(ParseError) as err:
            parse(bad)
        if pos_hint is not None:
            assert err.value.position == pos_hint

    def test_variables_listing(self):
        assert variables(parse("sin(t) + u1 * u2 - u1")) == {"t", "u1", "u2"}
        assert variables(parse("1 + 2")) == set()


class TestEvaluation:
    def test_unbound_variable(self):
        with pytest.raises(EvalError):
            ev("t + u1", t=1.0)

    def test_division_by_zero(self):
        with pytest.raises(EvalError):
            ev("1 / 0")

    def test_log_domain(self):
        with pytest.raises(EvalError):
            ev("log(-1)")

    def test_nonfinite_result_rejected(self):
        with pytest.raises(EvalError):
            ev("exp(1000) * exp(1000)")

    @given(
        a=st.floats(-5, 5),
        b=st.floats(-5, 5),
        t=st.floats(-3, 3),
    )
    @settings(max_examples=50, deadline=None)
    def test_matches_python_arithmetic(self, a, b, t):
        got = ev("a * sin(t) + b * t ^ 2", a=a, b=b, t=t)
        assert got == pytest.approx(a * math.sin(t) + b * t**2, abs=1e-12)


class TestRoundTrip:
    @pytest.mark.parametrize(
        "text",
        [
            "1 + 2 * 3",
            "-2 ^ 2",
            "sin(t) + cos(u1 * u2)",
            "max(t, 0.5) / (1 + abs(u1))",
            "pow(t, 2) - sqrt(u1)",
        ],
    )
    def test_to_text_reparses_identically(self, text):
        ast = parse(text)
        assert parse(to_text(ast)) == ast


class TestLipschitzEstimates:
    def test_linear_map_is_tight(self):
        ast = parse("0.1 * u1")
        est = lipschitz_estimate(ast, "u1", {"u1": (-2.0, 2.0)})
        assert est == pytest.approx(0.1, abs=1e-9)

    def test_sine_near_unit_slope(self):
        ast = parse("sin(u1)")
        est = lipschitz_estimate(ast, "u1", {"u1": (-2.0, 2.0)}, samples=400)
        assert 0.99 <= est <= 1.0

    def test_estimate_is_a_lower_bound(self):
        # |d/du (u^2)| on [-2,2] is 4; sampling cannot exceed it
        ast = parse("u1 ^ 2")
        est = lipschitz_estimate(ast, "u1", {"u1": (-2.0, 2.0)}, samples=300)
        assert est <= 4.0 + 1e-9
        assert est > 3.0

    def test_seed_reproducibility(self):
        ast = parse("sin(3 * u1) * u1")
        box = {"u1": (-1.0, 1.0)}
        a = lipschitz_estimate(ast, "u1", box, seed=7)
        b = lipschitz_estimate(ast, "u1", box, seed=7)
        assert a == b

    def test_bad_box_rejected(self):
        with pytest.raises(DomainError):
            lipschitz_estimate(parse("u1"), "u1", {"u1": (1.0, 1.0)})
        with pytest.raises(DomainError):
            lipschitz_estimate(parse("u1"), "u2", {"u1": (0.0, 1.0)})

    def test_vector_estimate_linear_block(self):
        asts = (parse("2 * u1"), parse("2 * u2"))
        est = vector_lipschitz_estimate(
            asts, ("u1", "u2"), {"u1": (-1.0, 1.0), "u2": (-1.0, 1.0)},
            samples=300,
        )
        assert est == pytest.approx(2.0, rel=1e-6)
