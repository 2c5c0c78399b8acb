import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helmholtz_optics.errors import EvaluationError, ExpressionSyntaxError, PotentialError, UnknownIdentifierError, UsageError
from helmholtz_optics.expr import (
    BinOp,
    Call,
    Neg,
    Num,
    Pi,
    Var,
    eval_potential,
    parse_expression,
    parse_potential,
    random_staircase,
    require_nonneg,
    square,
    to_source,
    validate_nonneg,
)


@pytest.mark.parametrize("src", ["(1+sin(2*pi*t))^2", "1.1*exp(t)-1", "(t+pi)^4", "sin(t)^2", "1"])
def test_parse_valid(src):
    spec = parse_potential(src, 0.0, 1.0)
    assert spec.source == src
    assert spec.interval == (0.0, 1.0)


def test_unclosed_paren_offset():
    with pytest.raises(ExpressionSyntaxError) as info:
        parse_expression("(t+")
    assert info.value.offset == 3
    assert "offset 3" in str(info.value)


@pytest.mark.parametrize(
    "src, offset",
    [("", 0), ("t+*2", 2), ("2 $ 3", 2), ("sin t", 4), ("(t))", 3), ("1.5.2", 3), ("--t", 1)],
)
def test_syntax_error_offsets(src, offset):
    with pytest.raises(ExpressionSyntaxError) as info:
        parse_expression(src)
    assert info.value.offset == offset


def test_unknown_identifier():
    with pytest.raises(UnknownIdentifierError) as info:
        parse_expression("2*x")
    assert info.value.offset == 2


def test_syntax_errors_are_usage_errors():
    assert issubclass(ExpressionSyntaxError, UsageError)


@pytest.mark.parametrize(
    "src, t, expected",
    [
        ("(1+sin(2*pi*t))^2", 0.25, 4.0),
        ("1.1*exp(t)-1", 0.0, 0.1),
        ("(t+pi)^4", 0.0, math.pi**4),
        ("-2^2", 0.0, -4.0),
        ("2^3^2", 0.0, 512.0),
        ("8/4/2", 0.0, 1.0),
        ("7-2-1", 0.0, 4.0),
        ("-(-t)", 3.0, 3.0),
        ("2*-t", 3.0, -6.0),
        ("sqrt(abs(-t))", 4.0, 2.0),
        ("1e-3*t", 2.0, 2e-3),
    ],
)
def test_eval_examples(src, t, expected):
    spec = parse_potential(src, -10.0, 10.0)
    assert eval_potential(spec, t) == pytest.approx(expected, rel=1e-12, abs=1e-15)


def test_pi_fourth():
    spec = parse_potential("(t+pi)^4", 0.0, math.pi)
    assert f"{eval_potential(spec, 0.0):.10g}" == "97.40909103"


REFERENCE_FORMULAS = [
    ("(t+pi)^4", 0.0, math.pi, lambda t: (t + np.pi) ** 4),
    ("1.1*exp(t)-1", 0.0, 1.0, lambda t: 1.1 * np.exp(t) - 1.0),
    ("(1+sin(2*pi*t))^2", 0.0, 1.0, lambda t: (1.0 + np.sin(2.0 * np.pi * t)) ** 2),
]


@pytest.mark.parametrize("src, a, b, f", REFERENCE_FORMULAS)
def test_reference_potentials_at_five_points(src, a, b, f):
    spec = parse_potential(src, a, b)
    for t in np.linspace(a, b, 5):
        assert eval_potential(spec, float(t)) == pytest.approx(float(f(t)), rel=1e-12)
    ts = np.linspace(a, b, 5)
    np.testing.assert_allclose(spec(ts), f(ts), rtol=1e-12)


@pytest.mark.parametrize("src, t", [("log(t)", 0.0), ("sqrt(t)", -1.0), ("1/t", 0.0), ("exp(t)", 1000.0)])
def test_domain_errors(src, t):
    spec = parse_potential(src, -2000.0, 2000.0)
    with pytest.raises(EvaluationError):
        eval_potential(spec, t)


def test_array_domain_error_reports_t():
    spec = parse_potential("log(t-0.5)", 0.0, 1.0)
    with pytest.raises(EvaluationError) as info:
        spec(np.linspace(0.0, 1.0, 11))
    assert info.value.t == 0.0


def test_bad_interval():
    with pytest.raises(UsageError):
        parse_potential("1", 1.0, 1.0)
    with pytest.raises(UsageError):
        parse_potential("1", 0.0, math.inf)


def test_validate_nonneg_examples():
    ok = validate_nonneg(parse_potential("1.1*exp(t)-1", 0.0, 1.0), 1000)
    assert ok.passed and ok.min_value == pytest.approx(0.1)

    sine = validate_nonneg(parse_potential("sin(2*pi*t)", 0.0, 1.0))
    assert not sine.passed
    assert sine.t_min == pytest.approx(0.75, abs=1e-3)
    assert 0.5 < sine.violation_t < 0.75

    zero = validate_nonneg(parse_potential("0", 0.0, 1.0))
    assert not zero.passed and "zero" in zero.message


def test_require_nonneg_raises():
    with pytest.raises(PotentialError):
        require_nonneg(parse_potential("t-0.5", 0.0, 1.0))


def test_square():
    spec = square(parse_potential("1+sin(2*pi*t)", 0.0, 1.0))
    assert spec(0.25) == pytest.approx(4.0)
    assert parse_expression(spec.source) == spec.ast


def test_spec_is_hashable_and_immutable():
    a = parse_potential("t^2", 0.0, 1.0)
    b = parse_potential("t^2", 0.0, 1.0)
    assert a == b and hash(a) == hash(b)
    with pytest.raises(Exception):
        a.a = 3.0


def test_staircase_is_seeded():
    s1, s2 = random_staircase(5, 4.0), random_staircase(5, 4.0)
    assert s1 == s2
    assert s1 != random_staircase(6, 4.0)
    assert s1.interval == (0.0, 4.0)
    values = s1(np.linspace(0.0, 4.0, 101))
    assert np.all(values >= 0.2) and np.all(values <= 2.0)
    assert validate_nonneg(s1).passed


# -- property tests

numbers = st.floats(min_value=0.0, max_value=1e3, allow_nan=False).map(lambda x: Num(float(x)))
leaves = st.one_of(numbers, st.just(Var()), st.just(Pi()))


def _extend(children):
    return st.one_of(
        st.builds(Neg, children),
        st.builds(BinOp, st.sampled_from("+-*/^"), children, children),
        st.builds(Call, st.sampled_from(["sin", "cos", "exp", "sqrt", "abs", "log", "tan"]), children),
    )


trees = st.recursive(leaves, _extend, max_leaves=12)


@settings(max_examples=300, deadline=None)
@given(trees)
def test_print_parse_fixpoint(tree):
    text = to_source(tree)
    assert parse_expression(text) == tree
    assert to_source(parse_expression(text)) == text


@settings(max_examples=200, deadline=None)
@given(trees, trees, st.floats(min_value=-3.0, max_value=3.0))
def test_addition_and_product_commute(x, y, t):
    spec = lambda node: parse_potential(to_source(node), -5.0, 5.0)
    try:
        xy = eval_potential(spec(BinOp("+", x, y)), t)
        yx = eval_potential(spec(BinOp("+", y, x)), t)
        pxy = eval_potential(spec(BinOp("*", x, y)), t)
        pyx = eval_potential(spec(BinOp("*", y, x)), t)
    except (EvaluationError, OverflowError, ZeroDivisionError):
        return
    assert xy == yx
    assert pxy == pyx


@settings(max_examples=200, deadline=None)
@given(trees, st.floats(min_value=-3.0, max_value=3.0))
def test_scalar_and_array_evaluation_agree(tree, t):
    spec = parse_potential(to_source(tree), -5.0, 5.0)
    try:
        scalar = eval_potential(spec, t)
        array = spec(np.array([t]))[0]
    except EvaluationError:
        return
    assert array == pytest.approx(scalar, rel=1e-12, abs=1e-300)
