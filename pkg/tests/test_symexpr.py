import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from maxvar import symexpr as sx
from maxvar.errors import EvaluationError, ExprSyntaxError, UnknownIdentifier
from maxvar.randgen import random_expr

NAMES = ("x", "y", "z")
seeds = st.integers(0, 2**32 - 1)


def expr_from(seed, names=NAMES, funcs=True):
    return random_expr(names, np.random.default_rng(seed), max_deg=3, funcs=funcs)


def test_parse_structure():
    e = sx.parse_expr("x*y + z^2", NAMES)
    assert e == sx.Add((sx.Mul((sx.Sym("x"), sx.Sym("y"))), sx.Pow(sx.Sym("z"), 2)))
    assert sx.parse_expr("0", NAMES) == sx.ZERO


def test_parse_operator_count():
    e = sx.parse_expr("sin(q)*p - q/2", ("q", "p"))
    q, p = sx.Sym("q"), sx.Sym("p")
    assert sx.count_operators(e) == 5
    manual = sx.Add((sx.Mul((sx.Func("sin", q), p)),
                     sx.Mul((sx.MINUS_ONE, sx.Div(q, sx.Const(2))))))
    assert sx.is_zero(e - manual)


def test_parse_errors():
    with pytest.raises(ExprSyntaxError) as exc:
        sx.parse_expr("x + * y", NAMES)
    assert exc.value.position == 4
    with pytest.raises(UnknownIdentifier) as exc:
        sx.parse_expr("x + w", NAMES)
    assert exc.value.record()["identifier"] == "w"
    with pytest.raises(ExprSyntaxError):
        sx.parse_expr("x^y", NAMES)
    with pytest.raises(ExprSyntaxError):
        sx.parse_expr("sin(x", NAMES)
    with pytest.raises(ExprSyntaxError):
        sx.parse_expr("", NAMES)


def test_unary_minus_binds_whole_power():
    e = sx.parse_expr("-x^2", NAMES)
    assert sx.eval_at(e, {"x": 3}) == -9


@pytest.mark.parametrize("src", ["x*y + z^2", "-x", "x - (y - z)", "2/3*x^-2", "sin(x)^3",
                                 "exp(-x)*sqrt(y)", "-(x + y)*z", "1.25*x", "x/(y*z)", "(-x)^3"])
def test_round_trip_examples(src):
    e = sx.parse_expr(src, NAMES)
    assert sx.parse_expr(str(e), NAMES) == e


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_round_trip_random(seed):
    e = expr_from(seed)
    assert sx.parse_expr(str(e), NAMES) == e
    s = sx.simplify(e)
    assert sx.parse_expr(str(s), NAMES) == s


def test_simplify_examples():
    assert sx.simplify(sx.parse_expr("x + 0", NAMES)) == sx.Sym("x")
    assert str(sx.simplify(sx.parse_expr("2*x + 3*x", NAMES))) == "5*x"
    e = sx.parse_expr("x*y - y*x", NAMES)
    assert sx.simplify(e) == sx.ZERO
    assert sx.is_zero(e, trials=50)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_simplify_idempotent_and_value_preserving(seed):
    e = expr_from(seed)
    s = sx.simplify(e)
    assert sx.simplify(s) == s
    rng = np.random.default_rng(seed)
    for _ in range(20):
        p = dict(zip(NAMES, rng.uniform(-1, 1, 3)))
        a, b = sx.eval_at(e, p), sx.eval_at(s, p)
        assert abs(a - b) <= 1e-12 * max(1.0, abs(a))


def test_diff_examples():
    xy = sx.parse_expr("x*y", NAMES)
    assert sx.diff(xy, "x") == sx.Sym("y")
    assert sx.diff(xy, "z") == sx.ZERO
    d = sx.diff(sx.parse_expr("sin(q)*p", ("q", "p")), "q")
    assert str(d) == "cos(q)*p"


def test_diff_matches_finite_differences_on_corpus():
    rng = np.random.default_rng(11)
    for k in range(30):
        e = random_expr(NAMES, rng, max_deg=3)
        for var in NAMES:
            de = sx.diff(e, var)
            for _ in range(20):
                p = dict(zip(NAMES, rng.uniform(-1, 1, 3)))
                h = 1e-5
                hi, lo = dict(p), dict(p)
                hi[var] += h
                lo[var] -= h
                fd = (sx.eval_at(e, hi) - sx.eval_at(e, lo)) / (2 * h)
                ex = sx.eval_at(de, p)
                assert abs(fd - ex) <= 1e-6 * max(1.0, abs(ex))


@settings(max_examples=30, deadline=None)
@given(seeds, st.fractions(-5, 5, max_denominator=7), st.fractions(-5, 5, max_denominator=7))
def test_diff_linear(seed, a, b):
    e1, e2 = expr_from(seed), expr_from(seed + 1)
    A, B = sx.Const(a), sx.Const(b)
    lhs = sx.diff(A * e1 + B * e2, "x")
    rhs = A * sx.diff(e1, "x") + B * sx.diff(e2, "x")
    assert sx.is_zero(lhs - rhs)


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_mixed_partials_commute(seed):
    e = expr_from(seed)
    assert sx.is_zero(sx.diff(sx.diff(e, "x"), "y") - sx.diff(sx.diff(e, "y"), "x"))


def test_eval_at_examples():
    assert sx.eval_at(sx.parse_expr("x*y", NAMES), {"x": 2, "y": 3, "z": 5}) == 6
    assert sx.eval_at(sx.parse_expr("sin(q)", ("q", "p")), {"q": 0, "p": 1}) == 0
    assert sx.eval_at(sx.parse_expr("q^2/p", ("q", "p")), {"q": 3, "p": 2}) == 4.5
    with pytest.raises(EvaluationError):
        sx.eval_at(sx.parse_expr("1/x", NAMES), {"x": 0})
    with pytest.raises(EvaluationError):
        sx.eval_at(sx.parse_expr("sqrt(x)", NAMES), {"x": -1})


def test_is_zero_examples():
    assert sx.is_zero(sx.ZERO)
    x = sx.Sym("x")
    assert sx.is_zero(sx.Add((x, sx.Mul((sx.MINUS_ONE, x)))))
    assert not sx.is_zero(sx.parse_expr("x*y - 1", NAMES))
    assert sx.is_zero(sx.parse_expr("sin(x)^2 + cos(x)^2 - 1", NAMES))
    assert sx.is_zero(sx.parse_expr("exp(x)*exp(y) - exp(x + y)", NAMES))
    assert not sx.is_zero(sx.parse_expr("x^2 - 1e-3", NAMES))


def test_is_zero_skips_singular_points():
    e = sx.parse_expr("x/x - 1", NAMES)
    assert sx.is_zero(e)


def test_float_constants_are_exact_rationals():
    assert sx.as_expr(0.5) == sx.Const(Fraction(1, 2))
    assert math.isclose(sx.eval_at(sx.parse_expr("1.25*x", NAMES), {"x": 2}), 2.5)
