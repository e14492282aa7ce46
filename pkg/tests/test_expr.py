import math

import numpy as np
import pytest
import scipy.special as sps

from jfp.expr import Expression, ExpressionError, evaluate_constant
from jfp.precision import cached_context


def test_numpy_evaluation():
    x = np.linspace(-1, 1, 5)
    assert np.allclose(Expression("erfc(sqrt(1+x))")(x), sps.erfc(np.sqrt(1 + x)))
    assert np.allclose(Expression("1 + x**2 - 3*x")(x), 1 + x**2 - 3 * x)
    assert np.allclose(Expression("2")(x), 2.0)


def test_mp_evaluation():
    ctx = cached_context(200)
    v = Expression("exp(-cos(2*x)) * gamma(1/2)").mp("0.3", ctx)
    ref = ctx.mp.exp(-ctx.mp.cos(2 * ctx.mp.mpf("0.3"))) * ctx.mp.sqrt(ctx.mp.pi)
    assert abs(v - ref) < ctx.mp.mpf(2) ** -190


def test_decimal_literals_exact_at_high_precision():
    ctx = cached_context(300)
    assert evaluate_constant("0.1", ctx) == ctx.mp.mpf("0.1")
    assert abs(evaluate_constant("1/pi", ctx) - 1 / ctx.mp.pi) < ctx.mp.mpf(2) ** -295


def test_one_plus_x_substitution():
    e = Expression("sqrt(1+x)")
    s = np.array([1e-30])
    assert e(s - 1, one_plus_x=s)[0] == pytest.approx(1e-15)
    assert Expression("sqrt(x+1)")(s - 1, one_plus_x=s)[0] == pytest.approx(1e-15)
    assert e(s - 1)[0] == 0.0


def test_constant_detection():
    assert Expression("gamma(3/2)*pi").is_constant
    assert not Expression("1+x").is_constant


@pytest.mark.parametrize("bad", ["__import__('os')", "x.real", "foo(x)", "x if x else 1", "y + 1", "[x]",
                                 "exp(x, 2)", "x % 2"])
def test_rejects_unsafe_or_unknown(bad):
    with pytest.raises((ExpressionError, SyntaxError)):
        Expression(bad)


def test_constant_broadcast():
    assert Expression("pi")(np.zeros(3)).tolist() == [math.pi] * 3
