import math
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jfp.precision import (Irrational, PrecisionContext, beta, cached_context, eps, erfc, gamma, gamma_ratio,
                           loggamma, to_mp)


@pytest.mark.parametrize("q, expected", [(53, 2.22e-16), (256, 1.73e-77), (1, 1.0)])
def test_eps_table(q, expected):
    assert eps(q) == pytest.approx(expected, rel=2e-3)


def test_eps_rejects_nonpositive():
    with pytest.raises(ValueError):
        eps(0)


def test_context_rounds_at_q_bits():
    ctx = PrecisionContext(64)
    assert ctx.mp.prec == 64
    one = ctx.mpf(1)
    assert one + ctx.mp.ldexp(1, -64) == one
    assert one + ctx.mp.ldexp(1, -63) != one


def test_contexts_are_independent():
    a, b = PrecisionContext(80), PrecisionContext(300)
    assert a.mp.prec == 80 and b.mp.prec == 300
    assert mpmath.mp.prec == 53


def test_context_rejects_tiny_precision():
    with pytest.raises(ValueError):
        PrecisionContext(8)


def test_gamma_values(ctx256):
    mp = ctx256.mp
    assert gamma(1, ctx256) == 1
    assert abs(gamma(Fraction(1, 2), ctx256) - mp.sqrt(mp.pi)) < mp.mpf(2) ** -250
    assert float(gamma(0.5, ctx256)) == pytest.approx(1.7724538509, abs=1e-10)
    expected = 15 * mp.sqrt(mp.pi) / 8
    assert abs(gamma(Fraction(7, 2), ctx256) / expected - 1) < mp.mpf(2) ** -250


def test_gamma_pole(ctx256):
    with pytest.raises(ValueError):
        gamma(-2, ctx256)
    with pytest.raises(ValueError):
        loggamma(0, ctx256)


@pytest.mark.parametrize("a, b, expected", [(1, 1, 1.0), (2, 1, 0.5), (Fraction(1, 2), Fraction(1, 2), math.pi)])
def test_beta_values(ctx256, a, b, expected):
    assert float(beta(a, b, ctx256)) == pytest.approx(expected, rel=1e-15)


def test_beta_domain(ctx256):
    with pytest.raises(ValueError):
        beta(0, 1, ctx256)


def test_erfc_values(ctx256):
    assert erfc(0, ctx256) == 1
    # independent oracle: quadrature of the defining integral
    with mpmath.workdps(60):
        ref = 2 / mpmath.sqrt(mpmath.pi) * mpmath.quad(lambda t: mpmath.exp(-t * t), [1, mpmath.inf])
        assert abs(erfc(1, ctx256) - ref) < mpmath.mpf(10) ** -55
    assert float(erfc(1, ctx256)) == pytest.approx(0.157299207, abs=1e-9)


def test_erfc_monotone_to_zero(ctx256):
    vals = [erfc(x, ctx256) for x in (0, 1, 2, 5, 10, 20)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert vals[-1] < ctx256.mp.mpf(10) ** -170


@given(st.floats(min_value=-10, max_value=10, allow_nan=False))
@settings(max_examples=60, deadline=None)
def test_erfc_reflection(x):
    ctx = cached_context(128)
    lhs = erfc(-x, ctx)
    rhs = 2 - erfc(x, ctx)
    assert abs(lhs - rhs) <= 4 * eps(128)


@given(st.floats(min_value=0.1, max_value=50, allow_nan=False))
@settings(max_examples=80, deadline=None)
def test_gamma_recurrence(x):
    ctx = cached_context(128)
    xv = ctx.mpf(x)
    rel = abs(gamma(xv + 1, ctx) / (xv * gamma(xv, ctx)) - 1)
    assert rel <= 4 * eps(128)


@given(st.floats(min_value=0.05, max_value=40, allow_nan=False))
@settings(max_examples=50, deadline=None)
def test_double_precision_rebuild_within_two_ulp(x):
    q = 100
    lo, hi = cached_context(q), cached_context(2 * q)
    for f in (gamma, erfc):
        a = f(x, lo)
        b = lo.mp.mpf(f(x, hi))
        ulp = lo.mp.ldexp(1, int(lo.mp.floor(lo.mp.log(abs(a), 2))) - q + 1)
        assert abs(a - b) <= 2 * ulp


@pytest.mark.parametrize("a, mu", [(Fraction(1, 2), Fraction(1, 3)), (45, Fraction(1, 2)), (300, 2)])
def test_gamma_ratio_matches_direct(ctx256, a, mu):
    hi = cached_context(600)
    ref = hi.mp.gamma(to_mp(a, hi)) / hi.mp.gamma(to_mp(a, hi) + to_mp(mu, hi))
    got = gamma_ratio(a, mu, ctx256)
    assert abs(got / ctx256.mp.mpf(ref) - 1) < ctx256.mp.mpf(2) ** -245


def test_irrational_is_reevaluated_per_precision():
    r = Irrational("1/pi")
    lo, hi = cached_context(64), cached_context(400)
    assert abs(r.value(hi) - 1 / hi.mp.pi) < hi.mp.mpf(2) ** -395
    assert abs(r.value(lo) - 1 / lo.mp.pi) < lo.mp.mpf(2) ** -62
    assert float(r.scaled(2)) == pytest.approx(2 * math.pi)


def test_to_mp_conversions(ctx256):
    assert to_mp(Fraction(1, 3), ctx256) * 3 == 1
    assert to_mp("0.25", ctx256) == ctx256.mp.mpf(1) / 4
    assert to_mp(7, ctx256) == 7
