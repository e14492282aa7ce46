"""Mittag-Leffler functions ``E_{a,b}(z) = sum_k z^k / Gamma(b + a k)`` on the real line.

Used as the reference solution of ``u + lam I^mu u = (1+x)^{nu-1}``, whose
solution is ``Gamma(nu) (1+x)^{nu-1} E_{mu,nu}(-lam (1+x)^mu)``.  The factor
``Gamma(nu)`` is forced by ``lam = 0``, where ``u`` must equal the rhs.

Evaluation strategy, in order:

1. closed forms for ``(a, b)`` in ``{(1, 1), (1/2, 1), (2, 1)}``;
2. for ``z < 0`` with ``|z|^{1/a}`` large, the asymptotic expansion
   (algebraic tail plus, for ``a >= 1``, the exponential terms), accepted only
   when its smallest term is below the target accuracy;
3. otherwise the power series at a precision raised by the cancellation
   estimate ``~1.5 |z|^{1/a} log2(e)`` bits.  The series is summed at two
   precisions and the precision is raised until both agree.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from .precision import Irrational, PrecisionContext, cached_context, to_mp

__all__ = ["MLParams", "MLConvergenceError", "ml_eval", "ml_eval_mp", "ml_solution", "ml_monomial_coeffs"]

MAX_BITS = 1 << 15


class MLConvergenceError(ArithmeticError):
    """The requested accuracy could not be reached below the precision cap."""


class MLParams:
    """Positive parameters ``(a, b)``; exact values (``Fraction``/``Irrational``) are kept."""

    __slots__ = ("a", "b")

    def __init__(self, a, b=1):
        self.a = _exact(a)
        self.b = _exact(b)
        if float(self.a) <= 0 or float(self.b) <= 0:
            raise ValueError(f"Mittag-Leffler parameters must be positive, got ({a}, {b})")

    def __iter__(self):
        yield self.a
        yield self.b

    def __repr__(self):
        return f"MLParams({self.a}, {self.b})"


def _exact(v):
    if isinstance(v, (Fraction, Irrational)):
        return v
    if isinstance(v, (int, str)):
        try:
            return Fraction(v)
        except ValueError:
            return Irrational(v)
    if isinstance(v, float):
        return Fraction(v)
    return v


def _closed_form(a, b, z, ctx):
    mp = ctx.mp
    if a == 1 and b == 1:
        return mp.exp(z)
    if a == Fraction(1, 2) and b == 1:
        # E_{1/2,1}(z) = exp(z^2) erfc(-z)
        return mp.exp(z * z) * mp.erfc(-z)
    if a == 2 and b == 1:
        return mp.cos(mp.sqrt(-z)) if z <= 0 else mp.cosh(mp.sqrt(z))
    return None


def _series(a, b, z, ctx, delta):
    """Power series summed in ``ctx``.

    Stops after ten consecutive terms below ``delta`` times the current
    partial sum, counted only once the terms are decreasing.  Using the
    partial sum (not the largest partial sum seen) keeps the relative
    accuracy when the result is far smaller than the intermediate terms.
    """
    mp = ctx.mp
    s = mp.zero
    small = 0
    zk = mp.one
    prev = mp.inf
    k = 0
    while small < 10:
        t = zk * mp.rgamma(b + a * k)
        s += t
        mag = abs(t)
        small = small + 1 if (mag <= delta * abs(s) and mag <= prev) else 0
        prev = mag if mag != 0 else prev
        zk *= z
        k += 1
        if k > 10**6:
            raise MLConvergenceError("series did not converge in 10^6 terms")
    return s


def _asymptotic(a, b, z, ctx, delta):
    """Expansion for ``z < 0``, large ``|z|``; ``None`` if it cannot reach ``delta``."""
    mp = ctx.mp
    x = -z
    s = mp.zero
    best = mp.inf
    tail = mp.zero
    def envelope(k):
        # |1/Gamma(b - a k)| <= Gamma(a k - b + 1) / pi
        g = a * k - b + 1
        if g <= 0:
            return abs(mp.power(x, -k) * mp.rgamma(b - a * k))
        return mp.exp(mp.loggamma(g) - k * mp.log(x)) / mp.pi

    k = 1
    while k < 5000:
        tail -= mp.power(z, -k) * mp.rgamma(b - a * k)
        best = envelope(k + 1)  # bound on the first omitted term
        if k > 1 and best > envelope(k):
            break  # optimal truncation: the envelope started growing
        k += 1
    if a >= 1:
        if a >= 2:
            return None
        w = mp.mpf(1) if a > 1 else mp.mpf(1) / 2
        zeta = mp.power(x, 1 / a) * mp.expjpi(1 / a)
        s = w * 2 * mp.re(mp.power(zeta, 1 - b) * mp.exp(zeta)) / a
    val = s + tail
    if best > delta * max(abs(val), mp.mpf(10) ** -300):
        return None
    return val


def ml_eval_mp(a, b, z, ctx: PrecisionContext, delta=None):
    """``E_{a,b}(z)`` with relative accuracy ``delta`` (default ``eps(ctx)``), returned in ``ctx``."""
    a, b = _exact(a), _exact(b)
    if float(a) <= 0 or float(b) <= 0:
        raise ValueError(f"Mittag-Leffler parameters must be positive, got ({a}, {b})")
    mp = ctx.mp
    delta = mp.mpf(delta) if delta is not None else mp.mpf(2) ** (1 - ctx.q)
    zf = float(z)
    if zf == 0:
        return mp.rgamma(to_mp(b, ctx))
    want = max(ctx.q, int(-math.log2(float(delta))) + 8) + 16
    hi = cached_context(want)
    zv = to_mp(z, hi)
    cf = _closed_form(a, b, zv, hi)
    if cf is not None:
        return mp.mpf(cf)
    av, bv = to_mp(a, hi), to_mp(b, hi)
    growth = abs(zf) ** (1.0 / float(a))
    if zf < 0 and growth > 20:
        r = _asymptotic(av, bv, zv, hi, hi.mp.mpf(delta) / 16)
        if r is not None:
            return mp.mpf(r)
    extra = int(1.5 * growth * math.log2(math.e)) + 16 if zf < 0 else 16
    prev = None
    while True:
        q = want + extra
        if q > MAX_BITS:
            raise MLConvergenceError(f"E_{{{a},{b}}}({zf}) needs more than {MAX_BITS} bits")
        c = cached_context(q)
        val = _series(to_mp(a, c), to_mp(b, c), to_mp(z, c), c, c.mp.mpf(delta) / 16)
        if prev is not None:
            diff = abs(val - prev)
            if diff <= delta * abs(val) or (val == 0 and diff == 0):
                return mp.mpf(val)
        c2 = cached_context(q + 32)
        prev = _series(to_mp(a, c2), to_mp(b, c2), to_mp(z, c2), c2, c2.mp.mpf(delta) / 16)
        diff = abs(c2.mp.mpf(val) - prev)
        if diff <= delta * abs(prev):
            return mp.mpf(prev)
        extra = 2 * extra + 32


def ml_eval(a, b, z, delta: float = 1e-16) -> float:
    """Double-precision value of ``E_{a,b}(z)`` accurate to relative ``delta``.

    ``a`` and ``b`` may be ints, Fractions, strings such as ``"1/3"`` or
    ``"1/pi"``, or :class:`~jfp.precision.Irrational`.
    """
    q = max(64, int(-math.log2(delta)) + 16)
    return float(ml_eval_mp(a, b, z, cached_context(q), delta))


def ml_solution(mu, nu, lam, x, delta: float = 1e-16):
    """Solution of ``u + lam I^mu u = (1+x)^{nu-1}`` (scalar or array ``x``).

    ``u(x) = Gamma(nu) (1+x)^{nu-1} E_{mu,nu}(-lam (1+x)^mu)``.
    """
    mu, nu = _exact(mu), _exact(nu)
    muf, nuf, lamf = float(mu), float(nu), float(lam)
    xs = np.asarray(x, dtype=float)
    if np.any(xs < -1) or np.any(xs > 1):
        raise ValueError("x must lie in [-1, 1]")

    def one(xv):
        s = 1.0 + xv
        if s == 0:
            if nuf == 1:
                return 1.0
            if nuf > 1:
                return 0.0
            return math.inf
        q = max(64, int(-math.log2(delta)) + 16)
        ctx = cached_context(q)
        sv = ctx.mp.mpf(s)
        z = -ctx.mp.mpf(lamf) * ctx.mp.power(sv, to_mp(mu, ctx))
        e = ml_eval_mp(mu, nu, z, ctx, delta)
        nv = to_mp(nu, ctx)
        return float(ctx.mp.gamma(nv) * ctx.mp.power(sv, nv - 1) * e)

    if xs.ndim == 0:
        return one(float(xs))
    return np.array([one(float(v)) for v in xs.ravel()]).reshape(xs.shape)


def ml_monomial_coeffs(mu, nu, lam, n: int, ctx: PrecisionContext):
    """Coefficients of ``(1+x)^{nu-1} ((1+x)/2)^{k mu}`` in the solution: ``Gamma(nu) (-2^mu lam)^k / Gamma(nu + k mu)``."""
    mp = ctx.mp
    muv, nuv = to_mp(_exact(mu), ctx), to_mp(_exact(nu), ctx)
    c = -mp.power(2, muv) * to_mp(lam, ctx)
    g = mp.gamma(nuv)
    return [g * mp.power(c, k) * mp.rgamma(nuv + k * muv) for k in range(n)]
