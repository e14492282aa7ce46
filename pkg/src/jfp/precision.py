"""Arbitrary-precision arithmetic contexts and the special functions built on them.

Every high-precision computation in the package runs inside a
:class:`PrecisionContext`.  A context owns its own :class:`mpmath.MPContext`,
so numbers created through it round at ``q`` mantissa bits regardless of what
other threads or contexts are doing.
"""

from __future__ import annotations

import functools
import math
import numbers
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath

__all__ = [
    "PrecisionContext",
    "Irrational",
    "eps",
    "gamma",
    "loggamma",
    "beta",
    "erfc",
    "gamma_ratio",
    "to_mp",
    "cached_context",
    "DOUBLE",
]


def eps(q: int) -> float:
    """Machine epsilon ``2**(1-q)`` of ``q``-bit arithmetic."""
    if q < 1:
        raise ValueError(f"precision must be positive, got {q}")
    return math.ldexp(1.0, 1 - q)


@dataclass(frozen=True)
class PrecisionContext:
    """Immutable ``q``-bit floating point environment.

    Arithmetic on the numbers returned by :meth:`mpf` (and everything derived
    from them) is rounded to nearest at ``q`` bits.
    """

    q: int
    mp: mpmath.ctx_mp.MPContext = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not isinstance(self.q, numbers.Integral) or self.q < 24:
            raise ValueError(f"precision must be an integer >= 24 bits, got {self.q!r}")
        ctx = mpmath.MPContext()
        ctx.prec = int(self.q)
        object.__setattr__(self, "mp", ctx)

    @property
    def eps(self):
        return eps(self.q)

    def mpf(self, value):
        """Convert ``value`` (int, float, Fraction, str, mpf or :class:`Irrational`) to ``q`` bits."""
        return to_mp(value, self)

    def zero(self):
        return self.mp.zero

    def one(self):
        return self.mp.one

    def with_bits(self, q: int) -> "PrecisionContext":
        return PrecisionContext(int(q))


DOUBLE = PrecisionContext(53)


@dataclass(frozen=True)
class Irrational:
    """A real constant known only through an expression such as ``"1/pi"``.

    The expression is re-evaluated at whatever precision is asked for, so an
    irrational order stays correct to the working precision of every build.
    Decimal literals are accepted too; they are then treated as
    "irrational" in the sense that no exact rational structure is assumed.
    """

    expr: str

    def value(self, ctx: PrecisionContext):
        from .expr import evaluate_constant

        return evaluate_constant(self.expr, ctx)

    def __float__(self):
        return float(self.value(DOUBLE))

    def __str__(self):
        return self.expr

    def scaled(self, numerator: int) -> "Irrational":
        """The constant ``numerator / self``."""
        return Irrational(f"({numerator})/({self.expr})")


def to_mp(value, ctx: PrecisionContext):
    mp = ctx.mp
    if isinstance(value, Irrational):
        return value.value(ctx)
    if isinstance(value, Fraction):
        return mp.mpf(value.numerator) / value.denominator
    if isinstance(value, numbers.Integral):
        return mp.mpf(int(value))
    if isinstance(value, str):
        return mp.mpf(value)
    if isinstance(value, mpmath.mpf) or hasattr(value, "_mpf_"):
        return mp.mpf(value)
    return mp.mpf(float(value))


def _is_pole(x) -> bool:
    return x <= 0 and x == int(x)


def gamma(x, ctx: PrecisionContext):
    """Gamma function at ``q`` bits.  Raises ``ValueError`` at the poles."""
    xv = to_mp(x, ctx)
    if _is_pole(xv):
        raise ValueError(f"gamma has a pole at {x}")
    return ctx.mp.gamma(xv)


def loggamma(x, ctx: PrecisionContext):
    """``log|Gamma(x)|``; only used for positive arguments here."""
    xv = to_mp(x, ctx)
    if _is_pole(xv):
        raise ValueError(f"gamma has a pole at {x}")
    return ctx.mp.loggamma(xv).real if xv < 0 else ctx.mp.loggamma(xv)


def beta(a, b, ctx: PrecisionContext):
    """Euler beta function ``Gamma(a)Gamma(b)/Gamma(a+b)`` for ``a, b > 0``."""
    av, bv = to_mp(a, ctx), to_mp(b, ctx)
    if av <= 0 or bv <= 0:
        raise ValueError(f"beta requires positive arguments, got ({a}, {b})")
    return ctx.mp.beta(av, bv)


def erfc(x, ctx: PrecisionContext):
    """Complementary error function; negative arguments use ``2 - erfc(|x|)``."""
    xv = to_mp(x, ctx)
    if xv < 0:
        return 2 - ctx.mp.erfc(-xv)
    return ctx.mp.erfc(xv)


def gamma_ratio(a, mu, ctx: PrecisionContext):
    """``Gamma(a) / Gamma(a + mu)``.

    Large arguments go through log-gamma so the intermediate gammas never
    overflow the working exponent range.
    """
    av, mv = to_mp(a, ctx), to_mp(mu, ctx)
    if av > 30 and av + mv > 30:
        # the log-gammas are ~ a*log(a); carry enough guard bits to absorb that
        guard = 16 + int(ctx.mp.log(av * ctx.mp.log(av), 2))
        hi = cached_context(ctx.q + guard)
        ah, mh = to_mp(av, hi), to_mp(mv, hi)
        ratio = hi.mp.exp(hi.mp.loggamma(ah) - hi.mp.loggamma(ah + mh))
        return ctx.mp.mpf(ratio)
    return gamma(av, ctx) / gamma(av + mv, ctx)


@functools.lru_cache(maxsize=256)
def cached_context(q: int) -> PrecisionContext:
    """Shared context for ``q`` bits (contexts are immutable, so sharing is safe)."""
    return PrecisionContext(int(q))
