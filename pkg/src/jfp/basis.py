"""The JFP basis ``Q_n(x) = (1+y)^b P_n^{(alpha,beta)}(y)`` with ``(1+x)/2 = ((1+y)/2)^p``.

Contains the variable map, pointwise evaluation, the diagonal scaling that
links ``Q`` to weighted fractional monomials, and the banded matrices for
multiplication by ``x`` and for first-order integration.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .banded import BandedMatrix
from .jacobi import (
    JacobiParams,
    clenshaw,
    clenshaw_float,
    conversion_R,
    integration_W_inv,
    jacobi_all,
    mult_1px,
    weighted_conversion_L,
)
from .precision import Irrational, PrecisionContext, to_mp

__all__ = [
    "JFPParams",
    "map_to_y",
    "map_to_x",
    "jfp_eval",
    "jfp_sum",
    "jfp_sum_float",
    "scaling_D",
    "mult_x_matrix",
    "int_matrix",
    "int_matrix_feasible",
]


def _exact(v):
    if isinstance(v, Irrational):
        return v
    if isinstance(v, (int, Fraction, str)):
        return Fraction(v)
    raise TypeError(f"expected an exact rational or Irrational, got {v!r}")


@dataclass(frozen=True)
class JFPParams:
    """Basis parameters ``(alpha, beta, b, p)``; ``p`` may be :class:`Irrational`."""

    alpha: object = Fraction(0)
    beta: object = Fraction(0)
    b: object = Fraction(0)
    p: object = Fraction(1)

    def __post_init__(self):
        JacobiParams(self.alpha, self.beta)  # validates alpha, beta > -1
        for name in ("alpha", "beta", "b", "p"):
            object.__setattr__(self, name, _exact(getattr(self, name)))
        if float(self.p) <= 0:
            raise ValueError(f"p must be positive, got {self.p}")

    @property
    def jacobi(self) -> tuple:
        return (self.alpha, self.beta)

    @property
    def integer_p(self) -> bool:
        return isinstance(self.p, Fraction) and self.p.denominator == 1

    @property
    def integrable(self) -> bool:
        return float(self.b) > -float(self.p)

    def key(self) -> str:
        return f"a={self.alpha},b_jac={self.beta},b={self.b},p={self.p}"

    def __str__(self):
        return f"Q^({self.alpha},{self.beta},{self.b},{self.p})"


def map_to_y(x, p):
    """``y = 2((1+x)/2)^{1/p} - 1`` (vectorised over NumPy arrays)."""
    p = float(p)
    x = np.asarray(x, dtype=float)
    return 2.0 * np.power(np.clip((1.0 + x) / 2.0, 0.0, None), 1.0 / p) - 1.0


def map_to_x(y, p):
    p = float(p)
    y = np.asarray(y, dtype=float)
    return 2.0 * np.power(np.clip((1.0 + y) / 2.0, 0.0, None), p) - 1.0


def _map_to_y_mp(x, p, ctx):
    mp = ctx.mp
    xv = to_mp(x, ctx)
    return 2 * mp.power((1 + xv) / 2, 1 / to_mp(p, ctx)) - 1


def _check_domain(params: JFPParams, x):
    if float(params.b) < 0 and np.any(np.asarray(x, dtype=float) <= -1.0):
        raise ValueError(f"basis with b = {params.b} < 0 is singular at x = -1")


def jfp_eval(params: JFPParams, n: int, x, ctx: PrecisionContext):
    """``Q_n(x)`` in ``ctx`` precision."""
    _check_domain(params, float(x))
    y = _map_to_y_mp(x, params.p, ctx)
    P = jacobi_all(params.alpha, params.beta, n + 1, y, ctx)[n]
    return ctx.mp.power(1 + y, to_mp(params.b, ctx)) * P


def jfp_sum(params: JFPParams, coeffs, x, ctx: PrecisionContext):
    """``sum_n c_n Q_n(x)`` by Clenshaw in ``y``; the weight ``(1+y)^b`` is applied last."""
    _check_domain(params, float(x))
    y = _map_to_y_mp(x, params.p, ctx)
    s = clenshaw(coeffs, params.alpha, params.beta, y, ctx)
    return ctx.mp.power(1 + y, to_mp(params.b, ctx)) * s


def jfp_sum_float(params: JFPParams, coeffs, x):
    """Vectorised double-precision ``sum_n c_n Q_n(x)``."""
    x = np.asarray(x, dtype=float)
    _check_domain(params, x)
    y = map_to_y(x, params.p)
    s = clenshaw_float(coeffs, params.alpha, params.beta, y)
    b = float(params.b)
    if b == 0:
        return s
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.power(1.0 + y, b) * s


def scaling_D(b, p, N: int, ctx: PrecisionContext | None = None):
    """Diagonal entries ``d_n = 2^{(b+n)(1-1/p)}`` (floats, or mpf when ``ctx`` is given)."""
    if ctx is None:
        bf, pf = float(b), float(p)
        return np.array([2.0 ** ((bf + n) * (1.0 - 1.0 / pf)) for n in range(N)])
    mp = ctx.mp
    bv, pv = to_mp(b, ctx), to_mp(p, ctx)
    return [mp.power(2, (bv + n) * (1 - 1 / pv)) for n in range(N)]


def _int_p(params: JFPParams, what: str) -> int:
    if not params.integer_p:
        raise ValueError(f"{what} needs a positive integer p, got p = {params.p}")
    return int(params.p)


def mult_x_matrix(params: JFPParams, N: int, ctx: PrecisionContext) -> BandedMatrix:
    """``X = 2^{1-p} J^p - 1`` with ``J`` the ``(1+y)`` multiplication matrix; bandwidths ``(p, p)``."""
    p = _int_p(params, "multiplication by x")
    J = mult_1px(params.jacobi, N + p, ctx)  # padded: powers of tridiagonal sections are inexact at the edge
    Jp = J.power(p).section(N)
    scale = ctx.mp.power(2, 1 - p)
    return Jp.scale(scale) - BandedMatrix.identity(N, ctx.mp.one)


def int_matrix_feasible(alpha, beta, b, p) -> bool:
    """``{p, beta-b, b+p-1-beta}`` all non-negative integers."""
    try:
        vals = [Fraction(p), Fraction(beta) - Fraction(b), Fraction(b) + Fraction(p) - 1 - Fraction(beta)]
    except TypeError:
        return False
    return all(v.denominator == 1 and v >= 0 for v in vals) and Fraction(p) > 0


def int_matrix(params: JFPParams, N: int, ctx: PrecisionContext) -> BandedMatrix:
    """First-order integration ``int_{-1}^x`` in the JFP basis; bandwidths ``(p, p)``."""
    a, be, b, p = params.alpha, params.beta, params.b, params.p
    if not int_matrix_feasible(a, be, b, p):
        raise ValueError(
            f"integration matrix requires p, beta-b and b+p-1-beta to be non-negative integers; "
            f"got p={p}, beta-b={Fraction(be) - Fraction(b) if not isinstance(p, Irrational) else '?'}, "
            f"b+p-1-beta={Fraction(b) + Fraction(p) - 1 - Fraction(be) if not isinstance(p, Irrational) else '?'}")
    p = int(p)
    L = weighted_conversion_L((a, be), 0, p, N, ctx)
    R1 = conversion_R((a - 1, b + p), 1, be - b, N, ctx)
    Winv = integration_W_inv((a, b + p - 1), N, ctx)
    R2 = conversion_R((a, be), 0, b + p - 1 - be, N, ctx)
    scale = to_mp(p, ctx) / ctx.mp.power(2, p - 1)
    # lower @ upper sections are exact, no padding needed
    return (L @ (R1 @ (Winv @ R2))).scale(scale)
