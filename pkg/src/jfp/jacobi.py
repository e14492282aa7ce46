"""Classical Jacobi polynomial machinery.

Evaluation by three-term recurrence and Clenshaw summation, the monomial
connection matrix ``C`` (``P = M0 C`` with ``M0 = [1, (1+x), (1+x)^2, ...]``),
the Gram matrix of ``M0``, squared norms, and the banded conversion (``R``),
weighted conversion (``L``) and weighted differentiation (``W``) operators.

Parameters ``alpha``/``beta`` may be ints, :class:`fractions.Fraction` or
mpmath numbers.  The user-facing type :class:`JacobiParams` enforces
``alpha, beta > -1``; internal helpers also accept ``alpha = -1`` because the
integration operator passes through ``P^{(alpha-1, beta+1)}``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .banded import BandedMatrix
from .precision import PrecisionContext, to_mp

__all__ = [
    "JacobiParams",
    "recurrence_coefficients",
    "jacobi_eval",
    "jacobi_all",
    "jacobi_all_float",
    "clenshaw",
    "clenshaw_float",
    "connection_matrix",
    "gram_matrix",
    "jacobi_norms",
    "jacobi_norm",
    "connection_inverse",
    "conversion_R",
    "weighted_conversion_L",
    "weighted_diff_W",
    "integration_W_inv",
    "mult_1px",
    "value_at_one",
]


def _frac(v):
    """Exact rational for ints/Fractions/decimal strings, otherwise the value itself."""
    if isinstance(v, (int, Fraction)):
        return Fraction(v)
    if isinstance(v, str):
        return Fraction(v)
    return v


@dataclass(frozen=True)
class JacobiParams:
    alpha: object = Fraction(0)
    beta: object = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "alpha", _frac(self.alpha))
        object.__setattr__(self, "beta", _frac(self.beta))
        if not (self.alpha > -1 and self.beta > -1):
            raise ValueError(f"Jacobi parameters must exceed -1, got ({self.alpha}, {self.beta})")

    def __iter__(self):
        yield self.alpha
        yield self.beta


def _ab(params_or_alpha, beta=None):
    if beta is None:
        a, b = params_or_alpha
        return a, b
    return params_or_alpha, beta


# -- evaluation --------------------------------------------------------------


def recurrence_coefficients(alpha, beta, n, ctx: PrecisionContext | None = None):
    """``(A, B, C)`` with ``P_{n+1} = (A x + B) P_n - C P_{n-1}`` for ``n >= 1``.

    ``n = 0`` returns the explicit ``P_1`` coefficients (``C = 0``), which stay
    finite in the degenerate case ``alpha + beta = -1``.
    """
    conv = (lambda v: to_mp(v, ctx)) if ctx is not None else float
    a, b = conv(alpha), conv(beta)
    if n == 0:
        A = (a + b + 2) / 2
        B = (a - b) / 2
        return A, B, 0 * A
    s = 2 * n + a + b
    den = 2 * (n + 1) * (n + a + b + 1) * s
    A = (s + 1) * (s + 2) * s / den
    B = (s + 1) * (a * a - b * b) / den
    C = 2 * (n + a) * (n + b) * (s + 2) / den
    return A, B, C


def jacobi_all(alpha, beta, N: int, x, ctx: PrecisionContext):
    """``[P_0(x), ..., P_{N-1}(x)]`` at a single point, in ``ctx`` precision."""
    xv = to_mp(x, ctx)
    out = [ctx.mp.one]
    if N > 1:
        A, B, _ = recurrence_coefficients(alpha, beta, 0, ctx)
        out.append(A * xv + B)
    for n in range(1, N - 1):
        A, B, C = recurrence_coefficients(alpha, beta, n, ctx)
        out.append((A * xv + B) * out[n] - C * out[n - 1])
    return out[:N]


def jacobi_eval(params, n: int, x, ctx: PrecisionContext):
    """``P_n^{(alpha, beta)}(x)`` by the three-term recurrence."""
    a, b = params
    if n < 0:
        raise ValueError("degree must be non-negative")
    return jacobi_all(a, b, n + 1, x, ctx)[n]


def jacobi_all_float(alpha, beta, N: int, x):
    """Vectorised double-precision ``P_0..P_{N-1}`` on an array of points; shape ``(N, len(x))``."""
    x = np.asarray(x, dtype=float)
    out = np.empty((N,) + x.shape)
    out[0] = 1.0
    if N > 1:
        A, B, _ = recurrence_coefficients(float(alpha), float(beta), 0)
        out[1] = A * x + B
    for n in range(1, N - 1):
        A, B, C = recurrence_coefficients(float(alpha), float(beta), n)
        out[n + 1] = (A * x + B) * out[n] - C * out[n - 1]
    return out


def clenshaw(coeffs, alpha, beta, x, ctx: PrecisionContext):
    """``sum_k c_k P_k(x)`` at one point in ``ctx`` precision."""
    xv = to_mp(x, ctx)
    N = len(coeffs)
    b1 = b2 = ctx.mp.zero
    for k in range(N - 1, -1, -1):
        A, B, _ = recurrence_coefficients(alpha, beta, k, ctx)
        _, _, C1 = recurrence_coefficients(alpha, beta, k + 1, ctx)
        b1, b2 = to_mp(coeffs[k], ctx) + (A * xv + B) * b1 - C1 * b2, b1
    return b1


def clenshaw_float(coeffs, alpha, beta, x):
    """Vectorised double-precision Clenshaw sum on an array of points."""
    x = np.asarray(x, dtype=float)
    coeffs = np.asarray(coeffs, dtype=float)
    b1 = np.zeros_like(x)
    b2 = np.zeros_like(x)
    a, b = float(alpha), float(beta)
    for k in range(len(coeffs) - 1, -1, -1):
        A, B, _ = recurrence_coefficients(a, b, k)
        _, _, C1 = recurrence_coefficients(a, b, k + 1)
        b1, b2 = coeffs[k] + (A * x + B) * b1 - C1 * b2, b1
    return b1


def value_at_one(alpha, beta, N: int, ctx: PrecisionContext):
    """``P_n(1) = (alpha+1)_n / n!`` for ``n < N``."""
    a = to_mp(alpha, ctx)
    out = [ctx.mp.one]
    for n in range(1, N):
        out.append(out[-1] * (a + n) / n)
    return out


# -- monomial connection -----------------------------------------------------


def _dense_zero(n, m):
    out = np.empty((n, m), dtype=object)
    out[...] = 0
    return out


def connection_matrix(params, N: int, ctx: PrecisionContext):
    """Upper triangular ``N x N`` section of ``C^{(alpha, beta)}`` (dense object array)."""
    a, b = (to_mp(v, ctx) for v in params)
    C = _dense_zero(N, N)
    mp = ctx.mp
    for n in range(N):
        # C_{0,n} = (-1)^n (beta+1)_n / n!
        v = mp.one
        for t in range(n):
            v = v * (b + 1 + t) / (t + 1)
        v = v if n % 2 == 0 else -v
        C[0, n] = v
        for k in range(n):
            v = -v * (n + a + b + 1 + k) * (n - k) / (2 * (k + 1) * (k + b + 1))
            C[k + 1, n] = v
    return C


def gram_matrix(params, N: int, ctx: PrecisionContext):
    """``M_{ij} = 2^{a+b+i+j+1} B(b+i+j+1, a+1)``, the Gram matrix of ``M0`` under ``w_{a,b}``."""
    a, b = (to_mp(v, ctx) for v in params)
    mp = ctx.mp
    h = [mp.power(2, a + b + s + 1) * mp.beta(b + s + 1, a + 1) for s in range(2 * N - 1)]
    M = _dense_zero(N, N)
    for i in range(N):
        for j in range(N):
            M[i, j] = h[i + j]
    return M


def jacobi_norm(alpha, beta, n: int, ctx: PrecisionContext):
    a, b = to_mp(alpha, ctx), to_mp(beta, ctx)
    mp = ctx.mp
    if n == 0:
        return mp.power(2, a + b + 1) * mp.gamma(a + 1) * mp.gamma(b + 1) / mp.gamma(a + b + 2)
    return (mp.power(2, a + b + 1) / (2 * n + a + b + 1)
            * mp.gamma(n + a + 1) * mp.gamma(n + b + 1) / (mp.gamma(n + a + b + 1) * mp.factorial(n)))


def jacobi_norms(params, N: int, ctx: PrecisionContext):
    """Squared norms ``||P_n||^2`` for ``n < N`` as a list."""
    a, b = params
    return [jacobi_norm(a, b, n, ctx) for n in range(N)]


def connection_inverse(params, N: int, ctx: PrecisionContext):
    """``C^{-1} = (||P||^2)^{-1} C^T M``, computed as a finite sum (upper triangular)."""
    C = connection_matrix(params, N, ctx)
    M = gram_matrix(params, N, ctx)
    h = jacobi_norms(params, N, ctx)
    out = _dense_zero(N, N)
    for i in range(N):
        for j in range(i, N):
            out[i, j] = np.dot(C[: i + 1, i], M[: i + 1, j]) / h[i]
    return out


# -- banded operators --------------------------------------------------------


def _raise_alpha(a, b, N, ctx):
    """``P^{(a,b)} = P^{(a+1,b)} R``: upper bidiagonal."""
    R = BandedMatrix.zeros(N, N, 0, 1)
    for n in range(N):
        s = 2 * n + a + b + 1
        if n == 0:
            R[0, 0] = ctx.mp.one
            continue
        R[n, n] = (n + a + b + 1) / s
        R[n - 1, n] = -(n + b) / s
    return R


def _raise_beta(a, b, N, ctx):
    """``P^{(a,b)} = P^{(a,b+1)} R``: upper bidiagonal."""
    R = BandedMatrix.zeros(N, N, 0, 1)
    for n in range(N):
        s = 2 * n + a + b + 1
        if n == 0:
            R[0, 0] = ctx.mp.one
            continue
        R[n, n] = (n + a + b + 1) / s
        R[n - 1, n] = (n + a) / s
    return R


def _lower_beta(a, b, N, ctx):
    """``(1+x) P^{(a,b+1)} = P^{(a,b)} L``: lower bidiagonal."""
    L = BandedMatrix.zeros(N, N, 1, 0)
    for n in range(N):
        s = 2 * n + a + b + 2
        L[n, n] = 2 * (n + b + 1) / s
        if n + 1 < N:
            L[n + 1, n] = 2 * (n + 1) / s
    return L


def _lower_alpha(a, b, N, ctx):
    """``(1-x) P^{(a+1,b)} = P^{(a,b)} L``: lower bidiagonal."""
    L = BandedMatrix.zeros(N, N, 1, 0)
    for n in range(N):
        s = 2 * n + a + b + 2
        L[n, n] = 2 * (n + a + 1) / s
        if n + 1 < N:
            L[n + 1, n] = -2 * (n + 1) / s
    return L


def _check_steps(k, j):
    if int(k) != k or int(j) != j or k < 0 or j < 0:
        raise ValueError(f"parameter increments must be non-negative integers, got ({k}, {j})")
    return int(k), int(j)


def conversion_R(params, k, j, N: int, ctx: PrecisionContext) -> BandedMatrix:
    """``R`` with ``P^{(a,b)} = P^{(a+k,b+j)} R``; bandwidths ``(0, k+j)``.

    Finite sections of products of upper triangular matrices are exact, so
    the composition of elementary steps needs no padding.
    """
    k, j = _check_steps(k, j)
    a, b = (to_mp(v, ctx) for v in params)
    out = BandedMatrix.identity(N, ctx.mp.one)
    for t in range(k):
        out = _raise_alpha(a + t, b, N, ctx) @ out
    for t in range(j):
        out = _raise_beta(a + k, b + t, N, ctx) @ out
    return out


def weighted_conversion_L(params, k, j, N: int, ctx: PrecisionContext) -> BandedMatrix:
    """``L`` with ``(1-x)^k (1+x)^j P^{(a+k,b+j)} = P^{(a,b)} L``; bandwidths ``(k+j, 0)``."""
    k, j = _check_steps(k, j)
    a, b = (to_mp(v, ctx) for v in params)
    out = BandedMatrix.identity(N, ctx.mp.one)
    # (1+x)^j P^{(a+k, b+j)} -> P^{(a+k, b)}, then (1-x)^k down to P^{(a, b)}
    for t in range(j):
        out = out @ _lower_beta(a + k, b + t, N, ctx)
    for t in range(k - 1, -1, -1):
        out = _lower_alpha(a + t, b, N, ctx) @ out
    return out


def weighted_diff_W(params, N: int, ctx: PrecisionContext) -> BandedMatrix:
    """Diagonal ``W`` with ``D[(1+x)^{b+1} P^{(a,b+1)}] = (1+x)^b P^{(a+1,b)} W``.

    ``params = (a, b)`` names the target of the lowering, so ``W_n = n + b + 1``.
    """
    _, b = (to_mp(v, ctx) for v in params)
    return BandedMatrix.diagonal_matrix([n + b + 1 for n in range(N)])


def integration_W_inv(params, N: int, ctx: PrecisionContext) -> BandedMatrix:
    """Diagonal ``W^{-1}`` so that ``int_{-1}^x (1+t)^b P^{(a,b)} = (1+x)^{b+1} P^{(a-1,b+1)} W^{-1}``."""
    _, b = (to_mp(v, ctx) for v in params)
    if b <= -1:
        raise ValueError("weighted integral from -1 needs beta > -1")
    return BandedMatrix.diagonal_matrix([1 / (n + b + 1) for n in range(N)])


def mult_1px(params, N: int, ctx: PrecisionContext) -> BandedMatrix:
    """Tridiagonal matrix of multiplication by ``(1+x)``: ``L^{(a,b)}_{(a,b+1)} R^{(a,b+1)}_{(a,b)}``.

    Lower-times-upper sections are exact, so no padding is needed.
    """
    if N < 1:
        raise ValueError("N must be positive")
    L = weighted_conversion_L(params, 0, 1, N, ctx)
    R = conversion_R(params, 0, 1, N, ctx)
    return L @ R
