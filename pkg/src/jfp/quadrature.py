"""Gauss-Jacobi quadrature in double and arbitrary precision.

Nodes start from :func:`scipy.special.roots_jacobi` and are refined by
Newton's method on ``P_n`` (in double or in ``q`` bits); weights always come
from the classical closed form
``w_i = G_n / ((1 - x_i^2) P_n'(x_i)^2)``.
"""

from __future__ import annotations

import functools
import math

import numpy as np
import scipy.special as sps

from .jacobi import jacobi_all_float, recurrence_coefficients
from .precision import PrecisionContext, cached_context, to_mp

__all__ = ["gauss_jacobi", "gauss_jacobi_float"]


@functools.lru_cache(maxsize=64)
def _gauss_jacobi_float_cached(n: int, a: float, b: float):
    x, _ = sps.roots_jacobi(n, a, b)
    # eigenvector weights lose ~n ulps; polish nodes and use the closed form
    for _ in range(2):
        P = jacobi_all_float(a, b, n + 1, x)[n]
        dP = (n + a + b + 1) / 2 * jacobi_all_float(a + 1, b + 1, n, x)[n - 1]
        x = x - P / dP
    dP = (n + a + b + 1) / 2 * jacobi_all_float(a + 1, b + 1, n, x)[n - 1]
    # Gamma ratios via Pochhammer symbols; a log-gamma difference loses ~1e-13 here
    G = 2.0 ** (a + b + 1) * sps.poch(n + 1, a) / sps.poch(n + b + 1, a)
    w = 1 / ((1 - x) * (1 + x) * dP * dP) * G
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_jacobi_float(n: int, alpha=0.0, beta=0.0):
    """``n``-point rule for ``int_{-1}^1 f(x) (1-x)^alpha (1+x)^beta dx`` in double precision."""
    return _gauss_jacobi_float_cached(int(n), float(alpha), float(beta))


def _pn_and_deriv(n, a, b, x, rec):
    """``P_n(x)`` by the three-term recurrence and ``P_n'(x)`` from ``P_n, P_{n-1}``.

    ``x`` may be an object array; arrays stay on the left of every product
    (``mpf * ndarray`` would make mpmath try to convert the array).
    """
    p0, p1 = x * 0 + 1, x * rec[0][0] + rec[0][1]
    for A, B, C in rec[1:n]:
        p0, p1 = p1, (x * A + B) * p1 - p0 * C
    s = 2 * n + a + b
    dP = (p1 * n * ((a - b) - x * s) + p0 * (2 * (n + a) * (n + b))) / ((1 - x * x) * s)
    return p1, dP


@functools.lru_cache(maxsize=64)
def _gauss_jacobi_cached(n, alpha_s, beta_s, q):
    ctx = cached_context(q)
    mp = ctx.mp
    a, b = to_mp(alpha_s, ctx), to_mp(beta_s, ctx)
    x0, _ = gauss_jacobi_float(n, float(a), float(b))
    rec = [recurrence_coefficients(a, b, k, ctx) for k in range(n)]
    # Newton from double-accurate starts doubles the correct digits each step
    steps = max(1, math.ceil(math.log2(q / 50.0))) + 1
    G = (mp.power(2, a + b + 1) * mp.gamma(n + a + 1) * mp.gamma(n + b + 1)
         / (mp.gamma(n + a + b + 1) * mp.factorial(n)))
    # all nodes at once: object arrays, one recurrence sweep per Newton step
    x = np.array([mp.mpf(float(v)) for v in x0], dtype=object)
    for _ in range(steps):
        P, dP = _pn_and_deriv(n, a, b, x, rec)
        x = x - P / dP
    _, dP = _pn_and_deriv(n, a, b, x, rec)
    w = 1 / ((1 - x) * (1 + x) * dP * dP) * G
    nodes, weights = list(x), list(w)
    return tuple(nodes), tuple(weights)


def gauss_jacobi(n: int, alpha, beta, ctx: PrecisionContext):
    """``n``-point Gauss-Jacobi nodes and weights at the precision of ``ctx`` (lists of mpf)."""
    if n < 1:
        raise ValueError("need at least one node")
    nodes, weights = _gauss_jacobi_cached(int(n), str(alpha), str(beta), ctx.q)
    return [ctx.mp.mpf(v) for v in nodes], [ctx.mp.mpf(v) for v in weights]
