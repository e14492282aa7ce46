"""Linear fractional integral equations in the JFP basis.

An equation

    a_0(x) u + sum_k a_k(x) I^{mu_k}[b_k u](x) + sum_j c_j g_j(x) = f(x)

with optional unknown constants ``c_j`` and side conditions becomes a lower
banded system in the coefficients of ``u`` in ``Q^{(alpha,beta,b,p)}``.
Fractional integration matrices are built in high precision
(:func:`~jfp.fracint.pseudo_stabilized`), everything else in the working
precision of the final solve (double by default).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce

import numpy as np

from .banded import BandedMatrix, bandwidths, solve_lower_banded
from .basis import JFPParams, int_matrix, int_matrix_feasible, jfp_sum_float
from .expr import Expression
from .fracint import FracIntMatrix, k_star_of, pseudo_stabilized
from .jacobi import jacobi_all_float, jacobi_norms, mult_1px, recurrence_coefficients
from .precision import Irrational, PrecisionContext, cached_context, to_mp
from .quadrature import gauss_jacobi, gauss_jacobi_float

log = logging.getLogger(__name__)

__all__ = [
    "Term",
    "Unknown",
    "SideCondition",
    "Reconstruction",
    "FIEProblem",
    "BasisSelection",
    "SolutionFunction",
    "BorderedSolution",
    "Operator",
    "BasisError",
    "RHSError",
    "SolveError",
    "select_basis",
    "expand_rhs",
    "jacobi_coefficients",
    "mult_matrix_fn",
    "integration_operator",
    "assemble",
    "solve",
    "solve_auto",
    "solve_bordered",
    "evaluate",
    "condition_estimate",
]


class BasisError(ValueError):
    """No admissible ``(p, b)`` for the problem."""


class RHSError(ValueError):
    """A function does not have a decaying expansion in the chosen basis."""


class SolveError(ArithmeticError):
    """Singular or rank-deficient truncated system."""


def _coef(v) -> Expression:
    return v if isinstance(v, Expression) else Expression(str(v))


def _order(v):
    if isinstance(v, (Fraction, Irrational)):
        return v
    if isinstance(v, int):
        return Fraction(v)
    if isinstance(v, str):
        return Fraction(v)
    raise TypeError(f"orders must be exact (Fraction/int/'a/b') or Irrational, got {v!r}")


# -- problem description -----------------------------------------------------


@dataclass(frozen=True)
class Term:
    """``outer(x) * I^order[inner(x) * u]``; ``order = 0`` is the identity."""

    order: object = Fraction(0)
    outer: Expression = field(default_factory=lambda: Expression("1"))
    inner: Expression = field(default_factory=lambda: Expression("1"))

    def __post_init__(self):
        object.__setattr__(self, "order", _order(self.order))
        object.__setattr__(self, "outer", _coef(self.outer))
        object.__setattr__(self, "inner", _coef(self.inner))
        if float(self.order) < 0:
            raise ValueError("integration orders must be non-negative")


@dataclass(frozen=True)
class Unknown:
    """An unknown constant ``name`` entering the equation as ``c * func(x)``."""

    name: str
    func: Expression

    def __post_init__(self):
        object.__setattr__(self, "func", _coef(self.func))


@dataclass(frozen=True)
class SideCondition:
    """``(I^order u)(x0) + sum_j coeffs[j] c_j = value``."""

    x0: float
    value: float
    order: object = Fraction(0)
    coeffs: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "order", _order(self.order))


@dataclass(frozen=True)
class Reconstruction:
    """``w(x) = I^order[u](x) + offset(x) + sum_j c_j funcs[j](x)``."""

    order: object = Fraction(0)
    offset: Expression = field(default_factory=lambda: Expression("0"))
    funcs: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "order", _order(self.order))
        object.__setattr__(self, "offset", _coef(self.offset))
        object.__setattr__(self, "funcs", {k: _coef(v) for k, v in self.funcs.items()})


@dataclass
class FIEProblem:
    """Declarative linear FIE.

    ``rhs`` is the full right-hand side ``f``; ``nu`` declares that
    ``f = (1+x)^{nu-1} g`` with ``g`` smooth in fractional powers of ``1+x``,
    which fixes the singular part of the basis.
    """

    terms: list
    rhs: Expression = field(default_factory=lambda: Expression("1"))
    nu: object = Fraction(1)
    unknowns: list = field(default_factory=list)
    side_conditions: list = field(default_factory=list)
    reconstruct: Reconstruction | None = None
    name: str = "fie"
    exact: dict | None = None

    def __post_init__(self):
        self.terms = [t if isinstance(t, Term) else Term(*t) for t in self.terms]
        self.rhs = _coef(self.rhs)
        self.nu = _order(self.nu)
        orders = self.positive_orders
        if not orders:
            raise ValueError("the equation has no integral term")
        irr = {str(o) for o in orders if isinstance(o, Irrational)}
        if irr and (len(irr) > 1 or any(isinstance(o, Fraction) and o.denominator != 1 for o in orders)):
            raise ValueError("an irrational order can only be combined with itself")
        if float(self.nu) <= 0:
            raise ValueError("nu must be positive")

    @property
    def positive_orders(self) -> list:
        return [t.order for t in self.terms if float(t.order) > 0]

    @property
    def mu1(self):
        return min(self.positive_orders, key=float)


# -- basis selection ---------------------------------------------------------


@dataclass(frozen=True)
class BasisSelection:
    params: JFPParams
    k_star: int
    n: int
    permissible_b: tuple
    mu1: object

    @property
    def p(self):
        return self.params.p

    @property
    def b(self):
        return self.params.b


def _lcm(a: int, b: int) -> int:
    return a * b // math.gcd(a, b)


def select_basis(problem: FIEProblem, k_star: int = 1, alpha=0, beta=0, b=None) -> BasisSelection:
    """Choose ``p`` and ``b`` from the orders and the declared rhs weight.

    ``p = n k_star / mu_1`` with ``n`` the common denominator of
    ``mu_k / mu_1``; ``b = p (nu - 1) - n'`` for ``n' >= 0`` with ``b > -p``.
    Preference: Algorithm 2 feasibility, then ``b = 0``, then the smallest ``n'``.
    """
    if k_star < 1:
        raise BasisError("k_star must be a positive integer")
    alpha, beta = Fraction(alpha), Fraction(beta)
    mu1 = problem.mu1
    if isinstance(mu1, Irrational):
        p = mu1.scaled(k_star)
        if problem.nu != 1:
            raise BasisError("an irrational order with a weighted rhs (nu != 1) gives an irrational b")
        pf = float(p)
        cands = [Fraction(-n) for n in range(0, math.ceil(pf)) if -n > -pf]
    else:
        den = reduce(_lcm, [(Fraction(o) / mu1).denominator for o in problem.positive_orders], 1)
        p = Fraction(k_star) / mu1 * den
        cands = []
        n = 0
        while True:
            bb = p * (problem.nu - 1) - n
            if bb <= -p:
                break
            cands.append(bb)
            n += 1
    if not cands:
        raise BasisError(f"no b with b > -p = {-float(p)} matches the rhs weight (nu = {problem.nu})")
    if b is not None:
        b = Fraction(b)
        if b not in cands:
            raise BasisError(f"b = {b} is not permissible; choose from {[str(c) for c in cands]}")
        choice = b
    else:
        def rank(bb):
            feasible = isinstance(p, Fraction) and int_matrix_feasible(alpha, beta, bb, p)
            return (not feasible, bb != 0, cands.index(bb))

        choice = min(cands, key=rank)
    params = JFPParams(alpha, beta, choice, p)
    n_off = cands.index(choice)
    return BasisSelection(params, k_star, n_off, tuple(cands), mu1)


# -- expansions --------------------------------------------------------------


def _nodes(M: int, params: JFPParams, ctx):
    if ctx is None or ctx.q <= 53:
        return gauss_jacobi_float(M, float(params.alpha), float(params.beta))
    return gauss_jacobi(M, params.alpha, params.beta, ctx)


def jacobi_coefficients(F, alpha, beta, K: int, M: int | None = None, ctx: PrecisionContext | None = None):
    """First ``K`` Jacobi coefficients of ``F(y)`` by ``M``-point Gauss-Jacobi quadrature.

    ``F`` receives a float array (double) or a single mpf (``ctx`` given).
    """
    if ctx is None or ctx.q <= 53:
        M = M or (2 * K + 20)
        y, w = gauss_jacobi_float(M, float(alpha), float(beta))
        vals = np.asarray(F(y), dtype=float) * w
        P = jacobi_all_float(alpha, beta, K, y)
        h = np.array([float(v) for v in jacobi_norms((alpha, beta), K, cached_context(64))])
        return (P @ vals) / h
    # node cost is O(M^2) in high precision; a smaller oversampling suffices there
    M = M or (K + 32)
    y, w = gauss_jacobi(M, alpha, beta, ctx)
    y = np.array(y, dtype=object)
    fw = np.array([F(yi) for yi in y], dtype=object) * np.array(w, dtype=object)
    h = jacobi_norms((alpha, beta), K, ctx)
    out = np.empty(K, dtype=object)
    p0 = np.array([ctx.mp.one] * M, dtype=object)
    p1 = None
    for k in range(K):
        if k == 0:
            cur = p0
        elif k == 1:
            A, B, _ = recurrence_coefficients(alpha, beta, 0, ctx)
            p1 = y * A + B
            cur = p1
        else:
            A, B, C = recurrence_coefficients(alpha, beta, k - 1, ctx)
            p0, p1 = p1, (y * A + B) * p1 - p0 * C
            cur = p1
        out[k] = ctx.mp.fsum(cur * fw) / h[k]
    return out


def _deweighted(f: Expression, params: JFPParams, ctx=None):
    """``F(y) = f(x(y)) / (1+y)^b`` as a callable for :func:`jacobi_coefficients`."""
    b = params.b
    if ctx is None or ctx.q <= 53:
        bf, pf = float(b), float(params.p)

        def F(y):
            s = 2.0 * np.power((1.0 + y) / 2.0, pf)
            return f(s - 1.0, one_plus_x=s) / np.power(1.0 + y, bf)

        return F
    mp = ctx.mp
    pv, bv = to_mp(params.p, ctx), to_mp(b, ctx)

    def Fm(y):
        s = 2 * mp.power((1 + y) / 2, pv)
        return f.mp(s - 1, ctx, one_plus_x=s) / mp.power(1 + y, bv)

    return Fm


def expand_rhs(f, basis, N: int, ctx: PrecisionContext | None = None, tail_tol: float = 1e-8,
               check_tail: bool = True):
    """Coefficients of ``f`` in the JFP basis (length ``N``).

    ``f(x(y)) (1+y)^{-b}`` is expanded in Jacobi polynomials of ``y``.  A longer
    expansion (at least 48 terms) is computed to check that the tail decays;
    :class:`RHSError` is raised when it does not.
    """
    params = basis.params if isinstance(basis, BasisSelection) else basis
    f = _coef(f)
    K = max(N, 48)
    hp = ctx is not None and ctx.q > 53
    # double quadrature leaves ~k*eps of same-sign noise in c_k, which adds
    # up in the solution near x = -1; extra bits remove it
    ectx = ctx if hp else cached_context(80)
    c = jacobi_coefficients(_deweighted(f, params, ectx), params.alpha, params.beta, K, ctx=ectx)
    if not hp:
        c = c.astype(float)
    mags = np.abs(c.astype(float)) if c.dtype == object else np.abs(c)
    if not np.all(np.isfinite(mags)):
        raise RHSError(f"{f.source} is not finite at the quadrature nodes of {params}")
    top = mags.max() if mags.size else 0.0
    if check_tail and top > 0:
        tail = mags[int(0.9 * K):].max()
        if tail > tail_tol * top:
            raise RHSError(f"expansion of {f.source} in {params} does not decay "
                           f"(tail {tail:.2e} vs max {top:.2e}); the rhs is incompatible with the basis")
    return c[:N]


def mult_matrix_fn(f, basis, N: int, tol: float = 2.0**-52, ctx: PrecisionContext | None = None,
                   cap: int = 256) -> BandedMatrix:
    """Banded matrix of multiplication by ``f(x)`` in the JFP basis (bandwidths ``(m, m)``).

    ``f~(y) = f(x(y))`` is expanded in Jacobi polynomials of ``y``; the
    degree ``m`` is the last index with ``|c_m| > tol * max |c|``.  The matrix
    ``f~(J)`` is formed by Clenshaw's recurrence in the Jacobi operator ``J``
    (multiplication by ``y``), built ``m + 1`` rows larger and cut back.
    """
    params = basis.params if isinstance(basis, BasisSelection) else basis
    f = _coef(f)
    a, be = params.alpha, params.beta
    hp = ctx is not None and ctx.q > 53
    one = ctx.mp.one if hp else 1.0
    if f.is_constant:
        v = f.mp(0, ctx) if hp else float(f(np.zeros(1))[0])
        return BandedMatrix.identity(N, one).scale(v)
    noscale = JFPParams(a, be, 0, params.p)
    # double quadrature leaves ~k*eps noise in c_k, which hides the true
    # degree; the expansion is therefore always computed with extra bits
    ectx = ctx if hp else cached_context(80)
    K = 32
    while True:
        c = jacobi_coefficients(_deweighted(f, noscale, ectx), a, be, K, ctx=ectx)
        mags = np.abs(c.astype(float))
        big = np.nonzero(mags > tol * mags.max())[0]
        m = int(big[-1]) if big.size else 0
        if m < K - 8:
            break
        if K >= cap:
            raise RHSError(f"multiplication by {f.source}: degree exceeds the cap {cap}")
        K = min(2 * K, cap)
    c = c[: m + 1] if hp else c[: m + 1].astype(float)
    size = N + m + 1
    ctx_b = ctx if hp else cached_context(64)
    J = mult_1px((a, be), size, ctx_b) - BandedMatrix.identity(size, ctx_b.mp.one)
    if not hp:
        J = J.astype(float)
    Id = BandedMatrix.identity(size, one)
    b1 = BandedMatrix.zeros(size, size, 0, 0, object if hp else float)
    b2 = b1
    for k in range(m, -1, -1):
        A, B, _ = recurrence_coefficients(a, be, k, ctx if hp else None)
        _, _, C1 = recurrence_coefficients(a, be, k + 1, ctx if hp else None)
        nb = Id.scale(c[k]) + (J @ b1).scale(A) + b1.scale(B) - b2.scale(C1)
        b1, b2 = nb, b1
    out = b1.section(N)
    lo, up = out.effective_bandwidths(0.0)
    return _trim(out, lo, up)


def _trim(M: BandedMatrix, lo: int, up: int) -> BandedMatrix:
    """Re-store ``M`` with the (smaller) bandwidths ``(lo, up)``."""
    out = BandedMatrix.zeros(M.rows, M.cols, lo, up, M.data.dtype)
    for j in range(M.cols):
        for i in range(max(0, j - up), min(M.rows, j + lo + 1)):
            out[i, j] = M[i, j]
    return out


# -- operators ---------------------------------------------------------------


_FRAC_CACHE: dict = {}


def _frac_cached(params: JFPParams, mu, N: int, delta: float, precision: int | None = None) -> FracIntMatrix:
    key = (params.key(), str(mu), delta, precision)
    hit = _FRAC_CACHE.get(key)
    if hit is not None and hit.N >= N:
        return hit
    A = pseudo_stabilized(params, mu, N, delta=delta, precision=precision)
    _FRAC_CACHE[key] = A
    return A


def clear_cache() -> None:
    _FRAC_CACHE.clear()


def integration_operator(params: JFPParams, mu, size: int, delta: float = 1e-16,
                         ctx: PrecisionContext | None = None, build_precision: int | None = None):
    """Leading ``size x size`` section of ``I^mu`` in the JFP basis and its lower bandwidth.

    Integer orders use powers of the banded integration matrix when it exists;
    ``mu = m + r`` with integer ``m`` uses the semigroup ``I^mu = I^m I^r``.
    ``build_precision`` fixes the bits of the fractional part instead of the
    automatic choice.  Returns ``(matrix, lower_bandwidth, fractional_pieces)``.
    """
    hp = ctx is not None and ctx.q > 53
    dtype = object if hp else float
    pieces = []
    if isinstance(mu, Fraction) and mu == 0:
        return _identity(size, ctx), 0, pieces
    m_int = int(math.floor(float(mu))) if isinstance(mu, Fraction) else 0
    rest = mu - m_int if isinstance(mu, Fraction) else mu
    use_int = m_int > 0 and params.integer_p and int_matrix_feasible(params.alpha, params.beta, params.b, params.p)
    if not use_int:
        rest, m_int = mu, 0
    mat = None
    lower = 0
    if m_int:
        pad = int(params.p) * m_int + 1
        I1 = int_matrix(params, size + pad, ctx if hp else cached_context(128))
        Ip = I1.power(m_int).section(size)
        mat = Ip.to_dense() if hp else Ip.astype(float).to_dense()
        lower += int(params.p) * m_int
    if not (isinstance(rest, Fraction) and rest == 0):
        k = k_star_of(params.p, rest)
        F = _frac_cached(params, rest, size + k, delta, build_precision)
        pieces.append(F)
        cols = F.columns[:size, :size]
        if hp:
            fm = np.array([[ctx.mp.mpf(v) for v in row] for row in cols], dtype=object).reshape(size, size)
        else:
            fm = np.vectorize(float, otypes=[float])(cols)
        mat = fm if mat is None else mat.dot(fm) if hp else mat @ fm
        lower += k
    return mat.astype(dtype) if not hp else mat, lower, pieces


def _identity(n, ctx=None):
    if ctx is not None and ctx.q > 53:
        out = np.empty((n, n), dtype=object)
        out[...] = ctx.mp.zero
        for i in range(n):
            out[i, i] = ctx.mp.one
        return out
    return np.eye(n)


@dataclass
class Operator:
    """Leading ``N x N`` block of an assembled operator and its structure."""

    matrix: np.ndarray
    lower: int
    upper: float
    basis: JFPParams
    pieces: list = field(default_factory=list)
    full: np.ndarray | None = None  # padded section, for side-condition rows

    @property
    def N(self) -> int:
        return self.matrix.shape[0]

    @property
    def bandwidths(self):
        return (self.lower, self.upper)


def _term_matrix(term: Term, params: JFPParams, size: int, delta: float, ctx, build_precision=None):
    hp = ctx is not None and ctx.q > 53
    Iop, lo, pieces = integration_operator(params, term.order, size, delta, ctx, build_precision)
    m_out = m_in = 0
    if not term.outer.is_constant:
        Ma = mult_matrix_fn(term.outer, params, size, ctx=ctx)
        m_out = Ma.lower
        Iop = (Ma @ Iop) if hp else Ma @ Iop
    else:
        c = term.outer.mp(0, ctx) if hp else float(term.outer(np.zeros(1))[0])
        Iop = Iop * c
    if not term.inner.is_constant:
        Mb = mult_matrix_fn(term.inner, params, size, ctx=ctx)
        m_in = Mb.lower
        Iop = np.asarray(Iop) @ Mb.to_dense() if not hp else np.asarray(Iop).dot(Mb.to_dense())
    else:
        c = term.inner.mp(0, ctx) if hp else float(term.inner(np.zeros(1))[0])
        Iop = Iop * c
    return np.asarray(Iop), lo + m_out + m_in, pieces


def _padding(problem: FIEProblem, params: JFPParams) -> int:
    pad = 8
    for t in problem.terms:
        if float(t.order) > 0:
            pad += int(math.ceil(float(t.order) * float(params.p))) + 1
    pad += 40 * sum((not t.outer.is_constant) + (not t.inner.is_constant) for t in problem.terms)
    return pad


def assemble(problem: FIEProblem, basis, N: int, delta: float = 1e-16, ctx: PrecisionContext | None = None,
             pad: int | None = None, build_precision: int | None = None) -> Operator:
    """``sum_k M_{a_k} I^{mu_k} M_{b_k}`` on a padded section; the leading ``N x N`` block is exact."""
    params = basis.params if isinstance(basis, BasisSelection) else basis
    pad = _padding(problem, params) if pad is None else pad
    size = N + pad
    total = None
    pieces = []
    fractional = False
    for t in problem.terms:
        M, _, pc = _term_matrix(t, params, size, delta, ctx, build_precision)
        total = M if total is None else total + M
        pieces += pc
        fractional |= not (isinstance(t.order, Fraction) and t.order.denominator == 1)
    block = total[:N, :N]
    lo_meas, up_meas = bandwidths(block) if block.dtype != object else bandwidths(np.vectorize(float)(block))
    upper = math.inf if fractional else up_meas
    return Operator(block, lo_meas, upper, params, pieces, total)


# -- solutions ---------------------------------------------------------------


@dataclass
class SolutionFunction:
    """``u = Q c``; ``min_power`` is the lowest power of ``1+x`` present (``b/p`` unless shifted)."""

    basis: JFPParams
    coeffs: np.ndarray
    residual_estimate: float = 0.0
    converged: bool = True
    tail: float = 0.0
    min_power: float | None = None
    meta: dict = field(default_factory=dict)

    @property
    def N(self) -> int:
        return len(self.coeffs)

    def __call__(self, x):
        return evaluate(self, x)


def evaluate(sol: SolutionFunction, x):
    """Clenshaw sum in ``y`` times ``(1+y)^b``.

    With ``b < 0`` the point ``x = -1`` is allowed only when the function is
    known to vanish there (``min_power > 0``, e.g. after integration).
    """
    xs = np.asarray(x, dtype=float)
    scalar = xs.ndim == 0
    xs = np.atleast_1d(xs)
    coeffs = np.asarray([float(v) for v in sol.coeffs])
    b = float(sol.basis.b)
    mp_ = sol.min_power if sol.min_power is not None else b / float(sol.basis.p)
    at_end = xs <= -1.0
    out = np.empty_like(xs)
    if b < 0 and np.any(at_end):
        if mp_ > 0:
            out[at_end] = 0.0
        else:
            raise ValueError(f"the solution is singular at x = -1 (basis b = {sol.basis.b} < 0)")
        inner = ~at_end
        if np.any(inner):
            out[inner] = jfp_sum_float(sol.basis, coeffs, xs[inner])
    else:
        out = jfp_sum_float(sol.basis, coeffs, xs) if coeffs.size else np.zeros_like(xs)
    return float(out[0]) if scalar else out


def _leading_power(problem: FIEProblem) -> float | None:
    # with an identity term the solution inherits the rhs singularity (1+x)^(nu-1)
    if any(float(t.order) == 0 and t.outer.is_constant and t.inner.is_constant for t in problem.terms):
        return float(problem.nu) - 1
    return None


def _tail(u: np.ndarray) -> float:
    n = len(u)
    k = max(1, int(math.ceil(0.1 * n)))
    return float(np.max(np.abs(u[n - k:].astype(float)))) if n else 0.0


def _lin_solve(A, f, ctx, lower=None):
    if A.dtype == object:
        # lower-banded: pivoting within the band keeps the cost O(lower n^2)
        try:
            return solve_lower_banded(A, f, lower if lower is not None else A.shape[0] - 1)
        except np.linalg.LinAlgError as exc:
            raise SolveError(f"singular truncated system: {exc}") from exc
    try:
        return np.linalg.solve(A, f)
    except np.linalg.LinAlgError as exc:
        raise SolveError(f"singular truncated system: {exc}") from exc


def solve(problem: FIEProblem, N: int, delta: float = 1e-16, basis: BasisSelection | None = None,
          working_precision: int | None = None, tail_tol: float = 1e-13, build_precision: int | None = None,
          **basis_kw) -> SolutionFunction:
    """Truncate to ``N x N`` and solve by row-pivoted LU.

    ``working_precision`` (bits) selects the precision of assembly and solve;
    the default is double.  Problems with unknown constants go through
    :func:`solve_bordered`.
    """
    if problem.unknowns or problem.side_conditions:
        return solve_bordered(problem, N, delta, basis=basis, working_precision=working_precision,
                              build_precision=build_precision, **basis_kw).solution
    basis = basis or select_basis(problem, **basis_kw)
    ctx = cached_context(working_precision) if working_precision and working_precision > 53 else None
    op = assemble(problem, basis, N, delta, ctx, build_precision=build_precision)
    f = expand_rhs(problem.rhs, basis, N, ctx)
    u = _lin_solve(op.matrix, f, ctx, op.lower)
    res = float(np.max(np.abs((op.matrix.dot(u) - f).astype(float)))) if N else 0.0
    tail = _tail(u)
    scale = max(1.0, float(np.max(np.abs(u.astype(float))))) if N else 1.0
    sol = SolutionFunction(basis.params, u, max(res, tail), tail <= tail_tol * scale, tail, _leading_power(problem),
                           meta={"residual": res, "lower": op.lower, "upper": op.upper,
                                 "precisions": [P.precision for P in op.pieces],
                                 "error_estimates": [P.error_estimate for P in op.pieces]})
    if not sol.converged:
        log.info("N=%d not converged: tail %.2e", N, tail)
    return sol


def solve_auto(problem: FIEProblem, N0: int = 16, N_max: int = 512, tail_tol: float = 1e-14, **kw):
    """Double ``N`` until the coefficient tail drops below ``tail_tol`` (relative)."""
    N = N0
    while True:
        sol = solve(problem, N, tail_tol=tail_tol, **kw)
        if sol.converged or N >= N_max:
            sol.meta["auto_N"] = N
            if not sol.converged:
                log.warning("no convergence up to N = %d (tail %.2e)", N, sol.tail)
            return sol
        N = min(2 * N, N_max)


@dataclass
class BorderedSolution:
    solution: SolutionFunction
    constants: dict
    reconstruction: SolutionFunction | None = None
    problem: FIEProblem | None = None

    def u(self, x):
        """Reconstructed function (``solution`` itself if there is no reconstruction rule)."""
        if self.problem is None or self.problem.reconstruct is None:
            return evaluate(self.solution, x)
        R = self.problem.reconstruct
        xs = np.asarray(x, dtype=float)
        out = evaluate(self.reconstruction, xs) + R.offset(xs)
        for name, fn in R.funcs.items():
            out = out + self.constants[name] * fn(xs)
        return out


def _point_row(params: JFPParams, x0: float, n: int) -> np.ndarray:
    y0 = float(2.0 * ((1.0 + x0) / 2.0) ** (1.0 / float(params.p)) - 1.0)
    P = jacobi_all_float(params.alpha, params.beta, n, np.array([y0]))[:, 0]
    b = float(params.b)
    if b < 0 and y0 <= -1:
        raise ValueError("point functional at x = -1 is singular for b < 0")
    return P * (1.0 + y0) ** b


def solve_bordered(problem: FIEProblem, N: int, delta: float = 1e-16, basis: BasisSelection | None = None,
                   working_precision: int | None = None, build_precision: int | None = None,
                   **basis_kw) -> BorderedSolution:
    """Bordered system: side-condition rows on top, unknown-constant columns on the right.

    ``N`` may be zero, in which case only the functional rows remain.
    """
    basis = basis or select_basis(problem, **basis_kw)
    params = basis.params
    names = [u.name for u in problem.unknowns]
    ns, nc = len(problem.side_conditions), len(names)
    if ns != nc:
        raise SolveError(f"{ns} side conditions for {nc} unknown constants")
    pad = _padding(problem, params) + max((int(math.ceil(float(s.order) * float(params.p))) for s in
                                           problem.side_conditions), default=0)
    if N > 0:
        op = assemble(problem, basis, N, delta, pad=pad, build_precision=build_precision)
        A = op.matrix
        f = expand_rhs(problem.rhs, basis, N)
        G = np.column_stack([expand_rhs(u.func, basis, N) for u in problem.unknowns]) if nc else np.zeros((N, 0))
    else:
        op = None
        A = np.zeros((0, 0))
        f = np.zeros(0)
        G = np.zeros((0, nc))
    S = np.zeros((ns, N))
    D = np.zeros((ns, nc))
    v = np.zeros(ns)
    size = N + pad
    for r, sc in enumerate(problem.side_conditions):
        if N > 0:
            row = _point_row(params, float(sc.x0), size)
            if float(sc.order) > 0:
                Iop, _, _ = integration_operator(params, sc.order, size, delta, build_precision=build_precision)
                S[r] = (row @ Iop)[:N]
            else:
                S[r] = row[:N]
        for name, val in sc.coeffs.items():
            D[r, names.index(name)] = float(val)
        v[r] = float(sc.value)
    K = np.block([[S, D], [A, G]]) if N > 0 else D
    rhs = np.concatenate([v, f])
    if np.linalg.matrix_rank(K) < K.shape[0]:
        raise SolveError("bordered system is rank deficient")
    z = np.linalg.solve(K, rhs)
    u = z[:N]
    consts = {name: float(z[N + j]) for j, name in enumerate(names)}
    res = float(np.max(np.abs(K @ z - rhs))) if K.size else 0.0
    tail = _tail(u) if N else 0.0
    sol = SolutionFunction(params, u, max(res, tail), True, tail, meta={"residual": res})
    rec = None
    if problem.reconstruct is not None and N > 0:
        order = problem.reconstruct.order
        if float(order) > 0:
            Iop, _, _ = integration_operator(params, order, size, delta, build_precision=build_precision)
            w = Iop[:, :N] @ u
            w = w[:size]
        else:
            w = u
        rec = SolutionFunction(params, w, sol.residual_estimate,
                               min_power=float(params.b) / float(params.p) + float(order))
    return BorderedSolution(sol, consts, rec, problem)


def condition_estimate(A) -> float:
    """2-norm condition number of a square section (SVD based)."""
    A = np.asarray(A)
    if A.dtype == object:
        A = np.vectorize(float, otypes=[float])(A)
    if A.size == 0:
        return 1.0
    return float(np.linalg.cond(A, 2))
