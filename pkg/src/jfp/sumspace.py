"""Sum-space comparison for ``u + lam^2 I^{1/2} u = 1``.

The sum space interleaves Legendre polynomials with ``sqrt(1+x)``-weighted
``P^{(1/2,1/2)}``::

    S = (P_0, sqrt(1+x) P_0^{(1/2,1/2)}, P_1, sqrt(1+x) P_1^{(1/2,1/2)}, ...)

and half-integration maps ``S`` to itself by a tridiagonal matrix.  Its
columns come from the fractional-integral identity

    I^mu[(1+x)^beta P_n^{(alpha,beta)}] = Gamma(n+beta+1)/Gamma(n+beta+mu+1) (1+x)^{beta+mu} P_n^{(alpha-mu,beta+mu)}

followed by one conversion step in the Jacobi parameters.  The result is
certified against an independent re-expansion through shifted monomials.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .banded import solve_tridiagonal
from .jacobi import _lower_beta, _raise_alpha, clenshaw, connection_inverse, connection_matrix
from .precision import PrecisionContext, cached_context

log = logging.getLogger(__name__)

__all__ = [
    "Tridiagonal",
    "SumSpaceCoeffs",
    "SumSpaceError",
    "build_halfint",
    "certify_halfint",
    "sumspace_solve",
    "sumspace_eval",
    "sumspace_bits",
    "tridiagonal_condition",
    "jfp_example3",
    "compare_report",
    "REPORT_COLUMNS",
]


class SumSpaceError(ArithmeticError):
    """The half-integration operator failed its tridiagonality certificate."""


@dataclass
class Tridiagonal:
    """``n x n`` tridiagonal matrix as three diagonals (float or mpf)."""

    sub: list
    diag: list
    sup: list

    @property
    def n(self) -> int:
        return len(self.diag)

    def to_dense(self) -> np.ndarray:
        dtype = float if isinstance(self.diag[0], float) else object
        A = np.zeros((self.n, self.n), dtype=dtype)
        if dtype is object:
            A[...] = 0
        for i in range(self.n):
            A[i, i] = self.diag[i]
            if i + 1 < self.n:
                A[i + 1, i] = self.sub[i]
                A[i, i + 1] = self.sup[i]
        return A

    def matvec(self, v):
        out = [self.diag[i] * v[i] for i in range(self.n)]
        for i in range(self.n - 1):
            out[i + 1] += self.sub[i] * v[i]
            out[i] += self.sup[i] * v[i + 1]
        return out

    def rmatvec(self, v):
        return Tridiagonal(self.sup, self.diag, self.sub).matvec(v)

    def solve(self, rhs):
        return solve_tridiagonal(self.sub, self.diag, self.sup, rhs)

    def solve_T(self, rhs):
        return solve_tridiagonal(self.sup, self.diag, self.sub, rhs)

    def shifted(self, scale, shift) -> "Tridiagonal":
        """``shift * 1 + scale * self``."""
        return Tridiagonal([scale * v for v in self.sub], [shift + scale * v for v in self.diag],
                           [scale * v for v in self.sup])

    def astype_float(self) -> "Tridiagonal":
        f = lambda xs: [float(v) for v in xs]  # noqa: E731
        return Tridiagonal(f(self.sub), f(self.diag), f(self.sup))


@dataclass
class SumSpaceCoeffs:
    """Interleaved coefficients ``(a_0, b_0, a_1, b_1, ...)``."""

    c: np.ndarray
    precision: int = 53
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.c) % 2:
            raise ValueError("interleaved coefficient vectors have even length")

    @property
    def N(self) -> int:
        return len(self.c)

    @property
    def a(self) -> np.ndarray:
        return self.c[0::2]

    @property
    def b(self) -> np.ndarray:
        return self.c[1::2]

    def max_abs_log10(self) -> float:
        m = max(abs(v) for v in self.c)
        if isinstance(m, float):
            return math.log10(m) if m > 0 else -math.inf
        ctx = cached_context(64)
        return float(ctx.mp.log10(m)) if m != 0 else -math.inf


def build_halfint(N: int, ctx: PrecisionContext) -> Tridiagonal:
    """``N x N`` section of the sum-space half-integration matrix (``N`` even)."""
    if N % 2 or N < 2:
        raise ValueError("N must be a positive even number")
    mp = ctx.mp
    half = mp.mpf(1) / 2
    M = N // 2
    R = _raise_alpha(-half, half, M, ctx)  # P^{(-1/2,1/2)} = P^{(1/2,1/2)} R
    L = _lower_beta(mp.zero, mp.zero, M + 1, ctx)  # (1+x) P^{(0,1)} = P^{(0,0)} L
    sub = [mp.zero] * (N - 1)
    sup = [mp.zero] * (N - 1)
    for n in range(M):
        g = mp.gamma(n + 1) / mp.gamma(n + half + 1)
        col = 2 * n
        # Legendre column -> sqrt(1+x) P^{(1/2,1/2)}_{n-1}, _n
        sub[col] = g * R[n, n]
        if n > 0:
            sup[col - 1] = g * R[n - 1, n]
        h = mp.gamma(n + half + 1) / mp.gamma(n + 2)
        col = 2 * n + 1
        # weighted column -> P_n, P_{n+1}
        sup[col - 1] = h * L[n, n]
        if col + 1 < N:
            sub[col] = h * L[n + 1, n]
    return Tridiagonal(sub, [mp.zero] * N, sup)


def certify_halfint(N: int, ctx: PrecisionContext, tol: float = 1e-25) -> float:
    """Rebuild ``N`` columns through monomials and compare with :func:`build_halfint`.

    Each basis function is written in powers of ``(1+x)`` (connection
    matrices), integrated term by term with ``I^{1/2}(1+x)^s = Gamma(s+1)/Gamma(s+3/2) (1+x)^{s+1/2}``,
    and expanded back in the sum space (inverse connection matrices).
    Returns the max deviation; raises :class:`SumSpaceError` if the
    re-expanded matrix has entries off the three diagonals or disagrees.
    """
    mp = ctx.mp
    half = mp.mpf(1) / 2
    M = N // 2 + 1
    C0 = connection_matrix((0, 0), M, ctx)
    Ch = connection_matrix((half, half), M, ctx)
    C0i = connection_inverse((0, 0), M, ctx)
    Chi = connection_inverse((half, half), M, ctx)
    T = build_halfint(N, ctx).to_dense()
    worst = mp.zero
    for col in range(N):
        n = col // 2
        out = [mp.zero] * (2 * M)
        if col % 2 == 0:
            # P_n = sum_k C0[k,n] (1+x)^k  ->  sqrt(1+x) sum_k g_k C0[k,n] (1+x)^k
            m = [C0[k, n] * mp.gamma(k + 1) / mp.gamma(k + half + 1) for k in range(M)]
            coef = [sum(Chi[j, k] * m[k] for k in range(M)) for j in range(M)]
            for j in range(M):
                out[2 * j + 1] = coef[j]
        else:
            # sqrt(1+x) P_n^{(1/2,1/2)} -> (1+x) sum_k h_k Ch[k,n] (1+x)^k
            m = [mp.zero] * M
            for k in range(M - 1):
                m[k + 1] = Ch[k, n] * mp.gamma(k + half + 1) / mp.gamma(k + 2)
            coef = [sum(C0i[j, k] * m[k] for k in range(M)) for j in range(M)]
            for j in range(M):
                out[2 * j] = coef[j]
        for row in range(2 * M):
            ref = T[row, col] if row < N else mp.zero
            if abs(row - col) > 1 or row >= N:
                # entries outside the tridiagonal band (or beyond the section) must vanish
                if abs(row - col) > 1 and abs(out[row]) > tol:
                    raise SumSpaceError(f"entry ({row}, {col}) = {mp.nstr(out[row], 5)} breaks tridiagonality")
                continue
            worst = max(worst, abs(out[row] - ref))
    if worst > tol:
        raise SumSpaceError(f"closed form and re-expansion differ by {mp.nstr(worst, 5)}")
    return float(worst)


def sumspace_bits(lam: float) -> int:
    """Precision that covers the coefficient dynamic range ``~exp(2 lam^4)``."""
    return int(math.ceil(2 * lam**4 * math.log2(math.e))) + 64


def sumspace_solve(lam, N: int, ctx: PrecisionContext | None = None) -> SumSpaceCoeffs:
    """Solve ``(1 + lam^2 I_hat) c = e_0`` with ``N`` interleaved coefficients.

    ``ctx = None`` solves in double precision (matrix built at 64 bits and
    rounded); otherwise every step runs at the precision of ``ctx``.
    """
    t0 = time.perf_counter()
    if ctx is None or ctx.q <= 53:
        T = build_halfint(N, cached_context(64)).astype_float()
        lam2 = float(lam) ** 2
        A = T.shifted(lam2, 1.0)
        ab = np.zeros((3, N))
        ab[0, 1:] = A.sup
        ab[1, :] = A.diag
        ab[2, :-1] = A.sub
        rhs = np.zeros(N)
        rhs[0] = 1.0
        c = solve_banded((1, 1), ab, rhs)
        q = 53
    else:
        mp = ctx.mp
        T = build_halfint(N, ctx)
        lam2 = mp.mpf(lam) ** 2
        A = T.shifted(lam2, mp.one)
        rhs = [mp.zero] * N
        rhs[0] = mp.one
        c = A.solve(rhs)
        q = ctx.q
    return SumSpaceCoeffs(c, q, {"lambda": float(lam), "seconds": time.perf_counter() - t0})


def sumspace_eval(coeffs: SumSpaceCoeffs, x, ctx: PrecisionContext | None = None):
    """``sum a_n P_n(x) + sqrt(1+x) sum b_n P_n^{(1/2,1/2)}(x)``.

    Summed at the coefficient precision (or ``ctx``) and returned as floats.
    """
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if coeffs.precision <= 53 and ctx is None:
        from .jacobi import clenshaw_float

        a = np.asarray(coeffs.a, dtype=float)
        b = np.asarray(coeffs.b, dtype=float)
        out = clenshaw_float(a, 0.0, 0.0, xs) + np.sqrt(1.0 + xs) * clenshaw_float(b, 0.5, 0.5, xs)
    else:
        ctx = ctx or cached_context(coeffs.precision)
        mp = ctx.mp
        a = [mp.mpf(v) for v in coeffs.a]
        b = [mp.mpf(v) for v in coeffs.b]
        half = mp.mpf(1) / 2
        vals = []
        for xv in xs:
            xm = mp.mpf(xv)
            vals.append(float(clenshaw(a, 0, 0, xm, ctx) + mp.sqrt(1 + xm) * clenshaw(b, half, half, xm, ctx)))
        out = np.array(vals)
    return float(out[0]) if np.ndim(x) == 0 else out


def tridiagonal_condition(T: Tridiagonal, ctx: PrecisionContext | None = None, iters: int = 60,
                          seed: int = 0) -> float:
    """2-norm condition number by power iteration on ``A^T A`` and inverse iteration.

    Every step is a tridiagonal product or solve, so the estimate works at
    any precision and size.  Returns a float (``inf`` past double range is
    avoided by returning the log10 through :func:`math.log10` in callers).
    """
    rng = np.random.default_rng(seed)
    n = T.n
    if ctx is None:
        conv = float
        norm = lambda v: math.sqrt(sum(x * x for x in v))  # noqa: E731
    else:
        mp = ctx.mp
        conv = mp.mpf
        norm = lambda v: mp.sqrt(mp.fsum(x * x for x in v))  # noqa: E731
    v = [conv(x) for x in rng.standard_normal(n)]
    w = list(v)
    smax = smin_inv = None
    for _ in range(iters):
        u = T.rmatvec(T.matvec(v))
        s = norm(u)
        v = [x / s for x in u]
        smax = s
        z = T.solve_T(list(T.solve(w)))
        s2 = norm(z)
        w = [x / s2 for x in z]
        smin_inv = s2
    # the iterates converge to the eigenvalues of A^T A and its inverse
    ratio = (smax * smin_inv) ** 0.5 if ctx is None else ctx.mp.sqrt(smax * smin_inv)
    return ratio


def jfp_example3(lam: float, N: int, delta: float = 1e-16, working_precision: int | None = 113):
    """JFP solve of the same problem (``p = 2``, Legendre, ``b = 0``).

    The solve runs at ``working_precision`` bits (quad by default) so the
    coefficient tail reaches 1e-14 cleanly; the condition number is for the
    double-precision section.
    """
    from fractions import Fraction

    from .solver import FIEProblem, Term, assemble, condition_estimate, select_basis, solve

    pr = FIEProblem([Term(0), Term(Fraction(1, 2), repr(float(lam) ** 2))], rhs="1")
    bs = select_basis(pr)
    sol = solve(pr, N, delta, basis=bs, working_precision=working_precision)
    cond = condition_estimate(assemble(pr, bs, N, delta).matrix)
    return sol, cond


REPORT_COLUMNS = (
    "lambda",
    "ss_N",
    "ss_bits",
    "ss_log10_max_coeff",
    "ss_double_max_error",
    "ss_log10_cond",
    "jfp_N",
    "jfp_max_coeff",
    "jfp_max_error",
    "jfp_cond",
    "jfp_trunc_1e-14",
)


def _truncation_index(coeffs, tol: float = 1e-14) -> int:
    mags = np.abs(np.asarray(coeffs, dtype=float))
    big = np.nonzero(mags >= tol)[0]
    return int(big[-1]) + 1 if big.size else 0


def compare_report(lambdas, N: int = 2000, delta: float = 1e-16, jfp_N: int | None = None,
                   grid=None, bits: int | None = None) -> list[dict]:
    """One row per ``lam`` comparing the two discretizations.

    The sum-space reference is computed at :func:`sumspace_bits` precision;
    its double-precision solve is compared with the exact solution on
    ``grid`` (default ``-1:0.01:1``).  ``jfp_N`` defaults to ``40 + 14 lam``,
    enough for a 1e-14 tail up to ``lam = 20``.
    """
    from .mittag_leffler import ml_solution

    grid = np.linspace(-1, 1, 201) if grid is None else np.asarray(grid, dtype=float)
    rows = []
    for lam in lambdas:
        lam = float(lam)
        q = bits or sumspace_bits(lam)
        ctx = cached_context(q)
        hp = sumspace_solve(lam, N, ctx)
        dp = sumspace_solve(lam, N, None)
        exact = ml_solution("1/2", 1, lam**2, grid)
        with np.errstate(all="ignore"):
            err_dp = float(np.nanmax(np.abs(sumspace_eval(dp, grid) - exact)))
        T = build_halfint(N, ctx).shifted(ctx.mp.mpf(lam) ** 2, ctx.mp.one)
        cond = tridiagonal_condition(T, ctx, iters=30)
        nj = jfp_N or int(40 + 14 * lam)
        sol, jcond = jfp_example3(lam, nj, delta)
        jerr = float(np.max(np.abs(sol(grid) - exact)))
        rows.append({
            "lambda": lam,
            "ss_N": N,
            "ss_bits": q,
            "ss_log10_max_coeff": hp.max_abs_log10(),
            "ss_double_max_error": err_dp,
            "ss_log10_cond": float(ctx.mp.log10(cond)),
            "jfp_N": nj,
            "jfp_max_coeff": float(np.max(np.abs(sol.coeffs))),
            "jfp_max_error": jerr,
            "jfp_cond": jcond,
            "jfp_trunc_1e-14": _truncation_index(sol.coeffs),
        })
        log.info("lambda=%g done", lam)
    return rows


def report_csv(rows: list[dict]) -> str:
    """CSV text with the fixed :data:`REPORT_COLUMNS` order (``repr`` floats, deterministic)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_COLUMNS)
    for r in rows:
        w.writerow([repr(r[k]) if isinstance(r[k], float) else r[k] for k in REPORT_COLUMNS])
    return buf.getvalue()
