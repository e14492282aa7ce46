"""Fractional integration matrices ``I^{(alpha,beta)}_{b,p,mu}`` in the JFP basis.

``I_mu Q = Q A`` where ``A`` is lower banded with ``k = mu*p`` subdiagonals.

* :func:`algorithm1` solves ``C A = 2^{mu(1-p)} Lambda C`` by back-substitution
  (``C`` the monomial connection matrix, ``Lambda`` the fractional monomial
  integration matrix).  Works for any ``p > 0`` including irrational ones.
* :func:`algorithm2` runs the column recurrence implied by the banded Sylvester
  equation ``A (X + mu I) = X A`` (or ``A I = I A``) seeded with the first
  ``p`` columns from Algorithm 1.  Needs an integer ``p``.

Both are unstable: errors grow exponentially with the column index.
:func:`pseudo_stabilized` simulates that growth in low precision and picks
the working precision from the scaling law ``E(lq, ln) ~ E(q, n)^l``.
"""

from __future__ import annotations

import json
import logging
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .banded import BandedMatrix
from .basis import JFPParams, int_matrix, int_matrix_feasible, mult_x_matrix
from .jacobi import connection_matrix
from .precision import Irrational, PrecisionContext, cached_context, gamma_ratio, to_mp

log = logging.getLogger(__name__)

__all__ = [
    "LambdaMatrix",
    "FracIntMatrix",
    "ErrorModel",
    "lambda_matrix",
    "k_star_of",
    "algorithm1",
    "algorithm2",
    "simulate_error",
    "simulate_error_alg1",
    "choose_precision",
    "rate_precision",
    "predicted_error",
    "pseudo_stabilized",
    "save_matrix",
    "load_matrix",
    "FracIntError",
]


class FracIntError(ArithmeticError):
    pass


# -- orders and bandwidths ---------------------------------------------------


def _order(mu):
    if isinstance(mu, Irrational):
        return mu
    if isinstance(mu, (int, Fraction, str)):
        return Fraction(mu)
    raise TypeError(f"order must be rational (Fraction/'a/b') or Irrational, got {mu!r}")


def k_star_of(p, mu) -> int:
    """``k = mu * p``, which must be a positive integer.

    Exact for rationals.  When either side is irrational the product is
    checked numerically at 256 bits.
    """
    mu = _order(mu)
    if isinstance(mu, Fraction) and isinstance(p, Fraction):
        k = mu * p
        if k.denominator != 1 or k <= 0:
            raise ValueError(f"mu*p = {k} is not a positive integer (mu={mu}, p={p})")
        return int(k)
    ctx = cached_context(256)
    k = to_mp(mu, ctx) * to_mp(p, ctx)
    kr = int(ctx.mp.nint(k))
    if kr < 1 or abs(k - kr) > ctx.mp.ldexp(1, -200):
        raise ValueError(f"mu*p = {ctx.mp.nstr(k, 20)} is not a positive integer")
    return kr


# -- Lambda ------------------------------------------------------------------


@dataclass(frozen=True)
class LambdaMatrix:
    """Only the ``k``-th subdiagonal is nonzero: entry ``(n+k, n) = G(d+n g+1)/G(d+n g+mu+1)``."""

    delta: object
    gamma: object
    k: int
    entries: tuple

    @property
    def N(self):
        return len(self.entries)

    def to_dense(self, rows=None):
        rows = rows or self.N + self.k
        out = np.empty((rows, self.N), dtype=object)
        out[...] = 0
        for n, v in enumerate(self.entries):
            if n + self.k < rows:
                out[n + self.k, n] = v
        return out


def lambda_matrix(delta, gamma, k: int, N: int, ctx: PrecisionContext) -> LambdaMatrix:
    d, g = to_mp(delta, ctx), to_mp(gamma, ctx)
    if d <= -1:
        raise ValueError(f"delta must exceed -1 for the fractional integral to exist, got {delta}")
    if g <= 0 or k < 1:
        raise ValueError("gamma must be positive and k >= 1")
    mu = k * g
    entries = tuple(gamma_ratio(d + n * g + 1, mu, ctx) for n in range(N))
    return LambdaMatrix(delta, gamma, int(k), entries)


# -- result type -------------------------------------------------------------


@dataclass
class FracIntMatrix:
    """``N`` columns of a fractional integration matrix with provenance.

    ``columns`` has shape ``(N + k_star, N)``; entries below the
    ``k_star``-th subdiagonal are exact zeros.
    """

    params: JFPParams
    mu: object
    k_star: int
    columns: np.ndarray
    algorithm: str
    precision: int
    error_estimate: float = float("nan")
    meta: dict = field(default_factory=dict)

    @property
    def N(self) -> int:
        return self.columns.shape[1]

    @property
    def shape(self):
        return self.columns.shape

    def __getitem__(self, idx):
        return self.columns[idx]

    def to_float(self) -> np.ndarray:
        return np.vectorize(float, otypes=[float])(self.columns)

    def leading(self, n: int) -> np.ndarray:
        """Leading ``n x n`` block (exact for a lower-banded operator)."""
        return self.columns[:n, :n]

    def bandwidth_ok(self) -> bool:
        rows, cols = self.columns.shape
        return all(self.columns[i, j] == 0 for j in range(cols) for i in range(j + self.k_star + 1, rows))


# -- Algorithm 1 -------------------------------------------------------------


def _scale_factor(mu, p, ctx):
    return ctx.mp.power(2, to_mp(mu, ctx) * (1 - to_mp(p, ctx)))


def algorithm1(params: JFPParams, mu, N: int, ctx: PrecisionContext, first_col: int = 0) -> FracIntMatrix:
    """Columns ``first_col .. N-1`` (others left zero) via back-substitution on ``C``.

    Column ``j`` only touches the leading ``(j+1+k)``-square block of ``C``, so
    all columns are solved together as one multi-right-hand-side triangular
    system; rows below ``j+k`` stay exactly zero.
    """
    mu = _order(mu)
    k = k_star_of(params.p, mu)
    if not params.integrable:
        raise ValueError(f"basis {params} is not integrable (need b > -p)")
    n = N + k
    C = connection_matrix(params.jacobi, n, ctx)
    delta = to_mp(params.b, ctx) / to_mp(params.p, ctx)
    gam = 1 / to_mp(params.p, ctx)
    lam = lambda_matrix(delta, gam, k, N, ctx).entries
    s = _scale_factor(mu, params.p, ctx)
    cols = np.arange(first_col, N)
    rhs = np.empty((n, len(cols)), dtype=object)
    rhs[...] = 0
    for i in range(N):
        f = s * lam[i]
        sel = cols >= i
        rhs[i + k, sel] = f * C[i, cols[sel]]
    X = np.empty_like(rhs)
    X[...] = 0
    for i in range(n - 1, -1, -1):
        piv = C[i, i]
        if piv == 0:
            raise FracIntError(f"zero pivot in connection matrix at row {i}")
        # columns j with j + k < i are structurally zero in this row
        j0 = int(np.searchsorted(cols, i - k))
        if j0 >= len(cols):
            continue
        acc = rhs[i, j0:]
        if i + 1 < n:
            acc = acc - C[i, i + 1:].dot(X[i + 1:, j0:])
        X[i, j0:] = acc / piv
    out = np.empty((n, N), dtype=object)
    out[...] = 0
    out[:, first_col:] = X
    return FracIntMatrix(params, mu, k, out, "alg1", ctx.q)


# -- Algorithm 2 -------------------------------------------------------------


def _recurrence_operators(params: JFPParams, mu, size: int, ctx: PrecisionContext, pair: str):
    """``(B, C)`` for ``A B = C A``: ``(X + mu I, X)`` or ``(I, I)``."""
    I1 = int_matrix(params, size, ctx)
    if pair == "commute":
        return I1, I1
    if pair != "sylvester":
        raise ValueError(f"unknown recurrence pair {pair!r}")
    X = mult_x_matrix(params, size, ctx)
    return X + I1.scale(to_mp(mu, ctx)), X


def _check_alg2(params: JFPParams, mu):
    if not params.integer_p:
        raise ValueError(f"Algorithm 2 needs an integer p, got {params.p}")
    if not isinstance(_order(mu), Fraction):
        raise ValueError("Algorithm 2 needs a rational order")
    if not int_matrix_feasible(params.alpha, params.beta, params.b, params.p):
        raise ValueError(f"Algorithm 2 needs beta-b and b+p-1-beta in N0 for {params}")


class _Recurrence:
    """Column recurrence ``A[:, n+p] B[n+p, n] = (C A)[:, n] - A[:, n-p:n+p] B[n-p:n+p, n]``."""

    def __init__(self, B: BandedMatrix, Cm: BandedMatrix, p: int, k: int, rows: int):
        self.B, self.p, self.k, self.rows = B, p, k, rows
        # cdiag[d][m] = C[m, m+d]
        self.cdiag = {}
        for d in range(-p, p + 1):
            v = np.empty(rows, dtype=object)
            v[...] = 0
            for m in range(min(rows, Cm.rows)):
                if 0 <= m + d < Cm.cols:
                    v[m] = Cm[m, m + d]
            self.cdiag[d] = v

    def column(self, A: np.ndarray, col: int) -> None:
        p, k, rows = self.p, self.k, self.rows
        n = col - p
        top = col + k + 1  # rows 0..col+k; the rest is structurally zero
        t1 = np.empty(top, dtype=object)
        t1[...] = 0
        for d in range(-p, p + 1):
            lo = max(0, -d)
            hi = min(top, rows - d)
            if hi > lo:
                t1[lo:hi] += self.cdiag[d][lo:hi] * A[lo + d: hi + d, n]
        l0 = max(0, n - p)
        bcol = np.array([self.B[l, n] for l in range(l0, n + p)], dtype=object)
        t2 = A[:top, l0: n + p].dot(bcol)
        piv = self.B[n + p, n]
        if piv == 0:
            raise FracIntError(f"zero recurrence pivot B[{n + p},{n}]")
        A[:top, col] = (t1 - t2) / piv


def algorithm2(params: JFPParams, mu, N: int, ctx: PrecisionContext, seed=None, pair: str = "sylvester") -> FracIntMatrix:
    """Columns ``p..N-1`` from the banded Sylvester recurrence.

    ``seed`` is a ``(rows >= p+k, p)`` array with the first ``p`` columns; by
    default they come from :func:`algorithm1` at the same precision.
    """
    mu = _order(mu)
    _check_alg2(params, mu)
    p = int(params.p)
    k = k_star_of(params.p, mu)
    if N <= p:
        return algorithm1(params, mu, N, ctx)
    if seed is None:
        seed = algorithm1(params, mu, p, ctx).columns
    size = N + k + 2 * p + 1
    B, Cm = _recurrence_operators(params, mu, size, ctx, pair)
    A = np.empty((N + k + p, N), dtype=object)
    A[...] = 0
    seed = np.asarray(seed, dtype=object)
    h = min(seed.shape[0], p + k)
    for j in range(p):
        A[:h, j] = [to_mp(v, ctx) for v in seed[:h, j]]
    rec = _Recurrence(B, Cm, p, k, A.shape[0])
    for col in range(p, N):
        rec.column(A, col)
    return FracIntMatrix(params, mu, k, A[: N + k, :], "alg2", ctx.q, meta={"pair": pair})


# -- pseudo-stabilization ----------------------------------------------------


@dataclass
class ErrorModel:
    """Simulated normalised error profile ``E~(q0, n)`` for ``n = 0..m``."""

    q0: int
    profile: np.ndarray  # log2 E~(q0, n)
    algorithm: str
    m_star: int | None = None

    @property
    def log2E(self):
        return self.profile

    def growth_rate(self, window: int = 128):
        """Averaged growth rate ``(E(n)/E(n-w))^{1/w}`` (geometric mean over a window)."""
        out = np.full(len(self.profile), np.nan)
        for n in range(1, len(self.profile)):
            w = min(window, n)
            out[n] = 2.0 ** ((self.profile[n] - self.profile[n - w]) / w)
        return out

    def log2E_at(self, m: float) -> float:
        """Linear interpolation of ``log2 E~`` at fractional column ``m``."""
        m = min(max(m, 0.0), len(self.profile) - 1)
        i = int(math.floor(m))
        if i + 1 >= len(self.profile):
            return float(self.profile[-1])
        t = m - i
        return float((1 - t) * self.profile[i] + t * self.profile[i + 1])


def _col_max_log2(col):
    m = max((abs(v) for v in col), default=0)
    return float(-1e300 if m == 0 else float(cached_context(53).mp.log(m, 2)))


def simulate_error(params: JFPParams, mu, q0: int = 53, m_max: int = 400, stop_log2: float | None = None,
                   seed_entry: str = "ones", pair: str = "sylvester") -> ErrorModel:
    """Simulate Algorithm 2 error growth at ``q0`` bits.

    The recurrence (coefficients rounded at ``q0`` bits) is started from
    artificial seed columns containing ones (``seed_entry="ones"``) or a
    single unit entry at the bottom of the last seed column
    (``seed_entry="unit"``); ``E~(q0, n)`` is the max-abs of column ``n``
    divided by that of the seed, so ``E~(q0, n) = 1`` for the seed columns.
    The run stops early once ``log2 E~`` exceeds ``stop_log2``.
    """
    mu = _order(mu)
    _check_alg2(params, mu)
    ctx = cached_context(q0)
    p = int(params.p)
    k = k_star_of(params.p, mu)
    N = m_max + 1
    size = N + k + 2 * p + 1
    B, Cm = _recurrence_operators(params, mu, size, ctx, pair)
    A = np.empty((N + k + p, N), dtype=object)
    A[...] = 0
    if seed_entry == "ones":
        for j in range(p):
            A[: j + k + 1, j] = ctx.mp.one
    elif seed_entry == "unit":
        A[p - 1 + k, p - 1] = ctx.mp.one
    else:
        raise ValueError(f"unknown seed entry {seed_entry!r}")
    prof = [0.0] * p
    rec = _Recurrence(B, Cm, p, k, A.shape[0])
    for col in range(p, N):
        rec.column(A, col)
        prof.append(_col_max_log2(A[: col + k + 1, col]))
        if stop_log2 is not None and prof[-1] > stop_log2:
            break
    return ErrorModel(q0, np.array(prof), "alg2")


def simulate_error_alg1(params: JFPParams, mu, q0: int = 53, m_max: int = 200, stop_log2: float | None = None,
                        chunk: int = 16) -> ErrorModel:
    """Measured Algorithm 1 error growth at ``q0`` bits, normalised by ``2^{-q0}``.

    Columns are computed at ``q0`` bits and compared with a build at a much
    higher precision; ``log2 E~(q0, n) = log2(err_n) + q0`` (floored at 0).
    Columns are added in chunks until ``stop_log2`` is reached.
    """
    mu = _order(mu)
    prof: list[float] = []
    m = min(chunk, m_max + 1)
    while True:
        lo_ctx = cached_context(q0)
        ref_ctx = cached_context(4 * q0 + 2 * m + 64)
        A = algorithm1(params, mu, m, lo_ctx, first_col=len(prof)).columns
        R = algorithm1(params, mu, m, ref_ctx, first_col=len(prof)).columns
        for j in range(len(prof), m):
            err = max(abs(ref_ctx.mp.mpf(A[i, j]) - R[i, j]) for i in range(A.shape[0]))
            lg = float(ref_ctx.mp.log(err, 2)) + q0 if err > 0 else 0.0
            prof.append(max(lg, 0.0))
        if m > m_max or (stop_log2 is not None and prof[-1] > stop_log2):
            break
        m = min(m + chunk, m_max + 1)
        if m == len(prof):
            break
    # smooth to a nondecreasing profile
    prof = np.maximum.accumulate(np.array(prof))
    return ErrorModel(q0, prof, "alg1")


def choose_precision(N: int, delta: float, q0: int, errmodel: ErrorModel) -> int:
    """Smallest ``q`` predicted to give max error ``< delta`` in the first ``N`` columns.

    Finds the largest ``m*`` with ``log2 E~(q0, m) < q0 + (m/N) log2 delta`` for
    all ``m <= m*`` and returns ``ceil(N q0 / m*)`` (never below ``q0``).
    """
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    l2d = math.log2(delta)
    prof = errmodel.profile
    m1 = None
    for m in range(1, min(len(prof), N + 1)):
        if not prof[m] < q0 + (m / N) * l2d:
            m1 = m
            break
    if m1 is None:
        if len(prof) - 1 >= N:
            errmodel.m_star = N
            return max(q0, math.ceil(-l2d) + 1)
        raise FracIntError(f"error simulation too short ({len(prof)} columns) to locate m*")
    m_star = m1 - 1
    if m_star < 1:
        raise FracIntError("simulation precision q0 too low: condition fails at m = 1")
    errmodel.m_star = m_star
    return max(q0, math.ceil(N * q0 / m_star))


def predicted_error(N: int, q: int, errmodel: ErrorModel) -> float:
    """``2^{-q} E~(q0, N q0/q)^{q/q0}`` from the scaling law."""
    lam = q / errmodel.q0
    return 2.0 ** (-q + lam * errmodel.log2E_at(N / lam))


def rate_fit(errmodel: ErrorModel) -> tuple[float, float]:
    """``(r, c)`` with ``log2 E~(q0, n) <= r n + c`` on the simulated window.

    ``r`` is the least-squares slope over the second half of the window (past
    the start-up transient) and ``c`` the smallest offset that bounds every
    simulated point.
    """
    prof = errmodel.profile
    m = len(prof) - 1
    if m < 4:
        raise FracIntError("error simulation window too short for a rate fit")
    n = np.arange(m // 2, m + 1)
    r = float(np.polyfit(n, prof[m // 2:], 1)[0])
    r = max(r, 0.0)
    c = float(max(prof[i] - r * i for i in range(m + 1)))
    return r, c


def rate_precision(N: int, delta: float, errmodel: ErrorModel) -> int:
    """Precision from constant-rate extrapolation: ``q = r N + c - log2(delta)``."""
    r, c = rate_fit(errmodel)
    return math.ceil(r * N + c - math.log2(delta))


def pseudo_stabilized(params: JFPParams, mu, N: int, delta: float = 1e-16, q0: int = 53,
                      algorithm: str | None = None, guard_bits: int = 8, precision: int | None = None,
                      pair: str = "sylvester", window: int = 96) -> FracIntMatrix:
    """Build ``N`` columns with error ``<= delta`` at an automatically chosen precision.

    Algorithm 2 is used when ``p`` is an integer, ``mu`` rational and the
    integration-matrix conditions hold; otherwise Algorithm 1.

    The precision is the larger of the scaling-law choice
    (:func:`choose_precision`) and a constant-rate extrapolation of the same
    simulated profile (:func:`rate_precision`), plus ``guard_bits``.  The
    second estimate matters because the start-up transient of the profile is
    amplified by ``q/q0`` in the scaling law, which then under-predicts ``q``
    for large ``N``.  ``precision`` bypasses the simulation.
    """
    mu = _order(mu)
    alg2_ok = params.integer_p and isinstance(mu, Fraction) and int_matrix_feasible(
        params.alpha, params.beta, params.b, params.p)
    algorithm = algorithm or ("alg2" if alg2_ok else "alg1")
    if algorithm == "alg2" and not alg2_ok:
        raise ValueError(f"Algorithm 2 is not applicable to {params} with mu = {mu}")
    t0 = time.perf_counter()
    model = None
    if precision is None:
        if algorithm == "alg2":
            model = simulate_error(params, mu, q0, m_max=min(N, window), pair=pair)
        else:
            model = simulate_error_alg1(params, mu, q0, m_max=min(N, window // 2))
        try:
            q_law = choose_precision(N, delta, q0, model)
        except FracIntError:
            q_law = q0
        q_rate = rate_precision(N, delta, model)
        q = max(q_law, q_rate, q0) + guard_bits
    else:
        q = int(precision)
    ctx = cached_context(q)
    if algorithm == "alg2":
        A = algorithm2(params, mu, N, ctx, pair=pair)
    else:
        A = algorithm1(params, mu, N, ctx)
    if model is not None:
        r, c = rate_fit(model)
        A.error_estimate = max(predicted_error(N, q, model), 2.0 ** (r * N + c - q))
        A.meta.update(m_star=model.m_star, q_law=q_law, q_rate=q_rate, rate=r)
    A.meta["q0"] = q0
    A.meta["delta"] = delta
    A.meta["guard_bits"] = guard_bits if precision is None else 0
    A.meta["seconds"] = time.perf_counter() - t0
    log.info("built %s mu=%s N=%d with %s at q=%d (m*=%s) in %.2fs", params, mu, N, algorithm, q,
             A.meta.get("m_star"), A.meta["seconds"])
    return A


# -- on-disk cache -----------------------------------------------------------


def _digits(q: int) -> int:
    return int(math.ceil(q * math.log10(2))) + 3


def save_matrix(A: FracIntMatrix, path) -> None:
    """Write ``A`` as JSON with full-precision decimal strings (exact round trip at ``A.precision``)."""
    ctx = cached_context(A.precision)
    dig = _digits(A.precision)
    cols = []
    for j in range(A.N):
        last = min(A.columns.shape[0], j + A.k_star + 1)
        cols.append([ctx.mp.nstr(ctx.mp.mpf(v), dig, strip_zeros=False) if v != 0 else "0"
                     for v in A.columns[:last, j]])
    doc = {
        "format": "jfp-fracint/1",
        "params": {"alpha": str(A.params.alpha), "beta": str(A.params.beta), "b": str(A.params.b),
                   "p": str(A.params.p), "p_irrational": isinstance(A.params.p, Irrational)},
        "mu": str(A.mu),
        "mu_irrational": isinstance(A.mu, Irrational),
        "k_star": A.k_star,
        "N": A.N,
        "precision": A.precision,
        "algorithm": A.algorithm,
        "error_estimate": A.error_estimate if math.isfinite(A.error_estimate) else None,
        "columns": cols,
    }
    Path(path).write_text(json.dumps(doc, indent=None, separators=(",", ":")))


def load_matrix(path) -> FracIntMatrix:
    doc = json.loads(Path(path).read_text())
    P = doc["params"]
    p = Irrational(P["p"]) if P.get("p_irrational") else Fraction(P["p"])
    params = JFPParams(Fraction(P["alpha"]), Fraction(P["beta"]), Fraction(P["b"]), p)
    mu = Irrational(doc["mu"]) if doc.get("mu_irrational") else Fraction(doc["mu"])
    ctx = cached_context(doc["precision"])
    N, k = doc["N"], doc["k_star"]
    cols = np.empty((N + k, N), dtype=object)
    cols[...] = 0
    for j, c in enumerate(doc["columns"]):
        cols[: len(c), j] = [ctx.mp.mpf(s) for s in c]
    est = doc.get("error_estimate")
    return FracIntMatrix(params, mu, k, cols, doc["algorithm"], doc["precision"],
                         float("nan") if est is None else est)


def cache_key(params: JFPParams, mu, N: int, q: int) -> str:
    raw = f"{params.alpha}_{params.beta}_{params.b}_{params.p}_{mu}_{N}_{q}"
    return "".join(ch if ch.isalnum() or ch in "._-" else "-" for ch in raw)
