"""Periodic time-fractional heat/wave equation ``D_t^mu u = u_xx`` (Caputo).

Separation of variables gives modes ``u_n(t)`` with
``u_n + n^2 I^mu u_n = 1`` on ``[0, T]``, that is ``u_n(t) = E_{mu,1}(-n^2 t^mu)``.
Only the highest mode ``N`` is solved; the others follow from
``u_n(t) = u_N((n/N)^{2/mu} t)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .solver import FIEProblem, SolutionFunction, Term, select_basis, solve

__all__ = [
    "HeatWaveError",
    "PeriodicIC",
    "HeatWaveSolution",
    "fourier_decompose",
    "solve_heatwave",
    "mode_problem",
    "heatwave_p",
    "evaluate_xt",
]

EPS = 2.0**-52


class HeatWaveError(ValueError):
    pass


@dataclass
class PeriodicIC:
    """Fourier data ``coeffs[n + N_f] = f_n`` for ``|n| <= N_f``."""

    coeffs: np.ndarray
    N_f: int
    tol: float
    real: bool = True

    def coefficient(self, n: int) -> complex:
        return complex(self.coeffs[n + self.N_f]) if abs(n) <= self.N_f else 0j

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        n = np.arange(-self.N_f, self.N_f + 1)
        vals = np.exp(1j * np.multiply.outer(x, n)) @ self.coeffs
        return vals.real if self.real else vals


def fourier_decompose(samples, tol: float = EPS) -> PeriodicIC:
    """Fourier coefficients of samples ``f(2 pi j / M)``, ``j = 0..M-1``.

    ``N_f`` is the largest ``|n|`` with ``|f_n| >= tol``; every coefficient
    beyond it is below ``tol``.  The top quarter of the discrete spectrum
    must already be below ``tol``, otherwise the grid does not resolve ``f``.
    """
    f = np.asarray(samples)
    M = f.shape[0]
    if f.ndim != 1 or M < 8 or M & (M - 1):
        raise HeatWaveError("samples must be a 1-d array whose length is a power of two (>= 8)")
    c = np.fft.fft(f) / M
    half = M // 2
    n = np.concatenate([np.arange(0, half), np.arange(-half, 0)])
    mags = np.abs(c)
    if np.any(mags[np.abs(n) >= 3 * M // 8] >= tol):
        raise HeatWaveError(f"spectrum does not decay below {tol:.1e} on {M} points; refine the grid")
    big = np.abs(n[mags >= tol])
    N_f = int(big.max()) if big.size else 0
    coeffs = np.array([c[k % M] for k in range(-N_f, N_f + 1)], dtype=complex)
    real = bool(np.isrealobj(f))
    if real:
        # enforce exact conjugate symmetry
        coeffs = (coeffs + np.conj(coeffs[::-1])) / 2
    return PeriodicIC(coeffs, N_f, tol, real)


def heatwave_p(mu, p: int = 5) -> Fraction:
    """``p`` if ``mu p`` is a positive integer, else ``k / mu`` with ``k = max(1, round(p mu))``."""
    mu = Fraction(mu)
    if (mu * p).denominator == 1:
        return Fraction(p)
    return max(1, round(p * mu)) / mu


def mode_problem(n: int, mu, T: float) -> FIEProblem:
    """``u + n^2 (T/2)^mu I^mu u = 1`` on ``[-1, 1]``."""
    lam = n * n * (T / 2) ** float(mu)
    return FIEProblem([Term(0), Term(Fraction(mu), repr(lam))], rhs="1", name=f"mode{n}")


@dataclass
class HeatWaveSolution:
    mu: Fraction
    T: float
    ic: PeriodicIC
    master: SolutionFunction | None
    meta: dict = field(default_factory=dict)

    @property
    def N(self) -> int:
        return self.ic.N_f

    def mode(self, n: int, t):
        """``u_n(t)`` for ``t`` in ``[0, T]``."""
        t = np.asarray(t, dtype=float)
        if np.any(t < 0) or np.any(t > self.T * (1 + 1e-14)):
            raise ValueError("t must lie in [0, T]")
        n = abs(int(n))
        if n == 0 or self.master is None:
            return np.ones_like(t) if t.ndim else 1.0
        if n > self.N:
            raise ValueError(f"mode {n} exceeds the truncation N = {self.N}")
        tau = (n / self.N) ** (2 / float(self.mu)) * t
        s = np.clip(2 * tau / self.T - 1, -1.0, 1.0)
        return self.master(s)


def solve_heatwave(ic: PeriodicIC, mu, T: float, p: int = 5, delta: float = 1e-16,
                   N: int | None = None, working_precision: int | None = None) -> HeatWaveSolution:
    """Solve the master mode FIE for ``n = N_f`` once.

    ``N`` is the truncation of the JFP expansion (automatic by default).
    """
    mu = Fraction(mu).limit_denominator(10**6)
    if not 0 < mu <= 2:
        raise HeatWaveError("mu must lie in (0, 2]")
    if T <= 0:
        raise HeatWaveError("T must be positive")
    if ic.N_f == 0:
        return HeatWaveSolution(mu, float(T), ic, None, {"p": None})
    pp = heatwave_p(mu, p)
    k_star = int(mu * pp)
    prob = mode_problem(ic.N_f, mu, T)
    basis = select_basis(prob, k_star=k_star)
    if N is None:
        sol = _solve_auto(prob, basis, delta, working_precision)
    else:
        sol = solve(prob, N, delta, basis=basis, working_precision=working_precision)
    meta = {"p": str(pp), "k_star": k_star, "N": sol.N, "lambda": ic.N_f**2 * (T / 2) ** float(mu),
            "residual": sol.residual_estimate, "converged": sol.converged}
    return HeatWaveSolution(mu, float(T), ic, sol, meta)


def _solve_auto(prob, basis, delta, wp, N0: int = 32, N_max: int = 512, tol: float = 1e-13):
    # large n^2 T^mu puts the double coefficient noise near 1e-14, so stop at
    # tol or as soon as the tail stagnates after having dropped below 1e-10
    N, prev = N0, None
    while True:
        sol = solve(prob, N, delta, basis=basis, working_precision=wp, tail_tol=tol)
        stalled = prev is not None and prev.tail < 1e-10 and sol.tail > 0.3 * prev.tail
        if stalled and prev.tail <= sol.tail:
            sol = prev
        if sol.converged or stalled or N >= N_max:
            sol.meta["auto_N"] = sol.N
            return sol
        prev = sol
        N = min(int(math.ceil(1.5 * N)), N_max)


def evaluate_xt(sol: HeatWaveSolution, x_grid, t_grid) -> np.ndarray:
    """``u(x, t)`` on the tensor grid, rows indexed by ``t`` and columns by ``x``."""
    x = np.asarray(x_grid, dtype=float)
    t = np.asarray(t_grid, dtype=float)
    Nf = sol.ic.N_f
    ns = np.arange(-Nf, Nf + 1)
    # u_{-n} = u_n: evaluate non-negative modes only
    modes = np.empty((t.size, Nf + 1))
    for n in range(Nf + 1):
        modes[:, n] = sol.mode(n, t)
    U = modes[:, np.abs(ns)] * sol.ic.coeffs[None, :]
    out = U @ np.exp(1j * np.multiply.outer(ns, x))
    return out.real if sol.ic.real else out
