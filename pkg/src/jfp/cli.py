"""Command-line interface: ``jfp <subcommand>``.

Exit codes: 0 success, 1 configuration error, 2 numerical non-convergence,
3 internal error.  Tables are written with ``repr`` floats and fixed column
orders, so identical inputs give byte-identical files.  Timings and chosen
precisions go to the log (stderr), never into the tables.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import sys
import time
from fractions import Fraction

import click
import mpmath as mp
import numpy as np

from . import __version__
from .basis import JFPParams
from .expr import Expression, ExpressionError
from .fracint import pseudo_stabilized
from .heatwave import HeatWaveError, evaluate_xt, fourier_decompose, solve_heatwave
from .mittag_leffler import ml_eval
from .problems import ProblemError, basis_options, exact_solution, load_problem, parse_order
from .solver import BasisError, RHSError, SolveError, select_basis, solve, solve_auto, solve_bordered
from .sumspace import compare_report, report_csv

log = logging.getLogger("jfp")

CSV_VERSION = "1"
EXIT_CONFIG, EXIT_NONCONV, EXIT_INTERNAL = 1, 2, 3
HEAT_IC = "exp(-cos(2*x) + sin(x)/2) - 2*sin(sin(x))"


class NonConvergence(RuntimeError):
    pass


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


def _emit(text: str, output) -> None:
    if output in (None, "-"):
        click.echo(text, nl=False)
    else:
        with open(output, "w", newline="") as fh:
            fh.write(text)


def _write_meta(meta: dict, path) -> None:
    if path:
        with open(path, "w") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _parse_grid(spec: str) -> np.ndarray:
    """``start:step:stop`` (inclusive) or a comma-separated list."""
    try:
        if ":" in spec:
            a, h, b = (float(v) for v in spec.split(":"))
            if h <= 0 or b < a:
                raise ValueError
            n = int(round((b - a) / h))
            return np.linspace(a, a + n * h, n + 1)
        return np.array([float(v) for v in spec.split(",")])
    except ValueError as exc:
        raise click.BadParameter(f"invalid grid {spec!r}; use start:step:stop or a list") from exc


def _parse_precision(value: str):
    if value == "auto":
        return None
    try:
        q = int(value)
    except ValueError as exc:
        raise click.BadParameter("precision must be 'auto' or a number of bits") from exc
    if q < 53:
        raise click.BadParameter("precision must be at least 53 bits")
    return q


def _check_delta(delta: float) -> None:
    if not 0 < delta <= 0.1:
        raise click.BadParameter("delta must lie in (0, 0.1]")


def _ints(spec: str) -> list[int]:
    try:
        return [int(v) for v in spec.split(",") if v.strip()]
    except ValueError as exc:
        raise click.BadParameter(f"expected a comma-separated list of integers, got {spec!r}") from exc


@click.group()
@click.version_option(__version__, prog_name="jfp")
@click.option("-v", "--verbose", count=True, help="Log level: -v info, -vv debug (stderr).")
def cli(verbose: int) -> None:
    """Spectral solver for fractional integral equations in Jacobi fractional polynomial bases."""
    level = logging.WARNING if verbose == 0 else logging.INFO if verbose == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr, force=True)


@cli.command()
@click.option("--alpha", default="0", show_default=True, help="Jacobi alpha (exact rational).")
@click.option("--beta", default="0", show_default=True, help="Jacobi beta (exact rational).")
@click.option("--b", "b", default="0", show_default=True, help="Weight exponent b.")
@click.option("--p", "p", default="1", show_default=True, help="Power-map exponent p.")
@click.option("--mu", required=True, help="Order, 'a/b'; decimals or expressions need --irrational.")
@click.option("--N", "N", type=click.IntRange(1), required=True, help="Number of columns.")
@click.option("--delta", type=float, default=1e-16, show_default=True, help="Target entrywise error.")
@click.option("--precision", default="auto", show_default=True, help="'auto' or bits.")
@click.option("--q0", type=int, default=53, show_default=True, help="Base precision of the error simulation.")
@click.option("--algorithm", type=click.Choice(["auto", "alg1", "alg2"]), default="auto", show_default=True)
@click.option("--irrational", is_flag=True, help="Accept a non-rational order (Algorithm 1).")
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", show_default=True)
@click.option("-o", "--output", default=None, help="Output file (default stdout).")
@click.option("--meta", default=None, help="Write run metadata as JSON to this file.")
def fracmat(alpha, beta, b, p, mu, N, delta, precision, q0, algorithm, irrational, fmt, output, meta):
    """Build a fractional integration matrix with automatic precision."""
    _check_delta(delta)
    q = _parse_precision(precision)
    order = parse_order(mu, irrational)
    pp = parse_order(p, irrational)
    params = JFPParams(Fraction(alpha), Fraction(beta), Fraction(b), pp)
    t0 = time.perf_counter()
    A = pseudo_stabilized(params, order, N, delta=delta, q0=q0, precision=q,
                          algorithm=None if algorithm == "auto" else algorithm)
    log.info("fracmat %s mu=%s N=%d: q=%d m*=%s estimate=%.2e in %.2fs", params, order, N, A.precision,
             A.meta.get("m_star"), A.error_estimate, time.perf_counter() - t0)
    info = {"csv_version": CSV_VERSION, "params": {"alpha": alpha, "beta": beta, "b": b, "p": str(pp)},
            "mu": str(order), "N": N, "k_star": A.k_star, "algorithm": A.algorithm, "precision": A.precision,
            "precision_policy": "auto" if q is None else "bits", "delta": delta,
            "error_estimate": A.error_estimate, "m_star": A.meta.get("m_star")}
    digits = int(A.precision * 0.30103) + 3
    if fmt == "json":
        doc = dict(info)
        doc["columns"] = [[mp.nstr(v, digits, strip_zeros=False) if v != 0 else "0"
                           for v in A.columns[: min(A.shape[0], j + A.k_star + 1), j]] for j in range(A.N)]
        _emit(json.dumps(doc, sort_keys=True) + "\n", output)
    else:
        rows = []
        for j in range(A.N):
            for i in range(min(A.shape[0], j + A.k_star + 1)):
                v = A.columns[i, j]
                if v != 0:
                    rows.append((i, j, mp.nstr(v, digits, strip_zeros=False)))
        _emit(_csv(("row", "col", "value"), rows), output)
    _write_meta(info, meta)


def _run_solve(problem, data, N, delta, build_q, working_q, k_star, alpha, beta, b):
    kw = basis_options(data)
    for key, v in (("k_star", k_star), ("alpha", alpha), ("beta", beta), ("b", b)):
        if v is not None:
            kw[key] = int(v) if key == "k_star" else Fraction(v)
    basis = select_basis(problem, **kw)
    if problem.unknowns:
        if N == "auto":
            N = 80
        bs = solve_bordered(problem, N, delta, basis=basis, build_precision=build_q)
        fn = bs.u if bs.reconstruction is not None else bs.solution
        return bs.solution, fn, basis, bs.constants, True
    if N == "auto":
        sol = solve_auto(problem, basis=basis, delta=delta, build_precision=build_q, working_precision=working_q)
        return sol, sol, basis, {}, sol.converged
    sol = solve(problem, N, delta, basis=basis, build_precision=build_q, working_precision=working_q)
    return sol, sol, basis, {}, True


def _parse_N(value: str):
    if value == "auto":
        return value
    try:
        n = int(value)
    except ValueError as exc:
        raise click.BadParameter("N must be a positive integer or 'auto'") from exc
    if n < 0:
        raise click.BadParameter("N must be non-negative")
    return n


@cli.command("solve")
@click.argument("problem_file")
@click.option("--N", "N", default="auto", show_default=True, help="Truncation size or 'auto'.")
@click.option("--delta", type=float, default=1e-16, show_default=True)
@click.option("--precision", default="auto", show_default=True, help="Build precision of fractional matrices.")
@click.option("--working-precision", type=int, default=None, help="Bits for assembly and solve (default double).")
@click.option("--k-star", type=int, default=None, help="Override k_star from the problem file.")
@click.option("--alpha", default=None)
@click.option("--beta", default=None)
@click.option("--b", "b", default=None)
@click.option("--grid", default="-1:0.01:1", show_default=True, help="Evaluation grid start:step:stop.")
@click.option("--irrational", is_flag=True, help="Accept non-rational orders in the problem file.")
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", show_default=True)
@click.option("-o", "--output", default=None)
@click.option("--meta", default=None, help="Write run metadata as JSON to this file.")
def solve_cmd(problem_file, N, delta, precision, working_precision, k_star, alpha, beta, b, grid, irrational,
              fmt, output, meta):
    """Solve PROBLEM_FILE (a TOML file or a built-in name such as 'mittag1')."""
    _check_delta(delta)
    N = _parse_N(N)
    build_q = _parse_precision(precision)
    problem, data = load_problem(problem_file, irrational)
    x = _parse_grid(grid)
    t0 = time.perf_counter()
    sol, fn, basis, consts, converged = _run_solve(problem, data, N, delta, build_q, working_precision,
                                                   k_star, alpha, beta, b)
    u = np.asarray(fn(x), dtype=float)
    exact = exact_solution(problem)
    ex = np.asarray(exact(x), dtype=float) if exact is not None else None
    log.info("solve %s: basis %s N=%d residual=%.2e precisions=%s in %.2fs", problem.name, basis.params, sol.N,
             sol.residual_estimate, sol.meta.get("precisions"), time.perf_counter() - t0)
    info = {"csv_version": CSV_VERSION, "problem": problem.name, "basis": str(basis.params), "N": sol.N,
            "delta": delta, "precision_policy": "auto" if build_q is None else "bits", "build_precision": build_q,
            "fracmat_precisions": sol.meta.get("precisions"), "residual": sol.residual_estimate,
            "tail": sol.tail, "converged": bool(converged), "constants": consts}
    if ex is not None:
        info["max_error"] = float(np.max(np.abs(u - ex)))
    if fmt == "json":
        doc = dict(info)
        doc["coefficients"] = [repr(float(c)) for c in sol.coeffs]
        doc["grid"] = [repr(float(v)) for v in x]
        doc["u"] = [repr(float(v)) for v in u]
        _emit(json.dumps(doc, sort_keys=True) + "\n", output)
    else:
        header = ("x", "u") + (("exact", "error") if ex is not None else ())
        rows = [(xi, ui) + ((ei, abs(ui - ei)) if ex is not None else ()) for xi, ui, ei in
                zip(x, u, ex if ex is not None else [None] * len(x))]
        _emit(_csv(header, rows), output)
    _write_meta(info, meta)
    if not converged:
        raise NonConvergence(f"coefficient tail {sol.tail:.2e} not below tolerance up to N = {sol.N}")


@cli.command()
@click.option("--alpha", "a", default="1/2", show_default=True, help="First parameter (order).")
@click.option("--beta", "b", default="1", show_default=True, help="Second parameter.")
@click.option("--z", "zspec", default="-10:0.5:0", show_default=True, help="Arguments start:step:stop.")
@click.option("--delta", type=float, default=1e-16, show_default=True)
@click.option("-o", "--output", default=None)
def ml(a, b, zspec, delta, output):
    """Tabulate the Mittag-Leffler function E_{alpha,beta}(z)."""
    _check_delta(delta)
    z = _parse_grid(zspec)
    rows = [(zi, ml_eval(a, b, float(zi), delta)) for zi in z]
    _emit(_csv(("z", "E"), rows), output)


@cli.command()
@click.option("--mu", required=True, help="Order in (0, 2], exact rational 'a/b'.")
@click.option("--T", "T", type=float, default=1.0, show_default=True, help="Final time.")
@click.option("--p", "p", type=int, default=5, show_default=True, help="Preferred power-map exponent.")
@click.option("--ic", default=HEAT_IC, show_default=True, help="Initial datum f(x), 2 pi periodic.")
@click.option("--samples", type=int, default=256, show_default=True, help="FFT grid size (power of two).")
@click.option("--nx", type=click.IntRange(1), default=65, show_default=True, help="Points in x over [0, 2 pi].")
@click.option("--nt", type=click.IntRange(1), default=11, show_default=True, help="Points in t over [0, T].")
@click.option("--delta", type=float, default=1e-16, show_default=True)
@click.option("-o", "--output", default=None)
@click.option("--meta", default=None, help="Write run metadata as JSON to this file.")
def heatwave(mu, T, p, ic, samples, nx, nt, delta, output, meta):
    """Time-fractional heat/wave equation; CSV rows are t, columns are x."""
    _check_delta(delta)
    order = parse_order(mu)
    try:
        f = Expression(ic)
    except (ExpressionError, SyntaxError) as exc:
        raise click.BadParameter(f"--ic: {exc}") from exc
    xs = 2 * np.pi * np.arange(samples) / samples
    data = fourier_decompose(np.asarray(f(xs), dtype=float) * np.ones(samples))
    t0 = time.perf_counter()
    sol = solve_heatwave(data, order, T, p=p, delta=delta)
    x = np.linspace(0, 2 * np.pi, nx)
    t = np.linspace(0, T, nt)
    U = evaluate_xt(sol, x, t)
    log.info("heatwave mu=%s T=%g N_f=%d master N=%s in %.2fs", order, T, data.N_f, sol.meta.get("N"),
             time.perf_counter() - t0)
    rows = [(ti,) + tuple(row) for ti, row in zip(t, U)]
    _emit(_csv(("t\\x",) + tuple(repr(float(v)) for v in x), rows), output)
    info = {"csv_version": CSV_VERSION, "mu": str(order), "T": T, "N_f": data.N_f, "delta": delta,
            "p": sol.meta.get("p"), "master_N": sol.meta.get("N"), "residual": sol.meta.get("residual")}
    _write_meta(info, meta)
    if sol.meta.get("converged") is False:
        raise NonConvergence("master mode solve did not converge")


@cli.command("bench-sumspace")
@click.option("--lambdas", default="1,2,3", show_default=True, help="Comma-separated lambda values.")
@click.option("--N", "N", type=click.IntRange(2), default=2000, show_default=True, help="Sum-space size.")
@click.option("--jfp-N", "jfp_N", type=int, default=None, help="JFP truncation (default 40 + 14 lambda).")
@click.option("--bits", type=int, default=None, help="Sum-space reference precision (default automatic).")
@click.option("--delta", type=float, default=1e-16, show_default=True)
@click.option("-o", "--output", default=None)
def bench_sumspace(lambdas, N, jfp_N, bits, delta, output):
    """Compare the sum-space and JFP discretizations of u + lambda^2 I^(1/2) u = 1."""
    _check_delta(delta)
    try:
        lams = [float(v) for v in lambdas.split(",") if v.strip()]
    except ValueError as exc:
        raise click.BadParameter(f"invalid --lambdas {lambdas!r}") from exc
    if not lams or min(lams) <= 0:
        raise click.BadParameter("lambdas must be positive")
    t0 = time.perf_counter()
    rows = compare_report(lams, N=N, delta=delta, jfp_N=jfp_N, bits=bits)
    log.info("bench-sumspace done in %.2fs", time.perf_counter() - t0)
    _emit(report_csv(rows), output)


CONVERGENCE_DEFAULT = "mittag1,mittag1_third,mittag1_pi,mittag2,multi_order,variable_coeff,bagley_torvik_caputo"


@cli.command()
@click.option("--problems", default=CONVERGENCE_DEFAULT, show_default=True, help="Problem names or files.")
@click.option("--Ns", "Ns", default="10,20,30,40,50,60,80", show_default=True)
@click.option("--reference-N", "reference_N", type=int, default=160, show_default=True,
              help="Reference size for problems without an exact solution.")
@click.option("--grid", default="-1:0.01:1", show_default=True)
@click.option("--delta", type=float, default=1e-16, show_default=True)
@click.option("-o", "--output", default=None)
def convergence(problems, Ns, reference_N, grid, delta, output):
    """Max error against N (exact solution, or self-convergence against --reference-N)."""
    _check_delta(delta)
    sizes = _ints(Ns)
    x = _parse_grid(grid)
    rows = []
    for name in [s.strip() for s in problems.split(",") if s.strip()]:
        problem, data = load_problem(name, irrational=True)
        exact = exact_solution(problem)
        if exact is not None:
            ref, kind = np.asarray(exact(x), dtype=float), "exact"
        else:
            _, fn, _, _, _ = _run_solve(problem, data, reference_N, delta, None, None, None, None, None, None)
            ref, kind = np.asarray(fn(x), dtype=float), f"N={reference_N}"
        for n in sizes:
            sol, fn, _, _, _ = _run_solve(problem, data, n, delta, None, None, None, None, None, None)
            err = float(np.max(np.abs(np.asarray(fn(x), dtype=float) - ref)))
            rows.append((problem.name, n, kind, err, sol.tail))
            log.info("%s N=%d error %.2e", problem.name, n, err)
    _emit(_csv(("problem", "N", "reference", "max_error", "tail"), rows), output)


def main(argv=None) -> int:
    """Entry point with the documented exit codes."""
    try:
        cli.main(args=argv, prog_name="jfp", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.exceptions.Abort:
        return EXIT_CONFIG
    except click.ClickException as exc:
        exc.show()
        return EXIT_CONFIG
    except (ProblemError, BasisError, RHSError, HeatWaveError, ExpressionError, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_CONFIG
    except (NonConvergence, SolveError, ArithmeticError) as exc:
        click.echo(f"not converged: {exc}", err=True)
        return EXIT_NONCONV
    except Exception as exc:  # noqa: BLE001
        click.echo(f"internal error: {type(exc).__name__}: {exc}", err=True)
        return EXIT_INTERNAL
    return 0


if __name__ == "__main__":
    sys.exit(main())
