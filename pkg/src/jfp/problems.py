"""TOML problem files.

A problem file lists the terms of the equation and, optionally, basis
choices, unknown constants with side conditions, a reconstruction and a
known exact solution::

    name = "mittag1"
    rhs = "1"
    nu = "1"

    [[terms]]
    order = "0"

    [[terms]]
    order = "1/2"
    outer = "1"

    [basis]
    k_star = 1

    [exact]
    kind = "mittag_leffler"
    mu = "1/2"
    lam = "1"

Orders are exact rationals (``"1/2"``, ``"3"``).  Decimal or symbolic
orders such as ``"0.3"`` or ``"1/pi"`` are irrational and need
``irrational = true`` (on the term or at top level).
"""

from __future__ import annotations

import re
from fractions import Fraction
from importlib import resources
from pathlib import Path

import numpy as np
import tomli

from .expr import Expression, ExpressionError
from .mittag_leffler import ml_solution
from .precision import Irrational
from .solver import FIEProblem, Reconstruction, SideCondition, Term, Unknown

__all__ = ["ProblemError", "parse_order", "load_problem", "problem_from_dict", "builtin_problems",
           "builtin_path", "exact_solution", "basis_options"]

_RATIONAL = re.compile(r"^\s*[+-]?\d+\s*(/\s*\d+\s*)?$")


class ProblemError(ValueError):
    """Invalid problem description (maps to CLI exit code 1)."""


def parse_order(value, irrational: bool = False):
    """``Fraction`` for ``"a/b"`` or integers, :class:`Irrational` otherwise (only if allowed)."""
    if isinstance(value, bool):
        raise ProblemError(f"invalid order {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if value.is_integer():
            return Fraction(int(value))
        value = repr(value)
    if not isinstance(value, str):
        raise ProblemError(f"invalid order {value!r}")
    if _RATIONAL.match(value):
        try:
            return Fraction(value.replace(" ", ""))
        except ZeroDivisionError as exc:
            raise ProblemError(f"invalid order {value!r}") from exc
    if not irrational:
        raise ProblemError(f"order {value!r} is not an exact rational 'a/b'; "
                           "pass the irrational flag to treat it as an irrational order")
    try:
        order = Irrational(value)
        v = float(order)
    except (ExpressionError, ValueError, TypeError, SyntaxError) as exc:
        raise ProblemError(f"cannot evaluate order {value!r}: {exc}") from exc
    if not v > 0:
        raise ProblemError(f"order {value!r} must be positive")
    return order


def _expr(value, what: str) -> Expression:
    try:
        return Expression(str(value))
    except (ExpressionError, SyntaxError) as exc:
        raise ProblemError(f"{what}: {exc}") from exc


def problem_from_dict(data: dict, irrational: bool = False) -> FIEProblem:
    irr = bool(data.get("irrational", False)) or irrational
    if not data.get("terms"):
        raise ProblemError("a problem needs at least one [[terms]] entry")
    try:
        terms = [Term(parse_order(t.get("order", "0"), irr or bool(t.get("irrational", False))),
                      _expr(t.get("outer", "1"), "outer"), _expr(t.get("inner", "1"), "inner"))
                 for t in data["terms"]]
        unknowns = [Unknown(u["name"], _expr(u["func"], f"unknown {u['name']}")) for u in data.get("unknowns", [])]
        names = {u.name for u in unknowns}
        sides = []
        for sc in data.get("side_conditions", []):
            extra = set(sc.get("coeffs", {})) - names
            if extra:
                raise ProblemError(f"side condition refers to undeclared unknowns {sorted(extra)}")
            sides.append(SideCondition(float(sc["x0"]), float(sc["value"]), parse_order(sc.get("order", "0")),
                                       {k: float(v) for k, v in sc.get("coeffs", {}).items()}))
        rec = None
        if "reconstruct" in data:
            r = data["reconstruct"]
            rec = Reconstruction(parse_order(r.get("order", "0")), _expr(r.get("offset", "0"), "offset"),
                                 {k: _expr(v, f"reconstruct {k}") for k, v in r.get("funcs", {}).items()})
        return FIEProblem(terms, _expr(data.get("rhs", "1"), "rhs"), parse_order(data.get("nu", "1")),
                          unknowns, sides, rec, str(data.get("name", "fie")), data.get("exact"))
    except KeyError as exc:
        raise ProblemError(f"missing field {exc}") from exc
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ProblemError):
            raise
        raise ProblemError(str(exc)) from exc


def _read(path) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomli.load(fh)
    except tomli.TOMLDecodeError as exc:
        raise ProblemError(f"{path}: {exc}") from exc
    except OSError as exc:
        raise ProblemError(f"cannot read {path}: {exc}") from exc


def builtin_problems() -> list[str]:
    root = resources.files("jfp") / "problems"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".toml"))


def builtin_path(name: str) -> Path:
    path = Path(str(resources.files("jfp") / "problems" / f"{name}.toml"))
    if not path.exists():
        raise ProblemError(f"no built-in problem {name!r}; available: {', '.join(builtin_problems())}")
    return path


def load_problem(source, irrational: bool = False) -> tuple[FIEProblem, dict]:
    """Load a problem from a file or a built-in name; returns the problem and the raw table.

    A path that does not exist but whose stem names a built-in problem
    (``examples/mittag1.toml``) resolves to the built-in file.
    """
    path = Path(source)
    if not path.exists():
        stem = path.stem if path.suffix == ".toml" else str(source)
        if stem in builtin_problems():
            path = builtin_path(stem)
        else:
            raise ProblemError(f"problem file {source} not found")
    data = _read(path)
    return problem_from_dict(data, irrational), data


def basis_options(data: dict) -> dict:
    """Keyword arguments for :func:`jfp.solver.select_basis` from the ``[basis]`` table."""
    opts = dict(data.get("basis", {}))
    out = {}
    if "k_star" in opts:
        out["k_star"] = int(opts["k_star"])
    for key in ("alpha", "beta", "b"):
        if key in opts:
            out[key] = Fraction(str(opts[key]))
    return out


def exact_solution(problem: FIEProblem):
    """Callable exact solution if the problem declares one, else ``None``."""
    ex = problem.exact
    if not ex:
        return None
    kind = ex.get("kind")
    if kind == "mittag_leffler":
        mu = parse_order(ex["mu"], True)
        nu = parse_order(ex.get("nu", "1"))
        lam = float(Irrational(str(ex.get("lam", "1"))))
        return lambda x: ml_solution(mu, nu, lam, np.asarray(x, dtype=float))
    raise ProblemError(f"unknown exact solution kind {kind!r}")
