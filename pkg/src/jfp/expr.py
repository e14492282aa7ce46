"""A small closed-form expression language for coefficients and constants.

Problem files describe coefficient functions such as ``erfc(sqrt(1+x))`` or
``1 + x**2`` as strings.  They are parsed with :mod:`ast` and evaluated either
on NumPy arrays (double precision) or on mpmath numbers at a chosen precision.
Only the names in :data:`FUNCTIONS` and :data:`CONSTANTS`, the variable ``x``
and arithmetic operators are accepted.
"""

from __future__ import annotations

import ast
import functools
import math

import numpy as np
import scipy.special as sps

__all__ = ["Expression", "parse", "evaluate_constant", "ExpressionError"]


class ExpressionError(ValueError):
    pass


FUNCTIONS = ("exp", "log", "sqrt", "sin", "cos", "erf", "erfc", "gamma", "abs")
CONSTANTS = ("pi", "e")

_NUMPY = {
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "sin": np.sin,
    "cos": np.cos,
    "erf": sps.erf,
    "erfc": sps.erfc,
    "gamma": sps.gamma,
    "abs": np.abs,
}

_BINOPS = (ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow)


def _check(node: ast.AST, variables: tuple[str, ...]) -> None:
    if isinstance(node, ast.Expression):
        _check(node.body, variables)
    elif isinstance(node, ast.BinOp):
        if not isinstance(node.op, _BINOPS):
            raise ExpressionError(f"operator {type(node.op).__name__} not allowed")
        _check(node.left, variables)
        _check(node.right, variables)
    elif isinstance(node, ast.UnaryOp):
        if not isinstance(node.op, (ast.UAdd, ast.USub)):
            raise ExpressionError(f"operator {type(node.op).__name__} not allowed")
        _check(node.operand, variables)
    elif isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or node.func.id not in FUNCTIONS:
            raise ExpressionError(f"unknown function in {ast.dump(node.func)}")
        if len(node.args) != 1 or node.keywords:
            raise ExpressionError(f"{node.func.id} takes exactly one argument")
        _check(node.args[0], variables)
    elif isinstance(node, ast.Name):
        if node.id not in CONSTANTS and node.id not in variables:
            raise ExpressionError(f"unknown name {node.id!r}")
    elif isinstance(node, ast.Constant):
        if not isinstance(node.value, (int, float)) or isinstance(node.value, bool):
            raise ExpressionError(f"bad literal {node.value!r}")
    else:
        raise ExpressionError(f"unsupported syntax: {type(node).__name__}")


@functools.lru_cache(maxsize=512)
def parse(source: str, variables: tuple[str, ...] = ("x",)) -> ast.Expression:
    text = source.replace("^", "**")
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse {source!r}: {exc.msg}") from None
    _check(tree, variables)
    return tree


def _eval(node, env, funcs, literal):
    if isinstance(node, ast.Expression):
        return _eval(node.body, env, funcs, literal)
    if isinstance(node, ast.BinOp):
        if "1+x" in env and _is_one_plus_x(node):
            return env["1+x"]
        a = _eval(node.left, env, funcs, literal)
        b = _eval(node.right, env, funcs, literal)
        op = node.op
        if isinstance(op, ast.Add):
            return a + b
        if isinstance(op, ast.Sub):
            return a - b
        if isinstance(op, ast.Mult):
            return a * b
        if isinstance(op, ast.Div):
            return a / b
        return a**b
    if isinstance(node, ast.UnaryOp):
        v = _eval(node.operand, env, funcs, literal)
        return -v if isinstance(node.op, ast.USub) else v
    if isinstance(node, ast.Call):
        return funcs[node.func.id](_eval(node.args[0], env, funcs, literal))
    if isinstance(node, ast.Name):
        return env[node.id]
    return literal(node.value)


def _is_one_plus_x(node: ast.BinOp) -> bool:
    if not isinstance(node.op, ast.Add):
        return False
    sides = (node.left, node.right)
    has_x = any(isinstance(n, ast.Name) and n.id == "x" for n in sides)
    has_one = any(isinstance(n, ast.Constant) and n.value == 1 for n in sides)
    return has_x and has_one


def evaluate_constant(source: str, ctx):
    """Evaluate a variable-free expression at the precision of ``ctx``."""
    mp = ctx.mp
    tree = parse(source, ())
    funcs = {name: getattr(mp, name) for name in FUNCTIONS if name != "abs"}
    funcs["abs"] = abs
    env = {"pi": mp.pi, "e": mp.e}
    return _eval(tree, env, funcs, _mp_literal(mp))


def _mp_literal(mp):
    def literal(v):
        if isinstance(v, int):
            return mp.mpf(v)
        # decimal literals are read from their source text, not the rounded double
        return mp.mpf(repr(v))

    return literal


class Expression:
    """A parsed function of ``x``.

    >>> Expression("erfc(sqrt(1+x))")(np.array([0.0]))
    array([0.04677735])
    """

    def __init__(self, source: str):
        self.source = str(source)
        self.tree = parse(self.source)

    def __repr__(self):
        return f"Expression({self.source!r})"

    def __eq__(self, other):
        return isinstance(other, Expression) and other.source == self.source

    def __hash__(self):
        return hash(self.source)

    @property
    def is_constant(self) -> bool:
        return not any(isinstance(n, ast.Name) and n.id == "x" for n in ast.walk(self.tree))

    def __call__(self, x, one_plus_x=None):
        """Evaluate on an array.

        ``one_plus_x``, if given, is used verbatim wherever ``1+x`` appears,
        which avoids cancellation next to ``x = -1``.
        """
        x = np.asarray(x, dtype=float)
        env = {"x": x, "pi": math.pi, "e": math.e}
        if one_plus_x is not None:
            env["1+x"] = np.asarray(one_plus_x, dtype=float)
        with np.errstate(invalid="ignore", divide="ignore"):
            out = _eval(self.tree, env, _NUMPY, float)
        return np.broadcast_to(np.asarray(out, dtype=float), x.shape).copy()

    def mp(self, x, ctx, one_plus_x=None):
        """Evaluate at a single point with mpmath at the precision of ``ctx``."""
        mp = ctx.mp
        funcs = {name: getattr(mp, name) for name in FUNCTIONS if name != "abs"}
        funcs["abs"] = abs
        env = {"x": mp.mpf(x), "pi": mp.pi, "e": mp.e}
        if one_plus_x is not None:
            env["1+x"] = mp.mpf(one_plus_x)
        return _eval(self.tree, env, funcs, _mp_literal(mp))
