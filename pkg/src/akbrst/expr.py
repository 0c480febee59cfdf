"""Safe arithmetic expressions over chart coordinates.

Expressions are parsed with :mod:`ast` and compiled into closures that work
on floats, numpy arrays and :class:`~akbrst.jets.Jet` objects alike.
"""

from __future__ import annotations

import ast
import math
from typing import Callable, Sequence

from . import jets

_FUNCS: dict[str, Callable] = {
    "sin": jets.sin,
    "cos": jets.cos,
    "exp": jets.exp,
    "log": jets.log,
    "sqrt": jets.sqrt,
}
_CONSTS = {"pi": math.pi}


class ExpressionError(ValueError):
    pass


class Expression:
    """A compiled scalar expression in the named coordinates."""

    def __init__(self, source: str | float | int, names: Sequence[str]):
        self.source = str(source)
        self.names = tuple(names)
        try:
            tree = ast.parse(self.source.replace("^", "**"), mode="eval")
        except SyntaxError as exc:
            raise ExpressionError(f"cannot parse {self.source!r}: {exc.msg}") from None
        self._fn = self._compile(tree.body)
        self.is_constant = not any(isinstance(n, ast.Name) and n.id in self.names for n in ast.walk(tree))

    def __call__(self, coords: Sequence):
        return self._fn(coords)

    def __repr__(self) -> str:
        return f"Expression({self.source!r})"

    def _compile(self, node) -> Callable:
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            v = float(node.value)
            return lambda c: v
        if isinstance(node, ast.Name):
            if node.id in self.names:
                k = self.names.index(node.id)
                return lambda c: c[k]
            if node.id in _CONSTS:
                v = _CONSTS[node.id]
                return lambda c: v
            raise ExpressionError(f"unknown name {node.id!r} in {self.source!r}")
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            f = self._compile(node.operand)
            if isinstance(node.op, ast.USub):
                return lambda c: -f(c)
            return f
        if isinstance(node, ast.BinOp):
            a, b = self._compile(node.left), self._compile(node.right)
            op = node.op
            if isinstance(op, ast.Add):
                return lambda c: a(c) + b(c)
            if isinstance(op, ast.Sub):
                return lambda c: a(c) - b(c)
            if isinstance(op, ast.Mult):
                return lambda c: a(c) * b(c)
            if isinstance(op, ast.Div):
                return lambda c: a(c) / b(c)
            if isinstance(op, ast.Pow):
                exponent = node.right
                if isinstance(exponent, ast.Constant) and float(exponent.value).is_integer() and exponent.value >= 0:
                    n = int(exponent.value)
                    return lambda c: a(c) ** n
                return lambda c: _pow(a(c), b(c))
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS:
            if len(node.args) != 1 or node.keywords:
                raise ExpressionError(f"{node.func.id} takes exactly one argument")
            fn = _FUNCS[node.func.id]
            arg = self._compile(node.args[0])
            return lambda c: fn(arg(c))
        raise ExpressionError(f"unsupported syntax in {self.source!r}: {ast.dump(node)[:60]}")


def _pow(base, exponent):
    if isinstance(exponent, jets.Jet):
        return jets.exp(jets.log(base) * exponent)
    return jets.power(base, float(exponent))
