"""Coordinate expressions compiled from a restricted Python syntax.

Allowed: numbers, the declared variables (x1..xn by default), + - * /,
** with an integer literal exponent, unary minus and the functions sqrt, log
and exp. The compiled callable takes a sequence of variable values (floats,
jets or mpmath values) in declaration order.
"""

from __future__ import annotations

import ast
import operator
from typing import Callable

from . import jets
from .errors import ParseError

FUNCTIONS = {"sqrt": jets.sqrt, "log": jets.log, "exp": jets.exp}
_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv}


def coordinate_names(n: int, prefix: str = "x") -> tuple[str, ...]:
    return tuple(f"{prefix}{i + 1}" for i in range(n))


class Expression:
    """A compiled expression; call with a coordinate sequence."""

    def __init__(self, source: str, names, where: str = ""):
        self.source = source
        self.names = tuple(names)
        self.where = where
        self._index = {v: i for i, v in enumerate(self.names)}
        try:
            tree = ast.parse(source.strip(), mode="eval")
        except SyntaxError as exc:
            raise ParseError(f"cannot parse expression {source!r}: {exc.msg}", where) from None
        self._fn = self._compile(tree.body)
        self.used = frozenset(s.id for s in ast.walk(tree.body) if isinstance(s, ast.Name)) & set(self.names)
        self.constant = not self.used

    def _fail(self, what: str):
        raise ParseError(f"{what} in expression {self.source!r}", self.where)

    def _compile(self, node) -> Callable:
        if isinstance(node, ast.Constant):
            if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
                self._fail(f"unsupported literal {node.value!r}")
            v = float(node.value)
            return lambda x: v
        if isinstance(node, ast.Name):
            if node.id not in self._index:
                self._fail(f"unknown name {node.id!r}")
            i = self._index[node.id]
            return lambda x: x[i]
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            f = self._compile(node.operand)
            return (lambda x: -f(x)) if isinstance(node.op, ast.USub) else f
        if isinstance(node, ast.BinOp):
            if isinstance(node.op, ast.Pow):
                k = self._int_exponent(node.right)
                f = self._compile(node.left)
                return lambda x: f(x) ** k
            op = _BINOPS.get(type(node.op))
            if op is None:
                self._fail(f"unsupported operator {type(node.op).__name__}")
            f, g = self._compile(node.left), self._compile(node.right)
            return lambda x: op(f(x), g(x))
        if isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in FUNCTIONS:
                self._fail("unsupported function call")
            if len(node.args) != 1 or node.keywords:
                self._fail(f"{node.func.id} takes exactly one argument")
            fn, f = FUNCTIONS[node.func.id], self._compile(node.args[0])
            return lambda x: fn(f(x))
        self._fail(f"unsupported syntax {type(node).__name__}")

    def _int_exponent(self, node) -> int:
        sign = 1
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.USub):
            sign, node = -1, node.operand
        if isinstance(node, ast.Constant) and isinstance(node.value, int) and not isinstance(node.value, bool):
            return sign * node.value
        self._fail("exponent must be an integer literal")

    def __call__(self, x):
        return self._fn(x)

    def __repr__(self):
        return f"Expression({self.source!r})"


def compile_expression(source: str, n: int, where: str = "", prefix: str = "x") -> Expression:
    """Expression in the coordinates ``{prefix}1 .. {prefix}n``."""
    return Expression(source, coordinate_names(n, prefix), where)
