"""Tiny expression grammar for scenario data formulas.

Supported: the variables x, y (torus coordinates), theta (sphere polar
angle), t (time, where a check evaluates time-dependent fields), the
constants pi and period, numeric literals, + - * / ** with unary minus,
and the functions sin, cos, exp, sqrt.  Expressions are parsed with the
Python ``ast`` module into a small closed tree; nothing outside the
whitelist evaluates.

The same tree supports exact symbolic differentiation (powers must
have constant exponents), which supplies the analytic flat Laplacian
of a torus conformal factor -- the exactness ladder used by the
curvature convergence baselines.
"""

from __future__ import annotations

import ast

import numpy as np

__all__ = ["Expression", "ExpressionError"]

_FUNCS = {"sin": np.sin, "cos": np.cos, "exp": np.exp, "sqrt": np.sqrt}
_VARS = {"x", "y", "theta", "t"}
_CONSTS = {"pi": np.pi}


class ExpressionError(ValueError):
    """Formula outside the supported grammar."""


class _Node:
    pass


class _Num(_Node):
    def __init__(self, value):
        self.value = float(value)


class _Var(_Node):
    def __init__(self, name):
        self.name = name


class _Bin(_Node):
    def __init__(self, op, left, right):
        self.op = op
        self.left = left
        self.right = right


class _Neg(_Node):
    def __init__(self, arg):
        self.arg = arg


class _Call(_Node):
    def __init__(self, func, arg):
        self.func = func
        self.arg = arg


def _convert(node: ast.AST, params: dict) -> _Node:
    if isinstance(node, ast.Expression):
        return _convert(node.body, params)
    if isinstance(node, ast.Constant):
        if isinstance(node.value, (int, float)):
            return _Num(node.value)
        raise ExpressionError(f"literal {node.value!r} not allowed")
    if isinstance(node, ast.Name):
        if node.id in _VARS:
            return _Var(node.id)
        if node.id in _CONSTS:
            return _Num(_CONSTS[node.id])
        if node.id in params:
            return _Num(params[node.id])
        raise ExpressionError(f"unknown name {node.id!r}")
    if isinstance(node, ast.BinOp):
        ops = {ast.Add: "+", ast.Sub: "-", ast.Mult: "*", ast.Div: "/", ast.Pow: "**"}
        for klass, sym in ops.items():
            if isinstance(node.op, klass):
                return _Bin(sym, _convert(node.left, params), _convert(node.right, params))
        raise ExpressionError("operator not allowed")
    if isinstance(node, ast.UnaryOp):
        if isinstance(node.op, ast.USub):
            return _Neg(_convert(node.operand, params))
        if isinstance(node.op, ast.UAdd):
            return _convert(node.operand, params)
        raise ExpressionError("unary operator not allowed")
    if isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCS:
            raise ExpressionError("only sin/cos/exp/sqrt calls allowed")
        if len(node.args) != 1 or node.keywords:
            raise ExpressionError("functions take exactly one argument")
        return _Call(node.func.id, _convert(node.args[0], params))
    raise ExpressionError(f"syntax {type(node).__name__} not allowed")


def _evaluate(node: _Node, env: dict):
    if isinstance(node, _Num):
        return node.value
    if isinstance(node, _Var):
        if node.name not in env:
            raise ExpressionError(f"variable {node.name!r} not supplied")
        return env[node.name]
    if isinstance(node, _Neg):
        return -_evaluate(node.arg, env)
    if isinstance(node, _Call):
        return _FUNCS[node.func](_evaluate(node.arg, env))
    a = _evaluate(node.left, env)
    b = _evaluate(node.right, env)
    if node.op == "+":
        return a + b
    if node.op == "-":
        return a - b
    if node.op == "*":
        return a * b
    if node.op == "/":
        return a / b
    return a**b


def _diff(node: _Node, var: str) -> _Node:
    if isinstance(node, _Num):
        return _Num(0.0)
    if isinstance(node, _Var):
        return _Num(1.0 if node.name == var else 0.0)
    if isinstance(node, _Neg):
        return _Neg(_diff(node.arg, var))
    if isinstance(node, _Call):
        inner = _diff(node.arg, var)
        if node.func == "sin":
            outer = _Call("cos", node.arg)
        elif node.func == "cos":
            outer = _Neg(_Call("sin", node.arg))
        elif node.func == "exp":
            outer = _Call("exp", node.arg)
        else:  # sqrt
            outer = _Bin("/", _Num(0.5), _Call("sqrt", node.arg))
        return _Bin("*", outer, inner)
    if node.op in ("+", "-"):
        return _Bin(node.op, _diff(node.left, var), _diff(node.right, var))
    if node.op == "*":
        return _Bin(
            "+",
            _Bin("*", _diff(node.left, var), node.right),
            _Bin("*", node.left, _diff(node.right, var)),
        )
    if node.op == "/":
        num = _Bin(
            "-",
            _Bin("*", _diff(node.left, var), node.right),
            _Bin("*", node.left, _diff(node.right, var)),
        )
        return _Bin("/", num, _Bin("**", node.right, _Num(2.0)))
    # power: constant exponent only
    if not isinstance(node.right, _Num):
        raise ExpressionError("derivatives require constant exponents")
    n = node.right.value
    return _Bin(
        "*",
        _Bin("*", _Num(n), _Bin("**", node.left, _Num(n - 1.0))),
        _diff(node.left, var),
    )


class Expression:
    """A parsed formula: callable, differentiable, picklable by source."""

    def __init__(self, source: str, params: dict | None = None):
        self.source = source
        params = dict(params or {})
        try:
            tree = ast.parse(source, mode="eval")
        except SyntaxError as exc:
            raise ExpressionError(f"cannot parse formula {source!r}: {exc}") from exc
        self._root = _convert(tree, params)

    @classmethod
    def _from_node(cls, node: _Node, source: str) -> "Expression":
        out = cls.__new__(cls)
        out.source = source
        out._root = node
        return out

    def __call__(self, **env):
        return _evaluate(self._root, env)

    def diff(self, var: str) -> "Expression":
        return Expression._from_node(_diff(self._root, var), f"d/d{var}({self.source})")

    def flat_laplacian(self) -> "Expression":
        """d^2/dx^2 + d^2/dy^2 of a torus formula, symbolically."""
        dxx = _diff(_diff(self._root, "x"), "x")
        dyy = _diff(_diff(self._root, "y"), "y")
        return Expression._from_node(_Bin("+", dxx, dyy), f"lap({self.source})")
