"""Forward-mode second-order jets and a whitelisted expression compiler.

A ``Jet`` carries value, gradient and Hessian with respect to the chart
variables, batched over a leading axis.  Arithmetic propagates both
derivative orders, so user-supplied component expressions get exact
second derivatives without finite differencing.
"""

from __future__ import annotations

import ast
import math

import numpy as np

from .errors import ExpressionError


class Jet:
    __slots__ = ("val", "grad", "hess")

    def __init__(self, val, grad, hess):
        self.val = val      # (B,)
        self.grad = grad    # (B, m)
        self.hess = hess    # (B, m, m)

    @staticmethod
    def variable(values, index, m):
        values = np.asarray(values, dtype=float)
        b = values.shape[0]
        grad = np.zeros((b, m))
        grad[:, index] = 1.0
        return Jet(values, grad, np.zeros((b, m, m)))

    @staticmethod
    def constant(value, like):
        b, m = like.grad.shape
        return Jet(np.full(b, float(value)), np.zeros((b, m)), np.zeros((b, m, m)))

    def _lift(self, other):
        if isinstance(other, Jet):
            return other
        return Jet.constant(other, self)

    # -- ring operations ---------------------------------------------------
    def __add__(self, other):
        o = self._lift(other)
        return Jet(self.val + o.val, self.grad + o.grad, self.hess + o.hess)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.val, -self.grad, -self.hess)

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._lift(other)
        outer = np.einsum("bi,bj->bij", self.grad, o.grad)
        return Jet(
            self.val * o.val,
            self.val[:, None] * o.grad + o.val[:, None] * self.grad,
            self.val[:, None, None] * o.hess + o.val[:, None, None] * self.hess
            + outer + outer.transpose(0, 2, 1),
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._lift(other)
        return self * o._unary(1.0 / o.val, -1.0 / o.val**2, 2.0 / o.val**3)

    def __rtruediv__(self, other):
        return self._lift(other) / self

    def __pow__(self, p):
        if isinstance(p, Jet):
            return (p * self.log()).exp()
        p = float(p)
        return self._unary(self.val**p, p * self.val**(p - 1),
                           p * (p - 1) * self.val**(p - 2))

    def __rpow__(self, base):
        return (self * math.log(base)).exp()

    # -- chain rule --------------------------------------------------------
    def _unary(self, f, df, d2f):
        outer = np.einsum("bi,bj->bij", self.grad, self.grad)
        return Jet(f, df[:, None] * self.grad,
                   df[:, None, None] * self.hess + d2f[:, None, None] * outer)

    def sin(self):
        s, c = np.sin(self.val), np.cos(self.val)
        return self._unary(s, c, -s)

    def cos(self):
        s, c = np.sin(self.val), np.cos(self.val)
        return self._unary(c, -s, -c)

    def tan(self):
        t = np.tan(self.val)
        return self._unary(t, 1 + t * t, 2 * t * (1 + t * t))

    def sinh(self):
        s, c = np.sinh(self.val), np.cosh(self.val)
        return self._unary(s, c, s)

    def cosh(self):
        s, c = np.sinh(self.val), np.cosh(self.val)
        return self._unary(c, s, c)

    def tanh(self):
        t = np.tanh(self.val)
        return self._unary(t, 1 - t * t, -2 * t * (1 - t * t))

    def exp(self):
        e = np.exp(self.val)
        return self._unary(e, e, e)

    def log(self):
        return self._unary(np.log(self.val), 1.0 / self.val, -1.0 / self.val**2)

    def sqrt(self):
        r = np.sqrt(self.val)
        return self._unary(r, 0.5 / r, -0.25 / (r * self.val))

    def atan(self):
        d = 1.0 + self.val**2
        return self._unary(np.arctan(self.val), 1.0 / d, -2.0 * self.val / d**2)

    def asin(self):
        d = 1.0 - self.val**2
        return self._unary(np.arcsin(self.val), d**-0.5, self.val * d**-1.5)


_FUNCS = {name: getattr(Jet, name) for name in
          ("sin", "cos", "tan", "sinh", "cosh", "tanh",
           "exp", "log", "sqrt", "atan", "asin")}
_CONSTS = {"pi": math.pi, "e": math.e, "tau": math.tau}

_ALLOWED_BIN = {ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow}
_ALLOWED_UNARY = {ast.USub, ast.UAdd}


def _var_names(m: int):
    names = {f"u{i + 1}": i for i in range(m)}
    if m >= 1:
        names.setdefault("u", 0)
    if m >= 2:
        names.setdefault("v", 1)
    if m >= 3:
        names.setdefault("w", 2)
    return names


def compile_expression(expr: str, m: int):
    """Compile a component expression into a callable on jet variables.

    Grammar: ``+ - * / **``, unary minus, the functions
    sin cos tan sinh cosh tanh exp log sqrt atan asin, the constants
    pi / e / tau, numeric literals, and the chart variables
    (``u, v, w`` aliases or ``u1..um``).  Anything else is rejected.
    """
    try:
        tree = ast.parse(expr, mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse {expr!r}: {exc}") from exc
    names = _var_names(m)

    def const_value(node):
        if isinstance(node, ast.Constant) and isinstance(node.value,
                                                         (int, float)):
            return float(node.value)
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.USub):
            inner = const_value(node.operand)
            return None if inner is None else -inner
        return None

    def build(node):
        if isinstance(node, ast.Expression):
            return build(node.body)
        if isinstance(node, ast.BinOp) and type(node.op) in _ALLOWED_BIN:
            op = type(node.op)
            if op is ast.Pow:
                # constant exponents keep the power rule (valid for
                # negative bases); jet exponents go through exp/log
                cexp = const_value(node.right)
                left = build(node.left)
                if cexp is not None:
                    return lambda vs: left(vs) ** cexp
                right = build(node.right)
                return lambda vs: left(vs) ** right(vs)
            left, right = build(node.left), build(node.right)
            if op is ast.Add:
                return lambda vs: left(vs) + right(vs)
            if op is ast.Sub:
                return lambda vs: left(vs) - right(vs)
            if op is ast.Mult:
                return lambda vs: left(vs) * right(vs)
            return lambda vs: left(vs) / right(vs)
        if isinstance(node, ast.UnaryOp) and type(node.op) in _ALLOWED_UNARY:
            inner = build(node.operand)
            if isinstance(node.op, ast.USub):
                return lambda vs: -inner(vs)
            return inner
        if isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCS:
                raise ExpressionError(f"function not allowed in {expr!r}")
            if len(node.args) != 1 or node.keywords:
                raise ExpressionError(f"functions take one argument in {expr!r}")
            fn = _FUNCS[node.func.id]
            arg = build(node.args[0])
            return lambda vs: fn(arg(vs))
        if isinstance(node, ast.Name):
            if node.id in names:
                idx = names[node.id]
                return lambda vs: vs[idx]
            if node.id in _CONSTS:
                cval = _CONSTS[node.id]
                return lambda vs: Jet.constant(cval, vs[0])
            raise ExpressionError(f"unknown name {node.id!r} in {expr!r}")
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            cval = float(node.value)
            return lambda vs: Jet.constant(cval, vs[0])
        raise ExpressionError(f"construct {type(node).__name__} not allowed in {expr!r}")

    fn = build(tree)

    def evaluate(U: np.ndarray) -> Jet:
        U = np.atleast_2d(np.asarray(U, dtype=float))
        vs = [Jet.variable(U[:, i], i, m) for i in range(m)]
        out = fn(vs)
        if not isinstance(out, Jet):
            out = Jet.constant(out, vs[0])
        return out

    return evaluate
