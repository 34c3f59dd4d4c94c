"""Forward-mode jet algebra and the expression compiler."""

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from geocert._jetalg import Jet, compile_expression
from geocert.errors import ExpressionError
from geocert.surfaces import expression_surface


def _sympy_jet(expr_str, pts):
    u, v = sp.symbols("u v", real=True)
    expr = sp.sympify(expr_str, locals={"u": u, "v": v,
                                        "atan": sp.atan, "asin": sp.asin})
    val = sp.lambdify((u, v), expr, "numpy")
    grads = [sp.lambdify((u, v), expr.diff(w), "numpy") for w in (u, v)]
    hesses = [[sp.lambdify((u, v), expr.diff(a, b), "numpy")
               for b in (u, v)] for a in (u, v)]
    uu, vv = pts[:, 0], pts[:, 1]
    g = np.stack([np.broadcast_to(gg(uu, vv), uu.shape) for gg in grads],
                 axis=1)
    h = np.stack([np.stack([np.broadcast_to(hh(uu, vv), uu.shape)
                            for hh in row], axis=1) for row in hesses],
                 axis=1)
    return np.broadcast_to(val(uu, vv), uu.shape), g, h


EXPRS = [
    "u*v + sin(u)*cosh(v)",
    "exp(-(u*u + v*v))",
    "sqrt(1 + u*u) * tanh(v)",
    "(u + 2*v)**3 / (1 + v*v)",
    "log(2 + cos(u)) - atan(v)",
    "u**2 - v**2 + pi",
]


@pytest.mark.parametrize("expr", EXPRS)
def test_expression_derivatives_match_sympy(expr, rng):
    fn = compile_expression(expr, 2)
    pts = rng.uniform(-1.2, 1.2, size=(20, 2))
    jet = fn(pts)
    val, grad, hess = _sympy_jet(expr, pts)
    assert np.allclose(jet.val, val, atol=1e-12)
    assert np.allclose(jet.grad, grad, atol=1e-10)
    assert np.allclose(jet.hess, hess, atol=1e-10)


def test_rejects_bad_expressions():
    for expr in ["__import__('os')", "u.real", "lambda x: x", "foo(u)",
                 "u @ v", "[1,2]"]:
        with pytest.raises(ExpressionError):
            compile_expression(expr, 2)


def test_variable_aliases():
    fn = compile_expression("u1 + 2*u2", 2)
    jet = fn(np.array([[1.0, 3.0]]))
    assert jet.val[0] == 7.0
    assert np.allclose(jet.grad[0], [1.0, 2.0])


@settings(max_examples=60, deadline=None, derandomize=True)
@given(st.floats(-1.5, 1.5), st.floats(-1.5, 1.5),
       st.floats(-1.5, 1.5), st.floats(-1.5, 1.5))
def test_product_rule_property(a, b, x, y):
    pts = np.array([[x, y]])
    ju = Jet.variable(pts[:, 0], 0, 2)
    jv = Jet.variable(pts[:, 1], 1, 2)
    f = (a + ju) * (b + jv.sin())
    g = (a + ju)
    h = (b + jv.sin())
    prod = g * h
    assert np.allclose(f.val, prod.val)
    # d(gh) = g dh + h dg
    expect = g.val[:, None] * h.grad + h.val[:, None] * g.grad
    assert np.allclose(prod.grad, expect, atol=1e-12)
    assert np.allclose(prod.hess, prod.hess.transpose(0, 2, 1))


def test_expression_surface_is_batch_consistent(rng):
    imm = expression_surface(["u*cos(v)", "u*sin(v)", "log(u)"], 2,
                             [0.5, 0.0], [10.0, 2 * np.pi],
                             periodic=[False, True])
    pts = np.column_stack([rng.uniform(1, 5, 7),
                           rng.uniform(0, 2 * np.pi, 7)])
    val, jac, hess = imm.jets(pts)
    for k, q in enumerate(pts):
        v1, j1, h1 = imm.jet(q)
        assert np.allclose(v1, val[k])
        assert np.allclose(j1, jac[k])
        assert np.allclose(h1, hess[k])


def test_ambient_dimension_guard():
    with pytest.raises(Exception):
        expression_surface(["u", "v"], 2, [-1, -1], [1, 1])
