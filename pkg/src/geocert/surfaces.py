"""Parametrized immersions: the builtin gallery and generic expression maps.

An ``ImmersionDef`` bundles the chart, the jet evaluator and the ambient
dimension.  Builtin surfaces carry closed-form jets (dispatched to the
kernel backend); generic surfaces are component expression strings
differentiated by forward mode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import config, _kernels
from ._jetalg import compile_expression
from .chart import Box
from .errors import BadParams, OutOfChart, RankDeficient, UnknownSurface


@dataclass(frozen=True)
class ImmersionDef:
    """An m-dimensional parametrized immersion into R^n."""

    label: str
    m: int
    n: int
    chart: Box
    kind: str                      # builtin gallery name or "expr"
    params: dict = field(default_factory=dict)
    scale: float = 1.0
    _evaluators: tuple = field(default=None, repr=False, compare=False)

    @property
    def code(self) -> int:
        """Kernel dispatch code; -1 when only the expression path applies."""
        if self.kind in _kernels.SURFACE_CODES and self.scale == 1.0:
            return _kernels.SURFACE_CODES[self.kind]
        return -1

    @property
    def kernel_params(self) -> np.ndarray:
        if self.kind == "cone":
            return np.array([self.params["beta"]])
        return np.zeros(0)

    def jets(self, U):
        """Batched (value, jacobian, hessian) arrays at chart points U."""
        U = np.atleast_2d(np.asarray(U, dtype=float))
        if self.kind in _kernels.SURFACE_CODES:
            code = _kernels.SURFACE_CODES[self.kind]
            val, jac, hess = _kernels.jet_batch(code, self.kernel_params, U)
        else:
            val, jac, hess = self._expression_jets(U)
        if self.scale != 1.0:
            val = self.scale * val
            jac = self.scale * jac
            hess = self.scale * hess
        return val, jac, hess

    def _expression_jets(self, U):
        b = U.shape[0]
        val = np.empty((b, self.n))
        jac = np.empty((b, self.n, self.m))
        hess = np.empty((b, self.n, self.m, self.m))
        for c, ev in enumerate(self._evaluators):
            jet = ev(U)
            val[:, c] = jet.val
            jac[:, c, :] = jet.grad
            hess[:, c, :, :] = 0.5 * (jet.hess + jet.hess.transpose(0, 2, 1))
        return val, jac, hess

    def jet(self, u):
        val, jac, hess = self.jets(np.asarray(u, dtype=float)[None, :])
        return val[0], jac[0], hess[0]

    def scaled(self, factor: float) -> "ImmersionDef":
        """The immersion composed with ambient scaling by ``factor``."""
        return replace(self, scale=self.scale * float(factor),
                       label=f"{self.label}*{factor:g}")

    def value(self, U):
        return self.jets(U)[0]


def _box(lo, hi, periodic=None):
    return Box(tuple(lo), tuple(hi), tuple(periodic) if periodic else None)


def _make_expr(label, components, m, chart, params=None):
    evaluators = tuple(compile_expression(c, m) for c in components)
    return ImmersionDef(label=label, m=m, n=len(components), chart=chart,
                        kind="expr", params=params or {},
                        _evaluators=evaluators)


# -- builtin gallery ---------------------------------------------------------

def _plane(params):
    return ImmersionDef("plane", 2, 3, _box([-math.inf] * 2, [math.inf] * 2),
                        "plane")


def _cone(params):
    beta = float(params.get("beta", math.pi / 3))
    s0 = float(params.get("s0", 0.5))
    if not 0.0 < beta < math.pi / 2:
        raise BadParams(f"cone: beta={beta} outside (0, pi/2)")
    if s0 <= 0:
        raise BadParams(f"cone: s0={s0} must be positive")
    chart = _box([s0, 0.0], [math.inf, 2 * math.pi], periodic=[False, True])
    return ImmersionDef("cone", 2, 3, chart, "cone", {"beta": beta, "s0": s0})


def _catenoid(params):
    chart = _box([0.0, -math.inf], [2 * math.pi, math.inf],
                 periodic=[True, False])
    return ImmersionDef("catenoid", 2, 3, chart, "catenoid")


def _helicoid(params):
    return ImmersionDef("helicoid", 2, 3,
                        _box([-math.inf] * 2, [math.inf] * 2), "helicoid")


def _paraboloid(params):
    return ImmersionDef("paraboloid", 2, 3,
                        _box([-math.inf] * 2, [math.inf] * 2), "paraboloid")


def _enneper(params):
    return ImmersionDef("enneper", 2, 3,
                        _box([-math.inf] * 2, [math.inf] * 2), "enneper")


def _graph(params):
    height = params.get("h", "exp(-(u*u+v*v))")
    imm = _make_expr("graph", ["u", "v", height], 2,
                     _box([-math.inf] * 2, [math.inf] * 2),
                     params={"h": height})
    return imm


_BUILTINS = {
    "plane": (_plane, "flat plane (u,v) -> (u,v,0)"),
    "cone": (_cone, "apex-truncated cone; params beta in (0,pi/2), s0 > 0"),
    "catenoid": (_catenoid, "minimal catenoid; u periodic"),
    "helicoid": (_helicoid, "minimal helicoid (v cos u, v sin u, u)"),
    "paraboloid": (_paraboloid, "rotation paraboloid z = (u^2+v^2)/2"),
    "enneper": (_enneper, "Enneper minimal surface"),
    "graph": (_graph, "graph z = h(u,v); params h = expression string"),
}

_PARAM_KEYS = {"cone": {"beta", "s0"}, "graph": {"h"}}


def builtin_surface(name: str, params: dict | None = None) -> ImmersionDef:
    """Instantiate a gallery surface by name with validated parameters."""
    if name not in _BUILTINS:
        raise UnknownSurface(f"no builtin surface {name!r}; "
                             f"known: {', '.join(sorted(_BUILTINS))}")
    params = dict(params or {})
    allowed = _PARAM_KEYS.get(name, set())
    extra = set(params) - allowed
    if extra:
        raise BadParams(f"{name}: unknown parameters {sorted(extra)}")
    return _BUILTINS[name][0](params)


def expression_surface(components, m, lo, hi, periodic=None,
                       label="expr") -> ImmersionDef:
    """Generic immersion from component expression strings."""
    if len(components) <= m:
        raise BadParams("ambient dimension must exceed intrinsic dimension")
    return _make_expr(label, list(components), m, _box(lo, hi, periodic),
                      params={"components": list(components)})


def list_surfaces():
    return [(name, doc) for name, (_, doc) in sorted(_BUILTINS.items())]


def default_base_point(imm: ImmersionDef) -> np.ndarray:
    if imm.kind == "cone":
        s0 = imm.params["s0"]
        return np.array([max(1.0, 2.0 * s0), 0.0])
    return np.zeros(imm.m)


def rank_check(jac: np.ndarray, rank_tol: float = config.RANK_TOL) -> float:
    """Smallest singular value of the Jacobian; raises if rank-deficient."""
    smin = np.linalg.svd(jac, compute_uv=False)[-1]
    if smin <= rank_tol:
        raise RankDeficient(f"immersion condition fails: sigma_min={smin:.3e}")
    return smin


def require_in_chart(imm: ImmersionDef, u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if not imm.chart.contains(u):
        raise OutOfChart(f"{u} outside chart of {imm.label}")
    return u
