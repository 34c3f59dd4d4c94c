"""Default analysis settings per gallery surface.

Windows are derived from the exhaustion depth: the sampled region must
reach intrinsic radius 4 * R_last for the tail estimates to be trusted.
Chart extents along each axis come from arc-length marching along
coordinate rays.  The helicoid bounds its screw coordinate to [-3, 3] by
default: along the axis of the screw the curvature does not decay, so an
unbounded screw window reports a diverging invariant; the bounded window
reproduces the conventional gallery behavior (override via manifest).
"""

from __future__ import annotations

import numpy as np

from . import config
from .chart import axis_nodes
from .geodesic import exhaustion_radii, segment_length
from .surfaces import ImmersionDef, default_base_point


def default_radii(imm: ImmersionDef):
    if imm.kind in ("paraboloid", "enneper"):
        return exhaustion_radii(2.0, 6)
    if imm.kind == "graph":
        return exhaustion_radii(1.0, 5)
    return exhaustion_radii(2.0, 8)


def march_extent(imm: ImmersionDef, p, dim: int, sign: int,
                 rho_target: float) -> float:
    """Chart offset along +/- axis ``dim`` whose ray from p has arc length
    roughly rho_target (5% overshoot)."""
    p = np.asarray(p, dtype=float)
    e = np.zeros(imm.m)
    e[dim] = sign
    if sign > 0:
        t_max = imm.chart.hi[dim] - p[dim] - 1e-9
    else:
        t_max = p[dim] - imm.chart.lo[dim] - 1e-9
    if not np.isfinite(t_max):
        t_max = None

    def arc(t):
        return segment_length(imm, p, p + t * e, panels=8)

    t = 1.0 if t_max is None else min(1.0, t_max)
    for _ in range(80):
        if arc(t) >= 1.05 * rho_target:
            break
        if t_max is not None and t >= t_max * (1 - 1e-12):
            return t_max
        t *= 1.7
        if t_max is not None:
            t = min(t, t_max)
    lo, hi = t / 1.7, t
    for _ in range(30):
        mid = 0.5 * (lo + hi)
        if arc(mid) >= 1.05 * rho_target:
            hi = mid
        else:
            lo = mid
    return hi


# per-kind: (axis count, grading, grading base) for each chart axis
_AXIS_TABLE = {
    "plane": ((257, "sym-geometric", 6.0), (257, "sym-geometric", 6.0)),
    "cone": ((321, "geometric", 4.0), (192, "uniform", 0.0)),
    "catenoid": ((96, "uniform", 0.0), (509, "uniform", 0.0)),
    "helicoid": ((17, "uniform", 0.0), (2049, "uniform", 0.0)),
    "paraboloid": ((321, "sym-geometric", 4.0), (321, "sym-geometric", 4.0)),
    "enneper": ((201, "sym-geometric", 4.0), (201, "sym-geometric", 4.0)),
    "graph": ((161, "sym-geometric", 4.0), (161, "sym-geometric", 4.0)),
}
_AXIS_FALLBACK = ((161, "sym-geometric", 4.0), (161, "sym-geometric", 4.0))

HELICOID_SCREW_WINDOW = 3.0


def default_axes(imm: ImmersionDef, p, rho_max: float, counts=None):
    """Node arrays per chart axis covering intrinsic radius rho_max."""
    p = np.asarray(p, dtype=float)
    spec = _AXIS_TABLE.get(imm.kind, _AXIS_FALLBACK)
    axes = []
    for dim in range(imm.m):
        count, grading, base = spec[dim]
        if counts is not None and counts[dim]:
            count = int(counts[dim])
        if imm.chart.periodic[dim]:
            axes.append(np.linspace(imm.chart.lo[dim], imm.chart.hi[dim],
                                    count, endpoint=False))
            continue
        if imm.kind == "helicoid" and dim == 0:
            lo, hi = -HELICOID_SCREW_WINDOW, HELICOID_SCREW_WINDOW
        else:
            hi = p[dim] + march_extent(imm, p, dim, +1, rho_max)
            lo = p[dim] - march_extent(imm, p, dim, -1, rho_max)
        lo = max(lo, imm.chart.lo[dim] + 1e-9)
        hi = min(hi, imm.chart.hi[dim] - 1e-9)
        axes.append(axis_nodes(lo, hi, count, grading,
                               origin=float(p[dim]), base=base))
    return tuple(axes)


def analysis_defaults(imm: ImmersionDef, p=None):
    """(base point, radii, axes) bundle for the standard pipeline."""
    if p is None:
        p = default_base_point(imm)
    radii = default_radii(imm)
    axes = default_axes(imm, p, config.WINDOW_FACTOR * radii[-1])
    return np.asarray(p, dtype=float), radii, axes
