"""Geodesic shooting and intrinsic distance estimation.

Distances come from a grid-graph Dijkstra sweep (edge weights are metric
lengths of straight chart segments) followed by a curve-shortening polish
of candidate paths, which removes the lattice direction bias.  Every
estimate is the length of an actual path, hence an upper bound up to
quadrature error.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra as _dijkstra

from . import config
from .errors import LeftChart, NotUnit, Unreachable
from ._ode import STATUS_HALT, integrate
from .surfaces import ImmersionDef, require_in_chart


# -- geodesic shooting -------------------------------------------------------

@dataclass
class GeodesicPath:
    """Unit-speed geodesic samples: arc length, chart point, chart velocity."""

    s: np.ndarray        # (K,)
    points: np.ndarray   # (K, m)
    velocity: np.ndarray  # (K, m)
    total_length: float


def metric_norm(imm: ImmersionDef, u, w) -> float:
    _, jac, _ = imm.jet(np.asarray(u, dtype=float))
    g = jac.T @ jac
    return float(np.sqrt(np.asarray(w) @ g @ np.asarray(w)))


def unit_tangent(imm: ImmersionDef, u, direction) -> np.ndarray:
    """Scale a chart direction to unit metric norm."""
    w = np.asarray(direction, dtype=float)
    n = metric_norm(imm, u, w)
    if n == 0:
        raise NotUnit("zero direction")
    return w / n


def _geodesic_rhs(imm: ImmersionDef):
    m = imm.m

    def rhs(_s, y):
        u, w = y[:m], y[m:]
        _, jac, hess = imm.jet(u)
        g = jac.T @ jac
        rhs_low = np.einsum("nij,i,j->n", hess, w, w)
        acc = -np.linalg.solve(g, jac.T @ rhs_low)
        return np.concatenate([w, acc])

    return rhs


def shoot_geodesic(imm: ImmersionDef, u0, v0, length: float,
                   tol: float = 1e-10,
                   unit_tol: float = config.UNIT_TOL) -> GeodesicPath:
    """Integrate the geodesic equation u'' + Gamma(u', u') = 0.

    ``v0`` must be a unit tangent in the induced metric; the path is
    parametrized by arc length up to integration drift <= tol.
    """
    u0 = require_in_chart(imm, np.asarray(u0, dtype=float))
    v0 = np.asarray(v0, dtype=float)
    speed = metric_norm(imm, u0, v0)
    if abs(speed - 1.0) > unit_tol:
        raise NotUnit(f"initial speed {speed} not unit")

    m = imm.m

    def halt(_s, y):
        return "left_chart" if not imm.chart.contains(y[:m]) else None

    y0 = np.concatenate([u0, v0])
    ts, ys, status, code = integrate(_geodesic_rhs(imm), 0.0, y0, length,
                                     rtol=tol, atol=tol,
                                     max_step=max(length / 8.0, 1e-3),
                                     halt=halt)
    if status == STATUS_HALT and code == "left_chart":
        raise LeftChart(f"geodesic from {u0} exited the chart at s={ts[-1]:.4g}")
    return GeodesicPath(ts, ys[:, :m], ys[:, m:], float(ts[-1]))


def exhaustion_radii(r0: float, count: int, scheme: str = "geometric"):
    """Radii of the exhausting geodesic balls."""
    if r0 <= 0:
        raise ValueError("r0 must be positive")
    if count < 2:
        raise ValueError("count must be at least 2")
    if scheme == "geometric":
        return [r0 * 2.0 ** i for i in range(count)]
    if scheme == "arithmetic":
        return [r0 * (i + 1) for i in range(count)]
    raise ValueError(f"unknown exhaustion scheme {scheme!r}")


# -- segment quadrature ------------------------------------------------------

_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)
_GL_T = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W


def segment_length(imm: ImmersionDef, a, b, panels: int = 1) -> float:
    """Metric length of the straight chart segment a -> b (Gauss 16/panel)."""
    a = np.asarray(a, dtype=float)
    d = imm.chart.delta(a, b)
    ts = (np.arange(panels)[:, None] + _GL_T[None, :]).ravel() / panels
    pts = a[None, :] + ts[:, None] * d[None, :]
    _, jac, _ = imm.jets(pts)
    dphi = np.einsum("bni,i->bn", jac, d)
    speeds = np.sqrt(np.einsum("bn,bn->b", dphi, dphi))
    w = np.tile(_GL_W / panels, panels)
    return float(speeds @ w)


def chart_segment_distance(imm: ImmersionDef, p, x, rel_tol: float = 1e-12):
    """Length of the straight chart segment, refined until stable.

    Exact distance whenever that segment is a geodesic (meridians of the
    gallery's surfaces of revolution, straight lines of flat charts);
    otherwise an upper bound.
    """
    prev = segment_length(imm, p, x, panels=1)
    for panels in (2, 4, 8, 16):
        cur = segment_length(imm, p, x, panels=panels)
        if abs(cur - prev) <= rel_tol * max(1.0, abs(cur)):
            return cur, abs(cur - prev)
        prev = cur
    return cur, abs(cur - prev)


# -- grid-graph distance field -----------------------------------------------

_STENCIL_8 = [(1, 0), (0, 1), (1, 1), (1, -1)]
_STENCIL_16 = _STENCIL_8 + [(1, 2), (2, 1), (1, -2), (2, -1)]


@dataclass
class DistanceField:
    """Sampled upper-bound estimate of the intrinsic distance to ``base``."""

    imm: ImmersionDef
    base: np.ndarray
    axes: tuple              # per-axis node arrays
    values: np.ndarray       # grid of rho estimates, shape (n1, n2)
    method: str
    refinement_gap: float
    predecessors: np.ndarray = field(repr=False, default=None)
    base_index: int = field(repr=False, default=-1)

    @property
    def points(self) -> np.ndarray:
        """All grid nodes as a (N, m) array (C order of the value grid)."""
        grids = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)

    def interpolate(self, pts) -> np.ndarray:
        """Multilinear interpolation of rho at arbitrary chart points."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        pts = self.imm.chart.wrap(pts)
        lower, upper, frac = [], [], []
        for d, ax in enumerate(self.axes):
            if self.imm.chart.periodic[d]:
                h = ax[1] - ax[0]
                f_all = (pts[:, d] - ax[0]) / h
                i = np.floor(f_all).astype(int) % len(ax)
                lower.append(i)
                upper.append((i + 1) % len(ax))
                frac.append(f_all - np.floor(f_all))
            else:
                i = np.clip(np.searchsorted(ax, pts[:, d]) - 1, 0, len(ax) - 2)
                lower.append(i)
                upper.append(i + 1)
                frac.append(np.clip((pts[:, d] - ax[i]) / (ax[i + 1] - ax[i]),
                                    0.0, 1.0))
        v = self.values
        (i0, i1), (u0, u1), (f0, f1) = lower, upper, frac
        return (v[i0, i1] * (1 - f0) * (1 - f1)
                + v[u0, i1] * f0 * (1 - f1)
                + v[i0, u1] * (1 - f0) * f1
                + v[u0, u1] * f0 * f1)

    def path_to(self, node_flat_index: int) -> np.ndarray:
        """Chart polyline base -> node from the Dijkstra predecessor tree,
        unwrapped across periodic seams."""
        if self.predecessors is None:
            raise Unreachable("field built without predecessor storage")
        chain = []
        cur = int(node_flat_index)
        while cur >= 0 and cur != self.base_index:
            chain.append(cur)
            cur = int(self.predecessors[cur])
        if cur != self.base_index:
            raise Unreachable("node disconnected from base point")
        pts_all = self.points
        chain = chain[::-1]
        path = [np.asarray(self.base, dtype=float)]
        for nd in chain:
            prev = path[-1]
            step = self.imm.chart.delta(prev, pts_all[nd])
            path.append(prev + step)
        return np.asarray(path)


def _grid_edges(axes, periodic, stencil):
    """Index pairs and chart displacements for every stencil edge.

    Periodic axes must be uniformly spaced (the wrap step is then a
    constant multiple of the spacing); graded spacing is fine elsewhere.
    """
    n1, n2 = len(axes[0]), len(axes[1])
    ii, jj = np.meshgrid(np.arange(n1), np.arange(n2), indexing="ij")
    ii, jj = ii.ravel(), jj.ravel()
    offsets = _STENCIL_16 if stencil == 16 else _STENCIL_8
    heads, tails, deltas = [], [], []
    for (o1, o2) in offsets:
        i2 = ii + o1
        j2 = jj + o2
        ok = np.ones(ii.shape, dtype=bool)
        if periodic[0]:
            d0 = np.full(ii.shape, o1 * (axes[0][1] - axes[0][0]))
            i2 = np.mod(i2, n1)
        else:
            ok &= (i2 >= 0) & (i2 < n1)
            i2 = np.clip(i2, 0, n1 - 1)
            d0 = axes[0][i2] - axes[0][ii]
        if periodic[1]:
            d1 = np.full(jj.shape, o2 * (axes[1][1] - axes[1][0]))
            j2 = np.mod(j2, n2)
        else:
            ok &= (j2 >= 0) & (j2 < n2)
            j2 = np.clip(j2, 0, n2 - 1)
            d1 = axes[1][j2] - axes[1][jj]
        heads.append((ii * n2 + jj)[ok])
        tails.append((i2 * n2 + j2)[ok])
        deltas.append(np.stack([d0[ok], d1[ok]], axis=1))
    return (np.concatenate(heads), np.concatenate(tails),
            np.concatenate(deltas, axis=0))


def _edge_weights(imm: ImmersionDef, pts_a, deltas):
    """Simpson 3-point metric length of straight chart segments."""
    samples = np.concatenate([pts_a, pts_a + 0.5 * deltas, pts_a + deltas])
    _, jac, _ = imm.jets(samples)
    b = pts_a.shape[0]
    dphi = np.einsum("bni,bi->bn", jac, np.tile(deltas, (3, 1)))
    speed = np.sqrt(np.einsum("bn,bn->b", dphi, dphi))
    return (speed[:b] + 4.0 * speed[b:2 * b] + speed[2 * b:]) / 6.0


def _build_field(imm, p, axes, stencil):
    n1, n2 = len(axes[0]), len(axes[1])
    n_nodes = n1 * n2
    heads, tails, deltas = _grid_edges(axes, imm.chart.periodic, stencil)
    grids = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    w = _edge_weights(imm, pts[heads], deltas)

    # source node: the base point, connected into its neighborhood
    i0 = np.clip(np.searchsorted(axes[0], p[0]) - 1, 0, n1 - 1)
    j0 = np.clip(np.searchsorted(axes[1], p[1]) - 1, 0, n2 - 1)
    reach = 2
    cand = []
    for di in range(-reach, reach + 2):
        for dj in range(-reach, reach + 2):
            i = i0 + di
            j = j0 + dj
            if imm.chart.periodic[0]:
                i %= n1
            if imm.chart.periodic[1]:
                j %= n2
            if 0 <= i < n1 and 0 <= j < n2:
                cand.append(i * n2 + j)
    cand = np.unique(np.asarray(cand, dtype=int))
    dp = imm.chart.delta(np.tile(p, (len(cand), 1)), pts[cand])
    wp = _edge_weights(imm, np.tile(p, (len(cand), 1)), dp)

    src = n_nodes
    all_heads = np.concatenate([heads, tails, np.full(len(cand), src)])
    all_tails = np.concatenate([tails, heads, cand])
    all_w = np.concatenate([w, w, wp])
    graph = csr_matrix((all_w, (all_heads, all_tails)),
                       shape=(n_nodes + 1, n_nodes + 1))
    dist, pred = _dijkstra(graph, directed=True, indices=src,
                           return_predecessors=True)
    values = dist[:n_nodes].reshape(n1, n2)
    return values, pred[:n_nodes], src


def distance_field(imm: ImmersionDef, p, axes, stencil: int = config.STENCIL,
                   refine: int = 1) -> DistanceField:
    """Dijkstra distance-to-base on a chart grid, with one halving
    refinement to estimate the discretization gap."""
    p = require_in_chart(imm, np.asarray(p, dtype=float))
    axes = tuple(np.asarray(a, dtype=float) for a in axes)
    values, pred, src = _build_field(imm, p, axes, stencil)
    gap = np.inf
    for _ in range(max(0, refine)):
        fine_axes = tuple(_halve_axis(a, per)
                          for a, per in zip(axes, imm.chart.periodic))
        fine_vals, fine_pred, fine_src = _build_field(imm, p, fine_axes, stencil)
        on_coarse = fine_vals[::2, ::2]
        denom = np.maximum(1.0, values)
        finite = np.isfinite(values) & np.isfinite(on_coarse)
        gap = float(np.max(np.abs(on_coarse - values)[finite] / denom[finite]))
        axes, values, pred, src = fine_axes, fine_vals, fine_pred, fine_src
    if not np.all(np.isfinite(values)):
        n_bad = int(np.sum(~np.isfinite(values)))
        raise Unreachable(f"{n_bad} grid nodes unreachable from base point")
    return DistanceField(imm, p, axes, values, "graph", gap, pred, src)


def _halve_axis(ax, periodic=False):
    if periodic:
        out = np.empty(2 * len(ax))
        out[::2] = ax
        out[1::2] = ax + 0.5 * (ax[1] - ax[0])
        return out
    mid = 0.5 * (ax[:-1] + ax[1:])
    out = np.empty(2 * len(ax) - 1)
    out[::2] = ax
    out[1::2] = mid
    return out


# -- curve-shortening polish -------------------------------------------------

def path_length_and_grad(imm: ImmersionDef, pts: np.ndarray):
    """Total Simpson metric length of a chart polyline and its gradient
    with respect to the node positions (exact metric derivatives)."""
    a = pts[:-1]
    d = pts[1:] - pts[:-1]
    k = a.shape[0]
    samples = np.concatenate([a, a + 0.5 * d, a + d])
    _, jac, hess = imm.jets(samples)
    dd = np.tile(d, (3, 1))
    dphi = np.einsum("bni,bi->bn", jac, dd)
    speed = np.sqrt(np.maximum(np.einsum("bn,bn->b", dphi, dphi), 1e-300))
    wgt = np.array([1.0, 4.0, 1.0]) / 6.0
    length = float(wgt[0] * speed[:k].sum() + wgt[1] * speed[k:2 * k].sum()
                   + wgt[2] * speed[2 * k:].sum())

    # d speed / d d_i = (g d)_i / speed;  d speed / d x_c = d^T (d_c g) d / (2 speed)
    gd = np.einsum("bni,bn->bi", jac, dphi)
    hd = np.einsum("bnic,bi->bnc", hess, dd)
    dgd = 2.0 * np.einsum("bnc,bn->bc", hd, dphi)
    gd = gd / speed[:, None]
    dgd = dgd / (2.0 * speed[:, None])

    grad = np.zeros_like(pts)
    cs = np.array([0.0, 0.5, 1.0])
    for s in range(3):
        sl = slice(s * k, (s + 1) * k)
        grad[:-1] += wgt[s] * (-gd[sl] + (1 - cs[s]) * dgd[sl])
        grad[1:] += wgt[s] * (gd[sl] + cs[s] * dgd[sl])
    return length, grad


def polish_path(imm: ImmersionDef, pts: np.ndarray, max_nodes: int = 96,
                maxiter: int = 200):
    """Shorten a chart polyline toward the geodesic with fixed endpoints.

    Interior nodes move freely (box-constrained to the chart); the result
    is still the length of an actual path, so it remains an upper bound.
    """
    pts = np.asarray(pts, dtype=float)
    if len(pts) > max_nodes:
        pts = _resample(pts, max_nodes)
    elif len(pts) < 8:
        pts = _resample(pts, 8)
    l0, _ = path_length_and_grad(imm, pts)
    if l0 == 0:
        return 0.0, pts
    kfree = len(pts) - 2
    if kfree < 1:
        return l0, pts

    lo, hi = [], []
    eps_box = 1e-9
    for d in range(imm.m):
        if imm.chart.periodic[d]:
            lo.append(-np.inf)
            hi.append(np.inf)
        else:
            lo.append(imm.chart.lo[d] + eps_box)
            hi.append(imm.chart.hi[d] - eps_box)
    bounds = [(lo[d], hi[d]) for _ in range(kfree) for d in range(imm.m)]

    def objective(x):
        cur = pts.copy()
        cur[1:-1] = x.reshape(kfree, imm.m)
        length, grad = path_length_and_grad(imm, cur)
        return length / l0, (grad[1:-1] / l0).ravel()

    res = minimize(objective, pts[1:-1].ravel(), jac=True, method="L-BFGS-B",
                   bounds=bounds,
                   options={"maxiter": maxiter, "ftol": 1e-15, "gtol": 1e-11})
    out = pts.copy()
    out[1:-1] = res.x.reshape(kfree, imm.m)
    length, _ = path_length_and_grad(imm, out)
    return min(float(length), l0), out


def _resample(pts: np.ndarray, count: int) -> np.ndarray:
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    if s[-1] == 0:
        return pts[[0, -1]]
    si = np.linspace(0.0, s[-1], count)
    return np.stack([np.interp(si, s, pts[:, d]) for d in range(pts.shape[1])],
                    axis=1)


@dataclass
class DistanceResult:
    value: float
    gap: float
    method: str


def distance(imm: ImmersionDef, p, x, method: str = "graph",
             dist_tol: float = config.DIST_TOL,
             base_count: int = 97) -> DistanceResult:
    """Intrinsic distance estimate between two chart points.

    ``graph``: Dijkstra on a local window plus curve-shortening polish.
    ``shoot``: quadrature along the straight chart segment (exact for
    meridian pairs and flat charts; an upper bound otherwise).
    """
    p = require_in_chart(imm, np.asarray(p, dtype=float))
    x = require_in_chart(imm, np.asarray(x, dtype=float))
    if method == "shoot":
        val, gap = chart_segment_distance(imm, p, x)
        return DistanceResult(val, gap, "shoot")
    if method != "graph":
        raise ValueError(f"unknown distance method {method!r}")

    d = imm.chart.delta(p, x)
    axes = []
    for dim in range(imm.m):
        if imm.chart.periodic[dim]:
            axes.append(np.linspace(imm.chart.lo[dim], imm.chart.hi[dim],
                                    base_count, endpoint=False))
            continue
        lo = min(p[dim], p[dim] + d[dim])
        hi = max(p[dim], p[dim] + d[dim])
        pad = 0.6 * max(hi - lo, 1.0)
        lo = max(lo - pad, imm.chart.lo[dim] + 1e-9)
        hi = min(hi + pad, imm.chart.hi[dim] - 1e-9)
        axes.append(np.linspace(lo, hi, base_count))
    fld = distance_field(imm, p, tuple(axes), refine=1)

    # nearest node to the target, then walk its tree path and polish it
    target = imm.chart.wrap(x)
    i = int(np.argmin(np.abs(fld.axes[0] - target[0])))
    j = int(np.argmin(np.abs(fld.axes[1] - target[1])))
    node = i * len(fld.axes[1]) + j
    path = fld.path_to(node)
    step = imm.chart.delta(path[-1], x)
    if np.linalg.norm(step) > 0:
        path = np.vstack([path, path[-1] + step])
    length, _ = polish_path(imm, path)
    return DistanceResult(length, fld.refinement_gap, "graph")
