"""Independent oracles for the test suite.

Everything here is derived symbolically (sympy) or from classical closed
forms, never through the package's own numerical paths, so agreement is
meaningful evidence.
"""

import math

import numpy as np
import sympy as sp


def _lambdify(expr, *syms):
    return sp.lambdify(syms, expr, "numpy")


class SurfaceOracle:
    """Symbolic first/second fundamental data for a surface in R^3."""

    def __init__(self, phi_exprs, u, v):
        self.u, self.v = u, v
        phi = sp.Matrix(phi_exprs)
        pu = phi.diff(u)
        pv = phi.diff(v)
        E = pu.dot(pu)
        F = pu.dot(pv)
        G = pv.dot(pv)
        n = pu.cross(pv)
        n = n / sp.sqrt(n.dot(n))
        e = phi.diff(u, 2).dot(n)
        f = phi.diff(u, 1, v, 1).dot(n)
        g2 = phi.diff(v, 2).dot(n)
        denom = E * G - F**2
        K = sp.simplify((e * g2 - f**2) / denom)
        H = sp.simplify((e * G - 2 * f * F + g2 * E) / (2 * denom))
        # |alpha|^2 in an orthonormal frame equals 4H^2 - 2K for surfaces
        alpha_sq = sp.simplify(4 * H**2 - 2 * K)

        self.phi = _lambdify(phi.T, u, v)
        self.metric = _lambdify(sp.Matrix([[E, F], [F, G]]), u, v)
        self.gauss = _lambdify(K, u, v)
        self.mean = _lambdify(H, u, v)
        self.alpha_norm = _lambdify(sp.sqrt(alpha_sq), u, v)

        # Christoffel symbols of the induced metric
        gmat = sp.Matrix([[E, F], [F, G]])
        ginv = gmat.inv()
        coords = (u, v)
        gamma = [[[sp.simplify(sum(
            ginv[k, l] * (gmat[i, l].diff(coords[j])
                          + gmat[j, l].diff(coords[i])
                          - gmat[i, j].diff(coords[l])) / 2
            for l in range(2)))
            for j in range(2)] for i in range(2)] for k in range(2)]
        self.christoffel = _lambdify(sp.Array(gamma), u, v)

        # Gauss curvature from the metric alone (Brioschi), an oracle
        # independent of the embedding and of the second form
        gdet = gmat.det()
        t1 = sp.Matrix([
            [-E.diff(v, 2) / 2 + F.diff(u, v) - G.diff(u, 2) / 2,
             E.diff(u) / 2, F.diff(u) - E.diff(v) / 2],
            [F.diff(v) - G.diff(u) / 2, E, F],
            [G.diff(v) / 2, F, G]])
        t2 = sp.Matrix([
            [0, E.diff(v) / 2, G.diff(u) / 2],
            [E.diff(v) / 2, E, F],
            [G.diff(u) / 2, F, G]])
        brioschi = sp.simplify((t1.det() - t2.det()) / gdet**2)
        self.gauss_intrinsic = _lambdify(brioschi, u, v)


def make_oracles():
    u, v = sp.symbols("u v", real=True)
    beta = sp.pi / 3
    out = {
        "plane": SurfaceOracle([u, v, sp.Integer(0)], u, v),
        "catenoid": SurfaceOracle(
            [sp.cosh(v) * sp.cos(u), sp.cosh(v) * sp.sin(u), v], u, v),
        "helicoid": SurfaceOracle([v * sp.cos(u), v * sp.sin(u), u], u, v),
        "cone": SurfaceOracle(
            [u * sp.sin(beta) * sp.cos(v), u * sp.sin(beta) * sp.sin(v),
             u * sp.cos(beta)], u, v),
        "paraboloid": SurfaceOracle([u, v, (u**2 + v**2) / 2], u, v),
        "enneper": SurfaceOracle(
            [u - u**3 / 3 + u * v**2, -v + v**3 / 3 - u**2 * v, u**2 - v**2],
            u, v),
    }
    return out


# -- closed-form distance oracles ---------------------------------------------

def plane_distance(p, x):
    return math.hypot(x[0] - p[0], x[1] - p[1])


def catenoid_meridian_length(v0, v1):
    return abs(math.sinh(v1) - math.sinh(v0))


def cone_distance(beta, s0, p, x):
    """Geodesic distance on the apex-truncated cone by unrolling.

    The cone unrolls isometrically to a plane sector; chords blocked by
    the truncation circle s = s0 follow tangent-arc-tangent paths.
    """
    sp_, tp = p
    sx, tx = x
    d = abs((tx - tp + math.pi) % (2 * math.pi) - math.pi) * math.sin(beta)
    chord = math.sqrt(sp_**2 + sx**2 - 2 * sp_ * sx * math.cos(d))
    if chord == 0:
        return 0.0
    # distance from the apex to the chord, and the foot's position
    area2 = sp_ * sx * math.sin(d)
    h = area2 / chord
    # foot between the endpoints iff both adjacent angles are acute
    cos_a = (sp_**2 + chord**2 - sx**2) / (2 * sp_ * chord)
    cos_b = (sx**2 + chord**2 - sp_**2) / (2 * sx * chord)
    blocked = h < s0 and cos_a > 0 and cos_b > 0
    if not blocked:
        return chord
    return (math.sqrt(sp_**2 - s0**2) + math.sqrt(sx**2 - s0**2)
            + s0 * (d - math.acos(s0 / sp_) - math.acos(s0 / sx)))


# -- misc -----------------------------------------------------------------------

def g_orthonormal_direction(g, rng):
    """A random unit-in-g tangent direction."""
    w = rng.normal(size=g.shape[0])
    return w / math.sqrt(float(w @ g @ w))


def random_chart_points(name, count, rng):
    """Sample points away from chart boundaries / degeneracies."""
    if name == "cone":
        s = rng.uniform(0.8, 6.0, count)
        th = rng.uniform(0.0, 2 * math.pi, count)
        return np.column_stack([s, th])
    if name == "catenoid":
        uu = rng.uniform(0.0, 2 * math.pi, count)
        vv = rng.uniform(-2.5, 2.5, count)
        return np.column_stack([uu, vv])
    uu = rng.uniform(-2.5, 2.5, count)
    vv = rng.uniform(-2.5, 2.5, count)
    return np.column_stack([uu, vv])
