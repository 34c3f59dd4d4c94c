"""Properness certification from the Hessian of the squared ambient
distance.

With the anchor placed at the image of the base point, half the Hessian
of f = |phi - anchor|^2 along a unit tangent nu equals
1 + <phi - anchor, alpha(nu, nu)>, so a tail bound rho * |alpha| <= c < 1
forces f to grow quadratically along geodesics; integrating twice gives
a pointwise lower bound whose positivity certifies a proper immersion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import config, _kernels
from .errors import NotApplicable, NotUnit
from .geodesic import DistanceField, polish_path, shoot_geodesic, unit_tangent
from .surfaces import ImmersionDef


# -- pointwise Hessian -------------------------------------------------------

def sq_dist_hessian(imm: ImmersionDef, u, nu, anchor,
                    unit_tol: float = config.UNIT_TOL) -> float:
    """Hess f (nu, nu) for f = |phi - anchor|^2 and unit tangent nu,
    evaluated through the second fundamental form."""
    u = np.asarray(u, dtype=float)
    val, jac, hess = imm.jet(u)
    g = jac.T @ jac
    nu = np.asarray(nu, dtype=float)
    norm = math.sqrt(float(nu @ g @ nu))
    if abs(norm - 1.0) > unit_tol:
        raise NotUnit(f"|nu|_g = {norm} is not 1")
    h_nn = np.einsum("nij,i,j->n", hess, nu, nu)
    coef = np.linalg.solve(g, jac.T @ h_nn)
    a_nn = h_nn - jac @ coef
    return 2.0 * (1.0 + float((val - np.asarray(anchor)) @ a_nn))


def sq_dist_hessian_fd(imm: ImmersionDef, u, nu, anchor, h: float = 1e-2,
                       geo_tol: float = 1e-11) -> float:
    """Independent oracle: second arc-length derivative of f along the
    geodesic with initial data (u, nu), by 5-point central differences."""
    anchor = np.asarray(anchor, dtype=float)
    u = np.asarray(u, dtype=float)
    nu = np.asarray(nu, dtype=float)

    def f_at(pt):
        val = imm.value(pt[None, :])[0]
        d = val - anchor
        return float(d @ d)

    samples = {0.0: f_at(u)}
    for sign in (+1.0, -1.0):
        for dist in (h, 2 * h):
            end = shoot_geodesic(imm, u, sign * nu, dist, tol=geo_tol)
            samples[sign * dist] = f_at(end.points[-1])
    return (-samples[2 * h] + 16 * samples[h] - 30 * samples[0.0]
            + 16 * samples[-h] - samples[-2 * h]) / (12 * h * h)


def min_hessian_batch(imm: ImmersionDef, U, anchor) -> np.ndarray:
    """Per-point infimum over unit nu of Hess f(nu, nu): the quadratic
    form <phi - anchor, alpha(.,.)> is minimized by its smallest
    eigenvalue in an orthonormal frame."""
    U = np.atleast_2d(np.asarray(U, dtype=float))
    if imm.code >= 0:
        val, jac, hess = _kernels.jet_batch(imm.code, imm.kernel_params, U)
    else:
        val, jac, hess = imm.jets(U)
    data = _kernels.fundamental_batch(val, jac, hess)
    offs = val - np.asarray(anchor, dtype=float)[None, :]
    form = np.einsum("bn,bnij->bij", offs, data["alpha_on"])
    lam = np.linalg.eigvalsh(form)[:, 0]
    return 2.0 * (1.0 + lam)


# -- growth profiles ---------------------------------------------------------

@dataclass(frozen=True)
class GrowthProfile:
    """Barrier G(t) = f0 - grad0 t + double integral of a piecewise-linear
    lower bound g on the Hessian along distance."""

    f0: float
    grad0: float
    breaks: tuple           # t_0 = 0 < t_1 < ... < t_{K-1}
    coefs: tuple            # per piece (c0, c1): g(t) = c0 + c1 (t - t_k)

    def g_at(self, t):
        k = self._piece(t)
        c0, c1 = self.coefs[k]
        return c0 + c1 * (t - self.breaks[k])

    def _piece(self, t):
        k = 0
        for i, b in enumerate(self.breaks):
            if t >= b:
                k = i
        return k

    def _accumulate(self):
        """(I1, I2) values of the first/second integrals at breakpoints."""
        i1 = [0.0]
        i2 = [0.0]
        for k in range(len(self.breaks) - 1):
            dt = self.breaks[k + 1] - self.breaks[k]
            c0, c1 = self.coefs[k]
            i1.append(i1[-1] + c0 * dt + 0.5 * c1 * dt * dt)
            i2.append(i2[-1] + i1[k] * dt + 0.5 * c0 * dt * dt
                      + c1 * dt ** 3 / 6.0)
        return i1, i2

    def value(self, t):
        i1, i2 = self._accumulate()
        k = self._piece(t)
        tau = t - self.breaks[k]
        c0, c1 = self.coefs[k]
        integral2 = i2[k] + i1[k] * tau + 0.5 * c0 * tau * tau + c1 * tau ** 3 / 6.0
        return self.f0 - self.grad0 * t + integral2

    def derivative(self, t):
        i1, _ = self._accumulate()
        k = self._piece(t)
        tau = t - self.breaks[k]
        c0, c1 = self.coefs[k]
        return -self.grad0 + i1[k] + c0 * tau + 0.5 * c1 * tau * tau


@dataclass(frozen=True)
class ProfileVerdict:
    proper: bool
    bounded_below: bool
    inf_value: float
    argmin: float


def check_profile(gp: GrowthProfile) -> ProfileVerdict:
    """Closed-form properness and boundedness of the barrier G."""
    i1, _ = gp._accumulate()
    kl = len(gp.breaks) - 1
    c0l, c1l = gp.coefs[kl]
    if c1l > 0:
        tail = "grows"
    elif c1l < 0:
        tail = "falls"
    elif c0l > 0:
        tail = "grows"
    elif c0l < 0:
        tail = "falls"
    else:
        slope = -gp.grad0 + i1[kl]
        tail = "grows" if slope > 0 else ("flat" if slope == 0 else "falls")
    proper = tail == "grows"
    if tail == "falls":
        return ProfileVerdict(False, False, -math.inf, math.inf)

    candidates = [(0.0, gp.value(0.0))]
    horizon = gp.breaks[-1] + max(1.0, abs(gp.breaks[-1]))
    for k in range(len(gp.breaks)):
        a = gp.breaks[k]
        b = gp.breaks[k + 1] if k + 1 < len(gp.breaks) else None
        c0, c1 = gp.coefs[k]
        # roots of G'(a + tau) = -grad0 + I1_k + c0 tau + c1 tau^2 / 2
        const = -gp.grad0 + i1[k]
        roots = []
        if c1 != 0:
            disc = c0 * c0 - 2.0 * c1 * const
            if disc >= 0:
                sq = math.sqrt(disc)
                roots = [(-c0 + sq) / c1, (-c0 - sq) / c1]
        elif c0 != 0:
            roots = [-const / c0]
        for tau in roots:
            t = a + tau
            if tau >= 0 and (b is None or t <= b):
                candidates.append((t, gp.value(t)))
        if b is not None:
            candidates.append((b, gp.value(b)))
        else:
            candidates.append((horizon, gp.value(horizon)))
    argmin, inf_val = min(candidates, key=lambda c: c[1])
    # a non-proper flat tail is still bounded below by the candidate min
    return ProfileVerdict(proper, True, float(inf_val), float(argmin))


# -- tail constants and the integrated bound ---------------------------------

@dataclass
class HessBoundData:
    p: np.ndarray            # chart base point
    anchor: np.ndarray       # ambient image of p (translation offset)
    R0: float
    c: float
    b: float
    radius_index: int
    ball_samples: int


def select_tail_bound(aest, margin: float = config.C_MARGIN,
                      cap: float = config.C_CAP):
    """Smallest exhaustion radius whose padded tail bound stays below cap."""
    if aest.verdict.kind == "diverging":
        raise NotApplicable("tail estimate diverging; no bound below 1")
    for i, (r, a) in enumerate(zip(aest.radii, aest.values)):
        c = a * (1.0 + margin)
        if c < cap:
            return i, float(r), float(c)
    raise NotApplicable("no exhaustion radius with padded tail bound below "
                        f"{cap}")


def tail_constants(imm: ImmersionDef, p, aest, fld: DistanceField,
                   margin: float = config.C_MARGIN,
                   cap: float = config.C_CAP) -> HessBoundData:
    """Pick (R0, c) from the tail sequence and bound the Hessian on the
    ball rho <= R0 by sampling its pointwise minimum over directions."""
    idx, r0, c = select_tail_bound(aest, margin, cap)
    anchor = imm.value(np.asarray(p, dtype=float)[None, :])[0]
    rho = fld.values.ravel()
    mask = rho <= r0
    pts = fld.points[mask]
    if len(pts) == 0:
        raise NotApplicable(f"no grid samples inside the ball rho <= {r0}")
    hmin = min_hessian_batch(imm, pts, anchor)
    return HessBoundData(np.asarray(p, dtype=float), anchor, r0, c,
                         float(np.min(hmin)), idx, int(len(pts)))


def growth_profile(hb: HessBoundData, f0: float = 0.0,
                   grad0: float = 0.0) -> GrowthProfile:
    """Two-piece Hessian lower bound: b inside the ball, 2(1-c) beyond."""
    return GrowthProfile(f0, grad0, (0.0, hb.R0),
                         ((hb.b, 0.0), (2.0 * (1.0 - hb.c), 0.0)))


@dataclass
class BoundReport:
    checked: int
    violations: int
    worst_margin: float
    worst_point: list
    slack_coef: float
    literal_violations: int = 0
    literal_worst_margin: float = 0.0
    literal_valid: bool = True


def growth_bound_check(imm: ImmersionDef, hb: HessBoundData,
                       fld: DistanceField,
                       slack_coef: float = config.BOUND_SLACK) -> BoundReport:
    """Pointwise integrated growth bound on every sample beyond the ball.

    The enforced form integrates the two Hessian pieces honestly,

        f(x) >= b R0 rho - b R0^2 / 2 + (1 - c)(rho - R0)^2 / 2 - slack,

    which the derivative bound guarantees for any sign of b.  The
    single-formula variant b R0 rho + (1 - c)(rho^2/2 - R0 rho) extends
    the tail integrand below R0; it is implied only when b <= 1 - c and
    is reported for information.
    """
    rho = fld.values.ravel()
    mask = rho > hb.R0
    idx_all = np.nonzero(mask)[0]
    pts = fld.points[mask]
    rr = rho[mask].copy()
    vals = imm.value(pts)
    offs = vals - hb.anchor[None, :]
    f = np.einsum("bn,bn->b", offs, offs)
    slack = slack_coef * (1.0 + rr * rr)

    def eval_bound(r_arr):
        return (hb.b * hb.R0 * r_arr - 0.5 * hb.b * hb.R0 ** 2
                + 0.5 * (1.0 - hb.c) * (r_arr - hb.R0) ** 2)

    margin = f - eval_bound(rr)
    bad = np.nonzero(margin < -slack)[0]
    # the graph distance overestimates rho, which over-tightens the bound
    # exactly where it is sharp; re-polish the distance before flagging
    for li in bad[:20000]:
        try:
            path = fld.path_to(int(idx_all[li]))
            val, _ = polish_path(imm, path, max_nodes=72, maxiter=150)
            rr[li] = min(rr[li], val)
        except Exception:
            continue
    margin = f - eval_bound(rr)
    bad = margin < -slack
    worst = int(np.argmin(margin + slack))

    literal = hb.b * hb.R0 * rr + (1.0 - hb.c) * (0.5 * rr * rr - hb.R0 * rr)
    lit_margin = f - literal
    lit_bad = lit_margin < -slack
    return BoundReport(int(mask.sum()), int(bad.sum()),
                       float(margin[worst]), pts[worst].tolist(), slack_coef,
                       int(lit_bad.sum()), float(np.min(lit_margin)),
                       bool(hb.b <= 1.0 - hb.c))


# -- certificates ------------------------------------------------------------

@dataclass
class PropernessCertificate:
    route: str               # "alpha" (tail of rho|alpha|) or "ricci"
    verdict: str             # certified | not_applicable | failed
    reason: str
    constants: dict = field(default_factory=dict)
    profile: ProfileVerdict | None = None
    bound_report: BoundReport | None = None
    caveats: list = field(default_factory=list)

    @property
    def certified(self):
        return self.verdict == "certified"


def _certify(imm, p, hb, fld) -> PropernessCertificate:
    profile = check_profile(growth_profile(hb))
    report = growth_bound_check(imm, hb, fld)
    ok = hb.c < 1.0 and profile.proper and profile.bounded_below \
        and report.violations == 0
    reason = "" if ok else "integrated bound violated on samples" \
        if report.violations else "barrier not proper or unbounded below"
    constants = {
        "R0": hb.R0, "c": hb.c, "b": hb.b,
        "base_point": hb.p.tolist(), "anchor": hb.anchor.tolist(),
        "ball_samples": hb.ball_samples,
        "inf_G": profile.inf_value,
    }
    caveats = ["b sampled on a finite grid: certificate is numerical "
               "evidence, not a proof",
               f"distance refinement gap {fld.refinement_gap:.2e}"]
    return PropernessCertificate("alpha", "certified" if ok else "failed",
                                 reason, constants, profile, report, caveats)


def certify_properness(imm: ImmersionDef, p, aest,
                       fld: DistanceField) -> PropernessCertificate:
    """Certificate from the decay of rho * |alpha|."""
    try:
        hb = tail_constants(imm, p, aest, fld)
    except NotApplicable as exc:
        return PropernessCertificate("alpha", "not_applicable", str(exc))
    return _certify(imm, p, hb, fld)


def certify_properness_minimal(imm: ImmersionDef, p, best,
                               fld: DistanceField,
                               margin: float = config.C_MARGIN,
                               cap: float = config.C_CAP) -> PropernessCertificate:
    """Minimal-immersion certificate: the tail bound comes from the Ricci
    infimum via c = sup rho sqrt(-Ric)."""
    if best.verdict.kind == "diverging":
        return PropernessCertificate("ricci", "not_applicable",
                                     "Ricci tail estimate diverging")
    chosen = None
    for i, (r, b_i) in enumerate(zip(best.radii, best.values)):
        c = math.sqrt(max(0.0, -b_i)) * (1.0 + margin)
        if c < cap:
            chosen = (i, float(r), float(c))
            break
    if chosen is None:
        return PropernessCertificate("ricci", "not_applicable",
                                     "no radius with rho sqrt(-Ric) below 1")
    idx, r0, c = chosen
    anchor = imm.value(np.asarray(p, dtype=float)[None, :])[0]
    rho = fld.values.ravel()
    mask = rho <= r0
    pts = fld.points[mask]
    hmin = min_hessian_batch(imm, pts, anchor)
    hb = HessBoundData(np.asarray(p, dtype=float), anchor, r0, c,
                       float(np.min(hmin)), idx, int(len(pts)))
    cert = _certify(imm, p, hb, fld)
    return PropernessCertificate("ricci", cert.verdict, cert.reason,
                                 cert.constants, cert.profile,
                                 cert.bound_report, cert.caveats)
