"""Radial flow: level-set seeds, the flow ODE, identity checks, the
critical-point scan, and the finite-topology certificate.

The flow follows the unit tangential direction nu of steepest increase of
the ambient distance R = |phi - center|, scaled by 1/psi with
psi = <nu, eta> the transversality; along its integral curves R grows
affinely, R(t) = t + r.  Where the tail bound rho |alpha| <= c < 1 holds,
sin(theta) stays below the envelope (c t + r sin(theta_0)) / (t + r), so
the flow never meets a critical point of R: critical points are confined
to the compact core, and the scan counts them there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from . import config, _kernels
from .errors import AllTangential, CriticalPoint, NoIntersection
from ._ode import STATUS_DONE, STATUS_HALT, integrate
from .geodesic import DistanceField, segment_length
from .geometry import curvature_batch
from .properness import select_tail_bound
from .errors import NotApplicable
from .surfaces import ImmersionDef


def radial_state(imm: ImmersionDef, U, center):
    """(R, psi, w, q_raw) batches; w solves g w = jac^T eta and
    q_raw / psi^2 = <alpha(nu, nu), eta>."""
    U = np.atleast_2d(np.asarray(U, dtype=float))
    if imm.code >= 0:
        return _kernels.surface_radial_state(imm.code, imm.kernel_params,
                                             np.asarray(center, dtype=float), U)
    val, jac, hess = imm.jets(U)
    return _kernels.radial_state_batch(val, jac, hess,
                                       np.asarray(center, dtype=float))


def radial_unit_field(imm: ImmersionDef, u, center,
                      psi_min: float = config.PSI_MIN):
    """Unit tangential radial direction (chart coordinates) and psi."""
    R, psi, w, _, _ = radial_state(imm, np.asarray(u, dtype=float)[None, :],
                                   center)
    if psi[0] <= psi_min or R[0] <= 1e-12:
        raise CriticalPoint(f"psi = {psi[0]:.3e} at {u} (floor {psi_min})")
    return w[0] / psi[0], float(psi[0])


# -- level-set seeds ---------------------------------------------------------

@dataclass
class LevelSetSeeds:
    r: float
    seeds: np.ndarray        # (K, m)
    psi0: np.ndarray         # (K,)
    ray_angles: np.ndarray   # (K,)
    rings: list              # list of index arrays

    @property
    def min_psi0(self):
        return float(np.min(self.psi0)) if len(self.psi0) else math.nan


def _ray_hit(imm, p, center, r, angle, level_tol, t_cap=None):
    """First crossing of R = r along the chart ray from p at ``angle``."""
    d = np.array([math.cos(angle), math.sin(angle)])

    def R_at(t):
        return float(radial_state(imm, (p + t * d)[None, :], center)[0][0])

    margin = imm.chart.boundary_margin(p)
    step = 0.125 * r
    t_lo, r_lo = 0.0, R_at(0.0)
    t = step
    cap = t_cap if t_cap is not None else 400.0 * r
    hit = None
    while t <= cap:
        if not imm.chart.contains(p + t * d):
            break
        r_t = R_at(t)
        if (r_lo - r) * (r_t - r) <= 0 and r_t != r_lo:
            hit = (t_lo, t)
            break
        t_lo, r_lo = t, r_t
        t += step
        step *= 1.25
    _ = margin
    if hit is None:
        return None
    a, b = hit
    fa = R_at(a) - r
    for _ in range(200):
        mid = 0.5 * (a + b)
        fm = R_at(mid) - r
        if abs(fm) <= level_tol:
            a = b = mid
            break
        if fa * fm <= 0:
            b = mid
        else:
            a, fa = mid, fm
    t_hit = 0.5 * (a + b)
    return p + t_hit * d


def _newton_to_level(imm, center, r, q, level_tol, max_iter=60):
    """Project a chart point onto the level set R = r along grad R."""
    q = np.asarray(q, dtype=float).copy()
    for _ in range(max_iter):
        R, psi, w, _, _ = radial_state(imm, q[None, :], center)
        err = float(R[0]) - r
        if abs(err) <= 0.02 * level_tol:
            return q
        psi2 = max(float(psi[0]) ** 2, 1e-12)
        step = err / psi2 * w[0]
        q = q - step
        if not np.all(np.isfinite(q)):
            return None
        if np.linalg.norm(step) < 1e-16 * (1.0 + np.linalg.norm(q)):
            break
    R, _, _, _, _ = radial_state(imm, q[None, :], center)
    return q if abs(float(R[0]) - r) <= level_tol else None


def _radial_cov(imm, q, center):
    """Ambient distance and its chart gradient covector jac^T eta."""
    val, jac, _ = imm.jet(np.asarray(q, dtype=float))
    d = val - np.asarray(center, dtype=float)
    R = float(np.linalg.norm(d))
    return R, jac.T @ (d / max(R, 1e-300))


def _trace_ring(imm, center, r, q0, level_tol, step0, max_steps=40000):
    """Predictor-corrector march along the level curve R = r.

    The predictor steps perpendicular to the gradient covector (the
    curve tangent annihilates dR, not the metric gradient vector), the
    corrector projects back onto the level set.  Returns (polyline in
    unwrapped chart coordinates, closed flag); an open arc (march
    degenerated near a critical point or left the chart) is traced in
    both directions and concatenated.
    """
    def march(direction):
        pts = [np.asarray(q0, dtype=float)]
        delta = step0
        guard = 0
        while len(pts) < max_steps:
            q = pts[-1]
            _, psi, _, _, _ = radial_state(imm, q[None, :], center)
            _, cov = _radial_cov(imm, q, center)
            wn = float(np.linalg.norm(cov))
            if wn < 1e-10 or psi[0] < 1e-6:
                return pts, False
            tau = direction * np.array([-cov[1], cov[0]]) / wn
            q_try = q + delta * tau
            q_new = _newton_to_level(imm, center, r, q_try, level_tol)
            if q_new is None or not imm.chart.contains(imm.chart.wrap(q_new)):
                delta *= 0.5
                guard += 1
                if guard > 40:
                    return pts, False
                continue
            corr = np.linalg.norm(q_new - q_try)
            floor = 50.0 * level_tol
            if corr > 0.25 * delta + floor:
                delta *= 0.5
                guard += 1
                if guard > 40:
                    return pts, False
                continue
            guard = 0
            pts.append(q_new)
            if corr < 0.02 * delta + floor:
                delta = min(delta * 1.3, 4.0 * step0)
            if len(pts) > 8:
                back = imm.chart.delta(q_new, q0)
                if np.linalg.norm(back) < 0.75 * delta:
                    pts.append(q_new + back)
                    return pts, True
        return pts, False

    fwd, closed = march(+1.0)
    if closed:
        return np.asarray(fwd), True
    bwd, _ = march(-1.0)
    pts = list(reversed(bwd[1:])) + fwd
    return np.asarray(pts), False


def _resample_ring(imm, center, r, poly, closed, count, level_tol):
    """Equally spaced (chart arc length) seeds along a traced ring."""
    seg = np.linalg.norm(np.diff(poly, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    total = s[-1]
    if total == 0:
        return poly[:1]
    if closed:
        targets = np.linspace(0.0, total, count, endpoint=False)
    else:
        targets = np.linspace(0.0, total, count)
    pts = np.stack([np.interp(targets, s, poly[:, d])
                    for d in range(poly.shape[1])], axis=1)
    out = []
    for q in pts:
        qn = _newton_to_level(imm, center, r, q, level_tol)
        if qn is not None:
            out.append(imm.chart.wrap(qn))
    return np.asarray(out)


def extract_level_set(imm: ImmersionDef, p, center, r,
                      ray_count: int = config.RAY_COUNT,
                      psi_min: float = config.PSI_MIN,
                      level_tol_rel: float = config.LEVEL_TOL_REL,
                      probe_rays: int = 64) -> LevelSetSeeds:
    """Seeds on the level set R = r, ``ray_count`` of them per ring.

    Chart rays from the base point bracket and bisect R - r to find one
    point per connected component; each component is then traced as a
    level curve and resampled at equal chart arc length.  Hits and
    resampled seeds below the transversality floor are discarded.
    """
    p = np.asarray(p, dtype=float)
    level_tol = level_tol_rel * r
    angles = np.linspace(0.0, 2 * math.pi, max(probe_rays, 8), endpoint=False)
    hits = []
    tangential = 0
    for ang in angles:
        pt = _ray_hit(imm, p, center, r, ang, level_tol)
        if pt is None:
            continue
        _, psi, _, _, _ = radial_state(imm, pt[None, :], center)
        if psi[0] <= psi_min:
            tangential += 1
            continue
        hits.append(pt)
    if not hits:
        if tangential:
            raise AllTangential(f"all {tangential} level-set hits below the "
                                f"transversality floor {psi_min}")
        raise NoIntersection(f"no crossing of R = {r} along {len(angles)} rays")

    rings_polys = []
    for hit in hits:
        thresh = 0.1 * float(np.linalg.norm(imm.chart.delta(p, hit))) + 1e-3
        assigned = False
        for poly, _closed in rings_polys:
            d = poly - imm.chart.wrap(hit)[None, :]
            for dim in range(imm.m):
                if imm.chart.periodic[dim]:
                    per = imm.chart.period(dim)
                    d[:, dim] = (d[:, dim] + 0.5 * per) % per - 0.5 * per
            if np.min(np.linalg.norm(d, axis=1)) < thresh:
                assigned = True
                break
        if assigned:
            continue
        step0 = max(1e-3, 0.02 * float(np.linalg.norm(
            imm.chart.delta(p, hit))) + 1e-3)
        poly, closed = _trace_ring(imm, center, r, hit, level_tol, step0)
        if len(poly) >= 4:
            wrapped = np.array([imm.chart.wrap(q) for q in poly])
            rings_polys.append((wrapped, closed))

    seeds, psis, ring_groups = [], [], []
    for poly, closed in rings_polys:
        ring_pts = _resample_ring(imm, center, r, poly, closed, ray_count,
                                  level_tol)
        if len(ring_pts) == 0:
            continue
        _, psi, _, _, _ = radial_state(imm, ring_pts, center)
        keep = psi > psi_min
        tangential += int(np.sum(~keep))
        ring_pts = ring_pts[keep]
        if len(ring_pts) == 0:
            continue
        start = len(seeds)
        seeds.extend(list(ring_pts))
        psis.extend(list(psi[keep]))
        ring_groups.append(np.arange(start, len(seeds), dtype=int))
    if not seeds:
        raise AllTangential("every resampled seed fell below the "
                            "transversality floor")
    seeds = np.asarray(seeds)
    psis = np.asarray(psis, dtype=float)
    rel = seeds - p[None, :]
    ray_angles = np.arctan2(rel[:, 1], rel[:, 0])
    return LevelSetSeeds(float(r), seeds, psis, ray_angles, ring_groups)


# -- the flow ODE ------------------------------------------------------------

@dataclass
class FlowTrace:
    seed: np.ndarray
    r: float
    t: np.ndarray
    points: np.ndarray       # (K, m), unwrapped chart coordinates
    R: np.ndarray
    psi: np.ndarray
    sin_theta: np.ndarray
    integrand: np.ndarray    # (t + r) <alpha(nu, nu), nu*> (guarded)
    accumulator: np.ndarray  # ODE-integrated running integral
    termination: str         # reached_tmax | psi_floor | left_chart
    floor_hits: int = 0      # states where sin(theta) fell below the floor

    @property
    def sin_theta0(self):
        return float(self.sin_theta[0])


def integrate_flow(imm: ImmersionDef, seed, center, r: float,
                   t_max: float, tol: float = config.FLOW_TOL,
                   max_step: float = config.FLOW_MAX_STEP,
                   psi_min: float = config.PSI_MIN,
                   nu_star_floor: float = config.NU_STAR_FLOOR) -> FlowTrace:
    """Integrate the radial flow from one seed, accumulating the angle
    integral as an extra state component.

    The integrand (t + r) <alpha(nu, nu), nu*> divides by sin(theta);
    below ``nu_star_floor`` it is set to zero and the state is flagged
    (the conservation-form residual check is division-free).
    """
    m = imm.m
    center = np.asarray(center, dtype=float)
    seed = np.asarray(seed, dtype=float)

    def rhs(t, y):
        u = y[:m]
        _, psi, w, q_raw, sin_t = radial_state(imm, u[None, :], center)
        psi2 = max(float(psi[0]) ** 2, 1e-300)
        du = w[0] / psi2
        if sin_t[0] > nu_star_floor:
            da = (t + r) * float(q_raw[0]) / psi2 / float(sin_t[0])
        else:
            da = 0.0
        return np.concatenate([du, [da]])

    def halt(_t, y):
        u = y[:m]
        if not imm.chart.contains(u):
            return "left_chart"
        _, psi, _, _, _ = radial_state(imm, u[None, :], center)
        if psi[0] < psi_min:
            return "psi_floor"
        return None

    y0 = np.concatenate([seed, [0.0]])
    ts, ys, status, code = integrate(rhs, 0.0, y0, t_max, rtol=tol, atol=tol,
                                     max_step=max_step, halt=halt)
    pts = ys[:, :m]
    R, psi, _, q_raw, sin_theta = radial_state(imm, pts, center)
    with np.errstate(divide="ignore", invalid="ignore"):
        integrand = np.where(sin_theta > nu_star_floor,
                             (ts + r) * q_raw / np.maximum(psi, 1e-300) ** 2
                             / np.maximum(sin_theta, 1e-300),
                             0.0)
    floor_hits = int(np.sum(sin_theta <= nu_star_floor))
    if status == STATUS_DONE:
        term = "reached_tmax"
    elif status == STATUS_HALT:
        term = code
    else:
        term = "psi_floor"
    return FlowTrace(seed, float(r), ts, pts, R, psi, sin_theta,
                     integrand, ys[:, m], term, floor_hits)


def integrate_flow_ensemble(imm: ImmersionDef, seeds, center, r: float,
                            t_max: float, tol: float = config.FLOW_TOL,
                            max_step: float = config.FLOW_MAX_STEP,
                            psi_min: float = config.PSI_MIN,
                            nu_star_floor: float = config.NU_STAR_FLOOR):
    """Integrate every seed simultaneously with a shared adaptive step.

    All traces advance in lockstep (the step is accepted when the worst
    per-trace error passes); a trace that hits the transversality floor
    or leaves the chart is frozen at that state and excluded from the
    error control.  Equivalent to per-seed integration up to step-size
    selection, and far cheaper: the state evaluation is one batched
    kernel call per stage.
    """
    from ._ode import _A, _B5, _ERR, _C

    seeds = np.atleast_2d(np.asarray(seeds, dtype=float))
    k, m = seeds.shape
    center = np.asarray(center, dtype=float)
    y = np.concatenate([seeds, np.zeros((k, 1))], axis=1)
    t = 0.0
    active = np.ones(k, dtype=bool)
    term = np.array(["reached_tmax"] * k, dtype=object)
    hist_t = [np.zeros(k)]
    hist_y = [y.copy()]

    def rhs_batch(tt, yy, mask):
        out = np.zeros_like(yy)
        if not mask.any():
            return out
        u = yy[mask, :m]
        _, psi, w, q_raw, sin_t = radial_state(imm, u, center)
        psi2 = np.maximum(psi * psi, 1e-300)
        du = w / psi2[:, None]
        da = np.where(sin_t > nu_star_floor,
                      (tt + r) * q_raw / psi2 / np.maximum(sin_t, 1e-300),
                      0.0)
        out[mask, :m] = du
        out[mask, m] = da
        return out

    h = min(max_step, t_max / 100.0)
    stages = np.empty((6, k, m + 1))
    n_steps = 0
    while t < t_max - 1e-12 * max(1.0, t_max) and active.any():
        h = min(h, t_max - t, max_step)
        if h < 1e-13:
            break
        n_steps += 1
        if n_steps > 5_000_000:
            break
        stages[0] = rhs_batch(t, y, active)
        for i in range(1, 6):
            yi = y + h * np.einsum("s,skd->kd", _A[i], stages[:i])
            stages[i] = rhs_batch(t + _C[i] * h, yi, active)
        y_new = y + h * np.einsum("s,skd->kd", _B5, stages)
        err_vec = h * np.einsum("s,skd->kd", _ERR, stages)
        scale = tol + tol * np.maximum(np.abs(y), np.abs(y_new))
        per_trace = np.sqrt(np.mean((err_vec / scale) ** 2, axis=1))
        err = float(np.max(per_trace[active])) if active.any() else 0.0

        if err <= 1.0:
            stepped = active.copy()
            y = np.where(active[:, None], y_new, y)
            t = t + h
            # freeze traces that hit the floor or left the chart this step
            u_new = y[:, :m]
            _, psi, _, _, _ = radial_state(imm, u_new[active], center)
            for local, gi in enumerate(np.nonzero(active)[0]):
                if not imm.chart.contains(u_new[gi]):
                    term[gi] = "left_chart"
                    active[gi] = False
                elif psi[local] < psi_min:
                    term[gi] = "psi_floor"
                    active[gi] = False
            cur_t = hist_t[-1].copy()
            cur_t[stepped] = t
            hist_t.append(cur_t)
            hist_y.append(y.copy())

        factor = 0.9 * err ** -0.2 if err > 0 else 5.0
        h = h * min(5.0, max(0.2, factor))

    times = np.asarray(hist_t)
    states = np.asarray(hist_y)
    traces = []
    for i in range(k):
        ti = times[:, i]
        # frozen trace: drop repeated trailing samples
        keep = np.concatenate([[True], np.diff(ti) > 0])
        ts = ti[keep]
        ys = states[keep, i, :]
        pts = ys[:, :m]
        R, psi, _, q_raw, sin_theta = radial_state(imm, pts, center)
        with np.errstate(divide="ignore", invalid="ignore"):
            integrand = np.where(sin_theta > nu_star_floor,
                                 (ts + r) * q_raw
                                 / np.maximum(psi, 1e-300) ** 2
                                 / np.maximum(sin_theta, 1e-300),
                                 0.0)
        floor_hits = int(np.sum(sin_theta <= nu_star_floor))
        traces.append(FlowTrace(seeds[i], float(r), ts, pts, R, psi,
                                sin_theta, integrand, ys[:, m],
                                str(term[i]), floor_hits))
    return traces


# -- identity and bound checks ------------------------------------------------

def check_radius_affine(trace: FlowTrace) -> float:
    """max |R(t) - (t + r)| over the stored states."""
    return float(np.max(np.abs(trace.R - (trace.t + trace.r))))


def check_integrated_identity(trace: FlowTrace) -> float:
    """max residual of sin(theta) = (r sin(theta_0) - A(t)) / (t + r)."""
    rhs = (trace.r * trace.sin_theta0 - trace.accumulator) / (trace.t + trace.r)
    return float(np.max(np.abs(trace.sin_theta - rhs)))


def check_conservation(trace: FlowTrace) -> float:
    """RMS of the division-free conservation form: the discrete derivative
    of (t + r) sin(theta) plus the averaged integrand."""
    if len(trace.t) < 3:
        return 0.0
    f = (trace.t + trace.r) * trace.sin_theta
    dt = np.diff(trace.t)
    good = dt > 1e-12
    resid = (np.diff(f) / np.where(good, dt, 1.0)
             + 0.5 * (trace.integrand[1:] + trace.integrand[:-1]))
    resid = resid[good]
    return float(np.sqrt(np.mean(resid ** 2))) if len(resid) else 0.0


def check_trapezoid_consistency(trace: FlowTrace) -> float:
    """max |A(t) - trapezoid(integrand)| over the trace."""
    trapz = np.concatenate([[0.0], np.cumsum(
        0.5 * (trace.integrand[1:] + trace.integrand[:-1]) * np.diff(trace.t))])
    return float(np.max(np.abs(trace.accumulator - trapz)))


@dataclass
class EnvelopeReport:
    envelope_ok: bool        # bound holds on the premise-valid prefix
    premise_ok: bool         # R |alpha| <= c at every state
    worst_margin: float      # min over prefix of envelope - sin(theta)
    premise_sup: float       # max over all states of R |alpha|
    premise_valid_t: float   # flow time until which the premise held
    rho_premise_sup: float   # max of rho |alpha| where the field covers
    checked: int


def check_angle_envelope(imm: ImmersionDef, trace: FlowTrace, c: float,
                         slack_coef: float = config.ENVELOPE_SLACK,
                         fld: DistanceField | None = None) -> EnvelopeReport:
    """Check sin(theta) against (c t + r sin(theta_0)) / (t + r) + slack.

    The bound is a consequence of the curvature premise |alpha| <= c / R
    along the flow, so it is asserted on the prefix where the premise
    holds; both the premise and the envelope margins are reported.
    """
    data = curvature_batch(imm, imm.chart.wrap(trace.points))
    r_alpha = trace.R * data["norm_alpha"]
    premise = r_alpha <= c * (1.0 + 1e-12) + 1e-12
    premise_ok = bool(np.all(premise))
    if premise_ok:
        valid = np.ones(len(trace.t), dtype=bool)
        premise_valid_t = float(trace.t[-1])
    else:
        first_bad = int(np.argmin(premise))
        valid = np.zeros(len(trace.t), dtype=bool)
        valid[:first_bad] = True
        premise_valid_t = float(trace.t[first_bad - 1]) if first_bad else 0.0
    env = ((c * trace.t + trace.r * trace.sin_theta0) / (trace.t + trace.r)
           + slack_coef * (1.0 + trace.t))
    margin = env - trace.sin_theta
    env_ok = bool(np.all(margin[valid] >= 0.0)) if valid.any() else True
    rho_sup = math.nan
    if fld is not None:
        wrapped = imm.chart.wrap(trace.points)
        inside = np.array([_in_axes(fld.axes, q, imm.chart.periodic)
                           for q in wrapped])
        if inside.any():
            rho = fld.interpolate(wrapped[inside])
            rho_sup = float(np.max(rho * data["norm_alpha"][inside]))
    worst = float(np.min(margin[valid])) if valid.any() else math.nan
    return EnvelopeReport(env_ok, premise_ok, worst, float(np.max(r_alpha)),
                          premise_valid_t, rho_sup, int(len(trace.t)))


def _in_axes(axes, q, periodic):
    for d, ax in enumerate(axes):
        if periodic[d]:
            continue
        if not (ax[0] <= q[d] <= ax[-1]):
            return False
    return True


# -- critical-point scan -------------------------------------------------------

@dataclass
class CriticalCluster:
    kind: str                # base_point | isolated | degenerate
    point: np.ndarray
    psi: float
    cluster_radius: float
    member_count: int = 1


def _psi_at(imm, center, u):
    _, psi, _, _, _ = radial_state(imm, np.asarray(u, dtype=float)[None, :],
                                   center)
    return float(psi[0])


def scan_critical_points(imm: ImmersionDef, p, center, rho_max: float,
                         fld: DistanceField, axes=None,
                         crit_tol: float = config.CRIT_TOL,
                         degenerate_radius: float = config.DEGENERATE_RADIUS,
                         candidate_cap: int = 64) -> list:
    """Locate critical points of R = |phi - center| within rho <= rho_max.

    Grid cells that are local minima of psi seed a local minimization of
    psi^2; refined minima with psi <= crit_tol are clustered, and a
    cluster whose chart extent exceeds ``degenerate_radius`` is reported
    as a degenerate critical set.  The base point itself (when the center
    sits on the surface there) is always reported: R is not smooth at 0.
    """
    from .defaults import march_extent

    p = np.asarray(p, dtype=float)
    center = np.asarray(center, dtype=float)
    clusters = []
    anchor = imm.value(p[None, :])[0]
    if np.linalg.norm(anchor - center) < 1e-9:
        clusters.append(CriticalCluster("base_point", p.copy(), 0.0, 0.0))

    if axes is None:
        axes = []
        for dim in range(imm.m):
            if imm.chart.periodic[dim]:
                axes.append(np.linspace(imm.chart.lo[dim], imm.chart.hi[dim],
                                        129, endpoint=False))
            else:
                hi = p[dim] + march_extent(imm, p, dim, +1, rho_max)
                lo = p[dim] - march_extent(imm, p, dim, -1, rho_max)
                lo = max(lo, imm.chart.lo[dim] + 1e-9)
                hi = min(hi, imm.chart.hi[dim] - 1e-9)
                axes.append(np.linspace(lo, hi, 129))
    grids = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    R, psi, _, _, _ = radial_state(imm, pts, center)
    rho = fld.interpolate(pts)
    shape = tuple(len(a) for a in axes)
    psi_grid = psi.reshape(shape)
    base_mask = (R < 1e-6 * max(1.0, rho_max)).reshape(shape)
    psi_grid = np.where(base_mask, 1.0, psi_grid)
    in_ball = (rho <= rho_max).reshape(shape)

    local_min = np.ones(shape, dtype=bool)
    for (di, dj) in [(1, 0), (-1, 0), (0, 1), (0, -1),
                     (1, 1), (1, -1), (-1, 1), (-1, -1)]:
        rolled = np.roll(psi_grid, (di, dj), axis=(0, 1))
        if not imm.chart.periodic[0] and di:
            edge = slice(0, 1) if di > 0 else slice(-1, None)
            rolled[edge, :] = np.inf
        if not imm.chart.periodic[1] and dj:
            edge = slice(0, 1) if dj > 0 else slice(-1, None)
            rolled[:, edge] = np.inf
        local_min &= psi_grid <= rolled
    cand_mask = in_ball & ((local_min & (psi_grid < 0.5))
                           | (psi_grid < crit_tol))
    cand_idx = np.nonzero(cand_mask.ravel())[0]
    if len(cand_idx) > candidate_cap:
        order = np.argsort(psi.ravel()[cand_idx])
        cand_idx = cand_idx[order[:candidate_cap]]

    def obj(x):
        _, ps, _, _, _ = radial_state(imm, x[None, :], center)
        return float(ps[0]) ** 2

    lo_box = np.array([a[0] for a in axes])
    hi_box = np.array([a[-1] for a in axes])
    pad = 0.1 * (hi_box - lo_box)

    def polish_candidate(ci):
        res = minimize(obj, pts[ci], method="Nelder-Mead",
                       options={"xatol": 1e-12, "fatol": 1e-26,
                                "maxiter": 600})
        if math.sqrt(max(res.fun, 0.0)) > crit_tol:
            return None
        q = imm.chart.wrap(res.x)
        if _psi_at(imm, center, q) > crit_tol:
            return None
        # discard minimizers that escaped the scan region (psi can decay
        # toward zero at infinity without a critical point there)
        for d in range(imm.m):
            if imm.chart.periodic[d]:
                continue
            if not lo_box[d] - pad[d] <= q[d] <= hi_box[d] + pad[d]:
                return None
        r_q, _, _, _, _ = radial_state(imm, q[None, :], center)
        if float(r_q[0]) > rho_max * (1.0 + 1e-6):
            return None
        return q

    workers = config.worker_count()
    if workers > 1 and len(cand_idx) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(polish_candidate, cand_idx))
    else:
        results = [polish_candidate(ci) for ci in cand_idx]
    minima = [q for q in results if q is not None]

    if not minima:
        return clusters
    minima = np.asarray(minima)

    # connect minima through near-critical segments
    k = len(minima)
    parent = list(range(k))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i in range(k):
        for j in range(i + 1, k):
            d = imm.chart.delta(minima[i], minima[j])
            if np.linalg.norm(d) < 1e-6:
                parent[find(i)] = find(j)
                continue
            ts = np.linspace(0.0, 1.0, 17)[1:-1]
            seg = minima[i][None, :] + ts[:, None] * d[None, :]
            _, seg_psi, _, _, _ = radial_state(imm, seg, center)
            if np.all(seg_psi <= 50.0 * crit_tol):
                parent[find(i)] = find(j)

    groups: dict = {}
    for i in range(k):
        groups.setdefault(find(i), []).append(i)
    for members in sorted(groups.values(), key=lambda v: tuple(minima[v[0]])):
        sub = minima[members]
        extent = 0.0
        for i in range(len(sub)):
            d = imm.chart.delta(np.tile(sub[i], (len(sub), 1)), sub)
            extent = max(extent, float(np.max(np.linalg.norm(d, axis=1))))
        rep = sub[0]
        kind = "degenerate" if extent > degenerate_radius else "isolated"
        clusters.append(CriticalCluster(kind, rep,
                                        _psi_at(imm, center, rep),
                                        extent, len(sub)))
    return clusters


# -- certificate ----------------------------------------------------------------

@dataclass
class TopologyCertificate:
    verdict: str             # certified | failed | not_applicable
    reason: str
    r: float = math.nan
    c: float = math.nan
    center: list = field(default_factory=list)
    seed_count: int = 0
    ring_sizes: list = field(default_factory=list)
    clusters: list = field(default_factory=list)
    inside_isolated: int = 0
    inside_degenerate: int = 0
    trace_checks: dict = field(default_factory=dict)
    caveats: list = field(default_factory=list)

    @property
    def certified(self):
        return self.verdict == "certified"


def topology_certificate(imm: ImmersionDef, p, aest, fld: DistanceField,
                         center=None, ray_count: int = config.RAY_COUNT,
                         t_max: float | None = None,
                         tol: float = config.FLOW_TOL,
                         max_step: float = config.FLOW_MAX_STEP,
                         r_override: float | None = None,
                         c_override: float | None = None,
                         traces_out: list | None = None) -> TopologyCertificate:
    """Run the full finite-topology pipeline and collect the verdict."""
    p = np.asarray(p, dtype=float)
    anchor = imm.value(p[None, :])[0]
    center = anchor if center is None else np.asarray(center, dtype=float)
    if r_override is not None and c_override is not None:
        r, c = float(r_override), float(c_override)
    else:
        try:
            _, r, c = select_tail_bound(aest)
        except NotApplicable as exc:
            return TopologyCertificate("not_applicable", str(exc))

    if t_max is None:
        t_max = config.T_MAX_FACTOR * r
    try:
        seeds = extract_level_set(imm, p, center, r, ray_count)
    except (NoIntersection, AllTangential) as exc:
        return TopologyCertificate("failed", f"level-set extraction: {exc}",
                                   r=r, c=c, center=center.tolist())

    affine_budget = 10.0 * tol
    worst = {"affine": 0.0, "identity": 0.0, "conservation": 0.0,
             "envelope_margin": math.inf, "premise_sup": 0.0}
    failures = []
    traces = integrate_flow_ensemble(imm, seeds.seeds, center, r, t_max,
                                     tol=tol, max_step=max_step)
    for idx, trace in enumerate(traces):
        if traces_out is not None:
            traces_out.append(trace)
        if trace.termination != "reached_tmax":
            failures.append(f"trace {idx}: terminated {trace.termination}")
            continue
        worst["affine"] = max(worst["affine"], check_radius_affine(trace))
        worst["identity"] = max(worst["identity"],
                                check_integrated_identity(trace))
        worst["conservation"] = max(worst["conservation"],
                                    check_conservation(trace))
        rep = check_angle_envelope(imm, trace, c, fld=fld)
        worst["envelope_margin"] = min(worst["envelope_margin"],
                                       rep.worst_margin)
        worst["premise_sup"] = max(worst["premise_sup"], rep.premise_sup)
        if not rep.premise_ok:
            failures.append(f"trace {idx}: curvature premise violated "
                            f"(sup R|alpha| = {rep.premise_sup:.3f} > c)")
        elif not rep.envelope_ok:
            failures.append(f"trace {idx}: angle envelope violated "
                            f"(margin {rep.worst_margin:.2e})")
    if worst["affine"] > affine_budget:
        failures.append(f"radius affinity residual {worst['affine']:.2e} "
                        f"exceeds {affine_budget:.2e}")

    clusters = scan_critical_points(imm, p, center, r, fld)
    n_iso = sum(1 for cl in clusters if cl.kind == "isolated")
    n_deg = sum(1 for cl in clusters if cl.kind == "degenerate")
    if n_deg:
        failures.append("degenerate critical set detected; base point on a "
                        "symmetry locus, try an offset center")

    verdict = "certified" if not failures else "failed"
    caveats = [f"flows verify the bound along {len(seeds.seeds)} sampled "
               "curves only",
               f"critical scan limited to rho <= {r:g}"]
    if len(failures) > 4:
        failures = failures[:4] + [f"... and {len(failures) - 4} more"]
    return TopologyCertificate(
        verdict, "; ".join(failures), r=r, c=c, center=center.tolist(),
        seed_count=int(len(seeds.seeds)),
        ring_sizes=[int(len(g)) for g in seeds.rings],
        clusters=clusters, inside_isolated=n_iso, inside_degenerate=n_deg,
        trace_checks={k: float(v) for k, v in worst.items()},
        caveats=caveats)


def trace_to_csv(trace: FlowTrace, path, c: float | None = None):
    """Write a trace as CSV: t, chart coordinates, R, psi, sin_theta,
    integrand, envelope."""
    m = trace.points.shape[1]
    env = np.full(len(trace.t), math.nan)
    if c is not None:
        env = ((c * trace.t + trace.r * trace.sin_theta0)
               / (trace.t + trace.r))
    header = ",".join(["t"] + [f"u{i + 1}" for i in range(m)]
                      + ["R", "psi", "sin_theta", "integrand", "envelope"])
    rows = np.column_stack([trace.t, trace.points, trace.R, trace.psi,
                            trace.sin_theta, trace.integrand, env])
    np.savetxt(path, rows, delimiter=",", header=header, comments="",
               fmt="%.17g")
