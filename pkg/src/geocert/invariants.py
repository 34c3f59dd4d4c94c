"""Estimation of the curvature-decay invariants from sampled tails.

The first invariant is the limit of a_i = sup of rho * |alpha| outside
exhausting geodesic balls; the minimal-case analogue uses the infimum of
rho^2 times the smallest Ricci eigenvalue.  Tail suprema are sampled on
annuli (R_i, 4 R_i] of a windowed grid: on a truncated window a pure
tail supremum cannot distinguish genuine growth from the window edge,
while per-radius annuli make growth visible as a strictly increasing
sequence.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import config
from .errors import EmptyTail, NotMinimal, TooShort
from .geodesic import DistanceField, distance_field, polish_path, segment_length
from .geometry import curvature_batch
from .surfaces import ImmersionDef


@dataclass(frozen=True)
class Verdict:
    kind: str                # converging | diverging | indeterminate
    limit: float | None = None

    def __str__(self):
        if self.kind == "converging":
            return f"converging({self.limit:.6g})"
        return self.kind


@dataclass
class AEstimate:
    radii: list
    values: list
    verdict: Verdict
    sample_count: int
    refinement_gap: float
    window_rho_max: float
    argmax_points: list = field(default_factory=list)

    @property
    def a_limit(self):
        return self.verdict.limit


@dataclass
class BEstimate:
    radii: list
    values: list
    verdict: Verdict
    sample_count: int
    refinement_gap: float
    window_rho_max: float
    argmin_points: list = field(default_factory=list)

    @property
    def b_limit(self):
        return self.verdict.limit


def classify_limit(seq, kind: str, conv_tol: float = config.CONV_TOL,
                   div_cap: float = config.DIV_CAP) -> Verdict:
    """Classify a finite sequence of tail estimates.

    Converging: the last three values agree pairwise within
    conv_tol * (1 + |last|); the limit is the last value.  Diverging:
    strictly monotone away from the bound (increasing for the supremum
    invariant, decreasing for the infimum one) with magnitude beyond
    div_cap.  Otherwise indeterminate.
    """
    seq = [float(x) for x in seq]
    if len(seq) < 4:
        raise TooShort(f"need at least 4 values, got {len(seq)}")
    tail = seq[-3:]
    tol = conv_tol * (1.0 + abs(tail[-1]))
    if max(tail) - min(tail) <= tol:
        return Verdict("converging", tail[-1])
    diffs = np.diff(seq)
    away = np.all(diffs > 0) if kind == "a" else np.all(diffs < 0)
    if away and abs(seq[-1]) > div_cap:
        return Verdict("diverging")
    return Verdict("indeterminate")


# -- tail supremum machinery -------------------------------------------------

def _polish_rho(imm, fld: DistanceField, flat_idx: int, cache: dict) -> float:
    if flat_idx in cache:
        return cache[flat_idx]
    try:
        path = fld.path_to(flat_idx)
        val, _ = polish_path(imm, path, max_nodes=72, maxiter=120)
    except Exception:
        val = float(fld.values.ravel()[flat_idx])
    val = min(val, float(fld.values.ravel()[flat_idx]))
    cache[flat_idx] = val
    return val


def _micro_refine(imm, fld, flat_idx, rho_base, quantity_fn, mode):
    """Sample a quarter-cell neighborhood of the argmax node, propagating
    rho as (polished rho at node) + local segment length."""
    n2 = len(fld.axes[1])
    i, j = divmod(flat_idx, n2)
    ax0, ax1 = fld.axes
    h0 = ax0[min(i + 1, len(ax0) - 1)] - ax0[max(i - 1, 0)]
    h1 = ax1[min(j + 1, len(ax1) - 1)] - ax1[max(j - 1, 0)]
    center = np.array([ax0[i], ax1[j]])
    off = np.linspace(-0.5, 0.5, 5)
    pts = np.stack(np.meshgrid(center[0] + off * h0 * 0.5,
                               center[1] + off * h1 * 0.5,
                               indexing="ij"), axis=-1).reshape(-1, 2)
    keep = np.array([imm.chart.contains(q) for q in pts])
    pts = pts[keep]
    if len(pts) == 0:
        return None
    rhos = np.array([rho_base + segment_length(imm, center, q) for q in pts])
    vals = quantity_fn(pts)
    prod = rhos ** (1 if mode == "a" else 2) * vals
    return float(np.max(prod) if mode == "a" else np.min(prod))


def _tail_extrema(imm, fld, rho, quantity, radii, mode, polish,
                  cap_factor=config.TAIL_CAP_FACTOR, band=0.10, max_cand=24):
    """Per-radius annulus extrema of rho^k * quantity with path-polished
    distances at the extremal candidates."""
    flat_rho = rho.ravel()
    flat_q = quantity.ravel()
    power = 1 if mode == "a" else 2
    raw = flat_rho ** power * flat_q
    cache: dict = {}
    out = []
    arg_pts = []
    pts_all = fld.points

    def better(x, y):
        return x > y if mode == "a" else x < y

    for r in radii:
        mask = (flat_rho > r) & (flat_rho <= cap_factor * r) & np.isfinite(raw)
        if not np.any(mask):
            raise EmptyTail(f"no samples in the tail beyond radius {r:g}")
        vals = raw[mask]
        idxs = np.nonzero(mask)[0]
        best_raw = vals.max() if mode == "a" else vals.min()
        result = best_raw
        best_idx = idxs[int(np.argmax(vals) if mode == "a" else np.argmin(vals))]
        if polish:
            scale = abs(best_raw) + 1e-30
            if mode == "a":
                cand = idxs[vals >= best_raw - band * scale]
            else:
                cand = idxs[vals <= best_raw + band * scale]
            order = np.argsort(raw[cand])
            if mode == "a":
                order = order[::-1]
            cand = cand[order[:max_cand]]
            result = None
            for ci in cand:
                rp = _polish_rho(imm, fld, int(ci), cache)
                if not (r < rp <= cap_factor * r):
                    # polished distance may drop below the annulus floor
                    if rp <= r:
                        continue
                val = rp ** power * flat_q[ci]
                if result is None or better(val, result):
                    result = val
                    best_idx = ci
            if result is None:
                result = best_raw

            def qfn(sample_pts):
                return _quantity_at(imm, sample_pts, mode)

            rho_best = cache.get(int(best_idx), float(flat_rho[best_idx]))
            micro = _micro_refine(imm, fld, int(best_idx), rho_best, qfn, mode)
            if micro is not None and better(micro, result):
                result = micro
        out.append(float(result))
        arg_pts.append(pts_all[best_idx].tolist())
    return out, arg_pts


def _quantity_at(imm, pts, mode):
    data = curvature_batch(imm, pts, want_ricci=(mode == "b"))
    if mode == "a":
        return data["norm_alpha"]
    return data["ricci_min"]


def a_sequence(imm: ImmersionDef, p, radii, axes, alpha_norm: str = "hs",
               polish: bool = True, stencil: int = config.STENCIL,
               refine: int = 1, window_factor: float = config.WINDOW_FACTOR,
               fld: DistanceField | None = None):
    """Tail suprema of rho * |alpha| over the exhausting annuli.

    Returns ``(AEstimate, DistanceField)``; the field is reused by the
    downstream certificate stages (pass ``fld`` to reuse one).
    """
    if fld is None:
        fld = distance_field(imm, p, axes, stencil=stencil, refine=refine)
    pts = fld.points
    data = curvature_batch(imm, pts, alpha_norm=alpha_norm)
    rho = fld.values.ravel()
    values, args = _tail_extrema(imm, fld, rho, data["norm_alpha"], radii,
                                 "a", polish)
    rho_max = float(np.max(rho[np.isfinite(rho)]))
    verdict = classify_limit(values, "a")
    if rho_max < window_factor * radii[-1] * 0.98 and verdict.kind == "converging":
        verdict = Verdict("indeterminate")
    n_tail = int(np.sum(rho > radii[0]))
    return AEstimate(list(radii), values, verdict, n_tail,
                     fld.refinement_gap, rho_max, args), fld


def b_sequence(imm: ImmersionDef, p, radii, axes,
               polish: bool = True, stencil: int = config.STENCIL,
               refine: int = 1, h_tol: float = config.H_TOL,
               window_factor: float = config.WINDOW_FACTOR,
               fld: DistanceField | None = None):
    """Tail infima of rho^2 * (smallest Ricci eigenvalue); requires a
    minimal immersion.  Returns ``(BEstimate, DistanceField)``."""
    if fld is None:
        fld = distance_field(imm, p, axes, stencil=stencil, refine=refine)
    pts = fld.points
    data = curvature_batch(imm, pts, want_ricci=True)
    worst_h = float(np.max(data["mean_norm"]))
    if worst_h > h_tol:
        raise NotMinimal(f"|H| reaches {worst_h:.3e} on the sampled grid")
    rho = fld.values.ravel()
    values, args = _tail_extrema(imm, fld, rho, data["ricci_min"], radii,
                                 "b", polish)
    rho_max = float(np.max(rho[np.isfinite(rho)]))
    verdict = classify_limit(values, "b")
    if rho_max < window_factor * radii[-1] * 0.98 and verdict.kind == "converging":
        verdict = Verdict("indeterminate")
    n_tail = int(np.sum(rho > radii[0]))
    return BEstimate(list(radii), values, verdict, n_tail,
                     fld.refinement_gap, rho_max, args), fld
