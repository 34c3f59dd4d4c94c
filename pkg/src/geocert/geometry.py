"""Pointwise differential geometry: fundamental forms, curvature, Ricci.

Single-point operations validate their inputs and return typed records;
batched grid sweeps go through :mod:`geocert._kernels`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import config, _kernels
from .errors import NotUnit, RankDeficient, StepTooLarge
from .surfaces import ImmersionDef, rank_check, require_in_chart


@dataclass(frozen=True)
class Jet2:
    """Position, Jacobian and (symmetric) second derivatives of the map."""

    value: np.ndarray   # (n,)
    jac: np.ndarray     # (n, m)
    hess: np.ndarray    # (n, m, m), exactly symmetric in the chart indices


@dataclass(frozen=True)
class MetricTensor:
    g: np.ndarray
    g_inv: np.ndarray
    det_g: np.ndarray


@dataclass(frozen=True)
class SecondForm:
    """Normal-valued second fundamental form at one point.

    ``alpha[i, j]`` is the ambient n-vector alpha(d_i, d_j) in chart
    indices; ``alpha_on`` is the same tensor in a metric-orthonormal
    tangent frame (used for norms, traces and the Ricci form).
    """

    alpha: np.ndarray          # (m, m, n)
    norm_alpha: float
    mean_curvature: np.ndarray  # (n,)
    alpha_on: np.ndarray       # (m, m, n)
    chol: np.ndarray           # (m, m) lower Cholesky factor of g


def evaluate_jet(imm: ImmersionDef, u, rank_tol: float = config.RANK_TOL,
                 sym_tol: float = config.SYM_TOL) -> Jet2:
    """Exact jet at a chart point; checks chart membership and rank."""
    u = require_in_chart(imm, u)
    value, jac, hess = imm.jet(u)
    rank_check(jac, rank_tol)
    defect = np.max(np.abs(hess - hess.transpose(0, 2, 1)))
    if defect > sym_tol * (1.0 + np.max(np.abs(hess))):
        raise RankDeficient(f"second derivatives asymmetric by {defect:.3e}")
    hess = 0.5 * (hess + hess.transpose(0, 2, 1))
    return Jet2(value, jac, hess)


def metric(jet: Jet2, rank_tol: float = config.RANK_TOL) -> MetricTensor:
    g = jet.jac.T @ jet.jac
    det_g = float(np.linalg.det(g))
    m = g.shape[0]
    if det_g < rank_tol ** (2 * m):
        raise RankDeficient(f"metric degenerate: det g = {det_g:.3e}")
    g_inv = np.linalg.inv(g)
    return MetricTensor(g, g_inv, det_g)


def second_form(jet: Jet2, g: MetricTensor, alpha_norm: str = "hs",
                proj_tol: float = config.PROJ_TOL) -> SecondForm:
    """Normal projection of the second derivatives, with norm and trace."""
    data = _kernels.fundamental_batch(jet.value[None], jet.jac[None],
                                      jet.hess[None])
    alpha = np.transpose(data["alpha"][0], (1, 2, 0))
    alpha_on = np.transpose(data["alpha_on"][0], (1, 2, 0))
    # normality: residual tangential component relative to |jac|
    resid = np.einsum("ijn,nk->ijk", alpha, jet.jac)
    scale = max(1.0, float(np.max(np.abs(alpha))))
    if np.max(np.abs(resid)) > proj_tol * scale * max(1.0, np.linalg.norm(jet.jac)):
        raise RankDeficient("second form projection lost normality")
    mean = data["mean"][0]
    if alpha_norm == "hs":
        norm = float(data["norm_hs"][0])
    elif alpha_norm == "op":
        norm = float(_op_norm(alpha_on[None])[0])
    else:
        raise ValueError(f"alpha_norm must be 'hs' or 'op', got {alpha_norm!r}")
    return SecondForm(alpha, norm, mean, alpha_on, data["chol"][0])


def _op_norm(alpha_on_batch: np.ndarray, samples: int = 1024) -> np.ndarray:
    """sup over unit x of |alpha(x, x)| for two-dimensional charts."""
    if alpha_on_batch.shape[1] != 2:
        raise NotImplementedError("operator norm implemented for m = 2 only")
    phi = np.linspace(0.0, np.pi, samples, endpoint=False)
    c, s = np.cos(phi), np.sin(phi)
    a = alpha_on_batch[:, 0, 0, :]
    bm = alpha_on_batch[:, 0, 1, :]
    cc = alpha_on_batch[:, 1, 1, :]
    vec = (a[:, None, :] * (c * c)[None, :, None]
           + 2.0 * bm[:, None, :] * (c * s)[None, :, None]
           + cc[:, None, :] * (s * s)[None, :, None])
    return np.sqrt(np.max(np.einsum("bpn,bpn->bp", vec, vec), axis=1))


def _unit_on_frame(nu, chol, unit_tol):
    nu = np.asarray(nu, dtype=float)
    x = chol.T @ nu
    norm = np.linalg.norm(x)
    if abs(norm - 1.0) > unit_tol:
        raise NotUnit(f"|nu|_g = {norm} differs from 1 beyond {unit_tol}")
    return x / norm


def ricci_extrinsic(sf: SecondForm, g: MetricTensor, nu,
                    unit_tol: float = config.UNIT_TOL) -> float:
    """Ricci curvature Ric(nu, nu) from the ambient flatness relation.

    Ric(nu) = <m H, alpha(nu, nu)> - sum_i |alpha(e_i, nu)|^2 over any
    metric-orthonormal frame completing nu; the sum is frame-free.
    """
    x = _unit_on_frame(nu, sf.chol, unit_tol)
    m = g.g.shape[0]
    a_nn = np.einsum("ijn,i,j->n", sf.alpha_on, x, x)
    a_x = np.einsum("ijn,j->in", sf.alpha_on, x)
    return float(m * sf.mean_curvature @ a_nn - np.einsum("in,in->", a_x, a_x))


def ricci_form(sf: SecondForm) -> np.ndarray:
    """Matrix Q of Ric as a quadratic form in the orthonormal frame."""
    m = sf.alpha_on.shape[0]
    term1 = m * np.einsum("n,ijn->ij", sf.mean_curvature, sf.alpha_on)
    term2 = np.einsum("ikn,kjn->ij", sf.alpha_on, sf.alpha_on)
    return term1 - term2


def christoffels(jet: Jet2, g: MetricTensor) -> np.ndarray:
    """Connection coefficients from exact jets: Gamma^k_ij, symmetric in ij."""
    rhs = np.einsum("nij,nl->lij", jet.hess, jet.jac)
    return np.einsum("kl,lij->kij", g.g_inv, rhs)


def _metric_batch(imm: ImmersionDef, U: np.ndarray) -> np.ndarray:
    _, jac, _ = imm.jets(U)
    return np.einsum("bni,bnj->bij", jac, jac)


def _christoffel_fd(imm, points, h):
    """Coordinate Christoffels at a batch of points by central differences
    of the metric coefficients: dg[b, a, i, j] = d_a g_ij."""
    pts = np.atleast_2d(points)
    b, m = pts.shape
    stencil = [pts]
    for a in range(m):
        e = np.zeros(m)
        e[a] = h
        stencil.extend([pts + e, pts - e])
    stack = np.concatenate(stencil, axis=0)
    gs = _metric_batch(imm, stack).reshape(2 * m + 1, b, m, m)
    g0 = gs[0]
    dg = np.empty((b, m, m, m))
    for a in range(m):
        dg[:, a] = (gs[1 + 2 * a] - gs[2 + 2 * a]) / (2.0 * h)
    ginv = np.linalg.inv(g0)
    # Gamma_{l,ij} = (d_i g_jl + d_j g_il - d_l g_ij) / 2
    low = 0.5 * (np.einsum("bijl->blij", dg) + np.einsum("bjil->blij", dg) - dg)
    return np.einsum("bkl,blij->bkij", ginv, low)


def ricci_intrinsic(imm: ImmersionDef, u, nu, h: float | None = None,
                    unit_tol: float = config.UNIT_TOL) -> float:
    """Independent Ricci oracle: curvature tensor of the induced metric by
    central differences of the metric coefficients (no use of the second
    form).  Intended for cross-validation only."""
    u = require_in_chart(imm, u)
    m = imm.m
    if h is None:
        h = config.FD_STEP_REL * max(1.0, float(np.max(np.abs(u))))
    if imm.chart.boundary_margin(u) < 2.5 * h:
        raise StepTooLarge(f"stencil of width {2 * h} exits chart near {u}")

    pts = [np.asarray(u, dtype=float)]
    for a in range(m):
        e = np.zeros(m)
        e[a] = h
        pts.extend([u + e, u - e])
    pts = np.asarray(pts)
    gammas = _christoffel_fd(imm, pts, h)
    gamma0 = gammas[0]
    dgamma = np.empty((m, m, m, m))
    for a in range(m):
        dgamma[a] = (gammas[1 + 2 * a] - gammas[2 + 2 * a]) / (2.0 * h)

    # R^l_{k i j} = d_i Gamma^l_{jk} - d_j Gamma^l_{ik}
    #              + Gamma^l_{i mu} Gamma^mu_{jk} - Gamma^l_{j mu} Gamma^mu_{ik}
    riem = (np.einsum("iljk->lkij", dgamma)
            - np.einsum("jlik->lkij", dgamma)
            + np.einsum("lim,mjk->lkij", gamma0, gamma0)
            - np.einsum("ljm,mik->lkij", gamma0, gamma0))
    ric = np.einsum("lklj->kj", riem)

    g0 = _metric_batch(imm, u[None])[0]
    nu = np.asarray(nu, dtype=float)
    norm = float(np.sqrt(nu @ g0 @ nu))
    if abs(norm - 1.0) > unit_tol:
        raise NotUnit(f"|nu|_g = {norm} differs from 1 beyond {unit_tol}")
    return float(nu @ ric @ nu)


def curvature_batch(imm: ImmersionDef, U: np.ndarray, alpha_norm: str = "hs",
                    want_ricci: bool = False) -> dict:
    """Vectorized curvature sweep over chart points.

    Returns value, norm_alpha, mean_norm and (optionally) the smallest
    eigenvalue of the Ricci quadratic form at every point.
    """
    U = np.atleast_2d(np.asarray(U, dtype=float))
    if imm.code >= 0:
        data = _kernels.surface_fundamental(imm.code, imm.kernel_params, U)
        val = _kernels.jet_batch(imm.code, imm.kernel_params, U)[0]
    else:
        val, jac, hess = imm.jets(U)
        data = _kernels.fundamental_batch(val, jac, hess)
    out = {
        "value": val,
        "norm_alpha": data["norm_hs"].copy(),
        "mean_norm": data["mean_norm"],
        "alpha_on": data["alpha_on"],
        "mean": data["mean"],
    }
    if alpha_norm == "op":
        out["norm_alpha"] = _op_norm(np.transpose(data["alpha_on"], (0, 2, 3, 1)))
    if want_ricci:
        m = U.shape[1]
        t1 = m * np.einsum("bn,bnij->bij", data["mean"], data["alpha_on"])
        t2 = np.einsum("bnik,bnkj->bij", data["alpha_on"], data["alpha_on"])
        out["ricci_min"] = np.linalg.eigvalsh(t1 - t2)[:, 0]
    return out
