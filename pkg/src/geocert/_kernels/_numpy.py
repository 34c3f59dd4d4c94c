"""Pure-numpy implementation of the hot evaluation kernels.

Mirrors the API of the compiled extension (``_core``): batched jet
evaluation for the builtin surface family, the fundamental-forms chain,
and the fused radial-field state used by the flow integrator.
"""

from __future__ import annotations

import numpy as np

SURFACE_CODES = {
    "plane": 0,
    "cone": 1,
    "catenoid": 2,
    "helicoid": 3,
    "paraboloid": 4,
    "enneper": 5,
}


def jet_batch(code: int, params: np.ndarray, U: np.ndarray):
    """Closed-form value/Jacobian/second-derivative batches, shape
    (B,3), (B,3,2), (B,3,2,2) for the two-dimensional builtin gallery."""
    U = np.atleast_2d(np.asarray(U, dtype=float))
    b = U.shape[0]
    x, y = U[:, 0], U[:, 1]
    val = np.zeros((b, 3))
    jac = np.zeros((b, 3, 2))
    hess = np.zeros((b, 3, 2, 2))
    z = np.zeros(b)
    one = np.ones(b)

    if code == SURFACE_CODES["plane"]:
        val[:, 0], val[:, 1] = x, y
        jac[:, 0, 0] = 1.0
        jac[:, 1, 1] = 1.0

    elif code == SURFACE_CODES["cone"]:
        beta = params[0]
        sb, cb = np.sin(beta), np.cos(beta)
        s, th = x, y
        ct, st = np.cos(th), np.sin(th)
        val[:, 0], val[:, 1], val[:, 2] = s * sb * ct, s * sb * st, s * cb
        jac[:, 0, 0], jac[:, 1, 0], jac[:, 2, 0] = sb * ct, sb * st, cb * one
        jac[:, 0, 1], jac[:, 1, 1] = -s * sb * st, s * sb * ct
        hess[:, 0, 0, 1] = hess[:, 0, 1, 0] = -sb * st
        hess[:, 1, 0, 1] = hess[:, 1, 1, 0] = sb * ct
        hess[:, 0, 1, 1] = -s * sb * ct
        hess[:, 1, 1, 1] = -s * sb * st

    elif code == SURFACE_CODES["catenoid"]:
        u, v = x, y
        cu, su = np.cos(u), np.sin(u)
        cv, sv = np.cosh(v), np.sinh(v)
        val[:, 0], val[:, 1], val[:, 2] = cv * cu, cv * su, v
        jac[:, 0, 0], jac[:, 1, 0] = -cv * su, cv * cu
        jac[:, 0, 1], jac[:, 1, 1], jac[:, 2, 1] = sv * cu, sv * su, one
        hess[:, 0, 0, 0], hess[:, 1, 0, 0] = -cv * cu, -cv * su
        hess[:, 0, 0, 1] = hess[:, 0, 1, 0] = -sv * su
        hess[:, 1, 0, 1] = hess[:, 1, 1, 0] = sv * cu
        hess[:, 0, 1, 1], hess[:, 1, 1, 1] = cv * cu, cv * su

    elif code == SURFACE_CODES["helicoid"]:
        u, v = x, y
        cu, su = np.cos(u), np.sin(u)
        val[:, 0], val[:, 1], val[:, 2] = v * cu, v * su, u
        jac[:, 0, 0], jac[:, 1, 0], jac[:, 2, 0] = -v * su, v * cu, one
        jac[:, 0, 1], jac[:, 1, 1] = cu, su
        hess[:, 0, 0, 0], hess[:, 1, 0, 0] = -v * cu, -v * su
        hess[:, 0, 0, 1] = hess[:, 0, 1, 0] = -su
        hess[:, 1, 0, 1] = hess[:, 1, 1, 0] = cu

    elif code == SURFACE_CODES["paraboloid"]:
        val[:, 0], val[:, 1], val[:, 2] = x, y, 0.5 * (x * x + y * y)
        jac[:, 0, 0], jac[:, 1, 1] = 1.0, 1.0
        jac[:, 2, 0], jac[:, 2, 1] = x, y
        hess[:, 2, 0, 0] = 1.0
        hess[:, 2, 1, 1] = 1.0

    elif code == SURFACE_CODES["enneper"]:
        u, v = x, y
        val[:, 0] = u - u**3 / 3.0 + u * v * v
        val[:, 1] = -v + v**3 / 3.0 - u * u * v
        val[:, 2] = u * u - v * v
        jac[:, 0, 0] = 1.0 - u * u + v * v
        jac[:, 0, 1] = 2.0 * u * v
        jac[:, 1, 0] = -2.0 * u * v
        jac[:, 1, 1] = -1.0 + v * v - u * u
        jac[:, 2, 0] = 2.0 * u
        jac[:, 2, 1] = -2.0 * v
        hess[:, 0, 0, 0] = -2.0 * u
        hess[:, 0, 0, 1] = hess[:, 0, 1, 0] = 2.0 * v
        hess[:, 0, 1, 1] = 2.0 * u
        hess[:, 1, 0, 0] = -2.0 * v
        hess[:, 1, 0, 1] = hess[:, 1, 1, 0] = -2.0 * u
        hess[:, 1, 1, 1] = 2.0 * v
        hess[:, 2, 0, 0] = 2.0 * one
        hess[:, 2, 1, 1] = -2.0 * one

    else:
        raise ValueError(f"unknown surface code {code}")

    _ = z
    return val, jac, hess


def fundamental_batch(val, jac, hess):
    """Induced metric, second form and frame data at a batch of jets.

    Returns a dict with keys g, det_g, chol, e_frame, alpha, alpha_on,
    norm_hs, mean, mean_norm.  ``alpha_on`` holds the second form in a
    metric-orthonormal tangent frame; norms and traces come from it.
    """
    g = np.einsum("bni,bnj->bij", jac, jac)
    det_g = np.linalg.det(g)
    chol = np.linalg.cholesky(g)
    linv = np.linalg.inv(chol)
    e_frame = np.einsum("bnk,bak->bna", jac, linv)
    coef = np.einsum("bna,bnij->baij", e_frame, hess)
    alpha = hess - np.einsum("bna,baij->bnij", e_frame, coef)
    alpha_on = np.einsum("bai,bcj,bnij->bnac", linv, linv, alpha)
    m = jac.shape[2]
    mean = np.einsum("bnaa->bn", alpha_on) / m
    norm_hs = np.sqrt(np.einsum("bnac,bnac->b", alpha_on, alpha_on))
    mean_norm = np.sqrt(np.einsum("bn,bn->b", mean, mean))
    return {
        "g": g, "det_g": det_g, "chol": chol, "e_frame": e_frame,
        "alpha": alpha, "alpha_on": alpha_on, "norm_hs": norm_hs,
        "mean": mean, "mean_norm": mean_norm,
    }


def radial_state_batch(val, jac, hess, center):
    """Radial-field state relative to an ambient center point.

    Returns (R, psi, w, q_raw, sin_t): the ambient distance
    R = |phi - center|, the transversality psi = |tangential projection
    of eta|, the chart representation w of that projection
    (g w = jac^T eta, |w|_g = psi), q_raw = <normal part of hess(w, w),
    eta> (so <alpha(nu, nu), eta> = q_raw / psi^2), and sin_t = |normal
    part of eta| computed from the projection residual, which is exact
    near psi = 1 where 1 - psi^2 cancels.
    """
    w_amb = val - np.asarray(center, dtype=float)[None, :]
    R = np.sqrt(np.einsum("bn,bn->b", w_amb, w_amb))
    safe = np.where(R > 1e-300, R, 1.0)
    eta = w_amb / safe[:, None]
    g = np.einsum("bni,bnj->bij", jac, jac)
    rhs = np.einsum("bni,bn->bi", jac, eta)
    w = np.linalg.solve(g, rhs[:, :, None])[:, :, 0]
    psi = np.sqrt(np.clip(np.einsum("bi,bi->b", w, rhs), 0.0, 1.0))
    resid = eta - np.einsum("bni,bi->bn", jac, w)
    sin_t = np.clip(np.sqrt(np.einsum("bn,bn->b", resid, resid)), 0.0, 1.0)
    hww = np.einsum("bnij,bi,bj->bn", hess, w, w)
    coef = np.linalg.solve(g, np.einsum("bni,bn->bi", jac, hww)[:, :, None])
    tang = np.einsum("bni,bi->bn", jac, coef[:, :, 0])
    q_raw = np.einsum("bn,bn->b", hww - tang, eta)
    zero = R <= 1e-300
    if np.any(zero):
        psi = np.where(zero, 0.0, psi)
        q_raw = np.where(zero, 0.0, q_raw)
        w = np.where(zero[:, None], 0.0, w)
        sin_t = np.where(zero, 1.0, sin_t)
    return R, psi, w, q_raw, sin_t


def surface_fundamental(code, params, U):
    return fundamental_batch(*jet_batch(code, params, U))


def surface_radial_state(code, params, center, U):
    val, jac, hess = jet_batch(code, params, U)
    return radial_state_batch(val, jac, hess, center)
