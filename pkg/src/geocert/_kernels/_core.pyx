# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled evaluation kernels: builtin-surface jets, the
fundamental-forms chain and the fused radial-field state.

API-identical to the numpy fallback in ``_numpy.py``; selected at import
by ``geocert._kernels`` when present.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, cosh, sin, sinh, sqrt

cnp.import_array()

SURFACE_CODES = {
    "plane": 0,
    "cone": 1,
    "catenoid": 2,
    "helicoid": 3,
    "paraboloid": 4,
    "enneper": 5,
}


def jet_batch(int code, params, U):
    """Closed-form jets for the two-dimensional builtin gallery."""
    U2 = np.ascontiguousarray(np.atleast_2d(np.asarray(U, dtype=np.float64)))
    cdef double[:, ::1] u = U2
    cdef Py_ssize_t b = u.shape[0], k
    val_arr = np.zeros((b, 3))
    jac_arr = np.zeros((b, 3, 2))
    hess_arr = np.zeros((b, 3, 2, 2))
    cdef double[:, ::1] v = val_arr
    cdef double[:, :, ::1] j = jac_arr
    cdef double[:, :, :, ::1] h = hess_arr
    cdef double x, y, sb, cb, ct, st, cu, su, cv, sv, beta

    if code == 0:                                    # plane
        for k in range(b):
            v[k, 0] = u[k, 0]
            v[k, 1] = u[k, 1]
            j[k, 0, 0] = 1.0
            j[k, 1, 1] = 1.0
    elif code == 1:                                  # cone
        beta = float(np.asarray(params, dtype=np.float64).ravel()[0])
        sb = sin(beta)
        cb = cos(beta)
        for k in range(b):
            x = u[k, 0]
            y = u[k, 1]
            ct = cos(y)
            st = sin(y)
            v[k, 0] = x * sb * ct
            v[k, 1] = x * sb * st
            v[k, 2] = x * cb
            j[k, 0, 0] = sb * ct
            j[k, 1, 0] = sb * st
            j[k, 2, 0] = cb
            j[k, 0, 1] = -x * sb * st
            j[k, 1, 1] = x * sb * ct
            h[k, 0, 0, 1] = h[k, 0, 1, 0] = -sb * st
            h[k, 1, 0, 1] = h[k, 1, 1, 0] = sb * ct
            h[k, 0, 1, 1] = -x * sb * ct
            h[k, 1, 1, 1] = -x * sb * st
    elif code == 2:                                  # catenoid
        for k in range(b):
            x = u[k, 0]
            y = u[k, 1]
            cu = cos(x)
            su = sin(x)
            cv = cosh(y)
            sv = sinh(y)
            v[k, 0] = cv * cu
            v[k, 1] = cv * su
            v[k, 2] = y
            j[k, 0, 0] = -cv * su
            j[k, 1, 0] = cv * cu
            j[k, 0, 1] = sv * cu
            j[k, 1, 1] = sv * su
            j[k, 2, 1] = 1.0
            h[k, 0, 0, 0] = -cv * cu
            h[k, 1, 0, 0] = -cv * su
            h[k, 0, 0, 1] = h[k, 0, 1, 0] = -sv * su
            h[k, 1, 0, 1] = h[k, 1, 1, 0] = sv * cu
            h[k, 0, 1, 1] = cv * cu
            h[k, 1, 1, 1] = cv * su
    elif code == 3:                                  # helicoid
        for k in range(b):
            x = u[k, 0]
            y = u[k, 1]
            cu = cos(x)
            su = sin(x)
            v[k, 0] = y * cu
            v[k, 1] = y * su
            v[k, 2] = x
            j[k, 0, 0] = -y * su
            j[k, 1, 0] = y * cu
            j[k, 2, 0] = 1.0
            j[k, 0, 1] = cu
            j[k, 1, 1] = su
            h[k, 0, 0, 0] = -y * cu
            h[k, 1, 0, 0] = -y * su
            h[k, 0, 0, 1] = h[k, 0, 1, 0] = -su
            h[k, 1, 0, 1] = h[k, 1, 1, 0] = cu
    elif code == 4:                                  # paraboloid
        for k in range(b):
            x = u[k, 0]
            y = u[k, 1]
            v[k, 0] = x
            v[k, 1] = y
            v[k, 2] = 0.5 * (x * x + y * y)
            j[k, 0, 0] = 1.0
            j[k, 1, 1] = 1.0
            j[k, 2, 0] = x
            j[k, 2, 1] = y
            h[k, 2, 0, 0] = 1.0
            h[k, 2, 1, 1] = 1.0
    elif code == 5:                                  # enneper
        for k in range(b):
            x = u[k, 0]
            y = u[k, 1]
            v[k, 0] = x - x * x * x / 3.0 + x * y * y
            v[k, 1] = -y + y * y * y / 3.0 - x * x * y
            v[k, 2] = x * x - y * y
            j[k, 0, 0] = 1.0 - x * x + y * y
            j[k, 0, 1] = 2.0 * x * y
            j[k, 1, 0] = -2.0 * x * y
            j[k, 1, 1] = -1.0 + y * y - x * x
            j[k, 2, 0] = 2.0 * x
            j[k, 2, 1] = -2.0 * y
            h[k, 0, 0, 0] = -2.0 * x
            h[k, 0, 0, 1] = h[k, 0, 1, 0] = 2.0 * y
            h[k, 0, 1, 1] = 2.0 * x
            h[k, 1, 0, 0] = -2.0 * y
            h[k, 1, 0, 1] = h[k, 1, 1, 0] = -2.0 * x
            h[k, 1, 1, 1] = 2.0 * y
            h[k, 2, 0, 0] = 2.0
            h[k, 2, 1, 1] = -2.0
    else:
        raise ValueError(f"unknown surface code {code}")
    return val_arr, jac_arr, hess_arr


cdef inline int _cholesky(double[:, ::1] g, double[:, ::1] lmat,
                          Py_ssize_t m) nogil:
    cdef Py_ssize_t i, jj, kk
    cdef double s
    for i in range(m):
        for jj in range(i + 1):
            s = g[i, jj]
            for kk in range(jj):
                s -= lmat[i, kk] * lmat[jj, kk]
            if i == jj:
                if s <= 0.0:
                    return -1
                lmat[i, i] = sqrt(s)
            else:
                lmat[i, jj] = s / lmat[jj, jj]
    return 0


cdef inline void _lower_inverse(double[:, ::1] lmat, double[:, ::1] linv,
                                Py_ssize_t m) nogil:
    cdef Py_ssize_t i, c, kk
    cdef double s
    for c in range(m):
        for i in range(m):
            linv[i, c] = 0.0
    for c in range(m):
        for i in range(c, m):
            s = 1.0 if i == c else 0.0
            for kk in range(c, i):
                s -= lmat[i, kk] * linv[kk, c]
            linv[i, c] = s / lmat[i, i]


cdef inline void _chol_solve(double[:, ::1] lmat, double[::1] b,
                             double[::1] scratch, Py_ssize_t m) nogil:
    # solves (L L^T) x = b in place of b
    cdef Py_ssize_t i, kk
    cdef double s
    for i in range(m):
        s = b[i]
        for kk in range(i):
            s -= lmat[i, kk] * scratch[kk]
        scratch[i] = s / lmat[i, i]
    for i in range(m - 1, -1, -1):
        s = scratch[i]
        for kk in range(i + 1, m):
            s -= lmat[kk, i] * b[kk]
        b[i] = s / lmat[i, i]


def fundamental_batch(val, jac, hess):
    """Induced metric, second form and frame data at a batch of jets."""
    val_c = np.ascontiguousarray(np.asarray(val, dtype=np.float64))
    jac_c = np.ascontiguousarray(np.asarray(jac, dtype=np.float64))
    hess_c = np.ascontiguousarray(np.asarray(hess, dtype=np.float64))
    cdef double[:, ::1] v = val_c
    cdef double[:, :, ::1] jc = jac_c
    cdef double[:, :, :, ::1] hs = hess_c
    cdef Py_ssize_t b = jc.shape[0], n = jc.shape[1], m = jc.shape[2]
    cdef Py_ssize_t k, i, jj, kk, a, c, nn

    g_arr = np.empty((b, m, m))
    det_arr = np.empty(b)
    chol_arr = np.zeros((b, m, m))
    e_arr = np.empty((b, n, m))
    alpha_arr = np.empty((b, n, m, m))
    aon_arr = np.empty((b, n, m, m))
    hsn_arr = np.empty(b)
    mean_arr = np.empty((b, n))
    mnorm_arr = np.empty(b)

    cdef double[:, :, ::1] g = g_arr
    cdef double[::1] det = det_arr
    cdef double[:, :, ::1] lmat = chol_arr
    cdef double[:, :, ::1] e = e_arr
    cdef double[:, :, :, ::1] alpha = alpha_arr
    cdef double[:, :, :, ::1] aon = aon_arr
    cdef double[::1] hsn = hsn_arr
    cdef double[:, ::1] mean = mean_arr
    cdef double[::1] mnorm = mnorm_arr

    linv_arr = np.empty((m, m))
    coef_arr = np.empty((m, m, m))
    cdef double[:, ::1] linv = linv_arr
    cdef double[:, :, ::1] coef = coef_arr
    cdef double s, acc
    cdef int bad = -1

    with nogil:
        for k in range(b):
            for i in range(m):
                for jj in range(m):
                    s = 0.0
                    for nn in range(n):
                        s += jc[k, nn, i] * jc[k, nn, jj]
                    g[k, i, jj] = s
            if _cholesky(g[k], lmat[k], m) != 0:
                bad = <int> k
                break
            s = 1.0
            for i in range(m):
                s *= lmat[k, i, i]
            det[k] = s * s
            _lower_inverse(lmat[k], linv, m)
            for nn in range(n):
                for a in range(m):
                    s = 0.0
                    for kk in range(m):
                        s += jc[k, nn, kk] * linv[a, kk]
                    e[k, nn, a] = s
            for a in range(m):
                for i in range(m):
                    for jj in range(m):
                        s = 0.0
                        for nn in range(n):
                            s += e[k, nn, a] * hs[k, nn, i, jj]
                        coef[a, i, jj] = s
            for nn in range(n):
                for i in range(m):
                    for jj in range(m):
                        s = hs[k, nn, i, jj]
                        for a in range(m):
                            s -= e[k, nn, a] * coef[a, i, jj]
                        alpha[k, nn, i, jj] = s
            acc = 0.0
            for nn in range(n):
                for a in range(m):
                    for c in range(m):
                        s = 0.0
                        for i in range(m):
                            for jj in range(m):
                                s += linv[a, i] * linv[c, jj] \
                                    * alpha[k, nn, i, jj]
                        aon[k, nn, a, c] = s
                        acc += s * s
            hsn[k] = sqrt(acc)
            acc = 0.0
            for nn in range(n):
                s = 0.0
                for a in range(m):
                    s += aon[k, nn, a, a]
                mean[k, nn] = s / m
                acc += mean[k, nn] * mean[k, nn]
            mnorm[k] = sqrt(acc)
    if bad >= 0:
        raise np.linalg.LinAlgError(
            f"metric not positive definite at batch index {bad}")
    return {
        "g": g_arr, "det_g": det_arr, "chol": chol_arr, "e_frame": e_arr,
        "alpha": alpha_arr, "alpha_on": aon_arr, "norm_hs": hsn_arr,
        "mean": mean_arr, "mean_norm": mnorm_arr,
    }


def radial_state_batch(val, jac, hess, center):
    """(R, psi, w, q_raw, sin_t) relative to an ambient center point."""
    val_c = np.ascontiguousarray(np.asarray(val, dtype=np.float64))
    jac_c = np.ascontiguousarray(np.asarray(jac, dtype=np.float64))
    hess_c = np.ascontiguousarray(np.asarray(hess, dtype=np.float64))
    cen_c = np.ascontiguousarray(np.asarray(center, dtype=np.float64))
    cdef double[:, ::1] v = val_c
    cdef double[:, :, ::1] jc = jac_c
    cdef double[:, :, :, ::1] hs = hess_c
    cdef double[::1] cen = cen_c
    cdef Py_ssize_t b = jc.shape[0], n = jc.shape[1], m = jc.shape[2]
    cdef Py_ssize_t k, i, jj, kk, nn

    R_arr = np.empty(b)
    psi_arr = np.empty(b)
    w_arr = np.empty((b, m))
    q_arr = np.empty(b)
    sin_arr = np.empty(b)
    cdef double[::1] R = R_arr
    cdef double[::1] psi = psi_arr
    cdef double[:, ::1] w = w_arr
    cdef double[::1] q = q_arr
    cdef double[::1] sint = sin_arr

    g_arr = np.empty((m, m))
    l_arr = np.zeros((m, m))
    rhs_arr = np.empty(m)
    scratch_arr = np.empty(m)
    eta_arr = np.empty(n)
    hww_arr = np.empty(n)
    cdef double[:, ::1] g = g_arr
    cdef double[:, ::1] lmat = l_arr
    cdef double[::1] rhs = rhs_arr
    cdef double[::1] scratch = scratch_arr
    cdef double[::1] eta = eta_arr
    cdef double[::1] hww = hww_arr
    cdef double s, rr, p2, acc
    cdef int bad = -1

    with nogil:
        for k in range(b):
            s = 0.0
            for nn in range(n):
                rr = v[k, nn] - cen[nn]
                eta[nn] = rr
                s += rr * rr
            rr = sqrt(s)
            R[k] = rr
            if rr <= 1e-300:
                psi[k] = 0.0
                q[k] = 0.0
                sint[k] = 1.0
                for i in range(m):
                    w[k, i] = 0.0
                continue
            for nn in range(n):
                eta[nn] /= rr
            for i in range(m):
                for jj in range(m):
                    s = 0.0
                    for nn in range(n):
                        s += jc[k, nn, i] * jc[k, nn, jj]
                    g[i, jj] = s
            if _cholesky(g, lmat, m) != 0:
                bad = <int> k
                break
            for i in range(m):
                s = 0.0
                for nn in range(n):
                    s += jc[k, nn, i] * eta[nn]
                rhs[i] = s
            # w = g^-1 rhs; psi^2 = w . rhs
            for i in range(m):
                w[k, i] = rhs[i]
            _chol_solve(lmat, w[k], scratch, m)
            p2 = 0.0
            for i in range(m):
                p2 += w[k, i] * rhs[i]
            if p2 < 0.0:
                p2 = 0.0
            if p2 > 1.0:
                p2 = 1.0
            psi[k] = sqrt(p2)
            # sin(theta) from the normal residual of eta
            acc = 0.0
            for nn in range(n):
                s = eta[nn]
                for i in range(m):
                    s -= jc[k, nn, i] * w[k, i]
                acc += s * s
            s = sqrt(acc)
            sint[k] = s if s < 1.0 else 1.0
            # q_raw = <normal part of hess(w, w), eta>
            for nn in range(n):
                s = 0.0
                for i in range(m):
                    for jj in range(m):
                        s += hs[k, nn, i, jj] * w[k, i] * w[k, jj]
                hww[nn] = s
            for i in range(m):
                s = 0.0
                for nn in range(n):
                    s += jc[k, nn, i] * hww[nn]
                rhs[i] = s
            _chol_solve(lmat, rhs, scratch, m)
            acc = 0.0
            for nn in range(n):
                s = hww[nn]
                for i in range(m):
                    s -= jc[k, nn, i] * rhs[i]
                acc += s * eta[nn]
            q[k] = acc
    if bad >= 0:
        raise np.linalg.LinAlgError(
            f"metric not positive definite at batch index {bad}")
    return R_arr, psi_arr, w_arr, q_arr, sin_arr


def surface_fundamental(code, params, U):
    val, jac, hess = jet_batch(code, params, U)
    return fundamental_batch(val, jac, hess)


def surface_radial_state(code, params, center, U):
    val, jac, hess = jet_batch(code, params, U)
    return radial_state_batch(val, jac, hess, center)
