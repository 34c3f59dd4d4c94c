"""Adaptive embedded Runge-Kutta stepping (Cash-Karp 5(4)).

One shared integrator drives both geodesic shooting and the radial flow;
it records every accepted step so callers can attach diagnostics.
"""

from __future__ import annotations

import numpy as np

_C = np.array([0.0, 1 / 5, 3 / 10, 3 / 5, 1.0, 7 / 8])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([3 / 10, -9 / 10, 6 / 5]),
    np.array([-11 / 54, 5 / 2, -70 / 27, 35 / 27]),
    np.array([1631 / 55296, 175 / 512, 575 / 13824, 44275 / 110592, 253 / 4096]),
]
_B5 = np.array([37 / 378, 0.0, 250 / 621, 125 / 594, 0.0, 512 / 1771])
_B4 = np.array([2825 / 27648, 0.0, 18575 / 48384, 13525 / 55296, 277 / 14336, 1 / 4])
_ERR = _B5 - _B4

STATUS_DONE = "done"
STATUS_HALT = "halt"
STATUS_STIFF = "step_underflow"


def _single_step(rhs, t, y, h):
    k = np.empty((6, y.size))
    k[0] = rhs(t, y)
    for i in range(1, 6):
        k[i] = rhs(t + _C[i] * h, y + h * (k[:i].T @ _A[i]))
    return y + h * (k.T @ _B5)


def _localize_halt(rhs, t, y, h, halt, min_step, ts, ys):
    """March with halved sub-steps to land on the first triggering state."""
    h_sub = h
    last_trig = None
    for _ in range(40):
        y_try = _single_step(rhs, t, y, h_sub)
        code = halt(t + h_sub, y_try)
        if code:
            last_trig = (t + h_sub, y_try, code)
            h_sub *= 0.5
            if h_sub < max(min_step, 1e-10 * max(1.0, abs(t))):
                break
        else:
            t, y = t + h_sub, y_try
            ts.append(t)
            ys.append(y.copy())
            if last_trig is None:
                break
            last_trig = None
    if last_trig is None:
        return t, y, None
    tt, yy, code = last_trig
    ts.append(tt)
    ys.append(yy.copy())
    return tt, yy, code


def integrate(rhs, t0: float, y0, t_end: float, rtol: float, atol: float,
              max_step: float = np.inf, first_step: float | None = None,
              halt=None, min_step: float = 1e-13, max_steps: int = 2_000_000):
    """Integrate y' = rhs(t, y) from t0 to t_end with local error control.

    ``halt(t, y)`` is evaluated after each accepted step; a truthy return
    stops integration.  The crossing is localized by sub-stepping and the
    first triggering state is kept as the final sample.

    Returns ``(ts, ys, status, halt_code)``.
    """
    y = np.asarray(y0, dtype=float).copy()
    t = float(t0)
    ts = [t]
    ys = [y.copy()]
    span = t_end - t0
    h = first_step if first_step is not None else span / 100.0
    h = max(min(h, max_step, span), min_step)
    k = np.empty((6, y.size))
    halt_code = None
    status = STATUS_DONE

    for _ in range(max_steps):
        if t >= t_end - 1e-14 * max(1.0, abs(t_end)):
            break
        h = min(h, t_end - t, max_step)
        if h < min_step:
            status = STATUS_STIFF
            break

        k[0] = rhs(t, y)
        bad = False
        for i in range(1, 6):
            ki = rhs(t + _C[i] * h, y + h * (k[:i].T @ _A[i]))
            if not np.all(np.isfinite(ki)):
                bad = True
                break
            k[i] = ki
        if bad:
            h *= 0.25
            continue

        y_new = y + h * (k.T @ _B5)
        err_vec = h * (k.T @ _ERR)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = float(np.sqrt(np.mean((err_vec / scale) ** 2)))

        if err <= 1.0 or h <= 4 * min_step:
            code = halt(t + h, y_new) if halt is not None else None
            if code:
                t, y, final = _localize_halt(rhs, t, y, h, halt, min_step, ts, ys)
                if final:
                    halt_code = final
                    status = STATUS_HALT
                    break
                h = max(min_step, 0.25 * h)
                continue
            t = t + h
            y = y_new
            ts.append(t)
            ys.append(y.copy())

        factor = 0.9 * err ** -0.2 if err > 0 else 5.0
        h = h * min(5.0, max(0.2, factor))

    return np.asarray(ts), np.asarray(ys), status, halt_code
