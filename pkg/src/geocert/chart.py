"""Axis-aligned chart boxes with optional periodic coordinates."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import OutOfChart


@dataclass(frozen=True)
class Box:
    """Open axis-aligned box in R^m, possibly unbounded, with periodic flags.

    A periodic coordinate identifies ``lo`` with ``hi``; all chart
    arithmetic (containment, deltas, wrapping) respects the identification.
    """

    lo: tuple
    hi: tuple
    periodic: tuple = field(default=None)

    def __post_init__(self):
        m = len(self.lo)
        if len(self.hi) != m:
            raise ValueError("lo/hi dimension mismatch")
        if self.periodic is None:
            object.__setattr__(self, "periodic", (False,) * m)
        for i, per in enumerate(self.periodic):
            if per and not (np.isfinite(self.lo[i]) and np.isfinite(self.hi[i])):
                raise ValueError("periodic coordinate needs finite bounds")

    @property
    def dim(self) -> int:
        return len(self.lo)

    def period(self, i: int) -> float:
        return self.hi[i] - self.lo[i]

    def wrap(self, u):
        """Map points into the fundamental domain of periodic coordinates."""
        arr = np.asarray(u, dtype=float)
        single = arr.ndim == 1
        out = np.atleast_2d(arr).copy()
        for i, per in enumerate(self.periodic):
            if per:
                p = self.period(i)
                out[:, i] = self.lo[i] + np.mod(out[:, i] - self.lo[i], p)
        return out[0] if single else out

    def contains(self, u, margin: float = 0.0) -> bool:
        u = np.asarray(u, dtype=float)
        for i, per in enumerate(self.periodic):
            if per:
                continue
            if not (self.lo[i] + margin < u[i] < self.hi[i] - margin):
                return False
        return True

    def require(self, u):
        if not self.contains(u):
            raise OutOfChart(f"chart point {np.asarray(u)} outside {self}")

    def delta(self, a, b):
        """Shortest displacement b - a, accounting for periodic wrap."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        d = b - a
        for i, per in enumerate(self.periodic):
            if per:
                p = self.period(i)
                d[..., i] = (d[..., i] + 0.5 * p) % p - 0.5 * p
        return d

    def boundary_margin(self, u) -> float:
        """Distance (in chart coordinates) to the nearest non-periodic wall."""
        u = np.asarray(u, dtype=float)
        m = np.inf
        for i, per in enumerate(self.periodic):
            if per:
                continue
            if np.isfinite(self.lo[i]):
                m = min(m, u[i] - self.lo[i])
            if np.isfinite(self.hi[i]):
                m = min(m, self.hi[i] - u[i])
        return m


def axis_nodes(lo: float, hi: float, count: int, grading: str = "uniform",
               origin: float = 0.0, base: float = 1.0) -> np.ndarray:
    """Node positions along one chart axis.

    ``uniform``       equally spaced.
    ``geometric``     spacing grows geometrically away from ``lo``; suited to
                      radial coordinates whose metric stretches with distance.
    ``sym-geometric`` geometric growth away from ``origin`` in both
                      directions (origin inserted as a node).
    """
    if count < 2:
        raise ValueError("need at least two nodes per axis")
    if grading == "uniform":
        return np.linspace(lo, hi, count)
    if grading == "geometric":
        span = hi - lo
        t = np.linspace(0.0, 1.0, count)
        w = (np.exp(base * t) - 1.0) / (np.exp(base) - 1.0)
        return lo + span * w
    if grading == "sym-geometric":
        half = (count + 1) // 2
        right = axis_nodes(origin, hi, half, "geometric", base=base)
        left = origin - (axis_nodes(origin, origin + (origin - lo), half,
                                    "geometric", base=base) - origin)
        return np.unique(np.concatenate([left[::-1], right]))
    raise ValueError(f"unknown grading {grading!r}")
