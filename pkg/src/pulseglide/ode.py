"""Fixed-step classical Runge-Kutta integration."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from numba import njit

__all__ = ["Trajectory", "IntegrationError", "integrate_rk4", "rk4_vehicle_sampled"]


class IntegrationError(ArithmeticError):
    """A non-finite value appeared during integration."""

    def __init__(self, time: float, message: str | None = None):
        self.time = float(time)
        super().__init__(message or f"non-finite state at t = {self.time:.6g} s")


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Samples ``rows[i]`` at times ``t[i]`` on a uniform grid, endpoints included."""

    t: np.ndarray
    rows: np.ndarray

    def __post_init__(self):
        if self.t.ndim != 1 or self.rows.ndim != 2 or len(self.t) != len(self.rows):
            raise ValueError("t must be 1-D and rows 2-D with matching length")

    @property
    def dim(self) -> int:
        return self.rows.shape[1]

    @property
    def duration(self) -> float:
        return float(self.t[-1] - self.t[0])

    def __len__(self) -> int:
        return len(self.t)


def _time_grid(t0: float, t_end: float, steps: int) -> np.ndarray:
    # integer-indexed so the last sample is exactly t_end
    t = t0 + np.arange(steps + 1) * ((t_end - t0) / steps)
    t[-1] = t_end
    return t


def integrate_rk4(
    flow: Callable[[float, np.ndarray], np.ndarray],
    y0,
    t_end: float,
    steps: int,
    t0: float = 0.0,
) -> Trajectory:
    """Integrate ``dy/dt = flow(t, y)`` from ``t0`` to ``t_end`` in ``steps`` RK4 steps."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if not t_end > t0:
        raise ValueError("t_end must exceed t0")
    y = np.array(y0, dtype=float).reshape(-1)
    h = (t_end - t0) / steps
    t = _time_grid(t0, t_end, steps)
    rows = np.empty((steps + 1, y.size))
    rows[0] = y
    if not np.all(np.isfinite(y)):
        raise IntegrationError(t0)
    for i in range(steps):
        ti = t0 + i * h
        k1 = np.asarray(flow(ti, y), dtype=float)
        k2 = np.asarray(flow(ti + 0.5 * h, y + 0.5 * h * k1), dtype=float)
        k3 = np.asarray(flow(ti + 0.5 * h, y + 0.5 * h * k2), dtype=float)
        k4 = np.asarray(flow(ti + h, y + h * k3), dtype=float)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(y)):
            raise IntegrationError(t[i + 1])
        rows[i + 1] = y
    return Trajectory(t, rows)


@njit(cache=True)
def _vehicle_kernel(x1, x2, h, u_half, mass, drag_half, rolling):
    n = (u_half.shape[0] - 1) // 2
    out = np.empty((n + 1, 2))
    out[0, 0] = x1
    out[0, 1] = x2
    for i in range(n):
        u0 = u_half[2 * i]
        um = u_half[2 * i + 1]
        u1 = u_half[2 * i + 2]
        k1 = (x2 - drag_half * x1 * x1 - rolling) / mass
        xa = x1 + 0.5 * h * k1
        xb = x2 + 0.5 * h * u0
        k2 = (xb - drag_half * xa * xa - rolling) / mass
        xa = x1 + 0.5 * h * k2
        xb = x2 + 0.5 * h * um
        k3 = (xb - drag_half * xa * xa - rolling) / mass
        xa = x1 + h * k3
        xb = x2 + h * um
        k4 = (xb - drag_half * xa * xa - rolling) / mass
        x1 = x1 + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        x2 = x2 + (h / 6.0) * (u0 + 2.0 * um + 2.0 * um + u1)
        out[i + 1, 0] = x1
        out[i + 1, 1] = x2
    return out


def rk4_vehicle_sampled(x1_0, x2_0, t_end, u_half, p) -> Trajectory:
    """RK4 on the two-state vehicle model with the input pre-sampled.

    ``u_half`` holds the input at every half step, ``2*steps + 1`` values with
    ``u_half[2*i]`` at ``t_i``.  Same scheme as :func:`integrate_rk4` applied to
    ``state_derivative``, compiled for the optimizer's inner loop.
    """
    u_half = np.ascontiguousarray(u_half, dtype=float)
    if u_half.ndim != 1 or u_half.size < 3 or u_half.size % 2 == 0:
        raise ValueError("u_half must have 2*steps + 1 samples")
    steps = (u_half.size - 1) // 2
    h = t_end / steps
    rows = _vehicle_kernel(
        float(x1_0), float(x2_0), h, u_half, p.mass, 0.5 * p.drag_factor, p.rolling_force
    )
    t = _time_grid(0.0, t_end, steps)
    if not np.all(np.isfinite(rows)):
        bad = int(np.argmax(~np.all(np.isfinite(rows), axis=1)))
        raise IntegrationError(t[bad])
    return Trajectory(t, rows)
