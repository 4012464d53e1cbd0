"""Pontryagin conditions for the periodic speed-trajectory problem.

The augmented state is always ordered ``(x1, x2, lambda1, lambda2)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .ode import Trajectory
from .vehicle_model import (
    BsfcParams,
    VehicleParams,
    fuel_partials,
    fuel_rate,
    state_derivative,
)

__all__ = [
    "Weights",
    "AugmentedState",
    "BoundaryResiduals",
    "optimal_input",
    "running_cost",
    "hamiltonian",
    "costate_derivative",
    "pmp_flow",
    "boundary_residuals",
    "time_average",
]

_P = VehicleParams()
_B = BsfcParams()


@dataclass(frozen=True)
class Weights:
    """Speed weight C (g/m) and jerk weight R on u^2."""

    c: float
    r: float

    def __post_init__(self):
        if not self.r >= 0:
            raise ValueError(f"jerk weight must be non-negative, got {self.r}")


class AugmentedState(NamedTuple):
    x1: float
    x2: float
    lambda1: float
    lambda2: float


class BoundaryResiduals(NamedTuple):
    r_x1: float
    r_x2: float
    r_l1: float
    r_l2: float
    r_trans: float

    def max_abs(self) -> float:
        return max(abs(v) for v in self)


def optimal_input(lambda2, r):
    """Minimizer of the Hamiltonian over u: ``-lambda2 / R``."""
    if not r > 0:
        raise ValueError(f"optimal input needs R > 0, got {r}")
    return -lambda2 / r


def running_cost(x1, x2, u, w: Weights, b: BsfcParams = _B):
    """Integrand of the cost: fuel rate minus speed reward plus jerk penalty."""
    return fuel_rate(x1 * x2, b) - w.c * x1 + 0.5 * w.r * u * u


def hamiltonian(a, u, w: Weights, p: VehicleParams = _P, b: BsfcParams = _B):
    x1, x2, l1, l2 = a
    dx1, _ = state_derivative(x1, x2, u, p)
    return running_cost(x1, x2, u, w, b) + l1 * dx1 + l2 * u


def costate_derivative(a, w: Weights, p: VehicleParams = _P, b: BsfcParams = _B):
    """``-dH/dx`` for both states, returned as ``(dlambda1, dlambda2)``."""
    x1, x2, l1, l2 = a
    fp = fuel_partials(x1, x2, b)
    dl1 = -fp.d1 + w.c + (p.drag_factor * x1 / p.mass) * l1
    dl2 = -fp.d2 - l1 / p.mass
    return dl1, dl2


def pmp_flow(a, w: Weights, p: VehicleParams = _P, b: BsfcParams = _B) -> np.ndarray:
    """State and co-state dynamics with the optimal input substituted."""
    x1, x2, l1, l2 = a
    u = optimal_input(l2, w.r)
    dx1, dx2 = state_derivative(x1, x2, u, p)
    dl1, dl2 = costate_derivative(a, w, p, b)
    return np.array([dx1, dx2, dl1, dl2], dtype=float)


def time_average(values, t) -> float:
    """Trapezoid mean of samples over ``[t[0], t[-1]]``."""
    values = np.asarray(values, dtype=float)
    t = np.asarray(t, dtype=float)
    return float(np.trapezoid(values, t) / (t[-1] - t[0]))


def boundary_residuals(
    traj: Trajectory, w: Weights, p: VehicleParams = _P, b: BsfcParams = _B
) -> BoundaryResiduals:
    """Periodicity gaps and the transversality residual ``H(T) - J`` of an extremal.

    ``traj`` holds augmented states over one period; the input along it is the
    optimal one, ``-lambda2/R``.
    """
    if len(traj) < 3:
        raise ValueError("need at least 3 samples to evaluate boundary residuals")
    if traj.dim != 4:
        raise ValueError("boundary residuals need an augmented (4-component) trajectory")
    rows = traj.rows
    x1, x2, l2 = rows[:, 0], rows[:, 1], rows[:, 3]
    u = optimal_input(l2, w.r)
    j = time_average(running_cost(x1, x2, u, w, b), traj.t)
    h_end = hamiltonian(rows[-1], u[-1], w, p, b)
    gaps = rows[-1] - rows[0]
    return BoundaryResiduals(*(float(g) for g in gaps), float(h_end - j))
