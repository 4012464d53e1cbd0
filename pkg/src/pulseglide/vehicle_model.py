"""Longitudinal vehicle dynamics and the quadratic-BSFC fuel model.

States are the vehicle speed ``x1`` (m/s) and the propulsive force ``x2`` (N);
the input ``u`` is the rate of change of force (N/s), a jerk proxy.  Fuel rate
is ``P * beta(P)`` with engine power ``P = x1 * x2`` and a BSFC that is
quadratic in power.  Fuel mass is in grams, so ``beta`` is in g/J and the fuel
rate in g/s.

All functions accept scalars or numpy arrays.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Mapping, NamedTuple

__all__ = [
    "VehicleParams",
    "BsfcParams",
    "State",
    "FuelPartials",
    "Equilibrium",
    "ConfigError",
    "power",
    "bsfc",
    "fuel_rate",
    "fuel_rate_dp",
    "fuel_rate_dpp",
    "fuel_partials",
    "state_derivative",
    "equilibrium_for_speed",
    "equilibrium_force",
    "steady_cost",
    "convexity_speed",
    "load_params",
    "params_from_dict",
    "params_to_dict",
]


class ConfigError(ValueError):
    """Bad parameter document (unknown key, non-positive value, ...)."""


@dataclass(frozen=True)
class VehicleParams:
    mass: float = 1605.0  # kg
    air_density: float = 1.2  # kg/m^3
    frontal_area: float = 2.0  # m^2
    drag_coeff: float = 0.33
    rolling_friction: float = 0.009
    gravity: float = 9.81  # m/s^2

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ConfigError(f"vehicle parameter {f.name!r} must be positive, got {v!r}")

    @property
    def drag_factor(self) -> float:
        """rho * C_d * A_f; the drag force is half this times v^2."""
        return self.air_density * self.drag_coeff * self.frontal_area

    @property
    def rolling_force(self) -> float:
        return self.rolling_friction * self.mass * self.gravity


@dataclass(frozen=True)
class BsfcParams:
    beta0: float = 6.5e-5  # g/J
    gamma: float = 1.1e-13  # g/(J W^2)
    p0: float = 30000.0  # W

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ConfigError(f"bsfc parameter {f.name!r} must be positive, got {v!r}")


class State(NamedTuple):
    x1: float  # speed, m/s
    x2: float  # propulsive force, N


class FuelPartials(NamedTuple):
    d1: float  # d mdot / d x1
    d2: float  # d mdot / d x2
    h11: float
    h12: float
    h22: float


@dataclass(frozen=True)
class Equilibrium:
    v: float
    force: float
    lambda1: float
    lambda2: float
    weight_c: float
    power: float

    def as_dict(self) -> dict:
        return {
            "v_mps": self.v,
            "x2_0_N": self.force,
            "lambda1_0": self.lambda1,
            "lambda2_0": self.lambda2,
            "weight_c_g_per_m": self.weight_c,
            "power_W": self.power,
        }


_DEFAULT_VEHICLE = VehicleParams()
_DEFAULT_BSFC = BsfcParams()


def power(x1, x2):
    return x1 * x2


def bsfc(P, b: BsfcParams = _DEFAULT_BSFC):
    return b.beta0 + 0.5 * b.gamma * (P - b.p0) ** 2


def fuel_rate(P, b: BsfcParams = _DEFAULT_BSFC):
    return P * bsfc(P, b)


def fuel_rate_dp(P, b: BsfcParams = _DEFAULT_BSFC):
    """d(mdot)/dP."""
    return b.beta0 + 0.5 * b.gamma * (P - b.p0) ** 2 + b.gamma * P * (P - b.p0)


def fuel_rate_dpp(P, b: BsfcParams = _DEFAULT_BSFC):
    """d^2(mdot)/dP^2; negative (concave fuel map) below 2*p0/3."""
    return b.gamma * (3.0 * P - 2.0 * b.p0)


def fuel_partials(x1, x2, b: BsfcParams = _DEFAULT_BSFC) -> FuelPartials:
    P = x1 * x2
    m1 = fuel_rate_dp(P, b)
    m2 = fuel_rate_dpp(P, b)
    return FuelPartials(
        d1=x2 * m1,
        d2=x1 * m1,
        h11=x2 * x2 * m2,
        h12=m1 + P * m2,
        h22=x1 * x1 * m2,
    )


def state_derivative(x1, x2, u, p: VehicleParams = _DEFAULT_VEHICLE):
    """Right-hand side of the vehicle model, ``(dx1/dt, dx2/dt)``.

    Rolling friction does not vanish at standstill, so the model is only
    meaningful for ``x1 > 0``; nothing is clamped here.
    """
    dx1 = (x2 - 0.5 * p.drag_factor * x1 * x1 - p.rolling_force) / p.mass
    return dx1, u


def equilibrium_force(v, p: VehicleParams = _DEFAULT_VEHICLE):
    """Force that holds speed ``v`` steady (drag plus rolling resistance)."""
    return 0.5 * p.drag_factor * v * v + p.rolling_force


def equilibrium_for_speed(
    v: float, p: VehicleParams = _DEFAULT_VEHICLE, b: BsfcParams = _DEFAULT_BSFC
) -> Equilibrium:
    """Steady cruise at speed ``v`` and the speed weight C that makes it stationary.

    The co-states follow from zeroing the adjoint equations with ``lambda2 = 0``.
    """
    if not v > 0:
        raise ValueError(f"nominal speed must be positive, got {v}")
    x2 = equilibrium_force(v, p)
    fp = fuel_partials(v, x2, b)
    return Equilibrium(
        v=float(v),
        force=float(x2),
        lambda1=float(-p.mass * fp.d2),
        lambda2=0.0,
        weight_c=float(fp.d1 + fp.d2 * p.drag_factor * v),
        power=float(v * x2),
    )


def steady_cost(
    v: float,
    c: float | None = None,
    p: VehicleParams = _DEFAULT_VEHICLE,
    b: BsfcParams = _DEFAULT_BSFC,
) -> float:
    """Cost of cruising at constant ``v`` (u = 0); C defaults to the equilibrium weight."""
    eq = equilibrium_for_speed(v, p, b)
    if c is None:
        c = eq.weight_c
    return float(fuel_rate(eq.power, b) - c * v)


def convexity_speed(
    p: VehicleParams = _DEFAULT_VEHICLE,
    b: BsfcParams = _DEFAULT_BSFC,
    target_power: float | None = None,
) -> float:
    """Speed at which steady cruise power reaches ``target_power`` (default 2*p0/3).

    Solves 0.5*rho*Cd*A*v^3 + mu*M*g*v = target by bracketed root finding;
    cruise power is strictly increasing in v.
    """
    from scipy.optimize import brentq

    if target_power is None:
        target_power = 2.0 * b.p0 / 3.0

    def gap(v):
        return v * equilibrium_force(v, p) - target_power

    hi = 1.0
    while gap(hi) < 0:
        hi *= 2.0
    return float(brentq(gap, 0.0, hi, xtol=1e-12, rtol=1e-14))


# -- parameter documents ------------------------------------------------------

_VEHICLE_KEYS = {
    "mass_kg": "mass",
    "air_density_kg_m3": "air_density",
    "frontal_area_m2": "frontal_area",
    "drag_coefficient": "drag_coeff",
    "rolling_friction": "rolling_friction",
    "gravity_m_s2": "gravity",
}
_BSFC_KEYS = {
    "beta0_g_per_J": "beta0",
    "gamma_g_per_J_W2": "gamma",
    "p0_W": "p0",
}


def _section(doc: Mapping[str, Any], name: str, keymap: dict) -> dict:
    sec = doc.get(name, {})
    if not isinstance(sec, Mapping):
        raise ConfigError(f"section {name!r} must be an object")
    out = {}
    for key, value in sec.items():
        if key not in keymap:
            raise ConfigError(f"unknown key {name}.{key!r}")
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{name}.{key} must be a number")
        out[keymap[key]] = float(value)
    return out


def params_from_dict(doc: Mapping[str, Any]) -> tuple[VehicleParams, BsfcParams]:
    """Build parameters from a config document; absent keys keep defaults."""
    if not isinstance(doc, Mapping):
        raise ConfigError("config document must be a JSON object")
    for key in doc:
        if key not in ("vehicle", "bsfc"):
            raise ConfigError(f"unknown key {key!r}")
    return (
        VehicleParams(**_section(doc, "vehicle", _VEHICLE_KEYS)),
        BsfcParams(**_section(doc, "bsfc", _BSFC_KEYS)),
    )


def params_to_dict(p: VehicleParams, b: BsfcParams) -> dict:
    return {
        "vehicle": {k: getattr(p, attr) for k, attr in _VEHICLE_KEYS.items()},
        "bsfc": {k: getattr(b, attr) for k, attr in _BSFC_KEYS.items()},
    }


def load_params(path: str | Path | None = None) -> tuple[VehicleParams, BsfcParams]:
    if path is None:
        return VehicleParams(), BsfcParams()
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return params_from_dict(doc)
