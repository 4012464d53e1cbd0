"""Direct optimization of periodic speed trajectories.

The jerk input is a truncated Fourier series with fundamental ``omega``; one
period ``T = 2*pi/omega`` of the vehicle model is simulated from a free initial
state and the time-averaged cost is minimized.  Periodicity of the states and
``x2 >= 0`` enter as quadratic penalties whose weight is raised in stages;
each stage is a Nelder-Mead search restarted from its own best point until it
stops improving.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.optimize import brentq, minimize

from .ode import IntegrationError, Trajectory, rk4_vehicle_sampled
from .pmp import Weights
from .vehicle_model import BsfcParams, VehicleParams, fuel_rate

__all__ = [
    "FourierInput",
    "DecisionVector",
    "EvaluationResult",
    "OptimizeOptions",
    "StageRecord",
    "OptimizationResult",
    "input_signal",
    "evaluate",
    "merit",
    "restore_periodicity",
    "optimize",
    "continuation",
]

log = logging.getLogger(__name__)

_P = VehicleParams()
_B = BsfcParams()

# absolute floors of the initial simplex: speed, force, frequency, coefficients
_SIMPLEX_FLOORS = (0.1, 1.0, 0.005, 0.5)


@dataclass(frozen=True)
class FourierInput:
    omega: float
    a: tuple[float, ...]
    b: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(float(x) for x in self.a))
        object.__setattr__(self, "b", tuple(float(x) for x in self.b))
        if not self.omega > 0:
            raise ValueError(f"omega must be positive, got {self.omega}")
        if len(self.a) != len(self.b) or not self.a:
            raise ValueError("a and b need the same, non-zero number of harmonics")

    @property
    def harmonics(self) -> int:
        return len(self.a)

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.omega

    def extended(self, k: int) -> "FourierInput":
        """Same signal with zero coefficients appended up to ``k`` harmonics."""
        pad = (0.0,) * (k - self.harmonics)
        return FourierInput(self.omega, self.a + pad, self.b + pad)


@dataclass(frozen=True)
class DecisionVector:
    x1_0: float
    x2_0: float
    input: FourierInput

    def to_array(self) -> np.ndarray:
        f = self.input
        return np.array([self.x1_0, self.x2_0, f.omega, *f.a, *f.b], dtype=float)

    @classmethod
    def from_array(cls, z) -> "DecisionVector":
        z = [float(v) for v in z]
        k = (len(z) - 3) // 2
        return cls(z[0], z[1], FourierInput(z[2], z[3 : 3 + k], z[3 + k :]))

    def as_dict(self) -> dict:
        f = self.input
        return {
            "x1_0": self.x1_0,
            "x2_0": self.x2_0,
            "omega": f.omega,
            "a": list(f.a),
            "b": list(f.b),
        }

    @classmethod
    def from_dict(cls, doc) -> "DecisionVector":
        known = {"x1_0", "x2_0", "omega", "a", "b"}
        for key in doc:
            if key not in known:
                raise ValueError(f"unknown key {key!r} in decision document")
        return cls(
            float(doc["x1_0"]),
            float(doc["x2_0"]),
            FourierInput(float(doc["omega"]), doc["a"], doc["b"]),
        )


@dataclass(frozen=True, eq=False)
class EvaluationResult:
    j_total: float
    fuel_term: float
    speed_term: float
    jerk_term: float
    r_x1: float
    r_x2: float
    min_x2: float
    min_x1: float
    trajectory: Trajectory
    u: np.ndarray

    def cost_dict(self) -> dict:
        return {
            "J": self.j_total,
            "fuel_term": self.fuel_term,
            "speed_term": self.speed_term,
            "jerk_term": self.jerk_term,
        }


@dataclass(frozen=True)
class OptimizeOptions:
    penalties: tuple[float, ...] = (1e2, 1e3, 1e4, 1e5)
    # grid of the reported result, and the coarser grid the search runs on
    steps: int = 4096
    search_steps: int = 1024
    max_restarts: int = 4
    # merit improvement per restart below which a stage is considered done
    restart_tol: float = 1e-8
    maxfev_per_dim: int = 1500
    # Nelder-Mead tolerances, in units of the initial simplex size
    xatol: float = 1e-5
    fatol: float = 1e-12
    omega_bounds: tuple[float, float] = (1e-3, 1.0)
    restore: bool = True
    tol_x1: float = 1e-3
    tol_x2: float = 1e-2
    tol_min_x2: float = 1e-3


@dataclass(frozen=True)
class StageRecord:
    penalty: float
    merit: float
    nfev: int
    nit: int
    restarts: int
    trace: tuple[float, ...] = field(repr=False)


@dataclass(frozen=True, eq=False)
class OptimizationResult:
    decision: DecisionVector
    eval: EvaluationResult
    iterations: int
    converged: bool
    penalty_history: tuple[StageRecord, ...]

    @property
    def j(self) -> float:
        return self.eval.j_total


def input_signal(f: FourierInput, t):
    t = np.asarray(t, dtype=float)
    u = np.zeros_like(t)
    for k, (ak, bk) in enumerate(zip(f.a, f.b), start=1):
        wt = k * f.omega * t
        u = u + ak * np.sin(wt) + bk * np.cos(wt)
    return u if u.ndim else float(u)


@lru_cache(maxsize=32)
def _harmonic_tables(steps: int, k: int) -> tuple[np.ndarray, np.ndarray]:
    # On the half-step grid of one period the phases are pi*j*k/steps,
    # whatever omega is.
    phase = np.pi * np.outer(np.arange(2 * steps + 1), np.arange(1, k + 1)) / steps
    sin, cos = np.sin(phase), np.cos(phase)
    sin.setflags(write=False)
    cos.setflags(write=False)
    return sin, cos


def _half_step_input(f: FourierInput, steps: int) -> np.ndarray:
    sin, cos = _harmonic_tables(steps, f.harmonics)
    return sin @ np.asarray(f.a) + cos @ np.asarray(f.b)


def evaluate(
    d: DecisionVector,
    w: Weights,
    p: VehicleParams = _P,
    b: BsfcParams = _B,
    steps: int = 4096,
) -> EvaluationResult:
    """Simulate one period from ``d`` and break the averaged cost into its terms.

    Raises IntegrationError if the simulation blows up.
    """
    if steps < 16:
        raise ValueError("steps must be >= 16")
    u_half = _half_step_input(d.input, steps)
    traj = rk4_vehicle_sampled(d.x1_0, d.x2_0, d.input.period, u_half, p)
    x1, x2 = traj.rows[:, 0], traj.rows[:, 1]
    u = u_half[::2]

    def avg(v):
        return float(np.trapezoid(v) / steps)

    fuel = avg(fuel_rate(x1 * x2, b))
    speed = -w.c * avg(x1)
    jerk = avg(0.5 * w.r * u * u)
    total = fuel + speed + jerk
    if not math.isfinite(total):
        raise IntegrationError(traj.t[-1], "non-finite cost")
    return EvaluationResult(
        j_total=total,
        fuel_term=fuel,
        speed_term=speed,
        jerk_term=jerk,
        r_x1=float(x1[-1] - x1[0]),
        r_x2=float(x2[-1] - x2[0]),
        min_x2=float(x2.min()),
        min_x1=float(x1.min()),
        trajectory=traj,
        u=u,
    )


def _refined_min(x: np.ndarray) -> float:
    """Grid minimum sharpened by parabolas through every interior local minimum.

    A trajectory riding the ``x2 = 0`` boundary has several near-equal dips,
    any of which may dip lowest between grid points.
    """
    lo, mid, hi = x[:-2], x[1:-1], x[2:]
    curv = lo - 2.0 * mid + hi
    dips = (mid <= lo) & (mid <= hi) & (curv > 0)
    best = float(x.min())
    if np.any(dips):
        vertex = mid[dips] - (hi[dips] - lo[dips]) ** 2 / (8.0 * curv[dips])
        best = min(best, float(vertex.min()))
    return best


def merit(
    z,
    penalty: float,
    w: Weights,
    p: VehicleParams = _P,
    b: BsfcParams = _B,
    opts: OptimizeOptions = OptimizeOptions(),
) -> float:
    """Penalized cost of a flat decision array; ``inf`` outside the search domain."""
    lo, hi = opts.omega_bounds
    if not (lo <= z[2] <= hi) or not z[0] > 0:
        return math.inf
    try:
        ev = evaluate(DecisionVector.from_array(z), w, p, b, opts.search_steps)
    except (IntegrationError, ValueError):
        return math.inf
    if ev.min_x1 <= 0:
        return math.inf
    gap = max(0.0, -_refined_min(ev.trajectory.rows[:, 1]))
    return ev.j_total + penalty * (ev.r_x1**2 + ev.r_x2**2) + penalty * gap * gap


def restore_periodicity(
    d: DecisionVector,
    w: Weights,
    p: VehicleParams = _P,
    b: BsfcParams = _B,
    steps: int = 4096,
) -> DecisionVector:
    """Shift the initial speed so the speed returns to itself after one period.

    Only ``x1_0`` moves.  Returns ``d`` unchanged when no sign change of the
    speed gap is found near it.
    """

    def gap(x1):
        try:
            return evaluate(replace(d, x1_0=float(x1)), w, p, b, steps).r_x1
        except IntegrationError:
            return math.nan

    g0 = gap(d.x1_0)
    if not math.isfinite(g0) or g0 == 0.0:
        return d
    # walk outward from x1_0 until the gap changes sign
    for factor in (1.05, 1.1, 1.2, 1.4, 1.7, 2.0, 3.0):
        for cand in (d.x1_0 / factor, d.x1_0 * factor):
            gc = gap(cand)
            if math.isfinite(gc) and gc * g0 < 0:
                lo, hi = sorted((d.x1_0, cand))
                x1 = brentq(gap, lo, hi, xtol=1e-12, rtol=1e-12)
                return replace(d, x1_0=float(x1))
    return d


def _simplex_scale(z: np.ndarray) -> np.ndarray:
    floors = np.array(
        [_SIMPLEX_FLOORS[0], _SIMPLEX_FLOORS[1], _SIMPLEX_FLOORS[2]]
        + [_SIMPLEX_FLOORS[3]] * (len(z) - 3)
    )
    return np.maximum(0.05 * np.abs(z), floors)


def _run_stage(z, penalty, w, p, b, opts) -> tuple[np.ndarray, StageRecord]:
    best = merit(z, penalty, w, p, b, opts)
    trace = [best]
    nfev = nit = 0
    n = len(z)
    for restart in range(opts.max_restarts):
        scale = _simplex_scale(z)
        origin = z.copy()

        def f(y):
            return merit(origin + y * scale, penalty, w, p, b, opts)

        def record(intermediate_result):
            trace.append(float(intermediate_result.fun))

        res = minimize(
            f,
            np.zeros(n),
            method="Nelder-Mead",
            callback=record,
            options={
                "initial_simplex": np.vstack([np.zeros(n), np.eye(n)]),
                "maxfev": opts.maxfev_per_dim * n,
                "xatol": opts.xatol,
                "fatol": opts.fatol,
                "adaptive": n > 6,
            },
        )
        nfev += res.nfev
        nit += res.nit
        if res.fun <= best:
            gain = best - res.fun
            z = origin + res.x * scale
            best = float(res.fun)
        else:
            gain = 0.0
        if gain <= opts.restart_tol * max(1.0, abs(best)) and res.status == 0:
            break
    return z, StageRecord(float(penalty), best, nfev, nit, restart + 1, tuple(trace))


def _is_feasible(ev: EvaluationResult, opts: OptimizeOptions) -> bool:
    return (
        abs(ev.r_x1) < opts.tol_x1
        and abs(ev.r_x2) < opts.tol_x2
        and ev.min_x2 > -opts.tol_min_x2
    )


def optimize(
    d0: DecisionVector,
    w: Weights,
    p: VehicleParams = _P,
    b: BsfcParams = _B,
    opts: OptimizeOptions = OptimizeOptions(),
) -> OptimizationResult:
    """Locally minimize the periodic cost from ``d0`` (penalty continuation + Nelder-Mead)."""
    evaluate(d0, w, p, b, opts.search_steps)  # raises if the start is not finite
    if opts.restore:
        d0 = restore_periodicity(d0, w, p, b, opts.search_steps)
    z = d0.to_array()
    if not math.isfinite(merit(z, opts.penalties[0], w, p, b, opts)):
        raise ValueError("initial decision lies outside the search domain")
    history = []
    for penalty in opts.penalties:
        z, rec = _run_stage(z, penalty, w, p, b, opts)
        history.append(rec)
        log.debug("penalty %.0e: merit %.10f after %d evaluations", penalty, rec.merit, rec.nfev)
    d = DecisionVector.from_array(z)
    ev = evaluate(d, w, p, b, opts.steps)
    return OptimizationResult(
        decision=d,
        eval=ev,
        iterations=sum(r.nit for r in history),
        converged=_is_feasible(ev, opts),
        penalty_history=tuple(history),
    )


def continuation(
    seed: OptimizationResult,
    k_target: int,
    w: Weights,
    p: VehicleParams = _P,
    b: BsfcParams = _B,
    opts: OptimizeOptions = OptimizeOptions(),
) -> list[OptimizationResult]:
    """Add harmonics one at a time, each search started at the previous optimum.

    The returned list starts with ``seed``.  A stage that fails to converge ends
    the sequence and is kept as its last element.
    """
    if not seed.converged:
        raise ValueError("continuation needs a converged seed")
    results = [seed]
    final_penalty = opts.penalties[-1]
    for k in range(seed.decision.input.harmonics + 1, k_target + 1):
        prev = results[-1]
        start = replace(prev.decision, input=prev.decision.input.extended(k))
        res = optimize(start, w, p, b, opts)
        z_start = start.to_array()
        if merit(res.decision.to_array(), final_penalty, w, p, b, opts) > merit(
            z_start, final_penalty, w, p, b, opts
        ):
            # the search wandered off; the padded previous optimum is still admissible
            res = replace(
                res,
                decision=start,
                eval=evaluate(start, w, p, b, opts.steps),
                converged=prev.converged,
            )
        results.append(res)
        log.info("K=%d: J=%.6f converged=%s", k, res.j, res.converged)
        if not res.converged:
            log.warning("continuation stopped at K=%d (no convergence)", k)
            break
    return results
