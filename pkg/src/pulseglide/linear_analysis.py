"""Linearized optimality dynamics around steady cruise.

Around the cruise equilibrium at speed ``v`` the state/co-state flow has a
Hamiltonian structure, so its characteristic polynomial is even,
``s^4 + b s^2 + c``, and the eigenvalues come in ``+/- s`` pairs.  All four
roots on the imaginary axis means the linearized optimal motion oscillates,
i.e. pulse-and-glide is locally preferred over steady cruise.  Any root with a
positive real part rules it out.
"""
from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .vehicle_model import BsfcParams, VehicleParams, equilibrium_for_speed, fuel_partials

__all__ = [
    "ModeClass",
    "EvenQuartic",
    "LocusPoint",
    "CriticalResult",
    "StructureError",
    "NotPnGCapable",
    "BracketError",
    "jacobian",
    "faddeev_leverrier",
    "char_poly",
    "char_poly_printed",
    "eigenvalues",
    "generic_quartic_roots",
    "sort_eigenvalues",
    "classify",
    "mode_at",
    "root_locus",
    "count_transitions",
    "log_grid",
    "find_r_crit",
    "is_png_capable",
    "find_v_crit",
    "rcrit_sweep",
]

log = logging.getLogger(__name__)

_P = VehicleParams()
_B = BsfcParams()


class ModeClass(str, enum.Enum):
    OSCILLATORY = "Oscillatory"
    UNSTABLE = "Unstable"
    DEGENERATE = "Degenerate"


class EvenQuartic(NamedTuple):
    """``s^4 + b*s^2 + c``."""

    b: float
    c: float

    def __call__(self, s):
        s2 = s * s
        return s2 * s2 + self.b * s2 + self.c

    @property
    def discriminant(self) -> float:
        """Discriminant in ``z = s^2``; zero where the two frequencies merge."""
        return self.b * self.b - 4.0 * self.c


@dataclass(frozen=True)
class LocusPoint:
    r_value: float
    eigenvalues: np.ndarray
    mode: ModeClass


@dataclass(frozen=True)
class CriticalResult:
    v: float
    r_crit: float
    omega_at_crit: float
    period_at_crit: float

    @property
    def ok(self) -> bool:
        return math.isfinite(self.r_crit)


class StructureError(ArithmeticError):
    """The characteristic polynomial is not even: the matrix is not Hamiltonian."""


class NotPnGCapable(ValueError):
    """No jerk weight in the search range makes the linearized motion oscillatory."""


class BracketError(ValueError):
    """The critical-speed search interval does not bracket the capability change."""


def jacobian(v: float, r: float, p: VehicleParams = _P, b: BsfcParams = _B) -> np.ndarray:
    """Linearization of the state/co-state flow at the cruise equilibrium for ``v``.

    ``r = inf`` drops the input coupling (the infinite jerk-penalty limit).
    """
    if not v > 0:
        raise ValueError(f"speed must be positive, got {v}")
    if not r > 0:
        raise ValueError(f"jerk weight must be positive, got {r}")
    eq = equilibrium_for_speed(v, p, b)
    fp = fuel_partials(eq.v, eq.force, b)
    k = p.drag_factor
    m = p.mass
    a = k * v / m
    return np.array(
        [
            [-a, 1.0 / m, 0.0, 0.0],
            [0.0, 0.0, 0.0, -1.0 / r],
            [-fp.h11 + eq.lambda1 * k / m, -fp.h12, a, 0.0],
            [-fp.h12, -fp.h22, -1.0 / m, 0.0],
        ]
    )


def faddeev_leverrier(a: np.ndarray) -> np.ndarray:
    """Coefficients of ``det(sI - A)``, highest power first (leading 1)."""
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    coeffs = np.empty(n + 1)
    coeffs[0] = 1.0
    m = np.zeros_like(a)
    eye = np.eye(n)
    for k in range(1, n + 1):
        m = a @ m + coeffs[k - 1] * eye
        coeffs[k] = -np.trace(a @ m) / k
    return coeffs


def char_poly(j: np.ndarray, tol: float = 1e-9) -> EvenQuartic:
    """Even characteristic quartic of a 4x4 linearized optimality system.

    Raises StructureError if the odd coefficients are not negligible relative
    to the largest coefficient.
    """
    coeffs = faddeev_leverrier(j)
    if coeffs.shape != (5,):
        raise ValueError("expected a 4x4 matrix")
    scale = np.max(np.abs(coeffs))
    if abs(coeffs[1]) > tol * scale or abs(coeffs[3]) > tol * scale:
        raise StructureError(
            f"odd coefficients s^3={coeffs[1]:.3e}, s^1={coeffs[3]:.3e} are not negligible"
        )
    return EvenQuartic(float(coeffs[2]), float(coeffs[4]))


def char_poly_printed(v: float, r: float, p: VehicleParams = _P, b: BsfcParams = _B) -> EvenQuartic:
    """Hand-derived closed-form quartic, kept only as a cross-check.

    It disagrees with :func:`char_poly` in the sign of the drag term of ``b``
    and omits the ``h12`` cross term of ``c``; :func:`char_poly` is authoritative.
    """
    eq = equilibrium_for_speed(v, p, b)
    fp = fuel_partials(eq.v, eq.force, b)
    kv = p.drag_factor * v
    m2 = p.mass**2
    bq = kv * kv / m2 - fp.h22 / r
    cq = (fp.h11 + kv * kv * fp.h22 + fp.d2 * p.drag_factor) / (r * m2)
    return EvenQuartic(float(bq), float(cq))


def eigenvalues(q: EvenQuartic) -> np.ndarray:
    """Four roots of ``s^4 + b s^2 + c`` via ``z = s^2``, as two ``+/-`` pairs."""
    b, c = complex(q.b), complex(q.c)
    disc = np.sqrt(b * b - 4.0 * c)
    # stable quadratic formula: avoid cancellation in the smaller root
    big = -0.5 * (b + disc) if (b.real * disc.real + b.imag * disc.imag) >= 0 else -0.5 * (b - disc)
    if big == 0:
        z = (0j, 0j)
    else:
        z = (big, c / big)
    s = [np.sqrt(zz) for zz in z]
    return np.array([s[0], -s[0], s[1], -s[1]], dtype=complex)


def generic_quartic_roots(coeffs: Sequence[float]) -> np.ndarray:
    """Roots of a general polynomial through its companion matrix."""
    return np.roots(np.asarray(coeffs, dtype=float)).astype(complex)


def sort_eigenvalues(e) -> np.ndarray:
    """Order by imaginary part then real part, both descending."""
    e = np.asarray(e, dtype=complex) + 0.0  # drops signed zeros
    scale = float(np.max(np.abs(e))) if e.size else 0.0
    if scale == 0.0:
        return e
    # rounded keys: last-bit noise between +/- partners must not reorder rows
    key_re = np.round(e.real / scale, 10)
    key_im = np.round(e.imag / scale, 10)
    idx = np.lexsort((-key_re, -key_im))
    return e[idx]


def classify(e, scale_tol: float = 1e-7) -> ModeClass:
    e = np.asarray(e, dtype=complex)
    mag = float(np.max(np.abs(e))) if e.size else 0.0
    tol = scale_tol * max(1.0, mag)
    re = e.real
    if np.all(np.abs(re) < tol) and np.all(np.abs(e) > scale_tol):
        return ModeClass.OSCILLATORY
    if np.any(re > tol):
        return ModeClass.UNSTABLE
    return ModeClass.DEGENERATE


def mode_at(v: float, r: float, p: VehicleParams = _P, b: BsfcParams = _B) -> LocusPoint:
    e = eigenvalues(char_poly(jacobian(v, r, p, b)))
    return LocusPoint(float(r), sort_eigenvalues(e), classify(e))


def log_grid(r_min: float = 1e-8, r_max: float = 1e2, points: int = 200) -> np.ndarray:
    if not (0 < r_min < r_max) or points < 2:
        raise ValueError("need 0 < r_min < r_max and at least 2 points")
    return np.logspace(math.log10(r_min), math.log10(r_max), points)


def count_transitions(points: Sequence[LocusPoint]) -> int:
    """Number of switches between oscillatory and non-oscillatory along a sweep."""
    osc = [pt.mode is ModeClass.OSCILLATORY for pt in points]
    return sum(1 for x, y in zip(osc, osc[1:]) if x != y)


def root_locus(
    v: float, r_grid: Sequence[float], p: VehicleParams = _P, b: BsfcParams = _B
) -> list[LocusPoint]:
    r_grid = np.asarray(r_grid, dtype=float)
    if np.any(r_grid <= 0) or np.any(np.diff(r_grid) <= 0):
        raise ValueError("R grid must be positive and strictly increasing")
    pts = [mode_at(v, r, p, b) for r in r_grid]
    n = count_transitions(pts)
    if n > 1:
        log.warning("re-entrant oscillatory band at v=%g: %d class transitions", v, n)
    return pts


def _oscillatory(v, r, p, b) -> bool:
    return mode_at(v, r, p, b).mode is ModeClass.OSCILLATORY


def find_r_crit(
    v: float,
    p: VehicleParams = _P,
    b: BsfcParams = _B,
    r_lo: float = 1e-8,
    r_hi: float = 1e2,
    tol_rel: float = 1e-6,
) -> CriticalResult:
    """Largest jerk weight keeping the linearized motion oscillatory at speed ``v``.

    Bisects (in log R) on the classification, then places the boundary on the
    zero of the quartic's discriminant inside the final bracket.  The two
    oscillation frequencies coincide there at ``sqrt(b/2)``.
    """
    if not _oscillatory(v, r_lo, p, b):
        raise NotPnGCapable(f"not PnG-capable at v = {v:g} m/s (no oscillation at R = {r_lo:g})")
    if _oscillatory(v, r_hi, p, b):
        raise NotPnGCapable(f"oscillatory up to R = {r_hi:g} at v = {v:g} m/s; widen r_hi")
    lo, hi = math.log(r_lo), math.log(r_hi)
    for _ in range(200):
        if hi - lo <= tol_rel:
            break
        mid = 0.5 * (lo + hi)
        if _oscillatory(v, math.exp(mid), p, b):
            lo = mid
        else:
            hi = mid

    def disc(logr):
        return char_poly(jacobian(v, math.exp(logr), p, b)).discriminant

    r_crit = math.exp(lo)
    d_lo, d_hi = disc(lo), disc(hi)
    if d_lo > 0 and d_hi < 0:
        from scipy.optimize import brentq

        r_crit = math.exp(brentq(disc, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps))
    q = char_poly(jacobian(v, r_crit, p, b))
    omega = math.sqrt(max(q.b, 0.0) / 2.0)
    period = 2.0 * math.pi / omega if omega > 0 else math.inf
    return CriticalResult(float(v), float(r_crit), omega, period)


def is_png_capable(v: float, p: VehicleParams = _P, b: BsfcParams = _B, **kw) -> bool:
    try:
        find_r_crit(v, p, b, **kw)
    except NotPnGCapable:
        return False
    return True


def find_v_crit(
    p: VehicleParams = _P,
    b: BsfcParams = _B,
    v_lo: float = 2.0,
    v_hi: float = 40.0,
    tol: float = 1e-3,
) -> float:
    """Speed above which no jerk weight gives oscillatory linearized motion."""
    if not is_png_capable(v_lo, p, b):
        raise BracketError(f"not PnG-capable at the lower bound v = {v_lo:g}")
    if is_png_capable(v_hi, p, b):
        raise BracketError(f"still PnG-capable at the upper bound v = {v_hi:g}")
    lo, hi = v_lo, v_hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if is_png_capable(mid, p, b):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def rcrit_sweep(
    v_grid: Sequence[float], p: VehicleParams = _P, b: BsfcParams = _B
) -> list[CriticalResult]:
    """R_crit, frequency and period per speed; failures come back as NaN rows."""
    out = []
    for v in v_grid:
        try:
            out.append(find_r_crit(float(v), p, b))
        except NotPnGCapable as exc:
            log.info("%s", exc)
            out.append(CriticalResult(float(v), math.nan, math.nan, math.nan))
    return out
