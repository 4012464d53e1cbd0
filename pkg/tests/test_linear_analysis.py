import logging
import math

import numpy as np
import pytest
from scipy.optimize import brentq
from hypothesis import given, settings
from hypothesis import strategies as st

from pulseglide import linear_analysis as la
from pulseglide.linear_analysis import (
    BracketError,
    EvenQuartic,
    ModeClass,
    NotPnGCapable,
    StructureError,
    char_poly,
    char_poly_printed,
    classify,
    count_transitions,
    eigenvalues,
    faddeev_leverrier,
    find_r_crit,
    find_v_crit,
    generic_quartic_roots,
    jacobian,
    log_grid,
    mode_at,
    rcrit_sweep,
    root_locus,
    sort_eigenvalues,
)
from pulseglide.vehicle_model import BsfcParams, VehicleParams, convexity_speed, fuel_partials


def _slow_fast(v, r):
    e = eigenvalues(char_poly(jacobian(v, r)))
    im = sorted({round(abs(x.imag), 12) for x in e})
    return im[0], im[-1]


def test_jacobian_structure():
    j = jacobian(15.0, 3e-4)
    assert j.shape == (4, 4)
    assert j[0, 2] == j[0, 3] == j[1, 0] == j[1, 1] == j[1, 2] == 0
    assert j[1, 3] == pytest.approx(-1 / 3e-4)
    assert j[3, 2] == pytest.approx(-1 / 1605)
    assert np.trace(j) == pytest.approx(0.0, abs=1e-18)
    assert j[0, 0] == -j[2, 2]


def test_jacobian_drag_entry_at_25():
    assert jacobian(25.0, 1e-3)[0, 0] == pytest.approx(-1.2 * 0.33 * 2 * 25 / 1605, rel=1e-12)
    assert jacobian(25.0, 1e-3)[0, 0] == pytest.approx(-0.012336, abs=1e-6)


@pytest.mark.parametrize("v, r", [(0.0, 1.0), (10.0, 0.0), (-1.0, 1.0)])
def test_jacobian_rejects_bad_arguments(v, r):
    with pytest.raises(ValueError):
        jacobian(v, r)


def test_infinite_penalty_limit():
    v = 15.0
    a = 1.2 * 0.33 * 2 * v / 1605
    q = char_poly(jacobian(v, math.inf))
    assert q.b == pytest.approx(-a * a, rel=1e-12)
    assert q.c == pytest.approx(0.0, abs=1e-20)


def test_faddeev_leverrier_against_determinant():
    rng = np.random.default_rng(3)
    for _ in range(20):
        a = rng.normal(size=(4, 4))
        coeffs = faddeev_leverrier(a)
        for s in rng.normal(size=3) + 1j * rng.normal(size=3):
            det = np.linalg.det(s * np.eye(4) - a)
            assert np.polyval(coeffs, s) == pytest.approx(det, rel=1e-10, abs=1e-10)


def test_char_poly_matches_determinant_at_random_points():
    j = jacobian(15.0, 3e-4)
    q = char_poly(j)
    for s in (0.01 + 0.03j, 0.05, -0.2j, 1.0 + 1.0j):
        det = np.linalg.det(s * np.eye(4) - j)
        assert q(s) == pytest.approx(det, rel=1e-9)


def test_char_poly_rejects_odd_structure():
    with pytest.raises(StructureError):
        char_poly(np.diag([1.0, 2.0, 3.0, 4.0]))


def test_quartic_at_15_reference():
    q = char_poly(jacobian(15.0, 3e-4))
    assert q.b == pytest.approx(4.038e-3, rel=1e-3)
    assert q.c == pytest.approx(3.137e-6, rel=1e-3)


@pytest.mark.parametrize(
    "q, expected",
    [
        (EvenQuartic(5.0, 4.0), [1j, -1j, 2j, -2j]),
        (EvenQuartic(-5.0, 4.0), [1, -1, 2, -2]),
        (EvenQuartic(0.0, 0.0), [0, 0, 0, 0]),
        (EvenQuartic(2.0, 1.0), [1j, -1j, 1j, -1j]),
    ],
)
def test_eigenvalue_examples(q, expected):
    got = sort_eigenvalues(eigenvalues(q))
    np.testing.assert_allclose(got, sort_eigenvalues(expected), atol=1e-7)


def test_complex_quadruple():
    e = eigenvalues(EvenQuartic(0.0, 4.0))  # s^4 = -4 -> (+-1 +- i)
    np.testing.assert_allclose(sorted(np.abs(e.real)), [1, 1, 1, 1], rtol=1e-12)
    np.testing.assert_allclose(sorted(np.abs(e.imag)), [1, 1, 1, 1], rtol=1e-12)
    assert classify(e) is ModeClass.UNSTABLE


def test_classify_examples():
    assert classify([0.03j, -0.03j, 0.05j, -0.05j]) is ModeClass.OSCILLATORY
    assert classify([0.01, -0.01, 0.05j, -0.05j]) is ModeClass.UNSTABLE
    assert classify([0, 0, 0, 0]) is ModeClass.DEGENERATE
    assert classify([0, 0, 0.05j, -0.05j]) is ModeClass.DEGENERATE


@settings(max_examples=200, deadline=None)
@given(
    omega1=st.floats(1e-4, 1e2),
    ratio=st.floats(1.0, 1e3),
    sigma=st.floats(1e-3, 1.0),
    scale=st.floats(1e-3, 1e3),
)
def test_classification_is_scale_invariant(omega1, ratio, sigma, scale):
    osc = np.array([1j, -1j, ratio * 1j, -ratio * 1j]) * omega1
    uns = np.array([sigma, -sigma, 1j, -1j]) * omega1
    for e in (osc, uns):
        mode = classify(e)
        assert classify(e * scale) is mode or min(np.abs(e * scale)) < 1e-6
    assert classify(osc) is ModeClass.OSCILLATORY
    assert classify(uns) is ModeClass.UNSTABLE


def test_frequencies_at_15():
    slow, fast = _slow_fast(15.0, 3e-4)
    assert slow == pytest.approx(0.03239, rel=1e-3)
    assert fast == pytest.approx(0.05467, rel=1e-3)
    assert mode_at(15.0, 3e-4).mode is ModeClass.OSCILLATORY


def test_closed_form_printed_quartic_disagrees():
    q = char_poly(jacobian(15.0, 3e-4))
    printed = char_poly_printed(15.0, 3e-4)
    assert printed.b != pytest.approx(q.b, rel=1e-3)
    # the closed form flips the sign of the drag term and keeps the h22/R term
    fp = fuel_partials(15.0, la.equilibrium_for_speed(15.0).force)
    k2 = (1.2 * 0.33 * 2 * 15 / 1605) ** 2
    assert printed.b - q.b == pytest.approx(2 * k2, rel=1e-9)
    assert q.b == pytest.approx(-k2 - fp.h22 / 3e-4, rel=1e-9)
    # c misses the cross term but keeps its sign here
    assert printed.c != pytest.approx(q.c, rel=1e-3)
    assert math.copysign(1, printed.c) == math.copysign(1, q.c)


def test_root_locus_single_transition_at_25():
    pts = root_locus(25.0, log_grid())
    modes = {pt.mode for pt in pts}
    assert ModeClass.OSCILLATORY in modes and ModeClass.UNSTABLE in modes
    assert count_transitions(pts) == 1
    assert pts[0].mode is ModeClass.OSCILLATORY and pts[-1].mode is ModeClass.UNSTABLE


def test_root_locus_all_unstable_at_35():
    pts = root_locus(35.0, log_grid())
    assert all(pt.mode is ModeClass.UNSTABLE for pt in pts)


def test_root_locus_rejects_bad_grid():
    with pytest.raises(ValueError):
        root_locus(15.0, [1e-3, 1e-4])
    with pytest.raises(ValueError):
        log_grid(1.0, 0.5)


def test_root_locus_warns_on_reentrance(monkeypatch, caplog):
    modes = iter([ModeClass.OSCILLATORY, ModeClass.UNSTABLE, ModeClass.OSCILLATORY])
    monkeypatch.setattr(la, "mode_at", lambda v, r, p, b: la.LocusPoint(r, np.zeros(4), next(modes)))
    with caplog.at_level(logging.WARNING):
        root_locus(15.0, [1e-3, 1e-2, 1e-1])
    assert "re-entrant" in caplog.text


def test_r_crit_at_15():
    res = find_r_crit(15.0)
    assert res.ok
    assert res.r_crit == pytest.approx(3.869e-4, rel=1e-3)
    assert res.omega_at_crit == pytest.approx(0.03949, rel=1e-3)
    assert res.period_at_crit == pytest.approx(159.1, abs=0.1)
    q = char_poly(jacobian(15.0, res.r_crit))
    assert abs(q.discriminant) < 1e-6 * q.b**2
    assert mode_at(15.0, 0.99 * res.r_crit).mode is ModeClass.OSCILLATORY
    assert mode_at(15.0, 1.01 * res.r_crit).mode is ModeClass.UNSTABLE


def test_r_crit_not_capable_above_v_crit():
    with pytest.raises(NotPnGCapable):
        find_r_crit(35.0)


def test_low_r_frequency_limits():
    s1, f1 = _slow_fast(15.0, 1e-7)
    s2, f2 = _slow_fast(15.0, 1e-5)
    assert f1 / f2 > 3
    assert abs(s1 - s2) / s2 < 0.1


def test_v_crit_and_analytic_oracle():
    v = find_v_crit()
    assert 33.0 <= v <= 34.5
    assert abs(v - convexity_speed()) < 0.5


def _quartic_coeff(name, p, b, r=1e-8):
    return lambda v: getattr(char_poly(jacobian(v, r, p, b)), name)


def test_v_crit_default_is_where_low_r_discriminant_vanishes():
    # at the search floor R = 1e-8 the two frequencies merge just before h22 = 0
    v_b = brentq(_quartic_coeff("discriminant", VehicleParams(), BsfcParams()), 30.0, 33.74, xtol=1e-10)
    assert find_v_crit(tol=1e-4) == pytest.approx(v_b, abs=1e-4)
    assert v_b < convexity_speed()


def test_v_crit_can_be_set_by_sign_of_quartic_c():
    # a far-away BSFC sweet spot loses oscillation through c < 0 instead
    p, b = VehicleParams(), BsfcParams(p0=60000.0)
    v_c = brentq(_quartic_coeff("c", p, b), 20.0, 30.0, xtol=1e-10)
    assert find_v_crit(p, b, v_hi=60.0, tol=1e-4) == pytest.approx(v_c, abs=1e-4)
    assert v_c < convexity_speed(p, b) - 10.0


def test_v_crit_bracket_errors():
    with pytest.raises(BracketError):
        find_v_crit(v_lo=35.0, v_hi=40.0)
    with pytest.raises(BracketError):
        find_v_crit(v_lo=2.0, v_hi=20.0)


def test_rcrit_sweep_below_v_crit():
    rows = rcrit_sweep(range(2, 33))
    assert all(r.ok and r.r_crit < 1.0 for r in rows)
    at15 = rows[13]
    assert at15.v == 15.0 and at15.period_at_crit == pytest.approx(160, rel=0.02)


def test_rcrit_sweep_nan_rows_above_v_crit():
    rows = rcrit_sweep([34.0, 35.0])
    assert all(not r.ok and math.isnan(r.r_crit) for r in rows)


def test_structural_properties_random_samples():
    rng = np.random.default_rng(2024)
    vs = rng.uniform(2, 33, 500)
    rs = 10 ** rng.uniform(-7, 1, 500)
    for v, r in zip(vs, rs):
        coeffs = faddeev_leverrier(jacobian(v, r))
        scale = np.max(np.abs(coeffs))
        assert abs(coeffs[1]) < 1e-9 * scale and abs(coeffs[3]) < 1e-9 * scale
        e = eigenvalues(char_poly(jacobian(v, r)))
        np.testing.assert_allclose(sort_eigenvalues(e), sort_eigenvalues(-e), rtol=1e-12, atol=0)
        ref = generic_quartic_roots([1.0, 0.0, coeffs[2], 0.0, coeffs[4]])
        for x in e:
            assert np.min(np.abs(ref - x)) <= 1e-8 * abs(x)
