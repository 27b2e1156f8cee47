import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from phaselock.connection import (ConstrictionSign, Ray, arc, asymptotic_seed, canonical_frame,
                                  classify_constriction, default_eps, gauge_factor,
                                  identity_battery, segment, stokes_multipliers, transport,
                                  transport_frame, transition_matrix)
from phaselock.errors import InvalidParams, StabilityError
from phaselock.heun import Variant, evaluate_series, find_constrictions_on_axis, heun_series
from phaselock.monodromy import monodromy
from phaselock.params import DerivedParams, SystemParams, derive

axis_points = st.tuples(st.sampled_from([0.5, 1.0, 2.0]), st.integers(0, 3), st.floats(0.2, 8.0))


@pytest.fixture(scope="module")
def constrictions_w2():
    return [c for l in range(3) for c in find_constrictions_on_axis(l, 2.0, (0.1, 12.0))]


def test_seed_limits():
    d = derive(SystemParams.on_axis(1.0, 2, 3.0))
    for eps in (1e-2, 1e-3):
        s = asymptotic_seed(d, Ray.R_PLUS, eps=eps)
        assert np.abs(s.f2_seed - [0, 1]).max() < 20 * eps
        assert np.abs(s.f1_seed - [1, 0]).max() < 20 * eps
    with pytest.raises(InvalidParams):
        asymptotic_seed(d, Ray.R_PLUS, eps=0.5)


def test_seed_truncation_error_shrinks_with_eps():
    d = derive(SystemParams.on_axis(1.0, 1, 2.0))
    e1 = asymptotic_seed(d, Ray.R_MINUS, eps=0.04).trunc_error
    e2 = asymptotic_seed(d, Ray.R_MINUS, eps=0.02).trunc_error
    assert e2 < e1 / 4


def test_seed_consistent_with_short_transport():
    # seed at eps, moved to 2 eps by the ODE, equals the seed built at 2 eps
    p = SystemParams.on_axis(2.0, 1, 4.0)
    d = derive(p)
    eps = default_eps(d.mu) / 4
    a = asymptotic_seed(d, Ray.R_PLUS, eps=eps)
    b = asymptotic_seed(d, Ray.R_PLUS, eps=2 * eps)
    moved = transport(p, a.f2_seed, segment(eps, 2 * eps))
    assert np.abs(moved - b.f2_seed).max() < 10 * (a.trunc_error + b.trunc_error) + 1e-12


def test_zero_length_transport_is_identity():
    p = SystemParams.on_axis(1.0, 1, 1.5)
    v = np.array([0.3 + 0.1j, -0.2j])
    assert np.array_equal(transport(p, v, segment(0.5, 0.5)), v)


def test_dominance_violation_is_rejected():
    p = SystemParams.on_axis(1.0, 0, 12.0)
    d = derive(p)
    # carrying f2 towards zero along the positive ray follows the recessive direction
    with pytest.raises(StabilityError):
        transport_frame(p, np.array([0, 1 + 0j]), segment(1.0, default_eps(d.mu), "f2"))


@given(axis_points)
def test_wronskian_drift_on_every_path(pt):
    omega, l, A = pt
    fr = canonical_frame(SystemParams.on_axis(omega, l, A))
    assert fr.wronskian_drift < 1e-9
    assert fr.det_residual_1 < 1e-9 and fr.det_residual_m1 < 1e-9


@given(axis_points)
def test_reality_patterns(pt):
    omega, l, A = pt
    fr = canonical_frame(SystemParams.on_axis(omega, l, A))
    s = max(1.0, np.abs(fr.W1).max(), np.abs(fr.Wm1).max())
    assert abs(fr.f2_at_1[0].real) < 1e-8 * s
    assert abs(fr.f2_at_1[1].imag) < 1e-8 * s
    assert abs(fr.f1_at_m1[0].imag) < 1e-8 * s
    assert abs(fr.f1_at_m1[1].real) < 1e-8 * s


@given(axis_points)
def test_transition_relations(pt):
    omega, l, A = pt
    td = transition_matrix(SystemParams.on_axis(omega, l, A))
    assert td.relation1_residual < 1e-7
    assert td.involution_residual < 1e-7
    assert abs(td.b.real) < 1e-7 * abs(td.b)
    assert np.abs(td.Q - td.Q_closed).max() < 1e-7 * max(1.0, np.abs(td.Q).max())


@given(axis_points)
def test_stokes_trace_consistency(pt):
    omega, l, A = pt
    st_ = stokes_multipliers(SystemParams.on_axis(omega, l, A))
    assert st_.trace_residual < 1e-7
    assert max(st_.reality_residuals) < 1e-7


def test_stokes_at_simple_intersection():
    st_ = stokes_multipliers(SystemParams.on_axis(2.0, 1, 1.0))
    assert abs(st_.c1) < 1e-7 and abs(st_.c0) > 1e-4


def test_stokes_vanish_at_constrictions(constrictions_w2):
    assert constrictions_w2
    for c in constrictions_w2:
        st_ = stokes_multipliers(SystemParams.on_axis(2.0, c.l, c.A))
        assert abs(st_.c0) < 1e-7 and abs(st_.c1) < 1e-7


def test_trace_inside_first_area():
    p = SystemParams.on_axis(2.0, 1, 3.0)
    st_ = stokes_multipliers(p)
    assert abs(st_.trace_from_stokes - monodromy(p, 1e-13).trace.real) < 1e-7


def test_constriction_signs(constrictions_w2):
    for c in constrictions_w2:
        rec = classify_constriction(SystemParams.on_axis(2.0, c.l, c.A))
        assert rec.sign == ConstrictionSign.POSITIVE and rec.agreement
        assert abs(rec.b) > 1e-6 and abs(rec.c) > 1e-6
        assert rec.cb_imag < 1e-6 * abs(rec.cb_ratio)


def test_path_independence_at_constrictions(constrictions_w2):
    """With trivial Stokes data the monodromy around z = 0 is trivial, so f2
    carried from 1 to -1 below the origin matches the upper-arc value."""
    for c in constrictions_w2:
        p = SystemParams.on_axis(2.0, c.l, c.A)
        fr = canonical_frame(p)
        lower = transport(p, fr.f2_at_1, arc(0.0, -math.pi, "f2"))
        assert np.abs(lower - fr.f2_at_m1).max() < 1e-7


def test_lower_arc_differs_off_constriction():
    p = SystemParams.on_axis(2.0, 1, 3.0)
    fr = canonical_frame(p)
    lower = transport(p, fr.f2_at_1, arc(0.0, -math.pi, "f2"))
    assert np.abs(lower - fr.f2_at_m1).max() > 1e-3


def test_entire_series_oracle_at_constriction(constrictions_w2):
    """At a constriction the Heun series converges on all of C; summing it at
    z = 1 gives f2(1) without any transport."""
    for c in constrictions_w2:
        p = SystemParams.on_axis(2.0, c.l, c.A)
        d = derive(p)
        coeffs = heun_series(DerivedParams(float(c.l), d.mu, d.lam), Variant.HEUN, 400).coeffs
        E, dE, dropped, n = evaluate_series(coeffs, 1.0)
        if dropped > 1e-10 * abs(E):
            continue  # series not yet summable in double precision
        v = math.exp(-d.mu) * E
        dv = math.exp(-d.mu) * (dE - d.mu * E)
        f2 = np.array([2j * p.omega * dv, v])
        fr = canonical_frame(p)
        assert np.abs(f2 - fr.f2_at_1).max() < 1e-8 * max(1.0, np.abs(f2).max())


@pytest.mark.parametrize("omega", [0.5, 1.0, 2.0])
def test_identity_battery_passes(omega):
    for l, A in [(0, 0.7), (1, 2.3), (2, 5.1), (3, 1.9)]:
        rep = identity_battery(SystemParams.on_axis(omega, l, A * omega))
        bad = [c for c in rep.checks if not c.passed]
        assert not bad, bad


def test_discriminant_at_simple_intersection():
    rep = identity_battery(SystemParams.on_axis(1.0, 1, 1.0))
    chk = rep.get("discriminant Delta0 <= 0")
    assert "Delta0=-4" in chk.note or float(chk.note.split("=")[1]) == pytest.approx(-4, abs=1e-6)


def test_gauge_factor_values():
    assert gauge_factor(1.0, 3, 2.0) == pytest.approx(1.0)
    assert gauge_factor(-1.0, 3, 2.0) == pytest.approx(-1.0)
