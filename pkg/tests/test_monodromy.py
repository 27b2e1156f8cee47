import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from phaselock.monodromy import (LockKind, classify_margin, mobius_cell, mobius_error_bound,
                                 monodromy, phase_lock_test, rho_mobius)
from phaselock.params import SystemParams, derive
from phaselock.torus import RhoMethod, rho_a0, rho_direct

points = st.tuples(st.floats(0.3, 3.0), st.floats(-5.0, 5.0), st.floats(-8.0, 8.0))


@given(points)
def test_unimodular_and_real_trace(pt):
    p = SystemParams(*pt)
    res = monodromy(p, 1e-12)
    det = np.linalg.det(res.Mtilde)
    scale = max(1.0, float(np.abs(res.M).max()) ** 2)
    assert abs(det - 1) < 1e-9 * scale
    d = derive(p)
    assert abs(np.linalg.det(res.M) - np.exp(-2j * math.pi * d.l)) < 1e-9 * scale
    assert res.im_trace_residual < 1e-9 * scale


@given(points, st.floats(0.0, 2 * math.pi))
def test_base_point_changes_only_conjugation(pt, tau0):
    p = SystemParams(*pt)
    t0 = monodromy(p, 1e-12).trace
    t1 = monodromy(p, 1e-12, tau0=tau0).trace
    assert abs(t0 - t1) < 1e-9 * max(1.0, abs(t0))


def test_growth_point_is_parabolic():
    res = monodromy(SystemParams(2.0, math.sqrt(5.0), 0.0), 1e-13)
    assert abs(abs(res.trace.real) - 2.0) < 1e-9


def test_A_axis_is_locked():
    for A in np.linspace(0.0, 20.0, 41):
        res = monodromy(SystemParams(2.0, 0.0, float(A)), 1e-12)
        assert res.margin >= -1e-9


def test_interval_on_B_axis_is_interior():
    for B in np.linspace(-0.99, 0.99, 21):
        assert phase_lock_test(SystemParams(1.3, float(B), 0.0)).kind == LockKind.INSIDE


def test_phase_lock_examples():
    assert phase_lock_test(SystemParams(2, 2, 2)).kind == LockKind.INSIDE
    assert phase_lock_test(SystemParams(1, 0.5, 0)).kind == LockKind.INSIDE
    lc = phase_lock_test(SystemParams(2, 2, 1))
    assert lc.kind == LockKind.BOUNDARY and abs(lc.margin) < 1e-9


def test_classify_margin_bands():
    assert classify_margin(1e-3, 2.001) == LockKind.INSIDE
    assert classify_margin(-1e-3, 1.999) == LockKind.OUTSIDE
    assert classify_margin(1e-10, 2.0) == LockKind.BOUNDARY


def test_extended_precision_agrees():
    p = SystemParams(1.0, 1.3, 2.2)
    a = monodromy(p, 1e-13).M
    b = monodromy(p, 1e-13, precision="extended", dps=25).M
    assert np.abs(a - b).max() < 1e-10


def test_rho_mobius_examples():
    assert rho_mobius(SystemParams(1, 0, 0)).rho == pytest.approx(0, abs=1e-9)
    est = rho_mobius(SystemParams(2, 2.5, 0))
    assert est.method == RhoMethod.MOBIUS
    assert est.rho == pytest.approx(rho_a0(SystemParams(2, 2.5, 0)).rho, abs=1e-9)
    assert rho_mobius(SystemParams(2, -2.5, 0)).rho == pytest.approx(-est.rho, abs=1e-9)


def test_rho_mobius_boundary_falls_back_to_direct():
    est = rho_mobius(SystemParams(2, 2, 1))
    assert est.method == RhoMethod.DIRECT
    assert est.rho == pytest.approx(1.0, abs=1e-5)


@given(st.floats(0.0, 4.0), st.floats(0.0, 6.0))
def test_rho_mobius_matches_direct(B, A):
    p = SystemParams(2.0, B, A)
    m = rho_mobius(p, 1e-9)
    d = rho_direct(p, 1e-8)
    assert abs(m.rho - d.rho) <= max(1e-6, m.error_bound + d.error_bound)


@given(st.floats(0.3, 3.0), st.floats(-4.0, 4.0), st.floats(0.0, 8.0))
def test_rho_symmetries(omega, B, A):
    e = rho_mobius(SystemParams(omega, B, A))
    ea = rho_mobius(SystemParams(omega, B, -A))
    eb = rho_mobius(SystemParams(omega, -B, A))
    assert abs(ea.rho - e.rho) <= e.error_bound + ea.error_bound + 1e-12
    assert abs(eb.rho + e.rho) <= e.error_bound + eb.error_bound + 1e-12


@given(st.floats(0.5, 2.5), st.floats(0.0, 6.0), st.floats(-4.0, 4.0))
def test_rho_monotone_in_B(omega, A, B):
    lo = rho_mobius(SystemParams(omega, B, A)).rho
    hi = rho_mobius(SystemParams(omega, B + 0.05, A)).rho
    assert hi >= lo - 1e-9


@given(st.floats(0.5, 2.5), st.floats(-4.0, 4.0), st.floats(0.0, 6.0))
def test_inside_means_integer_outside_means_strictly_increasing(omega, B, A):
    p = SystemParams(omega, B, A)
    cell = mobius_cell(p)
    if cell.kind == LockKind.INSIDE:
        d = rho_direct(p, 1e-7)
        assert abs(d.rho - round(d.rho)) <= max(d.error_bound, 1e-7)
    elif cell.kind == LockKind.OUTSIDE:
        h = 1e-4
        assert rho_mobius(p.with_B(B + h)).rho > cell.rho
        assert mobius_error_bound(cell) < 1e-6
