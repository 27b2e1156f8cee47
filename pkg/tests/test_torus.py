import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.optimize import brentq

from phaselock.errors import ConvergenceWarning, InvalidParams
from phaselock.monodromy import phase_lock_test, LockKind
from phaselock.params import SystemParams
from phaselock.torus import RhoMethod, flow, poincare, rho_a0, rho_direct


def quad_time(omega, B, phi):
    """Time to go from 0 to phi when A = 0 (phase speed B - sin(phi), in tau units / omega)."""
    return quad(lambda s: omega / (B - math.sin(s)), 0.0, phi, epsabs=1e-13, epsrel=1e-13, limit=200)[0]


def test_flow_zero_length():
    p = SystemParams(1.3, 0.7, 2.1)
    assert flow(p, 0.4, 1.0, 1.0, 1e-10).phi_end == 0.4


def test_flow_equilibrium():
    assert flow(SystemParams(1, 0, 0), 0.0, 0.0, 2 * math.pi, 1e-12).phi_end == pytest.approx(0, abs=1e-14)


def test_flow_matches_quadrature_oracle():
    omega, B = 2.0, 3.0
    phi = flow(SystemParams(omega, B, 0.0), 0.0, 0.0, 2 * math.pi, 1e-12).phi_end
    # invert tau(phi) = 2 pi with the quadrature oracle
    target = brentq(lambda x: quad_time(omega, B, x) - 2 * math.pi, 0.0, 20.0, xtol=1e-14)
    assert phi == pytest.approx(target, abs=1e-9)


def test_flow_backward_inverts_forward():
    p = SystemParams(0.8, 1.2, 1.7)
    fwd = flow(p, 0.3, 0.0, 5.0, 1e-12).phi_end
    assert flow(p, fwd, 5.0, 0.0, 1e-12).phi_end == pytest.approx(0.3, abs=1e-9)


def test_poincare_growth_point_fixed_point():
    p = SystemParams(2.0, math.sqrt(5.0), 0.0)
    g = lambda x: poincare(p, x, 1e-12) - x - 2 * math.pi
    xs = np.linspace(0, 2 * math.pi, 65)
    vals = [g(x) for x in xs]
    # rho = 1 exactly and the map touches the shifted diagonal: min of g is ~0
    assert min(abs(v) for v in vals) < 1e-3
    assert max(vals) > -1e-9


def test_rho_direct_examples():
    assert rho_direct(SystemParams(1, 0, 0), 1e-8).rho == pytest.approx(0, abs=1e-8)
    est = rho_direct(SystemParams(2, 2.5, 0), 1e-8)
    assert est.method == RhoMethod.DIRECT
    assert est.rho == pytest.approx(math.sqrt(2.5 ** 2 - 1) / 2, abs=max(est.error_bound, 1e-8))
    p = SystemParams(2, 2, 2)
    est = rho_direct(p, 1e-8)
    assert abs(est.rho - 1) <= max(est.error_bound, 1e-8)
    assert phase_lock_test(p).kind == LockKind.INSIDE


def test_rho_direct_warns_when_budget_exhausted():
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        est = rho_direct(SystemParams(1.0, 1.3, 0.9), 1e-14, max_periods=128)
    assert any(issubclass(x.category, ConvergenceWarning) for x in w)
    assert est.error_bound >= 0


def test_rho_direct_rejects_bad_tol():
    with pytest.raises(InvalidParams):
        rho_direct(SystemParams(1, 1, 1), 0.0)


def period_oracle(omega, B):
    T = quad(lambda s: 1.0 / (B / omega - math.sin(s) / omega), 0, 2 * math.pi,
             epsabs=1e-13, epsrel=1e-13, limit=200)[0]
    return 2 * math.pi / T


def test_rho_a0_examples():
    assert rho_a0(SystemParams(2, math.sqrt(5), 0)).rho == pytest.approx(1.0, abs=1e-15)
    assert rho_a0(SystemParams(1, 0.5, 0)).rho == 0
    assert rho_a0(SystemParams(0.5, 2, 0)).rho == pytest.approx(2 * math.sqrt(3), rel=1e-15)
    assert rho_a0(SystemParams(0.5, 2, 0)).rho == pytest.approx(period_oracle(0.5, 2.0), rel=1e-12)
    with pytest.raises(InvalidParams):
        rho_a0(SystemParams(1, 1, 0.1))


@given(st.floats(0.3, 3.0), st.floats(-4.0, 4.0), st.floats(0.0, 2 * math.pi))
def test_poincare_degree_one(omega, B, phi0):
    p = SystemParams(omega, B, 1.1)
    a = poincare(p, phi0, 1e-12)
    b = poincare(p, phi0 + 2 * math.pi, 1e-12)
    assert b - a == pytest.approx(2 * math.pi, abs=1e-9)


@given(st.floats(0.3, 3.0), st.floats(-4.0, 4.0), st.floats(0.0, 6.0), st.floats(1e-3, 2.0))
def test_poincare_monotone(omega, B, phi0, dphi):
    p = SystemParams(omega, B, 0.7)
    assert poincare(p, phi0, 1e-12) < poincare(p, phi0 + dphi, 1e-12)


@given(st.floats(0.5, 3.0), st.floats(-5.0, 5.0))
def test_rho_direct_matches_closed_form_at_zero_amplitude(omega, B):
    p = SystemParams(omega, B, 0.0)
    est = rho_direct(p, 1e-7)
    assert est.rho == pytest.approx(rho_a0(p).rho, abs=max(est.error_bound, 1e-7) + 1e-9)
