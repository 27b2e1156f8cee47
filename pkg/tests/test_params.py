import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from phaselock.errors import InvalidParams
from phaselock.params import SystemParams, axis, derive, normalize_quadrant

omegas = st.floats(0.05, 10.0)
reals = st.floats(-50.0, 50.0)


@pytest.mark.parametrize("omega,B,A,l,mu,lam", [
    (2.0, 2.0, 4.0, 1.0, 1.0, -15 / 16),
    (0.5, 0.0, 0.0, 0.0, 0.0, 1.0),
    (1.0, 3.0, 2.0, 3.0, 1.0, -3 / 4),
])
def test_derive_examples(omega, B, A, l, mu, lam):
    d = derive(SystemParams(omega, B, A))
    assert d.l == l and d.mu == mu
    assert d.lam == pytest.approx(lam, abs=1e-15)


@pytest.mark.parametrize("bad", [(0.0, 1.0, 1.0), (-1.0, 0.0, 0.0), (1.0, math.nan, 0.0),
                                 (1.0, 0.0, math.inf)])
def test_invalid_params(bad):
    with pytest.raises(InvalidParams):
        SystemParams(*bad)


def test_normalize_quadrant_examples():
    q, tag = normalize_quadrant(SystemParams(1, -2, 3))
    assert (q.B, q.A, tag.rho_sign) == (2, 3, -1)
    q, tag = normalize_quadrant(SystemParams(1, 2, -3))
    assert (q.B, q.A, tag.rho_sign) == (2, 3, 1)
    p = SystemParams(1, 2, 3)
    q, tag = normalize_quadrant(p)
    assert q == p and tag.rho_sign == 1 and not tag.flipped_A


def test_axis_examples():
    assert axis(3, 0.7) == pytest.approx(2.1, rel=1e-15)
    assert axis(0, 2) == 0
    assert axis(-2, 1) == -2


def test_on_axis_integer_l():
    d = derive(SystemParams.on_axis(0.7, 3, 1.0))
    assert d.integer_l() == 3
    assert derive(SystemParams(0.7, 2.0, 1.0)).integer_l() is None


@given(omegas, reals, reals)
def test_normalized_quadrant_is_nonnegative(omega, B, A):
    q, _ = normalize_quadrant(SystemParams(omega, B, A))
    d = derive(q)
    assert d.l >= 0 and d.mu >= 0


@given(omegas, reals, reals)
def test_normalize_idempotent(omega, B, A):
    q, _ = normalize_quadrant(SystemParams(omega, B, A))
    q2, tag2 = normalize_quadrant(q)
    assert q2 == q and not tag2.flipped_A and not tag2.flipped_B


@given(omegas, reals, reals)
def test_lambda_identity(omega, B, A):
    d = derive(SystemParams(omega, B, A))
    c = 1 / (4 * omega * omega)
    assert d.lam + d.mu ** 2 == pytest.approx(c, rel=1e-12, abs=1e-12 * (c + d.mu ** 2))
