"""Compiled integration kernels.

Everything here is ``nogil`` numba code so that callers can spread
independent parameter points over a thread pool.  Two right-hand sides are
supported:

* the complex 2x2 linear system whose projectivization is the torus equation,
  pulled back to a path ``z(t)``, ``t in [0, 1]`` (a straight segment or an arc
  of the unit circle), optionally divided by the scalar gauge
  ``s(z) = z^{-l} exp(mu (1/z - z))``;
* the real scalar torus equation ``dphi/dtau = l + 2 mu cos(tau) - sin(phi)/omega``.

Both use the Dormand-Prince 8(5,3) tableau (coefficients taken from scipy)
with a PI step-size controller.
"""

import math

import numba as nb
import numpy as np
from scipy.integrate._ivp import dop853_coefficients as _dop

_NS = 12
_A = np.ascontiguousarray(_dop.A[:_NS, :_NS])
_B = np.ascontiguousarray(_dop.B)
_C = np.ascontiguousarray(_dop.C[:_NS])
_E3 = np.ascontiguousarray(_dop.E3)
_E5 = np.ascontiguousarray(_dop.E5)

SEGMENT = 0
ARC = 1

OK = 0
STEP_UNDERFLOW = 1
STEP_BUDGET = 2

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 6.0
_PI_BETA = 0.04
_EXPO = 1.0 / 8.0 - 0.2 * _PI_BETA

TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# linear system on a path


@nb.njit(cache=True, nogil=True)
def _path_point(kind, za, zb, t):
    if kind == SEGMENT:
        dz = zb - za
        return za + t * dz, dz
    a = za.real
    b = zb.real
    ang = a + t * (b - a)
    z = complex(math.cos(ang), math.sin(ang))
    return z, 1j * z * (b - a)


@nb.njit(cache=True, nogil=True)
def _linear_rhs(kind, za, zb, gauge, l, mu, omega, t, y, out):
    z, dz = _path_point(kind, za, zb, t)
    c = 1.0 / (2.0 * omega)
    if kind == ARC:
        # on |z| = 1 the pulled-back matrix is O(1): no division by z^2
        span = zb.real - za.real
        cs = z.real
        m00 = -1j * (l + 2.0 * mu * cs) * span
        m01 = c * span
        m10 = c * span
        m11 = 0.0j
        if gauge:
            g = -1j * (l + 2.0 * mu * cs) * span
            m00 -= g
            m11 -= g
    else:
        iz = 1.0 / z
        iz2 = iz * iz
        m00 = -(l * z + mu * (1.0 + z * z)) * iz2 * dz
        m01 = -1j * c * iz * dz
        m10 = m01
        m11 = 0.0j
        if gauge:
            g = (-l * iz - mu * iz2 - mu) * dz
            m00 -= g
            m11 -= g
    for j in range(y.shape[1]):
        y0 = y[0, j]
        y1 = y[1, j]
        out[0, j] = m00 * y0 + m01 * y1
        out[1, j] = m10 * y0 + m11 * y1


@nb.njit(cache=True, nogil=True)
def _err_norm(K, h, y, y_new, rtol, atol):
    n = y.size
    ncol = y.shape[1]
    s5 = 0.0
    s3 = 0.0
    for j in range(ncol):
        # each column is one solution vector: scale by its size, not per entry
        ymag = max(abs(y[0, j]), abs(y[1, j]), abs(y_new[0, j]), abs(y_new[1, j]))
        sc = atol + rtol * ymag
        for i in range(2):
            e5 = 0.0j
            e3 = 0.0j
            for s in range(_NS + 1):
                e5 += _E5[s] * K[s, i, j]
                e3 += _E3[s] * K[s, i, j]
            a5 = abs(e5) / sc
            a3 = abs(e3) / sc
            s5 += a5 * a5
            s3 += a3 * a3
    if s5 == 0.0 and s3 == 0.0:
        return 0.0
    return abs(h) * s5 / math.sqrt((s5 + 0.01 * s3) * n)


@nb.njit(cache=True, nogil=True)
def integrate_linear(kind, za, zb, gauge, l, mu, omega, Y0, rtol, atol, hmax,
                     record, max_steps):
    """Integrate ``dY/dt = M(t) Y`` for ``t`` from 0 to 1.

    Returns ``(Y1, status, n_accepted, rec_t, rec_Y, n_rec, err_sum)`` where the
    record arrays hold every accepted step when ``record`` is true and
    ``err_sum`` accumulates the local error estimates (absolute units).
    """
    ncol = Y0.shape[1]
    y = Y0.copy()
    K = np.zeros((_NS + 1, 2, ncol), dtype=np.complex128)
    ys = np.empty((2, ncol), dtype=np.complex128)
    y_new = np.empty((2, ncol), dtype=np.complex128)
    f = np.empty((2, ncol), dtype=np.complex128)
    _linear_rhs(kind, za, zb, gauge, l, mu, omega, 0.0, y, f)

    cap = 256 if record else 1
    rec_t = np.empty(cap)
    rec_Y = np.empty((cap, 2, ncol), dtype=np.complex128)
    n_rec = 0
    if record:
        rec_t[0] = 0.0
        rec_Y[0] = y
        n_rec = 1

    # initial step from the derivative scale
    d0 = 0.0
    d1 = 0.0
    for j in range(ncol):
        sc = atol + rtol * max(abs(y[0, j]), abs(y[1, j]))
        for i in range(2):
            d0 = max(d0, abs(y[i, j]) / sc)
            d1 = max(d1, abs(f[i, j]) / sc)
    if d0 < 1e-5 or d1 < 1e-5:
        h = 1e-6
    else:
        h = 0.01 * d0 / d1
    h = min(h, hmax, 1.0)

    t = 0.0
    err_old = 1e-4
    n_acc = 0
    err_sum = 0.0
    status = OK
    while t < 1.0:
        if n_acc >= max_steps:
            status = STEP_BUDGET
            break
        if h < 1e-14 * max(1.0, abs(t)):
            status = STEP_UNDERFLOW
            break
        last = False
        if t + h >= 1.0:
            h = 1.0 - t
            last = True
        for i in range(2):
            for j in range(ncol):
                K[0, i, j] = f[i, j]
        for s in range(1, _NS):
            for i in range(2):
                for j in range(ncol):
                    acc = 0.0j
                    for q in range(s):
                        acc += _A[s, q] * K[q, i, j]
                    ys[i, j] = y[i, j] + h * acc
            _linear_rhs(kind, za, zb, gauge, l, mu, omega, t + _C[s] * h, ys, K[s])
        for i in range(2):
            for j in range(ncol):
                acc = 0.0j
                for q in range(_NS):
                    acc += _B[q] * K[q, i, j]
                y_new[i, j] = y[i, j] + h * acc
        t_new = 1.0 if last else t + h
        _linear_rhs(kind, za, zb, gauge, l, mu, omega, t_new, y_new, K[_NS])
        err = _err_norm(K, h, y, y_new, rtol, atol)
        if err <= 1.0:
            ymax = 0.0
            for i in range(2):
                for j in range(ncol):
                    ymax = max(ymax, abs(y_new[i, j]))
            err_sum += err * (atol + rtol * ymax)
            t = t_new
            for i in range(2):
                for j in range(ncol):
                    y[i, j] = y_new[i, j]
                    f[i, j] = K[_NS, i, j]
            n_acc += 1
            if record:
                if n_rec == cap:
                    cap *= 2
                    nt = np.empty(cap)
                    nY = np.empty((cap, 2, ncol), dtype=np.complex128)
                    nt[:n_rec] = rec_t[:n_rec]
                    nY[:n_rec] = rec_Y[:n_rec]
                    rec_t = nt
                    rec_Y = nY
                rec_t[n_rec] = t
                rec_Y[n_rec] = y
                n_rec += 1
            if err == 0.0:
                fac = _MAX_FACTOR
            else:
                fac = _SAFETY * err ** (-_EXPO) * err_old ** _PI_BETA
                fac = min(_MAX_FACTOR, max(_MIN_FACTOR, fac))
            err_old = max(err, 1e-4)
            h = min(h * fac, hmax)
        else:
            fac = max(_MIN_FACTOR, _SAFETY * err ** (-1.0 / 8.0))
            h *= fac
    return y, status, n_acc, rec_t, rec_Y, n_rec, err_sum


# ---------------------------------------------------------------------------
# scalar torus flow


@nb.njit(cache=True, nogil=True)
def _torus_rhs(tau, phi, l, mu, omega):
    return l + 2.0 * mu * math.cos(tau) - math.sin(phi) / omega


@nb.njit(cache=True, nogil=True)
def integrate_torus(l, mu, omega, phi0, tau0, tau1, rtol, atol, h0, max_steps):
    """Integrate the torus equation from ``tau0`` to ``tau1`` (lifted phase).

    Returns ``(phi1, status, h_last, err_sum, n_accepted)``.
    """
    span = tau1 - tau0
    if span == 0.0:
        return phi0, OK, h0, 0.0, 0
    direction = 1.0 if span > 0 else -1.0
    K = np.zeros(_NS + 1)
    y = phi0
    t = tau0
    f = _torus_rhs(t, y, l, mu, omega)
    h = h0
    if h <= 0.0:
        h = min(0.01 / max(abs(f), 1e-3), abs(span))
    err_old = 1e-4
    err_sum = 0.0
    n_acc = 0
    status = OK
    while direction * (tau1 - t) > 0.0:
        if n_acc >= max_steps:
            status = STEP_BUDGET
            break
        if h < 1e-14 * max(1.0, abs(t)):
            status = STEP_UNDERFLOW
            break
        last = False
        if h >= direction * (tau1 - t):
            h = direction * (tau1 - t)
            last = True
        hs = direction * h
        K[0] = f
        for s in range(1, _NS):
            acc = 0.0
            for q in range(s):
                acc += _A[s, q] * K[q]
            K[s] = _torus_rhs(t + _C[s] * hs, y + hs * acc, l, mu, omega)
        acc = 0.0
        for q in range(_NS):
            acc += _B[q] * K[q]
        y_new = y + hs * acc
        t_new = tau1 if last else t + hs
        K[_NS] = _torus_rhs(t_new, y_new, l, mu, omega)
        sc = atol + rtol * max(abs(y), abs(y_new))
        e5 = 0.0
        e3 = 0.0
        for s in range(_NS + 1):
            e5 += _E5[s] * K[s]
            e3 += _E3[s] * K[s]
        e5 /= sc
        e3 /= sc
        den = math.hypot(e5, 0.1 * e3)
        if den == 0.0:
            err = 0.0
        else:
            # written as a ratio so tiny estimates cannot underflow to 0/0
            err = abs(h) * abs(e5) * (abs(e5) / den)
        if err <= 1.0:
            err_sum += err * sc
            y = y_new
            t = t_new
            f = K[_NS]
            n_acc += 1
            if err == 0.0:
                fac = _MAX_FACTOR
            else:
                fac = _SAFETY * err ** (-_EXPO) * err_old ** _PI_BETA
                fac = min(_MAX_FACTOR, max(_MIN_FACTOR, fac))
            err_old = max(err, 1e-4)
            if not last:
                h = h * fac
        else:
            h *= max(_MIN_FACTOR, _SAFETY * err ** (-1.0 / 8.0))
    return y, status, h, err_sum, n_acc


@nb.njit(cache=True, nogil=True)
def torus_orbit(l, mu, omega, phi0, n_periods, rtol, atol, h0, max_steps):
    """Lifted phases at ``tau = 2 pi k``, ``k = 1..n_periods``, from ``phi(0) = phi0``.

    Returns ``(phis, status, h_last, err_sum)``.
    """
    out = np.empty(n_periods)
    phi = phi0
    h = h0
    err_total = 0.0
    status = OK
    for k in range(n_periods):
        # integrate from the reduced phase so rtol does not degrade with the lift
        base = TWO_PI * math.floor(phi / TWO_PI)
        red, status, h, err_sum, _ = integrate_torus(
            l, mu, omega, phi - base, 0.0, TWO_PI, rtol, atol, h, max_steps)
        phi = base + red
        err_total += err_sum
        out[k] = phi
        if status != OK:
            return out[:k + 1], status, h, err_total
    return out, status, h, err_total


# ---------------------------------------------------------------------------
# projectivized monodromy


@nb.njit(cache=True, nogil=True)
def lift_displacement(rec_Y, n_rec, phi0):
    """Lifted one-period displacement of the orbit through ``phi0``.

    The phase ``Phi = v/u`` is followed through the recorded fundamental
    matrices; the recorder's step cap keeps each increment below pi so the
    principal-branch unwrap is exact.
    """
    e = complex(math.cos(phi0), math.sin(phi0))
    prev = e
    total = 0.0
    for j in range(1, n_rec):
        W = rec_Y[j]
        cur = (W[1, 0] + W[1, 1] * e) / (W[0, 0] + W[0, 1] * e)
        q = cur / prev
        total += math.atan2(q.imag, q.real)
        prev = cur
    return total


@nb.njit(cache=True, nogil=True)
def _mobius_apply(M, phi):
    e = complex(math.cos(phi), math.sin(phi))
    w = (M[1, 0] + M[1, 1] * e) / (M[0, 0] + M[0, 1] * e)
    return math.atan2(w.imag, w.real)


@nb.njit(cache=True, nogil=True)
def _fixed_points(M):
    # Phi -> (M10 + M11 Phi)/(M00 + M01 Phi);  M01 Phi^2 + (M00 - M11) Phi - M10 = 0
    a = M[0, 1]
    b = M[0, 0] - M[1, 1]
    c = -M[1, 0]
    scale = abs(M[0, 0]) + abs(M[0, 1]) + abs(M[1, 0]) + abs(M[1, 1])
    if abs(a) <= 1e-300 + 1e-15 * scale:
        if abs(b) <= 1e-300:
            return 0.0j, 0.0j, False
        r = -c / b
        return r, r, True
    disc = np.sqrt(b * b - 4.0 * a * c + 0.0j)
    # cancellation-free pair
    if (b.conjugate() * disc).real >= 0.0:
        q = -0.5 * (b + disc)
    else:
        q = -0.5 * (b - disc)
    r1 = q / a
    if abs(q) > 0.0:
        r2 = c / q
    else:
        r2 = r1
    return r1, r2, True


@nb.njit(cache=True, nogil=True)
def monodromy_record(l, mu, omega, tau0, rtol, atol, max_steps):
    """Fundamental matrix after one counterclockwise circuit from ``e^{i tau0}``."""
    Y0 = np.zeros((2, 2), dtype=np.complex128)
    Y0[0, 0] = 1.0
    Y0[1, 1] = 1.0
    # cap per-step phase change at 1 rad (for lift unwrapping)
    rate = abs(l) + 2.0 * abs(mu) + 1.0 / omega
    hmax = 1.0 / (rate * TWO_PI)
    za = complex(tau0, 0.0)
    zb = complex(tau0 + TWO_PI, 0.0)
    return integrate_linear(ARC, za, zb, False, l, mu, omega, Y0, rtol, atol, hmax,
                            True, max_steps)


# result slots of mobius_cell
R_TRACE_RE = 0
R_TRACE_IM = 1
R_DET_RES = 2
R_MARGIN = 3
R_CLASS = 4
R_RHO = 5
R_FRAC = 6
R_INT = 7
R_STATUS = 8
R_NSTEPS = 9
R_FP_LIFT = 10
R_ERR = 11
N_SLOTS = 12


@nb.njit(cache=True, nogil=True)
def mobius_cell(l, mu, omega, rtol, atol, tol_boundary, max_steps, out):
    """Monodromy, lock class and Mobius rotation number of one parameter point.

    Class codes: 1 inside, 0 boundary, -1 outside.  For the boundary class
    ``rho`` is left as the lifted displacement at the (projected) circle
    fixed point; callers decide whether to fall back to direct averaging.
    """
    W, status, nsteps, rec_t, rec_Y, n_rec, err_sum = monodromy_record(
        l, mu, omega, 0.0, rtol, atol, max_steps)
    out[R_STATUS] = status
    out[R_NSTEPS] = nsteps
    out[R_ERR] = err_sum
    phase = complex(math.cos(math.pi * l), math.sin(math.pi * l))
    tr = phase * (W[0, 0] + W[1, 1])
    det = W[0, 0] * W[1, 1] - W[0, 1] * W[1, 0]
    det_ref = complex(math.cos(TWO_PI * l), -math.sin(TWO_PI * l))
    out[R_TRACE_RE] = tr.real
    out[R_TRACE_IM] = tr.imag
    out[R_DET_RES] = abs(det - det_ref)
    margin = abs(tr.real) - 2.0
    out[R_MARGIN] = margin
    tolb = tol_boundary * max(1.0, abs(tr.real))
    if margin > tolb:
        cls = 1
    elif margin < -tolb:
        cls = -1
    else:
        cls = 0
    out[R_CLASS] = cls

    r1, r2, ok = _fixed_points(W)
    out[R_FP_LIFT] = np.nan
    if cls >= 0 or not ok:
        # circle fixed point: take the root closest to |Phi| = 1
        if ok:
            p = r1 if abs(abs(r1) - 1.0) <= abs(abs(r2) - 1.0) else r2
            phi_star = math.atan2(p.imag, p.real)
        else:
            phi_star = 0.0
        d = lift_displacement(rec_Y, n_rec, phi_star)
        rho = d / TWO_PI
        out[R_FP_LIFT] = rho
        out[R_RHO] = rho
        out[R_FRAC] = 0.0
        out[R_INT] = round(rho)
        return
    # elliptic: the interior fixed point rotates by arg f'(p)
    p = r1 if abs(r1) < abs(r2) else r2
    den = W[0, 0] + W[0, 1] * p
    deriv = det / (den * den)
    theta = math.atan2(deriv.imag, deriv.real)
    if theta < 0.0:
        theta += TWO_PI
    frac = theta / TWO_PI
    if frac >= 1.0:
        frac = 0.0
    # integer part from a 4-period orbit: |S_K/(2 pi K) - rho| < 1/K
    x = 0.0
    s = 0.0
    for _ in range(4):
        s += lift_displacement(rec_Y, n_rec, x)
        x = _mobius_apply(W, x)
    n = round(s / (4.0 * TWO_PI) - frac)
    out[R_FRAC] = frac
    out[R_INT] = n
    out[R_RHO] = n + frac


@nb.njit(cache=True, nogil=True)
def mobius_batch(ls, mus, omega, rtol, atol, tol_boundary, max_steps, out):
    for i in range(ls.shape[0]):
        mobius_cell(ls[i], mus[i], omega, rtol, atol, tol_boundary, max_steps, out[i])
