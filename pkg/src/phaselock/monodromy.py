"""Monodromy of the linear system on the unit circle and its uses.

The torus equation is the projectivization ``Phi = v/u = exp(i phi)`` of the
linear system

    dW/dtau = [[-i (l + 2 mu cos tau), 1/(2 omega)], [1/(2 omega), 0]] W

(``z = exp(i tau)``).  Its monodromy ``M`` after one turn determines whether
the parameter point is phase-locked (``|tr M~| >= 2`` with
``M~ = exp(i pi l) M``) and, through the Mobius map it induces on the unit
circle, the rotation number itself.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .errors import AccuracyError, ConvergenceWarning, InvalidParams, StiffnessError
from .params import SystemParams, derive
from .torus import RhoEstimate, RhoMethod, rho_direct

# 2x2 complex128 ndarray
Mat2C = np.ndarray

TOL_BOUNDARY = 1e-8
MAX_STEPS = 2_000_000


@dataclass(frozen=True)
class MonodromyResult:
    M: Mat2C
    Mtilde: Mat2C
    trace: complex
    det_residual: float
    im_trace_residual: float

    @property
    def margin(self) -> float:
        return abs(self.trace.real) - 2.0


class LockKind(str, enum.Enum):
    INSIDE = "Inside"
    BOUNDARY = "Boundary"
    OUTSIDE = "Outside"


@dataclass(frozen=True)
class LockClass:
    kind: LockKind
    margin: float


def classify_margin(margin: float, trace_re: float, tol_boundary: float = TOL_BOUNDARY) -> LockKind:
    tb = tol_boundary * max(1.0, abs(trace_re))
    if margin > tb:
        return LockKind.INSIDE
    if margin < -tb:
        return LockKind.OUTSIDE
    return LockKind.BOUNDARY


def _check_tol(tol):
    if not tol > 0:
        raise InvalidParams(f"tol must be positive, got {tol}")


def _monodromy_double(l, mu, omega, tol, tau0):
    W, status, _, _, _, _, _ = K.monodromy_record(l, mu, omega, tau0, tol, tol, MAX_STEPS)
    if status != K.OK:
        raise StiffnessError(f"monodromy integration failed (status {status})")
    return W


def _monodromy_extended(l, mu, omega, tol, tau0, dps):
    import mpmath

    with mpmath.workdps(dps):
        c = 1 / (2 * mpmath.mpf(omega))
        lm = mpmath.mpf(l)
        mm = mpmath.mpf(mu)
        t0 = mpmath.mpf(tau0)

        def rhs(t, y):
            d = -1j * (lm + 2 * mm * mpmath.cos(t))
            return [d * y[0] + c * y[2], d * y[1] + c * y[3], c * y[0], c * y[1]]

        sol = mpmath.odefun(rhs, t0, [mpmath.mpc(1), mpmath.mpc(0), mpmath.mpc(0), mpmath.mpc(1)],
                            tol=mpmath.mpf(10) ** (-dps + 5))
        y = sol(t0 + 2 * mpmath.pi)
        return np.array([[complex(y[0]), complex(y[1])], [complex(y[2]), complex(y[3])]])


def monodromy(p: SystemParams, tol: float = 1e-12, tau0: float = 0.0,
              precision: str = "double", dps: int = 30) -> MonodromyResult:
    """Fundamental matrix after one counterclockwise turn of the unit circle.

    ``tau0`` moves the base point to ``exp(i tau0)`` (the result changes by
    conjugation only).  ``precision="extended"`` integrates with mpmath's
    Taylor-series solver at ``dps`` digits; it is slow and meant for spot
    checks near constrictions.
    """
    _check_tol(tol)
    d = derive(p)
    if precision == "double":
        M = _monodromy_double(d.l, d.mu, p.omega, tol, float(tau0))
    elif precision == "extended":
        M = _monodromy_extended(d.l, d.mu, p.omega, tol, float(tau0), dps)
    else:
        raise InvalidParams(f"unknown precision {precision!r}")
    phase = complex(math.cos(math.pi * d.l), math.sin(math.pi * d.l))
    Mt = phase * M
    det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
    det_ref = complex(math.cos(2 * math.pi * d.l), -math.sin(2 * math.pi * d.l))
    det_res = abs(det - det_ref)
    tr = complex(Mt[0, 0] + Mt[1, 1])
    if det_res > 100 * tol * max(1.0, float(np.abs(M).max()) ** 2):
        raise AccuracyError(f"det residual {det_res:.3g} exceeds 100*tol")
    return MonodromyResult(M, Mt, tr, float(det_res), abs(tr.imag))


def phase_lock_test(p: SystemParams, tol: float = 1e-12,
                    tol_boundary: float = TOL_BOUNDARY) -> LockClass:
    """Inside / Boundary / Outside from ``|tr M~|`` against 2."""
    res = monodromy(p, tol)
    m = res.margin
    return LockClass(classify_margin(m, res.trace.real, tol_boundary), m)


@dataclass(frozen=True)
class MobiusCell:
    """Raw output of the compiled per-point evaluator."""

    trace: float
    trace_im: float
    det_residual: float
    margin: float
    kind: LockKind
    rho: float
    frac: float
    n: int
    status: int
    steps: int
    err_sum: float


_KIND = {1: LockKind.INSIDE, 0: LockKind.BOUNDARY, -1: LockKind.OUTSIDE}


def _integrator_tol(tol: float) -> float:
    return min(max(tol * 1e-3, 1e-13), 1e-10)


def mobius_cell(p: SystemParams, tol: float = 1e-9,
                tol_boundary: float = TOL_BOUNDARY) -> MobiusCell:
    d = derive(p)
    out = np.zeros(K.N_SLOTS)
    itol = _integrator_tol(tol)
    K.mobius_cell(d.l, d.mu, p.omega, itol, itol, tol_boundary, MAX_STEPS, out)
    return _cell_from_slots(out)


def _cell_from_slots(out) -> MobiusCell:
    return MobiusCell(
        trace=float(out[K.R_TRACE_RE]), trace_im=float(out[K.R_TRACE_IM]),
        det_residual=float(out[K.R_DET_RES]), margin=float(out[K.R_MARGIN]),
        kind=_KIND[int(out[K.R_CLASS])], rho=float(out[K.R_RHO]),
        frac=float(out[K.R_FRAC]), n=int(out[K.R_INT]), status=int(out[K.R_STATUS]),
        steps=int(out[K.R_NSTEPS]), err_sum=float(out[K.R_ERR]))


def mobius_error_bound(cell: MobiusCell) -> float:
    """Heuristic error of a Mobius rotation number from the matrix accuracy.

    Locked: distance of the fixed-point lift from its integer.  Unlocked: the
    rotation angle satisfies ``|tr| = 2 |cos(pi frac)|``, so a trace error
    ``dt`` moves ``frac`` by about ``dt / (2 pi sqrt(4 - tr^2))``.
    """
    dt = 10.0 * (cell.det_residual + cell.err_sum) + 1e-15
    if cell.kind == LockKind.INSIDE:
        return abs(cell.rho - cell.n) + dt
    s = math.sqrt(max(4.0 - cell.trace * cell.trace, 0.0))
    return dt / (2.0 * math.pi * max(s, 1e-12))


def rho_mobius(p: SystemParams, tol: float = 1e-9,
               tol_boundary: float = TOL_BOUNDARY) -> RhoEstimate:
    """Rotation number from the Mobius map of one period.

    Fractional part: the interior fixed point ``p`` of the induced disk
    automorphism ``f`` is rotated by ``arg f'(p)``, and ``arg f'(p)/(2 pi)``
    equals the fractional part of ``rho`` with the counterclockwise
    orientation.  Integer part: the mean lifted displacement of four Mobius
    iterates of ``phi = 0`` is within 1/4 of ``rho``.  Locked points report
    the lifted displacement of a circle fixed point.  Near-parabolic points
    (``| |tr| - 2 | <= tol_boundary``) fall back to direct averaging.
    """
    _check_tol(tol)
    cell = mobius_cell(p, tol, tol_boundary)
    if cell.status != K.OK:
        raise StiffnessError(f"monodromy integration failed (status {cell.status})")
    if cell.kind == LockKind.BOUNDARY:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ConvergenceWarning)
            est = rho_direct(p, max(tol, 1e-6), max_periods=4096)
        return est
    return RhoEstimate(cell.rho, mobius_error_bound(cell), 1, RhoMethod.MOBIUS)
