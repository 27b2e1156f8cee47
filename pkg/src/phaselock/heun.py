"""Series solutions of the two Heun equations attached to an axis point.

For ``B = omega l`` the linear system reduces to

    z^2 E'' + ((l+1) z + mu (1 - z^2)) E' + (lam - mu (l+1) z) E = 0     (Heun)

and its conjugate with ``l -> -l``.  Both have three-term recurrences for the
Taylor coefficients at ``z = 0``.  Three things are built on top of them:

* ``polynomial_condition``: for the conjugate equation the series stops at
  degree ``l-1`` exactly when ``a_l = 0``; after scaling ``b_k = mu^k a_k`` and
  eliminating ``mu^2 = 1/(4 omega^2) - lam`` this is a degree-``l`` polynomial
  in ``lam`` whose admissible roots are the candidate simple intersections;
* ``entire_indicator``: the Heun equation has an entire solution iff the
  minimal solution of its recurrence also satisfies the ``k = 0`` relation;
  the minimal solution is obtained by backward (Miller) recursion;
* scans of the indicator along an axis, giving constriction candidates.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.optimize import brentq

from .errors import InvalidParams, TruncationError
from .params import DerivedParams, SystemParams, derive


class Variant(str, enum.Enum):
    HEUN = "Heun"
    CONJUGATE = "ConjugateHeun"


def _need_mu(d: DerivedParams):
    if d.mu == 0:
        raise InvalidParams("the Heun recurrences need mu != 0")


def recurrence_step_heun(k: int, a_k: float, a_km1: float, d: DerivedParams) -> float:
    _need_mu(d)
    return (-(k * (k + d.l) + d.lam) * a_k + d.mu * (k + d.l) * a_km1) / (d.mu * (k + 1))


def recurrence_step_conjugate(k: int, a_k: float, a_km1: float, d: DerivedParams) -> float:
    _need_mu(d)
    return -((k * (k - d.l) + d.lam) * a_k + d.mu * (d.l - k) * a_km1) / (d.mu * (k + 1))


@dataclass(frozen=True)
class HeunRecurrence:
    variant: Variant
    derived: DerivedParams
    coeffs: np.ndarray
    K: int


def heun_series(d: DerivedParams, variant: Variant = Variant.HEUN, K: int = 40) -> HeunRecurrence:
    """Coefficients ``a_0..a_K`` of the formal solution with ``a_0 = 1``."""
    _need_mu(d)
    step = recurrence_step_heun if variant == Variant.HEUN else recurrence_step_conjugate
    a = np.zeros(K + 1)
    a[0] = 1.0
    if K >= 1:
        a[1] = -d.lam / d.mu
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(1, K):
            a[k + 1] = step(k, a[k], a[k - 1], d)
    return HeunRecurrence(Variant(variant), d, a, K)


def ode_residual(rec: HeunRecurrence) -> np.ndarray:
    """Taylor coefficients ``0..K-1`` of the ODE applied to the truncated series.

    Computed with polynomial arithmetic, independently of the recurrence.
    """
    d = rec.derived
    l = d.l if rec.variant == Variant.HEUN else -d.l
    E = rec.coeffs
    dE = npoly.polyder(E)
    d2E = npoly.polyder(E, 2)
    t1 = npoly.polymul([0, 0, 1], d2E)
    t2 = npoly.polymul([d.mu, l + 1, -d.mu], dE)
    t3 = npoly.polymul([d.lam, -d.mu * (l + 1)], E)
    res = npoly.polyadd(npoly.polyadd(t1, t2), t3)
    out = np.zeros(rec.K)
    n = min(rec.K, res.size)
    out[:n] = res[:n]
    return out


def evaluate_series(coeffs: np.ndarray, x: float) -> tuple[float, float, float, int]:
    """Optimally truncated value and derivative of ``sum a_k x^k``.

    Stops before the smallest term envelope ``max(|t_k|, |t_{k+1}|)`` (isolated
    exact zeros, e.g. ``a_1 = 0`` at ``lam = 0``, do not stop the sum).
    Returns ``(E, E', first dropped term, terms used)``.
    """
    k = np.arange(coeffs.size)
    with np.errstate(over="ignore", invalid="ignore"):
        terms = coeffs * x ** k
    mags = np.abs(terms)
    mags[~np.isfinite(mags)] = np.inf
    env = np.maximum(mags[1:-1], mags[2:])
    kmin = int(np.argmin(env)) + 1 if env.size else coeffs.size
    n = kmin
    E = float(terms[:n].sum())
    dE = float(np.sum(k[1:n] * coeffs[1:n] * x ** (k[1:n] - 1))) if n > 1 else 0.0
    return E, dE, float(env[kmin - 1]) if env.size else 0.0, n


# ---------------------------------------------------------------------------
# polynomial condition


@dataclass(frozen=True)
class PolyCondition:
    l: int
    omega: float
    coeffs: tuple[Fraction, ...]  # ascending powers of lam
    roots: tuple[float, ...]  # real roots
    admissible: tuple[float, ...]  # real roots with lam < 1/(4 omega^2)
    ordinates: tuple[float, ...]  # A = 2 omega sqrt(1/(4 omega^2) - lam), ascending

    def __call__(self, lam: float) -> float:
        return float(npoly.polyval(lam, [float(c) for c in self.coeffs]))


def _padd(p, q):
    n = max(len(p), len(q))
    return [(p[i] if i < len(p) else 0) + (q[i] if i < len(q) else 0) for i in range(n)]


def _pscale(p, s):
    return [s * c for c in p]


def _pmul_lin(p, c0, c1):
    # p * (c0 + c1 lam)
    out = [Fraction(0)] * (len(p) + 1)
    for i, c in enumerate(p):
        out[i] += c * c0
        out[i + 1] += c * c1
    return out


def polynomial_condition(l: int, omega: float) -> PolyCondition:
    """``P_l(lam) = mu^l a_l`` of the conjugate recurrence with ``mu`` eliminated.

    The coefficients are exact rationals in the binary value of ``omega``.
    """
    if int(l) != l or l < 1:
        raise InvalidParams(f"l must be a positive integer, got {l}")
    if not omega > 0:
        raise InvalidParams(f"omega must be positive, got {omega}")
    l = int(l)
    c2 = 1 / (4 * Fraction(omega) ** 2)
    # (k+1) b_{k+1} = -(k(k-l) + lam) b_k - (c2 - lam)(l - k) b_{k-1}
    b_prev = [Fraction(1)]
    b = [Fraction(0), Fraction(-1)]
    for k in range(1, l):
        t1 = _pmul_lin(b, Fraction(-k * (k - l)), Fraction(-1))
        t2 = _pmul_lin(b_prev, -c2 * (l - k), Fraction(l - k))
        b_prev, b = b, _pscale(_padd(t1, t2), Fraction(1, k + 1))
    while len(b) > 1 and b[-1] == 0:
        b.pop()
    fc = np.array([float(c) for c in b])
    if fc.size <= 1:
        raw = np.array([])
    else:
        raw = np.roots(fc[::-1])
    roots = []
    for z in raw:
        if abs(z.imag) <= 1e-9 * max(1.0, abs(z)):
            x = float(z.real)
            for _ in range(3):  # Newton polish on the float polynomial
                dp = npoly.polyval(x, npoly.polyder(fc))
                if dp == 0:
                    break
                x -= npoly.polyval(x, fc) / dp
            roots.append(x)
    roots.sort()
    c2f = float(c2)
    adm = [x for x in roots if x < c2f]
    ords = sorted(2.0 * omega * math.sqrt(c2f - x) for x in adm)
    return PolyCondition(l, float(omega), tuple(b), tuple(roots), tuple(adm), tuple(ords))


# ---------------------------------------------------------------------------
# entire-solution indicator


@dataclass(frozen=True)
class EntireIndicator:
    xi: float
    K_used: int
    condition_estimate: float
    rounding_bound: float


def default_order(d: DerivedParams) -> int:
    return max(50, math.ceil(8 * abs(d.mu) + 4 * math.sqrt(abs(d.lam)) + 2 * abs(d.l)))


_EPS = np.finfo(float).eps


def _xi_fixed(l: float, mu: float, lam: float, K: int) -> tuple[float, float, float]:
    """Backward (Miller) recursion of fixed order; returns (xi, cond, rounding bound).

    The same recursion run on absolute values bounds the size of every
    intermediate sum, so ``eps * K * |bound residual| / norm`` bounds the
    rounding error that cancellation at small ``k`` leaves in ``xi``.
    """
    m_next, m = 0.0, 1.0  # m_{K+1}, m_K
    a_next, a = 0.0, 1.0  # same recursion on magnitudes
    log_scale = 0.0
    peak = 0.0
    for k in range(K, 0, -1):
        m_prev = (mu * (k + 1) * m_next + (k * (k + l) + lam) * m) / (mu * (k + l))
        a_prev = (mu * (k + 1) * a_next + abs(k * (k + l) + lam) * a) / (mu * (k + l))
        m_next, m = m, m_prev
        a_next, a = a, a_prev
        s = max(abs(m), abs(m_next), a, a_next)
        if s > 1e100:
            m /= s
            m_next /= s
            a /= s
            a_next /= s
            log_scale += math.log(s)
        peak = max(peak, math.log(max(abs(m), 1e-300)) + log_scale)
    norm = math.hypot(m, m_next)
    xi = (mu * m_next + lam * m) / norm
    noise = 4 * _EPS * (K + 2) * (mu * a_next + abs(lam) * a) / norm
    cond = peak - (math.log(norm) + log_scale)
    return xi, cond, noise


def _xi_fixed_mp(l: int, mu: float, lam: float, K: int, dps: int) -> tuple[float, float]:
    """``_xi_fixed`` in mpmath at ``dps`` digits; returns (xi, rounding bound)."""
    import mpmath

    with mpmath.workdps(dps):
        mu_m, lam_m = mpmath.mpf(mu), mpmath.mpf(lam)
        m_next, m = mpmath.mpf(0), mpmath.mpf(1)
        a_next, a = mpmath.mpf(0), mpmath.mpf(1)
        for k in range(K, 0, -1):
            den = mu_m * (k + l)
            c = k * (k + l) + lam_m
            m_next, m = m, (mu_m * (k + 1) * m_next + c * m) / den
            a_next, a = a, (mu_m * (k + 1) * a_next + abs(c) * a) / den
        norm = mpmath.sqrt(m * m + m_next * m_next)
        xi = (mu_m * m_next + lam_m * m) / norm
        bound = 4 * mpmath.mpf(10) ** (-dps) * (K + 2) * (mu_m * a_next + abs(lam_m) * a) / norm
        return float(xi), float(bound)


XI_ABS_TARGET = 1e-13


def _xi_value(l: int, mu: float, lam: float, K: int) -> tuple[float, float, float]:
    """``_xi_fixed`` with an automatic switch to extended precision.

    When the rounding bound exceeds ``XI_ABS_TARGET`` the recursion is redone
    in mpmath, adding digits until the bound computed at the working precision
    meets the target.
    """
    xi, cond, noise = _xi_fixed(l, mu, lam, K)
    if noise <= XI_ABS_TARGET:
        return xi, cond, noise
    lost = math.log10(noise / XI_ABS_TARGET) if math.isfinite(noise) else 100.0
    dps = max(30, 20 + math.ceil(lost))
    while dps <= 4000:
        xi, bound = _xi_fixed_mp(l, mu, lam, K, dps)
        if bound <= XI_ABS_TARGET:
            return xi, cond, bound
        dps += 10 + math.ceil(math.log10(bound / XI_ABS_TARGET))
    raise TruncationError("entire indicator: extended precision did not settle")


def entire_indicator(d: DerivedParams, K: int | None = None, refine: bool = True,
                     rtol: float = 1e-8) -> EntireIndicator:
    """Normalized ``k = 0`` residual of the minimal solution of the Heun recurrence.

    ``xi = (mu m_1 + lam m_0) / |(m_0, m_1)|``; it vanishes exactly when the
    Heun equation has an entire solution.  With ``refine`` the order is doubled
    until ``xi(K)`` and ``xi(2K)`` agree to relative ``rtol``, or to within
    the rounding bound (whichever is larger; absolute floor 1e-14).
    ``condition_estimate`` is ``ln(max |m_k| / |(m_0, m_1)|)``.
    """
    if not d.mu > 0:
        raise InvalidParams("entire_indicator needs mu > 0")
    li = d.integer_l()
    if li is None or li < 0:
        raise InvalidParams("entire_indicator needs a non-negative integer l")
    K = default_order(d) if K is None else int(K)
    xi, cond, noise = _xi_value(li, d.mu, d.lam, K)
    if not refine:
        return EntireIndicator(xi, K, cond, noise)
    for _ in range(5):
        xi2, cond2, noise2 = _xi_value(li, d.mu, d.lam, 2 * K)
        if abs(xi2 - xi) <= max(rtol * abs(xi2), noise + noise2, 1e-14):
            return EntireIndicator(xi2, 2 * K, cond2, noise2)
        xi, cond, noise, K = xi2, cond2, noise2, 2 * K
    raise TruncationError(f"entire indicator not converged up to K={K}")


# ---------------------------------------------------------------------------
# axis scans


class CandidateStatus(str, enum.Enum):
    VALIDATED = "Validated"
    SUSPECT = "Suspect"


@dataclass(frozen=True)
class AxisConstriction:
    """Zero of the entire-solution indicator on an axis, checked against ``M~``."""

    l: int
    omega: float
    A: float
    xi_bracket: tuple[float, float]
    identity_residual: float  # min over signs of max |M~ -/+ Id|
    identity_sign: int  # +1 if M~ ~ Id, -1 if M~ ~ -Id
    rho: float
    status: CandidateStatus

    @property
    def B(self) -> float:
        return self.omega * self.l


def _xi_on_axis(l, omega, A, K):
    d = derive(SystemParams.on_axis(omega, l, A))
    return _xi_value(l, d.mu, d.lam, K)[0]


def scan_indicator(l: int, omega: float, A_range: tuple[float, float],
                   step: float | None = None, K: int | None = None):
    """Sample ``xi`` on a uniform grid of ``A``; returns (A values, xi values, K)."""
    A0, A1 = A_range
    step = 0.05 * omega if step is None else step
    n = max(2, int(math.ceil((A1 - A0) / step)) + 1)
    As = np.linspace(A0, A1, n)
    if K is None:
        d_hi = derive(SystemParams.on_axis(omega, l, A1))
        K = default_order(d_hi)
        # make sure the fixed order is converged at the far end of the range
        K = entire_indicator(d_hi, K).K_used
    xs = np.array([_xi_on_axis(l, omega, A, K) for A in As])
    return As, xs, K


def find_constrictions_on_axis(r: int, omega: float, A_range: tuple[float, float],
                               tol: float = 1e-12, identity_tol: float = 1e-6
                               ) -> list[AxisConstriction]:
    """Sign changes of ``xi`` on ``B = omega r``, refined and validated.

    Every zero is checked for trivial projective monodromy ``M~ = +-Id``;
    failures are kept with status Suspect.
    """
    from .monodromy import mobius_cell, monodromy

    if r < 0 or int(r) != r:
        raise InvalidParams("r must be a non-negative integer")
    A0, A1 = A_range
    if not (A0 > 0 and A1 > A0):
        if A1 == A0 and A0 > 0:
            return []
        raise InvalidParams(f"A_range must lie in (0, inf) and be ordered, got {A_range}")
    As, xs, K = scan_indicator(r, omega, A_range)
    out = []
    for i in range(As.size - 1):
        if xs[i] == 0.0:
            Az = As[i]
        elif xs[i] * xs[i + 1] < 0:
            Az = brentq(lambda A: _xi_on_axis(r, omega, A, K), As[i], As[i + 1],
                        xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=200)
        else:
            continue
        p = SystemParams.on_axis(omega, r, Az)
        Mt = monodromy(p, 1e-13).Mtilde
        I = np.eye(2)
        rp = float(np.abs(Mt - I).max())
        rm = float(np.abs(Mt + I).max())
        res, sgn = (rp, 1) if rp <= rm else (rm, -1)
        rho = mobius_cell(p, 1e-10).rho
        status = CandidateStatus.VALIDATED if res < identity_tol else CandidateStatus.SUSPECT
        out.append(AxisConstriction(int(r), float(omega), float(Az),
                                    (float(xs[i]), float(xs[i + 1])), res, sgn, rho, status))
    return out


@dataclass(frozen=True)
class SimpleIntersectionRecord:
    r: int
    omega: float
    A: float
    lam: float
    margin: float
    xi: float
    rho: float
    higher: bool = False
    rejected: tuple[tuple[float, str], ...] = field(default=())

    @property
    def B(self) -> float:
        return self.omega * self.r


def find_simple_intersections(r: int, omega: float, margin_tol: float = 1e-7,
                              xi_tol: float = 1e-8) -> list[SimpleIntersectionRecord]:
    """Candidates from ``P_r`` filtered by Boundary, ``xi != 0`` and ``rho = r``.

    The maximal-ordinate survivor is flagged ``higher``.  Rejected candidates
    are attached to every record (and are the whole story when the list is
    empty, which callers should treat as an alarm).
    """
    from .monodromy import mobius_cell

    if r < 1 or int(r) != r:
        raise InvalidParams("r must be a positive integer")
    pc = polynomial_condition(r, omega)
    keep = []
    rejected = []
    for lam in pc.admissible:
        A = 2.0 * omega * math.sqrt(max(pc.omega ** -2 / 4 - lam, 0.0))
        if A <= 0:
            rejected.append((A, "on the B-axis"))
            continue
        p = SystemParams.on_axis(omega, r, A)
        cell = mobius_cell(p, 1e-10)
        xi = entire_indicator(derive(p)).xi
        if abs(cell.margin) > margin_tol:
            rejected.append((A, f"not boundary (margin {cell.margin:.3g})"))
        elif abs(xi) <= xi_tol:
            rejected.append((A, "entire solution (constriction)"))
        elif round(cell.rho) != r:
            rejected.append((A, f"boundary of another area (rho {cell.rho:.6g})"))
        else:
            keep.append((A, float(lam), cell.margin, float(xi), cell.rho))
    keep.sort()
    rej = tuple(rejected)
    return [SimpleIntersectionRecord(int(r), float(omega), A, lam, m, xi, rho,
                                     higher=(i == len(keep) - 1), rejected=rej)
            for i, (A, lam, m, xi, rho) in enumerate(keep)]
