"""Parameter-plane products built on the per-point engines.

Grid sweeps of rotation number and lock class, boundary tracing of the
phase-lock areas, comparison of the boundaries with their Bessel asymptotics,
checks on the axes (rays above the highest simple intersection, garland
structure) and the catalog of constrictions and simple intersections.
"""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import _kernels as K
from .bessel import besselj
from .connection import ConstrictionSign, classify_constriction
from .errors import ConvergenceWarning, InconsistencyError, InvalidParams, PhaselockError, RangeError
from .heun import (AxisConstriction, CandidateStatus, find_constrictions_on_axis,
                   find_simple_intersections)
from .monodromy import TOL_BOUNDARY, LockKind, _integrator_tol, mobius_cell
from .params import SystemParams
from .torus import rho_direct

KIND_CODE = {LockKind.INSIDE: 1, LockKind.BOUNDARY: 0, LockKind.OUTSIDE: -1}


# ---------------------------------------------------------------------------
# sweeps


@dataclass(frozen=True)
class GridSpec:
    B_min: float
    B_max: float
    A_min: float
    A_max: float
    nB: int
    nA: int

    def __post_init__(self):
        if self.nB < 1 or self.nA < 1:
            raise InvalidParams("grid needs at least one cell per direction")
        if not (self.B_max > self.B_min and self.A_max > self.A_min):
            raise InvalidParams("grid ranges must be increasing")

    @staticmethod
    def _centers(lo: float, hi: float, n: int) -> np.ndarray:
        # (2j + 1 - n) is antisymmetric in j, so symmetric windows give exactly
        # mirrored cell centres
        mid = 0.5 * (lo + hi)
        half = 0.5 * (hi - lo)
        return mid + half * (2.0 * np.arange(n) + 1.0 - n) / n

    @property
    def B_centers(self) -> np.ndarray:
        return self._centers(self.B_min, self.B_max, self.nB)

    @property
    def A_centers(self) -> np.ndarray:
        return self._centers(self.A_min, self.A_max, self.nA)


@dataclass
class PortraitGrid:
    omega: float
    spec: GridSpec
    method: str
    rho: np.ndarray  # (nA, nB), row i is A_centers[i]
    margin: np.ndarray
    kind: np.ndarray  # int8: 1 inside, 0 boundary, -1 outside
    fallback: np.ndarray  # bool: rho from direct averaging
    errors: list = field(default_factory=list)  # (i, j, message)

    @property
    def B_range(self):
        return (self.spec.B_min, self.spec.B_max)

    @property
    def A_range(self):
        return (self.spec.A_min, self.spec.A_max)

    @property
    def nB(self):
        return self.spec.nB

    @property
    def nA(self):
        return self.spec.nA

    def inside_mask(self) -> np.ndarray:
        return self.kind == 1


def _chunks(n: int, size: int):
    return [(s, min(n, s + size)) for s in range(0, n, size)]


def sweep(omega: float, spec: GridSpec, method: str = "Mobius", tol: float = 1e-9,
          tol_boundary: float = TOL_BOUNDARY, threads: int | None = None,
          chunk: int = 512) -> PortraitGrid:
    """Evaluate every cell of ``spec`` (cell centres).

    Mobius: compiled per-cell monodromy with the Mobius rotation number;
    Boundary cells fall back to direct averaging.  Direct: lock class from
    the monodromy, rho from direct averaging for every cell.  Cells are
    independent and written to fixed slots, so the result does not depend on
    ``threads``.  Failures are recorded per cell and never abort the sweep.
    """
    if method not in ("Mobius", "Direct"):
        raise InvalidParams(f"unknown method {method!r}")
    threads = threads or os.cpu_count() or 1
    Bs = spec.B_centers
    As = spec.A_centers
    BB, AA = np.meshgrid(Bs, As)
    ls = np.ascontiguousarray((BB / omega).ravel())
    mus = np.ascontiguousarray((AA / (2.0 * omega)).ravel())
    n = ls.size
    out = np.zeros((n, K.N_SLOTS))
    itol = _integrator_tol(tol)

    def run(bounds):
        s, e = bounds
        K.mobius_batch(ls[s:e], mus[s:e], float(omega), itol, itol, tol_boundary,
                       2_000_000, out[s:e])

    with ThreadPoolExecutor(max_workers=threads) as ex:
        list(ex.map(run, _chunks(n, chunk)))

    rho = out[:, K.R_RHO].copy()
    margin = out[:, K.R_MARGIN].copy()
    kind = out[:, K.R_CLASS].astype(np.int8)
    status = out[:, K.R_STATUS].astype(int)
    fallback = np.zeros(n, dtype=bool)
    errors = []
    for idx in np.flatnonzero(status != K.OK):
        rho[idx] = np.nan
        errors.append((int(idx // spec.nB), int(idx % spec.nB),
                       f"monodromy integration status {status[idx]}"))
    if method == "Direct":
        todo = [i for i in range(n) if status[i] == K.OK]
    else:
        todo = [i for i in range(n) if status[i] == K.OK and kind[i] == 0]

    def direct(idx):
        p = SystemParams(omega, float(BB.flat[idx]), float(AA.flat[idx]))
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", ConvergenceWarning)
                return idx, rho_direct(p, max(tol, 1e-6) if method == "Mobius" else tol,
                                       max_periods=4096 if method == "Mobius" else 65536).rho, None
        except PhaselockError as exc:
            return idx, np.nan, str(exc)

    if todo:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(direct, todo))
        for idx, val, err in results:
            rho[idx] = val
            fallback[idx] = True
            if err is not None:
                errors.append((int(idx // spec.nB), int(idx % spec.nB), err))
    errors.sort()
    shape = (spec.nA, spec.nB)
    return PortraitGrid(float(omega), spec, method, rho.reshape(shape), margin.reshape(shape),
                        kind.reshape(shape), fallback.reshape(shape), errors)


# ---------------------------------------------------------------------------
# boundary curves


@dataclass(frozen=True)
class BoundaryCurve:
    """Left (``side="minus"``) or right (``"plus"``) boundary of ``L_r``."""

    r: int
    side: str
    omega: float
    A: np.ndarray
    B: np.ndarray
    residuals: np.ndarray  # | |tr M~| - 2 | at the located point
    gaps: tuple[float, ...] = ()

    @property
    def samples(self):
        return list(zip(self.A.tolist(), self.B.tolist()))


def _rho_value(omega: float, B: float, A: float, itol: float, tol_boundary: float):
    out = np.zeros(K.N_SLOTS)
    K.mobius_cell(B / omega, A / (2.0 * omega), omega, itol, itol, tol_boundary, 2_000_000, out)
    locked = out[K.R_CLASS] >= 0
    val = float(round(out[K.R_RHO])) if locked else float(out[K.R_RHO])
    return val, float(out[K.R_MARGIN])


def locate_boundary(r: int, side: str, omega: float, A: float, tol: float = 1e-11,
                    tol_boundary: float = 0.0, itol: float = 1e-13):
    """Abscissa of the left/right boundary of ``{rho = r}`` at ordinate ``A``.

    Bisection on ``rho >= r`` (left) or ``rho > r`` (right); rho is monotone in
    B and, for a locked point, its integer is exact.  ``tol_boundary = 0``
    lets the margin sign decide locking: where both boundaries meet (B-axis,
    constrictions) the margin only touches zero, so a tolerance band would
    widen into an error of order ``sqrt(tol_boundary)`` in B.  The bracket
    ``[r omega - 1, r omega + 1]`` is guaranteed by ``|rho - B/omega| <= 1/omega``.
    Returns ``(B, residual)`` or ``None`` when the bracket fails.
    """
    if side not in ("minus", "plus"):
        raise InvalidParams("side must be 'minus' or 'plus'")

    def pred(B):
        v, _ = _rho_value(omega, B, A, itol, tol_boundary)
        return v >= r if side == "minus" else v > r

    lo = r * omega - 1.0 - 1e-3
    hi = r * omega + 1.0 + 1e-3
    if pred(lo) or not pred(hi):
        return None
    while hi - lo > tol * max(1.0, abs(hi)):
        mid = 0.5 * (lo + hi)
        if pred(mid):
            hi = mid
        else:
            lo = mid
    B = 0.5 * (lo + hi)
    _, m = _rho_value(omega, B, A, itol, tol_boundary)
    return B, abs(m)


def trace_boundary(r: int, side: str, omega: float, A_range: tuple[float, float],
                   tol: float = 1e-11, n: int = 101, threads: int | None = None) -> BoundaryCurve:
    """Sample one boundary curve of ``L_r`` at ``n`` equally spaced ordinates.

    ``A = 0`` is allowed (it gives the points where the area meets the B-axis).
    """
    A0, A1 = A_range
    if A0 < 0 or A1 < A0:
        raise InvalidParams(f"A_range must satisfy 0 <= A_min <= A_max, got {A_range}")
    As = np.linspace(A0, A1, n) if n > 1 else np.array([A0])
    threads = threads or os.cpu_count() or 1
    with ThreadPoolExecutor(max_workers=threads) as ex:
        res = list(ex.map(lambda A: locate_boundary(r, side, omega, float(A), tol), As))
    keep = [i for i, x in enumerate(res) if x is not None]
    gaps = tuple(float(As[i]) for i, x in enumerate(res) if x is None)
    return BoundaryCurve(int(r), side, float(omega), As[keep],
                         np.array([res[i][0] for i in keep]),
                         np.array([res[i][1] for i in keep]), gaps)


def growth_point(r: int, omega: float) -> float:
    """Where ``L_r`` meets the B-axis: ``sqrt(r^2 omega^2 + 1)``."""
    return math.sqrt(r * r * omega * omega + 1.0)


# ---------------------------------------------------------------------------
# Bessel asymptotics


@dataclass(frozen=True)
class BesselReport:
    r: int
    side: str
    omega: float
    A: np.ndarray
    deviation: np.ndarray  # g(A) - (r omega -/+ |J_r(A/omega)|)
    scaled: np.ndarray  # |deviation| A / ln A
    constant: float  # max of scaled
    trend_ratio: float  # max scaled on the upper half / max on the lower half
    slope: float  # least-squares slope of scaled against A, per unit A

    def bounded(self, C: float, max_ratio: float = 2.0) -> bool:
        return self.constant <= C and self.trend_ratio <= max_ratio


def bessel_compare(curve: BoundaryCurve) -> BesselReport:
    """Deviation of a boundary curve from its Bessel asymptotics.

    The two analytic boundary functions are ``r omega -/+ J_r(-A/omega)``; they
    cross at the constrictions, so the left curve is
    ``r omega - |J_r(A/omega)|`` and the right one ``r omega + |J_r(A/omega)|``,
    each up to ``O(ln A / A)``.
    """
    A = np.asarray(curve.A, dtype=float)
    if A.size < 4 or A.min() < 10.0 * curve.omega:
        raise RangeError("Bessel comparison needs at least 4 samples with A >= 10 omega")
    J = np.array([abs(besselj(curve.r, a / curve.omega)) for a in A])
    sgn = -1.0 if curve.side == "minus" else 1.0
    dev = np.asarray(curve.B) - (curve.r * curve.omega + sgn * J)
    scaled = np.abs(dev) * A / np.log(A)
    half = A.size // 2
    ratio = float(scaled[half:].max() / max(scaled[:half].max(), 1e-300))
    slope = float(np.polyfit(A, scaled, 1)[0])
    return BesselReport(curve.r, curve.side, curve.omega, A, dev, scaled,
                        float(scaled.max()), ratio, slope)


# ---------------------------------------------------------------------------
# ray and garland checks


@dataclass(frozen=True)
class RayCheck:
    r: int
    omega: float
    A_base: float
    A_max: float
    passed: bool
    samples: tuple[tuple[float, str, float], ...]  # (A, kind, rho)
    offending: tuple[tuple[float, str, float], ...]


def verify_ray(r: int, omega: float, A_max: float, tol: float = 1e-10,
               A_base: float | None = None, step: float | None = None) -> RayCheck:
    """Every sample of ``{omega r} x [A(P_r), A_max]`` is locked with ``rho = r``.

    ``A_base`` defaults to the highest simple intersection on the axis.
    """
    if r < 1:
        raise InvalidParams("the ray check needs r >= 1")
    if A_base is None:
        sis = find_simple_intersections(r, omega)
        if not sis:
            return RayCheck(r, omega, math.nan, A_max, False, (), ((math.nan, "no simple intersection", math.nan),))
        A_base = max(s.A for s in sis)
    step = 0.01 * omega if step is None else step
    if A_max <= A_base:
        As = np.array([A_base])
    else:
        As = np.linspace(A_base, A_max, max(2, int(math.ceil((A_max - A_base) / step)) + 1))
    samples = []
    bad = []
    for A in As:
        c = mobius_cell(SystemParams.on_axis(omega, r, float(A)), tol)
        rec = (float(A), c.kind.value, c.rho)
        samples.append(rec)
        if c.kind == LockKind.OUTSIDE or round(c.rho) != r:
            bad.append(rec)
    return RayCheck(int(r), float(omega), float(A_base), float(A_max), not bad,
                    tuple(samples), tuple(bad))


@dataclass(frozen=True)
class GarlandEvidence:
    r: int
    omega: float
    A_range: tuple[float, float]
    off_axis: tuple[AxisConstriction, ...]  # constrictions of L_r on other axes
    on_axis: tuple[AxisConstriction, ...]
    segment_checks: tuple[tuple[float, float, bool], ...]  # (A_j, A_j+1, inside)
    status: str = "conjecture evidence"


def garland_scan(r: int, omega: float, A_range: tuple[float, float],
                 samples_per_segment: int = 25) -> GarlandEvidence:
    """Evidence on where the constrictions of ``L_r`` sit.

    Axes ``B = m omega`` with ``0 <= m < r``, ``m = r (mod 2)`` are scanned for
    constrictions belonging to ``L_r`` (off-axis ones); on ``B = r omega`` the
    segments between consecutive constrictions of ``L_r`` are sampled for
    inclusion in ``L_r``.
    """
    if r < 0:
        raise InvalidParams("r must be non-negative")
    off = []
    for m in range(r % 2, r, 2):
        for c in find_constrictions_on_axis(m, omega, A_range):
            if round(c.rho) == r:
                off.append(c)
    on = [c for c in find_constrictions_on_axis(r, omega, A_range) if round(c.rho) == r]
    segs = []
    for c1, c2 in zip(on, on[1:]):
        ok = True
        for A in np.linspace(c1.A, c2.A, samples_per_segment + 2)[1:-1]:
            cell = mobius_cell(SystemParams.on_axis(omega, r, float(A)), 1e-10)
            if cell.kind == LockKind.OUTSIDE or round(cell.rho) != r:
                ok = False
                break
        segs.append((c1.A, c2.A, ok))
    return GarlandEvidence(int(r), float(omega), tuple(A_range), tuple(off), tuple(on), tuple(segs))


# ---------------------------------------------------------------------------
# catalog


@dataclass(frozen=True)
class CatalogRow:
    kind: str  # "constriction" | "simple"
    r: int
    B: float
    A: float
    sign: str
    cb_ratio: float
    xi: float
    c0: float
    c1: float
    residuals: dict
    flags: tuple[str, ...]


@dataclass
class Catalog:
    omega: float
    r_max: int
    A_max: float
    constrictions: list = field(default_factory=list)  # ConstrictionRecord
    simple_intersections: list = field(default_factory=list)  # SimpleIntersectionRecord
    higher_points: dict = field(default_factory=dict)  # r -> (B, A)
    ray_checks: dict = field(default_factory=dict)  # r -> bool
    rows: list = field(default_factory=list)  # CatalogRow
    alarms: list = field(default_factory=list)  # theorem-level violations
    discrepancies: list = field(default_factory=list)  # reported, not reconciled
    evidence: list = field(default_factory=list)  # conjecture-level findings


def boundary_crossings_on_axis(r: int, omega: float, A_range: tuple[float, float],
                               step: float | None = None) -> list[float]:
    """Ordinates where ``|tr M~| - 2`` changes sign on ``B = r omega`` with rho = r on the locked side."""
    step = 0.01 * omega if step is None else step
    A0, A1 = A_range
    As = np.linspace(A0, A1, max(2, int(math.ceil((A1 - A0) / step)) + 1))

    def cell(A):
        return mobius_cell(SystemParams.on_axis(omega, r, float(A)), 1e-10)

    cells = [cell(A) for A in As]
    out = []
    for i in range(As.size - 1):
        m0, m1 = cells[i].margin, cells[i + 1].margin
        if m0 * m1 < 0:
            locked = cells[i] if m0 > 0 else cells[i + 1]
            if round(locked.rho) != r:
                continue
            out.append(brentq(lambda A: cell(A).margin, As[i], As[i + 1], xtol=1e-12))
    return out


def build_catalog(omega: float, r_max: int, A_max: float, ray_span: float | None = None
                  ) -> Catalog:
    """Constrictions (``l <= r_max``) and simple intersections (``1 <= r <= r_max``).

    Theorem-level problems go to ``alarms``; unmatched boundary crossings on
    an axis (neither a simple intersection nor a constriction) go to
    ``discrepancies``; sign and garland findings go to ``evidence``.
    """
    cat = Catalog(float(omega), int(r_max), float(A_max))
    A_lo = min(0.05 * omega, A_max / 2)
    for l in range(0, r_max + 1):
        for ac in find_constrictions_on_axis(l, omega, (A_lo, A_max)):
            r = int(round(ac.rho))
            flags = []
            if ac.status != CandidateStatus.VALIDATED:
                flags.append("suspect")
                cat.discrepancies.append(f"indicator zero at l={l}, A={ac.A:.12g} without trivial monodromy")
            if not (0 <= l <= abs(r) and (r - l) % 2 == 0):
                cat.alarms.append(f"constriction of L_{r} at abscissa index {l}")
            p = SystemParams.on_axis(omega, l, ac.A)
            try:
                rec = classify_constriction(p)
            except InconsistencyError as exc:
                cat.alarms.append(f"c/b not real at l={l}, A={ac.A:.12g}: {exc}")
                continue
            if abs(rec.b) <= 1e-6 or abs(rec.c) <= 1e-6:
                cat.alarms.append(f"b or c vanishes at constriction l={l}, A={ac.A:.12g}")
            if rec.sign == ConstrictionSign.UNDETERMINED:
                flags.append("undetermined")
                cat.evidence.append(f"constriction l={l}, A={ac.A:.12g}: sign undetermined")
            elif rec.sign != ConstrictionSign.POSITIVE:
                cat.evidence.append(f"constriction l={l}, A={ac.A:.12g}: {rec.sign.value} (c/b = {rec.cb_ratio:.6g})")
            if l != r:
                cat.evidence.append(f"off-axis constriction of L_{r} on B={l}*omega, A={ac.A:.12g}")
            cat.constrictions.append(rec)
            cat.rows.append(CatalogRow(
                "constriction", r, p.B, p.A, rec.sign.value, rec.cb_ratio,
                float(ac.xi_bracket[0]), rec.c0.real, rec.c1.real,
                {"identity": ac.identity_residual, "cb_imag": rec.cb_imag,
                 "c0_imag": abs(rec.c0.imag), "c1_imag": abs(rec.c1.imag)}, tuple(flags)))
    from .connection import stokes_multipliers

    for r in range(1, r_max + 1):
        sis = find_simple_intersections(r, omega)
        if not sis:
            cat.alarms.append(f"no simple intersection found on B={r}*omega")
            continue
        if len(sis) > 1:
            cat.evidence.append(f"{len(sis)} simple intersections on B={r}*omega")
        for s in sis:
            st = stokes_multipliers(SystemParams.on_axis(omega, r, s.A))
            flags = ("higher",) if s.higher else ()
            cat.simple_intersections.append(s)
            cat.rows.append(CatalogRow(
                "simple", r, s.B, s.A, "", math.nan, s.xi, st.c0.real, st.c1.real,
                {"margin": s.margin, "trace": st.trace_residual}, flags))
            if abs(st.c1) >= 1e-7 or abs(st.c0) <= 1e-7:
                cat.alarms.append(f"simple intersection r={r}, A={s.A:.12g}: c1={st.c1.real:.3g}, c0={st.c0.real:.3g}")
        top = max(sis, key=lambda s: s.A)
        cat.higher_points[r] = (top.B, top.A)
        span = 10.0 * omega if ray_span is None else ray_span
        rc = verify_ray(r, omega, top.A + span, A_base=top.A)
        cat.ray_checks[r] = rc.passed
        if not rc.passed:
            cat.alarms.append(f"ray above P_{r} leaves L_{r} at {rc.offending[:3]}")
        # every boundary crossing on the axis should be a simple intersection
        known = [s.A for s in sis]
        for A in boundary_crossings_on_axis(r, omega, (A_lo, A_max)):
            if not any(abs(A - k) < 1e-6 for k in known):
                cat.discrepancies.append(f"boundary crossing on B={r}*omega at A={A:.12g} not among polynomial roots")
    cat.rows.sort(key=lambda row: (row.kind, row.r, row.B, row.A))
    return cat


# ---------------------------------------------------------------------------
# structure of the portrait


@dataclass(frozen=True)
class ComponentCount:
    r: int
    components: int  # connected Inside cells of L_r in the band
    expected: int  # 1 + constrictions of L_r inside the band
    constrictions: tuple[float, ...]  # their ordinates

    @property
    def ok(self) -> bool:
        return self.components == self.expected

    @property
    def full_window(self) -> int:
        """Component count over the mirrored window ``|A| <= A_max``."""
        return 2 * self.expected - (1 if self.r == 0 else 0)


@dataclass
class StructureReport:
    omega: float
    band: tuple[float, float]
    spec: GridSpec
    counts: list  # ComponentCount
    edge_clearance: float  # distance of the band edges to the nearest constriction
    cell_errors: int
    seconds: float

    @property
    def row_height(self) -> float:
        return (self.spec.A_max - self.spec.A_min) / self.spec.nA

    @property
    def edges_clear(self) -> bool:
        """A constriction within two rows of a band edge makes its count ambiguous."""
        return self.edge_clearance >= 2.0 * self.row_height

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.counts) and self.cell_errors == 0 and self.edges_clear


def structure_grid(omega: float, r_max: int, band: tuple[float, float],
                   cells_per_axis: int = 32, aspect: float = 0.8) -> GridSpec:
    """Grid for component counting.

    Columns are ``omega / cells_per_axis`` wide with every axis ``B = r omega``
    on a column edge, and rows are at most ``aspect`` columns high.  Near a
    constriction ``L_r`` is a pair of cones ``|B - r omega| < s |A - A_c|``
    with ``s < 1``; on such a grid the two rows around ``A_c`` cannot both
    hold Inside cells next to the axis, so the cones stay disconnected.
    """
    kB = math.ceil(r_max + 1.0 / omega) + 1
    dB = omega / cells_per_axis
    nB = 2 * kB * cells_per_axis
    nA = max(2, math.ceil((band[1] - band[0]) / (aspect * dB)))
    return GridSpec(-kB * omega, kB * omega, band[0], band[1], nB, nA)


def structure_counts(omega: float, r_max: int, A_max: float, cells_per_axis: int = 32,
                     threads: int | None = None) -> StructureReport:
    """Count connected Inside components of each ``L_r``, ``|r| <= r_max``.

    The band ``[A_lo, A_max]`` starts at half the lowest constriction ordinate,
    which keeps away from the B-axis where the areas of ``r != 0`` pinch to
    their growth points and become thinner than any cell.  Between two
    consecutive constrictions ``L_r`` is one component, so the band must hold
    ``1 + N_r`` components, ``N_r`` counting constrictions of ``L_r`` in the
    band (``L_{-r}`` mirrors ``L_r``).
    """
    import time

    from scipy import ndimage

    t0 = time.perf_counter()
    by_r: dict[int, list[float]] = {r: [] for r in range(0, r_max + 1)}
    for l in range(0, r_max + 1):
        for c in find_constrictions_on_axis(l, omega, (min(0.01 * omega, A_max / 2), A_max)):
            r = int(round(c.rho))
            if r in by_r:
                by_r[r].append(c.A)
    all_A = sorted(a for v in by_r.values() for a in v)
    A_lo = 0.5 * all_A[0] if all_A else 0.5 * A_max
    spec = structure_grid(omega, r_max, (A_lo, A_max), cells_per_axis)
    grid = sweep(omega, spec, threads=threads)
    counts = []
    for r in range(-r_max, r_max + 1):
        mask = (grid.kind == 1) & (np.round(grid.rho) == r)
        n = int(ndimage.label(mask)[1])
        cs = tuple(sorted(a for a in by_r[abs(r)] if A_lo < a < A_max))
        counts.append(ComponentCount(r, n, 1 + len(cs), cs))
    clearance = min((min(abs(a - A_lo), abs(a - A_max)) for a in all_A), default=math.inf)
    return StructureReport(float(omega), (A_lo, float(A_max)), spec, counts, clearance,
                           len(grid.errors), time.perf_counter() - t0)
