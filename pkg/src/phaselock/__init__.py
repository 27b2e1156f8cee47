"""Phase-lock areas of the overdamped Josephson junction equation.

    dphi/dt = -sin(phi) + B + A cos(omega t)

Rotation numbers on the torus, the monodromy of the associated linear
system, double confluent Heun series, Stokes and transition data at the
irregular point, and parameter-plane portraits built from them.
"""

from .errors import (AccuracyError, ConvergenceWarning, DegenerateFrame, InconsistencyError,
                     InvalidParams, PhaselockError, RangeError, StabilityError, StiffnessError,
                     TruncationError)
from .params import DerivedParams, SymmetryTag, SystemParams, axis, derive, normalize_quadrant
from .torus import FlowResult, RhoEstimate, RhoMethod, flow, poincare, rho_a0, rho_direct
from .monodromy import (LockClass, LockKind, MonodromyResult, monodromy, phase_lock_test,
                        rho_mobius)
from .heun import (AxisConstriction, EntireIndicator, PolyCondition, Variant, entire_indicator,
                   find_constrictions_on_axis, find_simple_intersections, heun_series,
                   polynomial_condition)
from .connection import (CanonicalFrame, CheckReport, ConstrictionRecord, ConstrictionSign,
                         StokesPair, TransitionData, canonical_frame, classify_constriction,
                         identity_battery, stokes_multipliers, transition_matrix)
from .bessel import besselj
from .atlas import (BoundaryCurve, Catalog, GridSpec, PortraitGrid, bessel_compare,
                    build_catalog, garland_scan, growth_point, locate_boundary,
                    structure_counts, sweep, trace_boundary, verify_ray)

__version__ = "1.0.0"
