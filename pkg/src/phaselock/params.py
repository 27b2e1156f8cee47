"""Parameter model for the overdamped junction family.

The physical equation is ``dphi/dt = -sin(phi) + B + A cos(omega t)``.  With
``tau = omega t`` it becomes an equation on the torus whose coefficients are
the derived quantities ``l = B/omega`` and ``mu = A/(2 omega)``; the Heun
equations additionally use ``lambda = 1/(4 omega^2) - mu^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidParams

# |l - round(l)| below this counts as an integer abscissa index.
INTEGER_L_TOL = 1e-12


@dataclass(frozen=True)
class SystemParams:
    omega: float
    B: float
    A: float

    def __post_init__(self):
        for name in ("omega", "B", "A"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not math.isfinite(value):
                raise InvalidParams(f"{name} must be a finite real number, got {value!r}")
        if self.omega <= 0:
            raise InvalidParams(f"omega must be positive, got {self.omega}")
        object.__setattr__(self, "omega", float(self.omega))
        object.__setattr__(self, "B", float(self.B))
        object.__setattr__(self, "A", float(self.A))

    @classmethod
    def on_axis(cls, omega: float, l: int, A: float) -> "SystemParams":
        """Point ``(omega*l, A)`` of the vertical line ``B = omega*l``."""
        return cls(omega, omega * l, A)

    def with_A(self, A: float) -> "SystemParams":
        return SystemParams(self.omega, self.B, A)

    def with_B(self, B: float) -> "SystemParams":
        return SystemParams(self.omega, B, self.A)


@dataclass(frozen=True)
class DerivedParams:
    l: float
    mu: float
    lam: float

    def integer_l(self) -> int | None:
        """``round(l)`` when ``l`` is an integer to working precision, else None."""
        r = round(self.l)
        if abs(self.l - r) <= INTEGER_L_TOL * max(1.0, abs(self.l)):
            return int(r)
        return None


@dataclass(frozen=True)
class SymmetryTag:
    flipped_B: bool
    flipped_A: bool

    @property
    def rho_sign(self) -> int:
        return -1 if self.flipped_B else 1


def derive(p: SystemParams) -> DerivedParams:
    l = p.B / p.omega
    mu = p.A / (2.0 * p.omega)
    lam = (1.0 / (2.0 * p.omega)) ** 2 - mu * mu
    return DerivedParams(l, mu, lam)


def normalize_quadrant(p: SystemParams) -> tuple[SystemParams, SymmetryTag]:
    """Reflect ``(B, A)`` into the closed first quadrant.

    rho is even in ``A`` and odd in ``B``, so ``rho(p) = tag.rho_sign * rho(q)``
    for the returned ``q``.
    """
    flip_b = p.B < 0
    flip_a = p.A < 0
    q = SystemParams(p.omega, abs(p.B), abs(p.A))
    return q, SymmetryTag(flip_b, flip_a)


def axis(r: int, omega: float) -> float:
    """Abscissa ``B = omega*r`` of the axis of the r-th phase-lock area."""
    if not omega > 0:
        raise InvalidParams(f"omega must be positive, got {omega}")
    return omega * r
