"""Physical setup for one-dimensional quantum Hamilton-Jacobi runs.

Defines the closed set of supported potentials (harmonic oscillator and
finite square well), physical constants, energy labels, and the microstate
— the initial triple (W0, p0, pp0) at q0 that selects one member of the
solution family of the quantum stationary Hamilton-Jacobi equation.

Also provides the classical-mechanics reference quantities the quantum
results are compared against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import ClassicallyForbidden, WrongPotential

__all__ = [
    "Constants",
    "HarmonicOscillator",
    "FiniteSquareWell",
    "Potential",
    "EnergyValue",
    "Microstate",
    "potential_value",
    "classical_conjugate_momentum",
    "classical_time_lho",
    "classical_turning_point",
]


@dataclass(frozen=True)
class Constants:
    """Physical constants for a run.

    omega is the oscillator angular frequency and is only meaningful for the
    harmonic potential; it stays None for the square well.
    """

    hbar: float = 1.0
    mass: float = 1.0
    omega: float | None = None

    def __post_init__(self) -> None:
        if not (self.hbar > 0.0):
            raise ValueError("hbar must be positive")
        if not (self.mass > 0.0):
            raise ValueError("mass must be positive")
        if self.omega is not None and not (self.omega > 0.0):
            raise ValueError("omega must be positive when given")

    @classmethod
    def natural(cls) -> "Constants":
        """hbar = m = omega = 1."""
        return cls(1.0, 1.0, 1.0)


@dataclass(frozen=True)
class HarmonicOscillator:
    """V(q) = (1/2) m omega^2 q^2."""

    constants: Constants = field(default_factory=Constants.natural)

    def __post_init__(self) -> None:
        if self.constants.omega is None:
            raise ValueError("harmonic oscillator requires omega")

    def value(self, q: float) -> float:
        c = self.constants
        return 0.5 * c.mass * c.omega**2 * q * q

    def breakpoints(self) -> tuple[float, ...]:
        return ()


@dataclass(frozen=True)
class FiniteSquareWell:
    """V(q) = 0 for |q| <= a, V0 outside; a is the half-width."""

    v0: float
    half_width: float
    constants: Constants = field(default_factory=Constants)

    def __post_init__(self) -> None:
        if not (self.v0 > 0.0):
            raise ValueError("well depth v0 must be positive")
        if not (self.half_width > 0.0):
            raise ValueError("half_width must be positive")

    def value(self, q: float) -> float:
        return 0.0 if abs(q) <= self.half_width else self.v0

    def breakpoints(self) -> tuple[float, ...]:
        return (-self.half_width, self.half_width)


# Closed union: these two are the only supported potentials.
Potential = HarmonicOscillator | FiniteSquareWell


@dataclass(frozen=True)
class EnergyValue:
    """An energy with a bookkeeping label.

    kind is purely a label ("eigenvalue" or "virtual") carried through grids
    and reports; it imposes no numerical constraint.
    """

    value: float
    kind: str = "virtual"

    _KINDS = ("eigenvalue", "virtual")

    def __post_init__(self) -> None:
        if self.kind not in self._KINDS:
            raise ValueError(f"kind must be one of {self._KINDS}")
        if not math.isfinite(self.value):
            raise ValueError("energy must be finite")


def as_energy(energy: float | EnergyValue) -> EnergyValue:
    """Wrap a bare float as a virtual-labelled energy."""
    if isinstance(energy, EnergyValue):
        return energy
    return EnergyValue(float(energy))


FIXED = "fixed"
ENERGY_SCALED = "energy-scaled"


@dataclass(frozen=True)
class Microstate:
    """Initial data (W0, p0, pp0) at q0 plus the resolution policy.

    policy "fixed" uses the stored p0 verbatim at every evaluation energy.
    policy "energy-scaled" recomputes p0 = sqrt(2 m E) per evaluation energy
    (the stored p0 is then only a placeholder).
    """

    q0: float = 0.0
    w0: float = 0.0
    p0: float = 1.0
    pp0: float = 0.0
    policy: str = FIXED

    def __post_init__(self) -> None:
        if self.policy not in (FIXED, ENERGY_SCALED):
            raise ValueError(f"unknown policy {self.policy!r}")
        if not (self.p0 > 0.0):
            raise ValueError("initial momentum p0 must be positive")
        for name in ("q0", "w0", "p0", "pp0"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    @classmethod
    def fixed(cls, p0: float, *, q0: float = 0.0, w0: float = 0.0,
              pp0: float = 0.0) -> "Microstate":
        return cls(q0=q0, w0=w0, p0=p0, pp0=pp0, policy=FIXED)

    @classmethod
    def energy_scaled(cls, *, q0: float = 0.0, w0: float = 0.0,
                      pp0: float = 0.0) -> "Microstate":
        return cls(q0=q0, w0=w0, p0=1.0, pp0=pp0, policy=ENERGY_SCALED)

    def resolve(self, energy: float, mass: float) -> tuple[float, float, float]:
        """Concrete (W0, p0, pp0) at the given evaluation energy."""
        if self.policy == ENERGY_SCALED:
            if not (energy > 0.0):
                raise ValueError("energy-scaled momentum needs E > 0")
            return self.w0, math.sqrt(2.0 * mass * energy), self.pp0
        return self.w0, self.p0, self.pp0

    @property
    def symmetric(self) -> bool:
        """True when the initial data is compatible with an antisymmetric
        reduced action (W odd about q0 = 0)."""
        return self.q0 == 0.0 and self.w0 == 0.0 and self.pp0 == 0.0


def potential_value(potential: Potential, q: float) -> float:
    """V(q) for either supported potential."""
    return potential.value(q)


def classical_conjugate_momentum(potential: HarmonicOscillator, energy: float,
                                 q: float) -> float:
    """Classical momentum (2mE - m^2 w^2 q^2)^(1/2) for the oscillator.

    Raises ClassicallyForbidden beyond the turning points and WrongPotential
    for anything but the harmonic oscillator.
    """
    if not isinstance(potential, HarmonicOscillator):
        raise WrongPotential("classical momentum reference is oscillator-only")
    c = potential.constants
    arg = 2.0 * c.mass * energy - (c.mass * c.omega * q) ** 2
    if arg < 0.0:
        raise ClassicallyForbidden(
            f"q={q} lies beyond the classical turning point")
    return math.sqrt(arg)


def classical_turning_point(potential: HarmonicOscillator, energy: float) -> float:
    """Positive turning point q_t = sqrt(2E/m)/omega."""
    if not isinstance(potential, HarmonicOscillator):
        raise WrongPotential("turning point helper is oscillator-only")
    c = potential.constants
    return math.sqrt(2.0 * energy / c.mass) / c.omega


def classical_time_lho(energy: float, q: float,
                       constants: Constants | None = None) -> float:
    """Classical traversal time t(q) = (1/w) asin(q w sqrt(m/(2E))) from q=0.

    Equals pi/(2w) exactly at the turning point. Tiny excursions past the
    turning point from floating-point round-off are clamped; genuine ones
    raise ClassicallyForbidden.
    """
    c = constants if constants is not None else Constants.natural()
    if c.omega is None:
        raise ValueError("classical oscillator time needs omega")
    if not (energy > 0.0):
        raise ValueError("energy must be positive")
    s = q * c.omega * math.sqrt(c.mass / (2.0 * energy))
    if abs(s) > 1.0:
        if abs(s) - 1.0 < 1e-12:
            s = math.copysign(1.0, s)
        else:
            raise ClassicallyForbidden(
                f"q={q} lies beyond the classical turning point")
    return math.asin(s) / c.omega
