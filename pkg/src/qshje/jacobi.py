"""Trajectory time from the energy derivative of the reduced action.

Jacobi's theorem reads time off the solved motion as t - tau = dW/dE at
fixed q, with the initial data held as fixed constants under the derivative.
Here the derivative is a central finite difference,

    t - tau = [W(E + eps, q) - W(E - eps, q)] / (2 * eps),

with both integrations launched from the identical initial triple.  The two
runs share one adaptive step sequence (recorded at E + eps, replayed at
E - eps) so their truncation errors cancel in the difference instead of
masquerading as time.

An energy-scaled start is rejected outright: re-resolving the initial
momentum at E +/- eps would differentiate the initial data along with the
motion, which is a different (and wrong) derivative.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ModeViolation, PolicyViolation
from .integrator import Tolerances, _solve
from .model import (
    ENERGY_SCALED,
    EnergyValue,
    FiniteSquareWell,
    HarmonicOscillator,
    Microstate,
    Potential,
)
from . import squarewell


@dataclass(frozen=True)
class TrajectoryPoint:
    """One sample of the time parametrization: position and t - tau."""

    q: float
    t_minus_tau: float


@dataclass(frozen=True)
class TransitReport:
    """Quarter-transit timing against the classical reference.

    quarter_time is the trajectory time at the quarter point: the far-field
    asymptote for the oscillator, the potential step for the square well.
    classical_quarter is pi/(2*omega) for the oscillator and m*a/(hbar*k)
    for the square well; delta is their difference.
    """

    quarter_time: float
    classical_quarter: float
    delta: float
    energy: EnergyValue


def _check_fd_inputs(e: float, epsilon: float, microstate: Microstate) -> None:
    if microstate.policy == ENERGY_SCALED:
        raise PolicyViolation(
            "time parametrization requires fixed initial data; an "
            "energy-scaled start changes with E and corrupts dW/dE"
        )
    if not (epsilon > 0.0):
        raise ConfigError("epsilon must be positive")
    if not (e - epsilon > 0.0):
        raise ConfigError(
            f"E - epsilon = {e - epsilon!r} must stay positive for the "
            "central difference"
        )


def time_parametrize(
    potential: Potential,
    e: float,
    microstate: Microstate,
    qs,
    epsilon: float = 1e-5,
    *,
    tol: Tolerances | None = None,
) -> list[TrajectoryPoint]:
    """t - tau at each sample point, with t - tau = 0 at q0.

    The epoch falls out automatically: both energies start from the same W0,
    so the difference vanishes at q0 without any subtraction.
    """
    _check_fd_inputs(e, epsilon, microstate)
    tol = tol or Tolerances()
    c = potential.constants
    triple = microstate.resolve(e, c.mass)
    targets = np.asarray(qs, dtype=float)
    if targets.ndim != 1:
        raise ValueError("qs must be one-dimensional")
    t_out = np.zeros_like(targets)

    for side in (1.0, -1.0):
        mask = (targets - microstate.q0) * side > 0.0
        if not np.any(mask):
            continue
        side_targets = targets[mask]
        q_end = side_targets[np.argmax(np.abs(side_targets - microstate.q0))]
        plus = _solve(potential, e + epsilon, triple, microstate.q0,
                      float(q_end), tol)
        minus = _solve(potential, e - epsilon, triple, microstate.q0,
                       float(q_end), tol, replay=plus.hs,
                       replay_may_end_early=plus.freeze_q is not None)
        w_plus = plus.evaluate(side_targets)[0]
        w_minus = minus.evaluate(side_targets)[0]
        t_out[mask] = (w_plus - w_minus) / (2.0 * epsilon)

    return [TrajectoryPoint(q=float(q), t_minus_tau=float(t))
            for q, t in zip(targets, t_out)]


def _classical_quarter(potential: Potential, e: float) -> float:
    c = potential.constants
    if isinstance(potential, HarmonicOscillator):
        return 0.5 * math.pi / c.omega
    k = math.sqrt(2.0 * c.mass * e) / c.hbar
    return c.mass * potential.half_width / (c.hbar * k)


def quarter_transit(
    potential: Potential,
    e: float,
    microstate: Microstate,
    q_max: float | None = None,
    epsilon: float = 1e-5,
    *,
    tol: Tolerances | None = None,
) -> TransitReport:
    """Transit time out to the quarter point, vs. the classical quarter.

    For the oscillator the quarter point is the far-field asymptote: q_max
    defaults to the action-variable cutoff, by which the trajectory time has
    flattened to its limit value (the quantum T/4).  For the square well the
    quarter point is the potential step q = a (the classical turning point);
    there the time is differenced along the canonical family, whose interior
    motion is uniform, and the exterior time relaxes back to the same wall
    value in the far field.
    """
    from .milne import default_q_max  # local: avoid cycle at import

    _check_fd_inputs(e, epsilon, microstate)
    if isinstance(potential, FiniteSquareWell):
        (point,) = canonical_fd_trajectory(potential, e,
                                           [potential.half_width], epsilon)
    else:
        if q_max is None:
            q_max = default_q_max(potential, e)
        (point,) = time_parametrize(potential, e, microstate, [q_max],
                                    epsilon, tol=tol)
    classical = _classical_quarter(potential, e)
    quarter = point.t_minus_tau
    return TransitReport(
        quarter_time=quarter,
        classical_quarter=classical,
        delta=quarter - classical,
        energy=EnergyValue(e),
    )


def cycle_time(
    potential: Potential,
    e: float,
    microstate: Microstate,
    q_max: float | None = None,
    epsilon: float = 1e-5,
    *,
    tol: Tolerances | None = None,
) -> float:
    """Full period T = 4 * (quarter transit); reciprocal is the frequency.

    Valid only for a symmetric start (q0 = 0, W0 = 0, pp0 = 0) on these
    centered potentials, where one quarter determines the cycle.
    """
    if not microstate.symmetric:
        raise ModeViolation(
            "cycle time by quarter symmetry needs W0 = 0 and pp0 = 0 at q0 = 0"
        )
    report = quarter_transit(potential, e, microstate, q_max, epsilon, tol=tol)
    return 4.0 * report.quarter_time


def canonical_fd_trajectory(
    well: FiniteSquareWell,
    e: float,
    qs,
    epsilon: float = 1e-5,
) -> list[TrajectoryPoint]:
    """Finite-difference time along the square well's canonical family.

    The canonical start {0, hbar*k(E), 0} follows the energy: its initial
    momentum is re-resolved at E +/- eps before differencing the closed-form
    reduced action.  That is the family whose energy derivative reproduces
    the well's closed-form time parametrization (uniform interior motion
    m*q/(hbar*k)), and it is the analytic cross-check for the fixed-triple
    numerical route, which must agree with it at quantized energies where
    the asymptote is microstate-independent.
    """
    if not (epsilon > 0.0 and e - epsilon > 0.0 and e + epsilon < well.v0):
        raise ConfigError(
            "need 0 < E - eps and E + eps < V0 for the canonical difference"
        )
    out = []
    for q in qs:
        w_plus = squarewell.reduced_action(well, e + epsilon, float(q))
        w_minus = squarewell.reduced_action(well, e - epsilon, float(q))
        out.append(TrajectoryPoint(q=float(q),
                                   t_minus_tau=(w_plus - w_minus) / (2.0 * epsilon)))
    return out


def write_trajectory_csv(points, path) -> None:
    """Write trajectory samples as CSV: q,t_minus_tau (17 significant digits)."""
    with open(path, "w", newline="\n") as fh:
        writer = csv.writer(fh)
        writer.writerow(["q", "t_minus_tau"])
        for pt in points:
            writer.writerow([f"{pt.q:.17g}", f"{pt.t_minus_tau:.17g}"])
