"""Action variables and eigenvalue shooting.

The action variable J is read off the reduced action far past the classical
turning point, where the conjugate momentum has decayed and W has leveled to
its asymptote.  For a symmetric start (W0 = 0, pp0 = 0 at q0 = 0) symmetry
gives J = 4*W(q_max); a general start needs both directions,
J = 2*(W(+q_max) - W(-q_max)).

Bound states are the energies where J crosses an integer multiple of
2*pi*hbar.  Because J(E) is continuous and increasing for any single choice
of initial data, those crossings can be found by bracketing and regula falsi
without ever looking at a wave function.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

from .errors import MaxIterations, ModeViolation, NoSignChange
from .integrator import Tolerances, integrate
from .model import EnergyValue, HarmonicOscillator, Microstate, Potential

QUARTER_SYMMETRIC = "quarter-symmetric"
TWO_SIDED = "two-sided"

# An action residual at or below this (in units of 2*pi*hbar) labels the
# energy an eigenvalue in reports.
EIGENVALUE_RESIDUAL = 1e-9


@dataclass(frozen=True)
class ActionVariable:
    """An action variable J with its evaluation mode and residual.

    residual = J/(2*pi*hbar) - nearest integer (round-half-to-even); it
    vanishes at eigenvalues and measures the distance to quantization at
    virtual energies.
    """

    j: float
    mode: str
    energy: EnergyValue
    microstate: Microstate
    residual: float


@dataclass(frozen=True)
class JCurvePoint:
    """One sample of the action-versus-energy curve for a fixed microstate."""

    e: float
    j: float | None
    case_label: str
    residual: float | None
    error: str | None = None


def default_q_max(potential: Potential, e: float) -> float:
    """Far-field cutoff deep enough that the momentum underflows.

    Oscillator: 10 for E <= 2, else classical turning point + 3.5 (the decay
    there is Gaussian, so a fixed margin suffices at any energy).  Square
    well: half_width + 40 decay lengths of the exterior exponential.
    """
    if isinstance(potential, HarmonicOscillator):
        if e <= 2.0:
            return 10.0
        c = potential.constants
        omega = 1.0 if c.omega is None else c.omega
        turning = math.sqrt(2.0 * e / c.mass) / omega
        return turning + 3.5
    c = potential.constants
    gap = potential.v0 - e
    if gap <= 0.0:
        return potential.half_width + 2000.0
    kappa = math.sqrt(2.0 * c.mass * gap) / c.hbar
    return potential.half_width + min(40.0 / kappa, 2000.0)


def default_n_out(q0: float, q_end: float) -> int:
    """Grid size keeping the sample spacing at or below 0.0025."""
    span = abs(q_end - q0)
    return max(4000, int(math.ceil(span / 0.0025)) + 1)


def action_variable(
    potential: Potential,
    e: float,
    microstate: Microstate,
    q_max: float | None = None,
    tol: Tolerances | None = None,
    *,
    mode: str | None = None,
) -> ActionVariable:
    """Action variable at energy ``e`` for one microstate.

    mode defaults to quarter-symmetric when the initial data allow it
    (q0 = 0, W0 = 0, pp0 = 0) and two-sided otherwise; requesting
    quarter-symmetric with unsymmetric data raises ModeViolation.  Only the
    endpoint values of W are needed, so the integrations run endpoint-only.
    """
    if mode is None:
        mode = QUARTER_SYMMETRIC if microstate.symmetric else TWO_SIDED
    elif mode == QUARTER_SYMMETRIC and not microstate.symmetric:
        raise ModeViolation(
            "quarter-symmetric evaluation requires W0 = 0 and pp0 = 0 at q0 = 0"
        )
    elif mode not in (QUARTER_SYMMETRIC, TWO_SIDED):
        raise ValueError(f"unknown mode {mode!r}")

    if q_max is None:
        q_max = default_q_max(potential, e)

    if mode == QUARTER_SYMMETRIC:
        grid = integrate(potential, e, microstate, q_max, n_out=2, tol=tol)
        j = 4.0 * (grid.w[-1] - microstate.w0)
    else:
        fwd = integrate(potential, e, microstate, q_max, n_out=2, tol=tol)
        bwd = integrate(potential, e, microstate, -q_max, n_out=2, tol=tol)
        j = 2.0 * (fwd.w[-1] - bwd.w[-1])

    hbar = potential.constants.hbar
    residual = j / (2.0 * math.pi * hbar) - round(j / (2.0 * math.pi * hbar))
    kind = "eigenvalue" if abs(residual) <= EIGENVALUE_RESIDUAL else "virtual"
    return ActionVariable(
        j=j,
        mode=mode,
        energy=EnergyValue(e, kind),
        microstate=microstate,
        residual=residual,
    )


def j_curve(
    potential: Potential,
    energies,
    microstate: Microstate,
    q_max: float | None = None,
    *,
    case_label: str = "",
    tol: Tolerances | None = None,
) -> list[JCurvePoint]:
    """Sample the action-versus-energy curve, one point per input energy.

    Points are independent; a failure at one energy is recorded on that
    point's ``error`` field instead of aborting the batch.  An energy-scaled
    microstate re-resolves its initial momentum at every energy.
    """
    points: list[JCurvePoint] = []
    for e in energies:
        try:
            av = action_variable(potential, float(e), microstate, q_max, tol)
        except Exception as exc:  # noqa: BLE001 - per-point isolation is the contract
            points.append(
                JCurvePoint(e=float(e), j=None, case_label=case_label,
                            residual=None, error=f"{type(exc).__name__}: {exc}")
            )
        else:
            points.append(
                JCurvePoint(e=float(e), j=av.j, case_label=case_label,
                            residual=av.residual)
            )
    return points


def write_jcurve_csv(points, path, *, hbar: float = 1.0) -> None:
    """Write curve samples as CSV: E,J_over_2pi,residual,case."""
    with open(path, "w", newline="\n") as fh:
        writer = csv.writer(fh)
        writer.writerow(["E", "J_over_2pi", "residual", "case"])
        for pt in points:
            if pt.j is None:
                writer.writerow([f"{pt.e:.17g}", "", "", pt.case_label])
            else:
                writer.writerow(
                    [
                        f"{pt.e:.17g}",
                        f"{pt.j / (2.0 * math.pi * hbar):.17g}",
                        f"{pt.residual:.17g}",
                        pt.case_label,
                    ]
                )


def shoot_eigenvalue(
    potential: Potential,
    n: int,
    bracket: tuple[float, float],
    microstate: Microstate,
    q_max: float | None = None,
    e_tol: float = 1e-10,
    *,
    tol: Tolerances | None = None,
    max_iterations: int = 200,
    on_evaluation=None,
) -> float:
    """Find the n-th eigenvalue energy by shooting on the action variable.

    Solves J(E) = 2*pi*n*hbar over the bracket with Illinois-damped regula
    falsi, which keeps the superlinear secant update but cannot stagnate on
    one endpoint.  ``on_evaluation``, when given, is called as
    ``on_evaluation(E, J)`` after every action evaluation (diagnostics such
    as evaluation counting hook in here).

    Raises NoSignChange when the bracket does not straddle the target and
    MaxIterations if the bracket fails to shrink to ``e_tol`` in
    ``max_iterations`` evaluations.
    """
    if n < 1:
        raise ValueError("n must be a positive integer")
    e_lo, e_hi = float(bracket[0]), float(bracket[1])
    if not e_lo < e_hi:
        raise ValueError("bracket must satisfy E_lo < E_hi")
    hbar = potential.constants.hbar
    target = 2.0 * math.pi * n * hbar

    def f(e: float) -> float:
        j = action_variable(potential, e, microstate, q_max, tol).j
        if on_evaluation is not None:
            on_evaluation(e, j)
        return j - target

    f_lo = f(e_lo)
    f_hi = f(e_hi)
    if f_lo == 0.0:
        return e_lo
    if f_hi == 0.0:
        return e_hi
    if f_lo * f_hi > 0.0:
        raise NoSignChange(
            f"J - 2*pi*{n}*hbar does not change sign over [{e_lo}, {e_hi}]"
        )

    side = 0  # which endpoint was retained last: -1 lo, +1 hi
    for _ in range(max_iterations):
        e_mid = (e_hi * f_lo - e_lo * f_hi) / (f_lo - f_hi)
        # Secant point can collide with an endpoint once f is tiny; nudge to
        # bisection in that case to keep the bracket strictly shrinking.
        if not (e_lo < e_mid < e_hi):
            e_mid = 0.5 * (e_lo + e_hi)
        f_mid = f(e_mid)
        if f_mid == 0.0 or (e_hi - e_lo) <= e_tol:
            return e_mid
        if f_lo * f_mid < 0.0:
            e_hi, f_hi = e_mid, f_mid
            if side == -1:
                f_lo *= 0.5  # Illinois damping of the stale endpoint
            side = -1
        else:
            e_lo, f_lo = e_mid, f_mid
            if side == 1:
                f_hi *= 0.5
            side = 1
        if (e_hi - e_lo) <= e_tol:
            return (e_hi * f_lo - e_lo * f_hi) / (f_lo - f_hi)
    raise MaxIterations(
        f"bracket still {e_hi - e_lo!r} wide after {max_iterations} action evaluations"
    )
