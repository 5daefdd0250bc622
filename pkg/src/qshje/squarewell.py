"""Closed-form finite-square-well engine.

Everything in this module is analytic.  For the centered well

    V(q) = 0 for |q| <= a,   V(q) = V0 for |q| > a,

and the canonical initial triple {W, dW/dq, d2W/dq2}|_{q=0} = {0, hbar*k, 0},
the reduced action, conjugate momentum, time parametrization, action variable,
and bound-state spectrum all have closed forms.  Interior and exterior pieces
are glued with C2 continuity at the step, and the exterior arctangent is
unwrapped across its vertical asymptotes so W stays continuous and monotone.

These closed forms serve as the exact cross-check for the adaptive integrator:
the same well fed through the numerical solver must reproduce every quantity
here to near round-off.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

from scipy.optimize import brentq

from .errors import (
    ActionOutOfRange,
    EnergyOutOfRange,
    ThresholdDegenerate,
)
from .model import Constants, FiniteSquareWell

SYMMETRIC = "symmetric"
ANTISYMMETRIC = "antisymmetric"

# |cos(ka)| (or |sin(ka)|) below this switches the quantization residual to
# its bounded coefficient form, which shares the zero set but has no pole.
_POLE_EPS = 1e-12


@dataclass(frozen=True)
class WaveNumbers:
    """Interior and exterior wave numbers for a well at energy E.

    k = sqrt(2mE)/hbar governs the oscillatory interior, kappa =
    sqrt(2m(V0-E))/hbar the exponential exterior; together they satisfy
    k**2 + kappa**2 = 2*m*V0/hbar**2.
    """

    k: float
    kappa: float


@dataclass(frozen=True)
class MobiusCoefficients:
    """Coefficients (a, b; c, d) of the bilinear form tan(W/hbar) = N/Theta.

    N = a*sinh(u) + b*cosh(u) and Theta = c*sinh(u) + d*cosh(u) with
    u = kappa*(q - half_width).  Normalized so a*d - b*c = 1, which makes the
    angle of the ray (Theta, N) strictly increasing in u.
    """

    a: float
    b: float
    c: float
    d: float

    @property
    def determinant(self) -> float:
        return self.a * self.d - self.b * self.c


class BranchTracker:
    """Accumulates the pi-sheet count of a continuously increasing arctangent.

    The exterior W/hbar is atan(N/Theta) plus an integer number of pi jumps:
    each zero of the denominator Theta along increasing q is a vertical
    asymptote of the tangent, where the principal arctangent drops by pi while
    the true angle rises smoothly.  Feeding successive denominator values to
    ``update`` counts those crossings.
    """

    def __init__(self, initial_denominator_sign: int = 1):
        self.sheet = 0
        self.last_denominator_sign = 1 if initial_denominator_sign >= 0 else -1

    def update(self, denominator: float) -> int:
        """Advance past one sample; return the sheet count to add (in pi)."""
        if denominator == 0.0:
            sign = -self.last_denominator_sign
        else:
            sign = 1 if denominator > 0.0 else -1
        if sign != self.last_denominator_sign:
            self.sheet += 1
            self.last_denominator_sign = sign
        return self.sheet


@dataclass(frozen=True)
class WellEigenvalue:
    """One bound state: energy, parity, per-parity index n, and action.

    Symmetric states carry J = (4n-2)*pi*hbar, antisymmetric states
    J = 4n*pi*hbar; ``residual`` is the value of the matching quantization
    condition at E (zero up to round-off).
    """

    e: float
    parity: str
    n: int
    j: float
    residual: float


def _check_energy(well: FiniteSquareWell, e: float, *, include_top: bool = False) -> None:
    top_ok = e <= well.v0 if include_top else e < well.v0
    if not (e > 0.0 and top_ok):
        rel = "(0, V0]" if include_top else "(0, V0)"
        raise EnergyOutOfRange(
            f"energy {e!r} outside the bound-state range {rel} for V0={well.v0!r}"
        )


def wavenumbers(well: FiniteSquareWell, e: float) -> WaveNumbers:
    """Interior/exterior wave numbers (k, kappa) at energy ``e``.

    Requires 0 < e <= V0; at the threshold e = V0 the exterior decay rate
    kappa is exactly zero.
    """
    _check_energy(well, e, include_top=True)
    c = well.constants
    k = math.sqrt(2.0 * c.mass * e) / c.hbar
    kappa = math.sqrt(max(2.0 * c.mass * (well.v0 - e), 0.0)) / c.hbar
    return WaveNumbers(k=k, kappa=kappa)


def exterior_coefficients(wn: WaveNumbers, a: float) -> MobiusCoefficients:
    """Exterior bilinear coefficients that glue C2-continuously at q = a.

    Raises ThresholdDegenerate when kappa = 0 (the hyperbolic basis collapses
    at the well top and the exterior form is no longer defined).
    """
    if wn.kappa == 0.0:
        raise ThresholdDegenerate(
            "exterior coefficients are degenerate at the well top (kappa = 0)"
        )
    if wn.k <= 0.0:
        raise EnergyOutOfRange("interior wave number must be positive")
    r = math.sqrt(wn.k / wn.kappa)
    ka = wn.k * a
    cos_ka = math.cos(ka)
    sin_ka = math.sin(ka)
    return MobiusCoefficients(
        a=r * cos_ka,
        b=sin_ka / r,
        c=-r * sin_ka,
        d=cos_ka / r,
    )


def _base_sheet(ka: float, coeffs: MobiusCoefficients) -> int:
    # Sheet count that makes atan(N/Theta) + pi*sheet continuous with the
    # interior value ka at u -> 0+.  When d == 0 exactly the principal value
    # at 0+ is -pi/2 (b/c = -kappa/k < 0 whenever sin(ka) != 0).
    if coeffs.d != 0.0:
        principal = math.atan(coeffs.b / coeffs.d)
    else:
        principal = -0.5 * math.pi
    return round((ka - principal) / math.pi)


def _denominator_crossing(coeffs: MobiusCoefficients) -> float | None:
    # Theta(u) = cosh(u) * (c*tanh(u) + d) has at most one zero for u > 0,
    # at tanh(u*) = -d/c; it exists only when that ratio lies in (0, 1).
    if coeffs.c == 0.0:
        return None
    ratio = -coeffs.d / coeffs.c
    if 0.0 < ratio < 1.0:
        return math.atanh(ratio)
    return None


def _exterior_angle(coeffs: MobiusCoefficients, ka: float, u: float) -> float:
    num = coeffs.a * math.sinh(u) + coeffs.b * math.cosh(u)
    den = coeffs.c * math.sinh(u) + coeffs.d * math.cosh(u)
    base = _base_sheet(ka, coeffs)
    if den == 0.0:
        return math.pi * base + 0.5 * math.pi
    u_star = _denominator_crossing(coeffs)
    sheet = base + (1 if (u_star is not None and u > u_star) else 0)
    return math.atan(num / den) + math.pi * sheet


def reduced_action(well: FiniteSquareWell, e: float, q: float) -> float:
    """W(q) for the canonical microstate {0, hbar*k, 0} at q = 0.

    hbar*k*q inside the well; outside, the unwrapped exterior arctangent,
    continuous and strictly increasing across the tangent's vertical
    asymptotes.  Odd in q.
    """
    _check_energy(well, e)
    c = well.constants
    wn = wavenumbers(well, e)
    a = well.half_width
    x = abs(q)
    if x <= a:
        return c.hbar * wn.k * q
    coeffs = exterior_coefficients(wn, a)
    u = wn.kappa * (x - a)
    theta = _exterior_angle(coeffs, wn.k * a, u)
    return math.copysign(c.hbar * theta, q)


def conjugate_momentum(well: FiniteSquareWell, e: float, q: float) -> float:
    """dW/dq for the canonical microstate: hbar*k inside, decaying outside.

    The exterior value hbar*kappa / [(k/kappa) sinh^2 u + (kappa/k) cosh^2 u]
    is positive everywhere (even in q) and matches hbar*k at the step.
    """
    _check_energy(well, e)
    c = well.constants
    wn = wavenumbers(well, e)
    a = well.half_width
    x = abs(q)
    if x <= a:
        return c.hbar * wn.k
    u = wn.kappa * (x - a)
    f = (wn.k / wn.kappa) * math.sinh(u) ** 2 + (wn.kappa / wn.k) * math.cosh(u) ** 2
    return c.hbar * wn.kappa / f


def momentum_derivative(well: FiniteSquareWell, e: float, q: float) -> float:
    """d2W/dq2 for the canonical microstate; zero inside, odd in q."""
    _check_energy(well, e)
    c = well.constants
    wn = wavenumbers(well, e)
    a = well.half_width
    x = abs(q)
    if x <= a:
        return 0.0
    k, kappa = wn.k, wn.kappa
    u = kappa * (x - a)
    f = (k / kappa) * math.sinh(u) ** 2 + (kappa / k) * math.cosh(u) ** 2
    fprime = ((k * k + kappa * kappa) / (k * kappa)) * math.sinh(2.0 * u)
    value = -c.hbar * kappa * kappa * fprime / (f * f)
    return value if q >= 0.0 else -value


def analytic_grid(well, e, qs):
    """Evaluate (W, p, pp) along an increasing array of sample points.

    Uses a BranchTracker marched along the exterior samples, so the sheet
    count is accumulated exactly as the continuity argument prescribes;
    the scalar ``reduced_action`` resolves the same recursion in closed form.
    Returns three lists aligned with ``qs``.
    """
    _check_energy(well, e)
    c = well.constants
    wn = wavenumbers(well, e)
    a = well.half_width
    ka = wn.k * a
    w = []
    p = []
    pp = []
    tracker = None
    base = None
    coeffs = None
    last_x = None
    for q in qs:
        x = abs(q)
        if last_x is not None and x < last_x:
            raise ValueError("analytic_grid expects |q| to be non-decreasing")
        last_x = x
        if x <= a:
            w.append(c.hbar * wn.k * q)
            p.append(c.hbar * wn.k)
            pp.append(0.0)
            continue
        if tracker is None:
            coeffs = exterior_coefficients(wn, a)
            sign0 = 1 if coeffs.d > 0.0 else (-1 if coeffs.d < 0.0 else
                                              (1 if coeffs.c > 0.0 else -1))
            tracker = BranchTracker(sign0)
            base = _base_sheet(ka, coeffs)
        u = wn.kappa * (x - a)
        num = coeffs.a * math.sinh(u) + coeffs.b * math.cosh(u)
        den = coeffs.c * math.sinh(u) + coeffs.d * math.cosh(u)
        sheet = tracker.update(den)
        if den == 0.0:
            theta = math.pi * (base + sheet) - 0.5 * math.pi
        else:
            theta = math.atan(num / den) + math.pi * (base + sheet)
        w.append(math.copysign(c.hbar * theta, q))
        p.append(conjugate_momentum(well, e, q))
        pp.append(momentum_derivative(well, e, q))
    return w, p, pp


def w_at_infinity(well: FiniteSquareWell, e: float) -> float:
    """The q -> infinity limit of the reduced action, J/4 by symmetry.

    The exterior angle sweeps monotonically from ka by exactly
    arctan(k/kappa) (the determinant-1 normalization makes the sweep
    monotone with total under pi/2, so the limit needs no branch logic):

        W(inf) = hbar * (k*a + atan2(k, kappa))
    """
    _check_energy(well, e, include_top=True)
    wn = wavenumbers(well, e)
    return well.constants.hbar * (wn.k * well.half_width + math.atan2(wn.k, wn.kappa))


def action_of_energy(well: FiniteSquareWell, e: float) -> float:
    """Action variable J(E) = 4 * W(inf) for the canonical microstate."""
    return 4.0 * w_at_infinity(well, e)


def action_wavenumber_residual(well: FiniteSquareWell, e: float, j: float) -> float:
    """Residual of the transcendental relation tying J to the wave number k.

    With theta = J/(4*hbar),

        [cos(theta)*kappa + sin(theta)*k] * sin(ka)
      - [-cos(theta)*k + sin(theta)*kappa] * cos(ka)

    vanishes exactly when (J, E) lie on the action curve of the canonical
    microstate; it reduces to the symmetric quantization at J = 2*pi*hbar and
    the antisymmetric one at J = 4*pi*hbar.
    """
    _check_energy(well, e, include_top=True)
    c = well.constants
    wn = wavenumbers(well, e)
    theta = j / (4.0 * c.hbar)
    ka = wn.k * well.half_width
    lhs = (math.cos(theta) * wn.kappa + math.sin(theta) * wn.k) * math.sin(ka)
    rhs = (-math.cos(theta) * wn.k + math.sin(theta) * wn.kappa) * math.cos(ka)
    return lhs - rhs


def _action_upper_bound(well: FiniteSquareWell) -> float:
    c = well.constants
    k_ub = math.sqrt(2.0 * c.mass * well.v0) / c.hbar
    return 4.0 * c.hbar * (k_ub * well.half_width + 0.5 * math.pi)


def energy_of_action(well: FiniteSquareWell, j: float) -> float:
    """Invert the strictly increasing J(E) map; raises ActionOutOfRange.

    The attainable range is (0, 4*((2mV0)^(1/2)*a + pi*hbar/2)], the upper
    end reached at the well top E = V0.
    """
    c = well.constants
    j_ub = _action_upper_bound(well)
    if not (0.0 < j <= j_ub * (1.0 + 1e-14)):
        raise ActionOutOfRange(
            f"action {j!r} outside the attainable range (0, {j_ub!r}]"
        )
    if j >= j_ub:
        return well.v0
    k_ub = math.sqrt(2.0 * c.mass * well.v0) / c.hbar
    a = well.half_width

    def g(k: float) -> float:
        kappa = math.sqrt(max(k_ub * k_ub - k * k, 0.0))
        return 4.0 * c.hbar * (k * a + math.atan2(k, kappa)) - j

    k_root = brentq(g, 0.0, k_ub, xtol=1e-15, rtol=8.9e-16)
    return (c.hbar * k_root) ** 2 / (2.0 * c.mass)


def quantization_residuals(well: FiniteSquareWell, e: float) -> tuple[float, float]:
    """(symmetric, antisymmetric) quantization residuals at energy ``e``.

    Symmetric bound states satisfy k*tan(ka) = kappa, antisymmetric ones
    k*cot(ka) = -kappa.  Near a tangent/cotangent pole the bounded
    coefficient forms (proportional to c+d and a+b of the exterior Mobius
    coefficients) are returned instead; they share the zero set.
    """
    _check_energy(well, e, include_top=True)
    wn = wavenumbers(well, e)
    ka = wn.k * well.half_width
    cos_ka = math.cos(ka)
    sin_ka = math.sin(ka)
    scale = math.hypot(wn.k, wn.kappa)
    if abs(cos_ka) > _POLE_EPS:
        sym = wn.k * sin_ka / cos_ka - wn.kappa
    else:
        sym = (wn.kappa * cos_ka - wn.k * sin_ka) / scale
    if abs(sin_ka) > _POLE_EPS:
        anti = wn.k * cos_ka / sin_ka + wn.kappa
    else:
        anti = (wn.k * cos_ka + wn.kappa * sin_ka) / scale
    return sym, anti


def general_quantization_residual(
    coeffs: MobiusCoefficients, parity_limit: float
) -> tuple[float, float]:
    """Quantization residuals from bilinear coefficients on a symmetric basis.

    ``parity_limit`` is the limit ratio (antisymmetric basis)/(symmetric
    basis) at q -> +infinity (+1 for the sinh/cosh pair; -1 at -infinity).
    The symmetric-state residual c + d/parity_limit vanishes when the
    denominator's asymptote kills the growing exponential; the
    antisymmetric-state residual a*parity_limit + b does the same for the
    numerator.  For the square well at +infinity these reduce to c+d and a+b.
    Both zero sets are invariant under the scaling family
    {G*a, G*b, c/G, d/G}, which preserves the unit determinant.
    """
    if parity_limit not in (-1.0, 1.0, -1, 1):
        raise ValueError("parity_limit must be +1 or -1 (asymptotic basis ratio)")
    r = float(parity_limit)
    sym = coeffs.c + coeffs.d / r
    anti = coeffs.a * r + coeffs.b
    return sym, anti


def bound_state_count(well: FiniteSquareWell) -> int:
    """Number of bound states, floor(4*(2mV0)^(1/2)*a/h + 1) with h = 2*pi*hbar.

    When the argument lands exactly on an integer the state at the well top
    is counted (its quantization condition holds marginally at E = V0).
    """
    c = well.constants
    x = 4.0 * math.sqrt(2.0 * c.mass * well.v0) * well.half_width / (2.0 * math.pi * c.hbar)
    # Guard the exact-threshold case against round-off pushing x just below
    # the integer it analytically equals.
    nearest = round(x)
    if nearest >= 1 and abs(x - nearest) <= 1e-9:
        return int(nearest) + 1
    return int(math.floor(x + 1.0))


def _scan_residuals(well: FiniteSquareWell, k: float, k_ub: float) -> tuple[float, float]:
    # Pole-free forms used for bracketing: both are smooth in k on (0, k_ub).
    a = well.half_width
    kappa = math.sqrt(max(k_ub * k_ub - k * k, 0.0))
    ka = k * a
    g_sym = kappa * math.cos(ka) - k * math.sin(ka)
    g_anti = k * math.cos(ka) + kappa * math.sin(ka)
    return g_sym, g_anti


def eigenvalues(well: FiniteSquareWell, *, grid: int = 4096) -> list[WellEigenvalue]:
    """All bound states, ascending in energy, parity-labeled and indexed.

    Roots of the two quantization conditions are bracketed on a uniform
    wave-number grid and polished by Brent's method; a marginal state at the
    well top is appended when the count formula lands on an integer.  The
    result length always equals ``bound_state_count(well)``.
    """
    c = well.constants
    k_ub = math.sqrt(2.0 * c.mass * well.v0) / c.hbar
    a = well.half_width
    ks = [k_ub * (i + 0.5) / grid for i in range(grid)]

    roots: list[tuple[float, str]] = []
    for parity, which in ((SYMMETRIC, 0), (ANTISYMMETRIC, 1)):
        vals = [_scan_residuals(well, k, k_ub)[which] for k in ks]
        for i in range(len(ks) - 1):
            if vals[i] == 0.0:
                roots.append((ks[i], parity))
            elif vals[i] * vals[i + 1] < 0.0:
                f = lambda k, w=which: _scan_residuals(well, k, k_ub)[w]
                roots.append((brentq(f, ks[i], ks[i + 1], xtol=1e-15, rtol=8.9e-16), parity))
        if vals[-1] == 0.0:
            roots.append((ks[-1], parity))

    roots.sort(key=lambda item: item[0])
    states: list[WellEigenvalue] = []
    count_sym = 0
    count_anti = 0
    for k_root, parity in roots:
        e = (c.hbar * k_root) ** 2 / (2.0 * c.mass)
        sym_res, anti_res = quantization_residuals(well, e)
        if parity == SYMMETRIC:
            count_sym += 1
            n = count_sym
            j = (4 * n - 2) * math.pi * c.hbar
            residual = sym_res
        else:
            count_anti += 1
            n = count_anti
            j = 4 * n * math.pi * c.hbar
            residual = anti_res
        states.append(WellEigenvalue(e=e, parity=parity, n=n, j=j, residual=residual))

    x = 2.0 * k_ub * a / math.pi
    if abs(x - round(x)) <= 1e-9 and round(x) >= 1:
        # Marginal state at the well top: parity continues the alternation.
        total = len(states)
        parity = SYMMETRIC if total % 2 == 0 else ANTISYMMETRIC
        if parity == SYMMETRIC:
            n = count_sym + 1
            j = (4 * n - 2) * math.pi * c.hbar
        else:
            n = count_anti + 1
            j = 4 * n * math.pi * c.hbar
        sym_res, anti_res = quantization_residuals(well, well.v0)
        residual = sym_res if parity == SYMMETRIC else anti_res
        states.append(WellEigenvalue(e=well.v0, parity=parity, n=n, j=j, residual=residual))
    return states


def special_half_width(n: int, v0: float, constants: Constants | None = None) -> float:
    """Half-width a_n making the action midway between eigenvalues at E = V0/2.

    At k = kappa = (m*V0)^(1/2)/hbar the action-wave-number relation with
    J_n = (2n-1)*pi*hbar collapses to k*a_n = (n+1)*pi/2, so

        a_n = ((n+1)/2) * pi*hbar / (m*V0)^(1/2).

    (An alternative n*pi/(2k) form floating around fails the relation's
    residual check; the (n+1) form is the consistent one.)
    """
    if n < 1:
        raise ValueError("n must be a positive integer")
    c = constants if constants is not None else Constants()
    return 0.5 * (n + 1) * math.pi * c.hbar / math.sqrt(c.mass * v0)


def quarter_period(well: FiniteSquareWell, e: float) -> float:
    """T/4 = m*a/(hbar*k): the classical quarter period, exact at any E."""
    _check_energy(well, e)
    c = well.constants
    wn = wavenumbers(well, e)
    return c.mass * well.half_width / (c.hbar * wn.k)


def time_parametrization(well: FiniteSquareWell, e: float, q: float) -> float:
    """t - tau along the trajectory, with the epoch chosen so t(0) = 0.

    m*q/(hbar*k) inside the well (uniform motion); outside,

        tau2 + m*(q-a) / (hbar*kappa*[(k/kappa) sinh^2 u + (kappa/k) cosh^2 u])

    with u = kappa*(q-a) and tau2 = m*a/(hbar*k) the time at the step.  The
    exterior expression rises to a single maximum and then falls back toward
    tau2: the trajectory's excursion into the forbidden region is retrograde
    in time beyond the maximum.  Odd in q.
    """
    _check_energy(well, e)
    c = well.constants
    wn = wavenumbers(well, e)
    a = well.half_width
    x = abs(q)
    if x <= a:
        return c.mass * q / (c.hbar * wn.k)
    tau2 = c.mass * a / (c.hbar * wn.k)
    u = wn.kappa * (x - a)
    f = (wn.k / wn.kappa) * math.sinh(u) ** 2 + (wn.kappa / wn.k) * math.cosh(u) ** 2
    t = tau2 + c.mass * (x - a) / (c.hbar * wn.kappa * f)
    return math.copysign(t, q)


def t_max_location(well: FiniteSquareWell, e: float) -> tuple[float, float]:
    """Position and value of the single time maximum beyond the step.

    q* > a is the unique root of

        (k/kappa) sinh^2 u + (kappa/k) cosh^2 u
            - u * ((k^2 + kappa^2)/(k*kappa)) * sinh(2u) = 0,

    u = kappa*(q-a); t is increasing on (a, q*) and retrograde beyond.
    """
    _check_energy(well, e)
    wn = wavenumbers(well, e)
    k, kappa = wn.k, wn.kappa

    def g(u: float) -> float:
        f = (k / kappa) * math.sinh(u) ** 2 + (kappa / k) * math.cosh(u) ** 2
        fprime = ((k * k + kappa * kappa) / (k * kappa)) * math.sinh(2.0 * u)
        return f - u * fprime

    hi = 1.0
    while g(hi) > 0.0:
        hi *= 2.0
        if hi > 1e6:  # pragma: no cover - g goes negative well before this
            raise ArithmeticError("failed to bracket the time maximum")
    u_star = brentq(g, 1e-300, hi, xtol=1e-15, rtol=8.9e-16)
    q_star = well.half_width + u_star / kappa
    return q_star, time_parametrization(well, e, q_star)


def write_eigen_csv(states, path, *, hbar: float = 1.0) -> None:
    """Write bound states as CSV: n,parity,E,J_over_2pi,residual."""
    with open(path, "w", newline="\n") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "parity", "E", "J_over_2pi", "residual"])
        for s in states:
            writer.writerow(
                [
                    s.n,
                    s.parity,
                    f"{s.e:.17g}",
                    f"{s.j / (2.0 * math.pi * hbar):.17g}",
                    f"{s.residual:.17g}",
                ]
            )
