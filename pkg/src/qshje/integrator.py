"""Adaptive integration of the quantum stationary Hamilton-Jacobi equation.

The equation for the reduced action W(q),

    (W')^2 / 2m + V(q) - E = -(hbar^2/4m) * (W'''/W' - (3/2)(W''/W')^2),

is integrated as the first-order system (W, p, pp) = (W, W', W'') with

    W''' = (3/2) pp^2 / p - (4m/hbar^2) p (p^2/2m + V(q) - E).

The stepper is an embedded Dormand-Prince 5(4) pair with PI step-size
control and local extrapolation (the fifth-order result is propagated).
Dense output between accepted steps uses the pair's standard quartic
interpolant, so the returned grid can be arbitrarily fine without
constraining the step sequence.

Numerical safeguards specific to this equation:

* p must stay strictly positive (W is strictly increasing).  A stage or
  step that drives p to zero or below is rejected and retried with a
  smaller step; if no step size helps, MonotonicityViolation is raised —
  the integration has been captured by a parasitic solution.
* Deep in a classically forbidden region p decays super-exponentially.
  Once it falls to p_floor the remaining contribution to W is far below
  round-off, so the state is frozen at that point instead of erroring and
  all later samples repeat the frozen values (grid.frozen_from marks the
  first such sample).
* Square-well potentials expose their discontinuities as breakpoints; the
  integration is split there so every step sees a smooth right-hand side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    MomentumUnderflow,
    MonotonicityViolation,
    NonFiniteState,
    StepLimitExceeded,
    WrongPotential,
)
from .model import (
    EnergyValue,
    FiniteSquareWell,
    HarmonicOscillator,
    Microstate,
    Potential,
    as_energy,
)

__all__ = [
    "Tolerances",
    "OdeState",
    "ReducedActionGrid",
    "qshje_rhs",
    "integrate",
    "divergence_product",
    "write_grid_csv",
]


@dataclass(frozen=True)
class Tolerances:
    """Error-control settings for the adaptive stepper."""

    abs_tol: float = 1e-13
    rel_tol: float = 1e-13
    p_floor: float = 1e-250
    max_steps: int = 1_000_000

    def __post_init__(self) -> None:
        if not (self.abs_tol > 0.0 and self.rel_tol > 0.0):
            raise ValueError("tolerances must be positive")
        if not (self.p_floor > 0.0):
            raise ValueError("p_floor must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")


@dataclass(frozen=True)
class OdeState:
    """State triple (W, p, pp) = (W, dW/dq, d2W/dq2)."""

    w: float
    p: float
    pp: float


# Dormand-Prince 5(4) tableau.
_C = (0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0)
_A21 = 1.0 / 5.0
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = (19372.0 / 6561.0, -25360.0 / 2187.0,
                          64448.0 / 6561.0, -212.0 / 729.0)
_A61, _A62, _A63, _A64, _A65 = (9017.0 / 3168.0, -355.0 / 33.0,
                                46732.0 / 5247.0, 49.0 / 176.0,
                                -5103.0 / 18656.0)
_B1, _B3, _B4, _B5, _B6 = (35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0,
                           -2187.0 / 6784.0, 11.0 / 84.0)
# Error coefficients: fifth-order weights minus fourth-order weights.
_E1, _E3, _E4, _E5, _E6, _E7 = (71.0 / 57600.0, -71.0 / 16695.0,
                                71.0 / 1920.0, -17253.0 / 339200.0,
                                22.0 / 525.0, -1.0 / 40.0)

# Quartic dense-output interpolant of the pair (Shampine's coefficients):
# y(q + th) = y + h * sum_i K_i * (P[i][0] t + P[i][1] t^2 + P[i][2] t^3
#                                  + P[i][3] t^4).
_P = np.array([
    [1.0, -8048581381.0 / 2820520608.0, 8663915743.0 / 2820520608.0,
     -12715105075.0 / 11282082432.0],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200.0 / 32700410799.0, -68118460800.0 / 10900136933.0,
     87487479700.0 / 32700410799.0],
    [0.0, -1754552775.0 / 470086768.0, 14199869525.0 / 1410260304.0,
     -10690763975.0 / 1880347072.0],
    [0.0, 127303824393.0 / 49829197408.0, -318862633887.0 / 49829197408.0,
     701980252875.0 / 199316789632.0],
    [0.0, -282668133.0 / 205662961.0, 2019193451.0 / 616988883.0,
     -1453857185.0 / 822651844.0],
    [0.0, 40617522.0 / 29380423.0, -110615467.0 / 29380423.0,
     69997945.0 / 29380423.0],
])

_SAFETY = 0.9
_BETA = 0.04
_EXPO = 0.2 - 0.75 * _BETA
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0


def qshje_rhs(state: OdeState | tuple[float, float, float], q: float,
              energy: float | EnergyValue, potential: Potential,
              p_floor: float = 1e-250) -> float:
    """Third derivative W'''(q) from the rearranged equation of motion.

    Raises MonotonicityViolation if p <= 0 and MomentumUnderflow if
    0 < p <= p_floor (at which point the caller should freeze instead of
    continuing to divide by a vanishing momentum).
    """
    if isinstance(state, OdeState):
        _, p, pp = state.w, state.p, state.pp
    else:
        _, p, pp = state
    if p <= 0.0:
        raise MonotonicityViolation(f"momentum p={p} is not positive at q={q}")
    if p <= p_floor:
        raise MomentumUnderflow(f"momentum p={p} at q={q} is below the floor")
    e = as_energy(energy).value
    c = potential.constants
    kin = p * p / (2.0 * c.mass)
    # (pp/p)*pp groups like scales: pp*pp would underflow to subnormals
    # long before p reaches any reasonable floor.
    return (1.5 * (pp / p) * pp
            - (4.0 * c.mass / c.hbar**2) * p * (kin + potential.value(q) - e))


@dataclass(frozen=True, eq=False)
class ReducedActionGrid:
    """Equally spaced samples of (W, p, pp) along q.

    frozen_from is the index of the first sample holding frozen values
    (momentum underflow upstream), or None if no freezing occurred.
    """

    qs: np.ndarray
    w: np.ndarray
    p: np.ndarray
    pp: np.ndarray
    energy: EnergyValue
    microstate: Microstate
    potential: Potential
    frozen_from: int | None = None

    @property
    def states(self) -> list[OdeState]:
        return [OdeState(float(a), float(b), float(c))
                for a, b, c in zip(self.w, self.p, self.pp)]

    def state_at(self, i: int) -> OdeState:
        return OdeState(float(self.w[i]), float(self.p[i]), float(self.pp[i]))


class _Solution:
    """Accepted-step record of one integration, for dense evaluation."""

    __slots__ = ("q_start", "starts", "hs", "ys", "ks", "final_q", "final_y",
                 "freeze_q", "freeze_y", "steps")

    def __init__(self, q_start: float):
        self.q_start = q_start
        self.starts: list[float] = []
        self.hs: list[float] = []
        self.ys: list[tuple[float, float, float]] = []
        self.ks: list[tuple] = []
        self.final_q = q_start
        self.final_y: tuple[float, float, float] | None = None
        self.freeze_q: float | None = None
        self.freeze_y: tuple[float, float, float] | None = None
        self.steps = 0

    def evaluate(self, targets: np.ndarray) -> tuple[np.ndarray, np.ndarray,
                                                     np.ndarray]:
        """Interpolate (W, p, pp) at the given q targets.

        Targets must lie between q_start and final_q (inclusive, either
        direction); targets at or beyond the freeze point return the frozen
        state.
        """
        n = len(targets)
        out = np.empty((n, 3))
        if not self.starts:
            # Degenerate: no steps taken (q_end == q0 after freeze at start).
            y = self.final_y
            out[:] = y
            return out[:, 0], out[:, 1], out[:, 2]
        direction = 1.0 if self.hs[0] > 0 else -1.0
        s_starts = [direction * s for s in self.starts]
        s_targets = direction * targets
        starts_arr = np.asarray(s_starts)
        hs = np.asarray(self.hs)
        ys = np.asarray(self.ys)
        ks = np.asarray(self.ks)  # (nsteps, 7, 3)
        idx = np.searchsorted(starts_arr, s_targets, side="right") - 1
        idx = np.clip(idx, 0, len(self.hs) - 1)
        theta = (targets - np.asarray(self.starts)[idx]) / hs[idx]
        theta = np.clip(theta, 0.0, 1.0)
        tt = np.empty((n, 4))
        tt[:, 0] = theta
        tt[:, 1] = theta * theta
        tt[:, 2] = tt[:, 1] * theta
        tt[:, 3] = tt[:, 2] * theta
        b = tt @ _P.T  # (n, 7)
        out = ys[idx] + hs[idx, None] * np.einsum("ni,nij->nj", b, ks[idx])
        # Exact stepped values at step joints beat the interpolant there.
        if self.final_y is not None:
            at_end = targets == self.final_q
            if np.any(at_end):
                out[at_end] = self.final_y
        if self.freeze_q is not None:
            frozen = direction * targets > direction * self.freeze_q
            out[frozen] = self.freeze_y
        return out[:, 0], out[:, 1], out[:, 2]

    def first_frozen_index(self, targets: np.ndarray) -> int | None:
        if self.freeze_q is None:
            return None
        direction = 1.0 if self.final_q >= self.q_start else -1.0
        beyond = direction * targets > direction * self.freeze_q
        hits = np.nonzero(beyond)[0]
        return int(hits[0]) if len(hits) else None


def _segments(potential: Potential, q0: float, q_end: float):
    """Split [q0, q_end] at interior potential breakpoints.

    Yields (qa, qb, vfunc) with vfunc valid on the whole closed sub-interval
    (for a square well each piece is constant, so boundary evaluations see
    the correct side).
    """
    direction = 1.0 if q_end > q0 else -1.0
    cuts = sorted((b for b in potential.breakpoints()
                   if min(q0, q_end) < b < max(q0, q_end)),
                  reverse=direction < 0)
    edges = [q0, *cuts, q_end]
    for qa, qb in zip(edges[:-1], edges[1:]):
        if isinstance(potential, FiniteSquareWell):
            v_mid = potential.value(0.5 * (qa + qb))
            yield qa, qb, (lambda q, _v=v_mid: _v)
        else:
            yield qa, qb, potential.value


def _initial_step(f, q0, y0, f0, direction, span, tol: Tolerances) -> float:
    sc = [tol.abs_tol + tol.rel_tol * abs(v) for v in y0]
    d0 = math.sqrt(sum((v / s) ** 2 for v, s in zip(y0, sc)) / 3.0)
    d1 = math.sqrt(sum((v / s) ** 2 for v, s in zip(f0, sc)) / 3.0)
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    h0 = min(h0, span)
    y1 = tuple(y + direction * h0 * k for y, k in zip(y0, f0))
    f1 = f(q0 + direction * h0, *y1)
    if f1 is None:
        return direction * min(1e-8, span)
    d2 = math.sqrt(sum(((a - b) / s) ** 2
                       for a, b, s in zip(f1, f0, sc)) / 3.0) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return direction * min(100.0 * h0, h1, span)


def _solve(potential: Potential, energy: float, triple, q0: float,
           q_end: float, tol: Tolerances, *, split: bool = True,
           max_step: float | None = None,
           replay: list[float] | None = None,
           replay_may_end_early: bool = False) -> _Solution:
    """Integrate the state triple from q0 to q_end.

    With replay given, the recorded signed step sizes are applied verbatim
    (no error control, no step cap); this lets a neighbouring-energy
    integration share an identical step sequence so that truncation errors
    cancel in differences.  replay_may_end_early declares that the recorded
    path stopped short of q_end (it froze); the replaying run then freezes at
    the same point instead of treating exhaustion as an error.
    """
    c = potential.constants
    e = float(energy)
    coef = 4.0 * c.mass / c.hbar**2
    inv2m = 0.5 / c.mass
    p_floor = tol.p_floor

    sol = _Solution(q0)
    w, p, pp = (float(triple[0]), float(triple[1]), float(triple[2]))
    if p <= 0.0:
        raise MonotonicityViolation("initial momentum must be positive")
    if not all(math.isfinite(v) for v in (w, p, pp)):
        raise NonFiniteState("initial state must be finite")
    if q_end == q0:
        raise ValueError("q_end must differ from q0")
    direction = 1.0 if q_end > q0 else -1.0
    budget = tol.max_steps
    replay_iter = iter(replay) if replay is not None else None

    if split:
        seg_list = list(_segments(potential, q0, q_end))
    else:
        seg_list = [(q0, q_end, potential.value)]

    h = None
    facold = 1e-4
    k7 = None  # FSAL carry within a segment

    for qa, qb, vfn in seg_list:
        if sol.freeze_q is not None:
            break

        def f(q, wv, pv, ppv):
            if pv <= 0.0:
                return None
            # (pp/p)*pp keeps like scales together; see qshje_rhs.
            val = (1.5 * (ppv / pv) * ppv
                   - coef * pv * (pv * pv * inv2m + vfn(q) - e))
            if not math.isfinite(val):
                return None
            return pv, ppv, val

        q = qa
        span = abs(qb - qa)
        if span == 0.0:
            continue
        f0 = f(q, w, p, pp)
        if f0 is None:
            raise NonFiniteState(f"right-hand side not evaluable at q={q}")
        k1 = f0
        if replay_iter is None:
            if h is None:
                h = _initial_step(f, q, (w, p, pp), f0, direction, span, tol)
            else:
                h = math.copysign(min(abs(h), span), direction)

        while True:
            remaining = qb - q
            if direction * remaining <= 0.0:
                break
            if sol.steps >= budget:
                raise StepLimitExceeded(
                    f"exceeded {budget} steps before reaching q={q_end}")
            if replay_iter is not None:
                try:
                    h = next(replay_iter)
                except StopIteration as exc:
                    if replay_may_end_early:
                        sol.freeze_q = q
                        sol.freeze_y = (w, p, pp)
                        break
                    raise ValueError(
                        "replayed step sequence shorter than the path") from exc
                # Recorded steps are applied untouched so the two paths stay
                # bit-identical; the recorded sequence already lands on qb.
                clamped = direction * (q + h - qb) >= 0.0
            else:
                # Stability cap in classically forbidden stretches: there the
                # momentum is far below the absolute tolerance, so the error
                # estimator no longer constrains its relative accuracy and an
                # uncapped step lets the growing companion solution take over.
                # Keeping h times the local decay rate of p at or below one
                # preserves relative fidelity of the decaying branch.
                h_lim = math.inf if max_step is None else max_step
                v_here = vfn(q)
                if v_here > e:
                    rate = 2.0 * math.sqrt(2.0 * c.mass * (v_here - e)) / c.hbar
                    h_lim = min(h_lim, 1.0 / rate)
                if abs(h) > h_lim:
                    h = math.copysign(h_lim, direction)
                clamped = False
                if (direction * (q + h - qb) >= 0.0
                        and abs(remaining) <= h_lim * (1.0 + 1e-9)) or \
                   abs(remaining) < 8.0 * abs(q) * 1e-16 + 1e-300:
                    h = remaining
                    clamped = True

            # The seven stages.
            rej = False
            q2 = q + _C[1] * h
            y2 = (w + h * _A21 * k1[0], p + h * _A21 * k1[1],
                  pp + h * _A21 * k1[2])
            k2 = f(q2, *y2)
            if k2 is None:
                rej = True
            if not rej:
                q3 = q + _C[2] * h
                y3 = (w + h * (_A31 * k1[0] + _A32 * k2[0]),
                      p + h * (_A31 * k1[1] + _A32 * k2[1]),
                      pp + h * (_A31 * k1[2] + _A32 * k2[2]))
                k3 = f(q3, *y3)
                rej = k3 is None
            if not rej:
                q4 = q + _C[3] * h
                y4 = (w + h * (_A41 * k1[0] + _A42 * k2[0] + _A43 * k3[0]),
                      p + h * (_A41 * k1[1] + _A42 * k2[1] + _A43 * k3[1]),
                      pp + h * (_A41 * k1[2] + _A42 * k2[2] + _A43 * k3[2]))
                k4 = f(q4, *y4)
                rej = k4 is None
            if not rej:
                q5 = q + _C[4] * h
                y5 = (w + h * (_A51 * k1[0] + _A52 * k2[0] + _A53 * k3[0]
                               + _A54 * k4[0]),
                      p + h * (_A51 * k1[1] + _A52 * k2[1] + _A53 * k3[1]
                               + _A54 * k4[1]),
                      pp + h * (_A51 * k1[2] + _A52 * k2[2] + _A53 * k3[2]
                                + _A54 * k4[2]))
                k5 = f(q5, *y5)
                rej = k5 is None
            if not rej:
                q6 = q + h
                y6 = (w + h * (_A61 * k1[0] + _A62 * k2[0] + _A63 * k3[0]
                               + _A64 * k4[0] + _A65 * k5[0]),
                      p + h * (_A61 * k1[1] + _A62 * k2[1] + _A63 * k3[1]
                               + _A64 * k4[1] + _A65 * k5[1]),
                      pp + h * (_A61 * k1[2] + _A62 * k2[2] + _A63 * k3[2]
                                + _A64 * k4[2] + _A65 * k5[2]))
                k6 = f(q6, *y6)
                rej = k6 is None
            if not rej:
                w_new = w + h * (_B1 * k1[0] + _B3 * k3[0] + _B4 * k4[0]
                                 + _B5 * k5[0] + _B6 * k6[0])
                p_new = p + h * (_B1 * k1[1] + _B3 * k3[1] + _B4 * k4[1]
                                 + _B5 * k5[1] + _B6 * k6[1])
                pp_new = pp + h * (_B1 * k1[2] + _B3 * k3[2] + _B4 * k4[2]
                                   + _B5 * k5[2] + _B6 * k6[2])
                k7 = f(q + h, w_new, p_new, pp_new)
                rej = k7 is None or p_new <= 0.0

            sol.steps += 1
            if rej:
                if replay_iter is not None:
                    raise MonotonicityViolation(
                        f"momentum lost positivity near q={q} during replay")
                if abs(h) <= 16.0 * abs(q) * 1e-16 + 1e-300:
                    raise MonotonicityViolation(
                        f"momentum lost positivity near q={q}; "
                        "no step size restores it")
                h *= 0.25
                continue

            if replay_iter is None:
                err_w = h * (_E1 * k1[0] + _E3 * k3[0] + _E4 * k4[0]
                             + _E5 * k5[0] + _E6 * k6[0] + _E7 * k7[0])
                err_p = h * (_E1 * k1[1] + _E3 * k3[1] + _E4 * k4[1]
                             + _E5 * k5[1] + _E6 * k6[1] + _E7 * k7[1])
                err_pp = h * (_E1 * k1[2] + _E3 * k3[2] + _E4 * k4[2]
                              + _E5 * k5[2] + _E6 * k6[2] + _E7 * k7[2])
                sc_w = tol.abs_tol + tol.rel_tol * max(abs(w), abs(w_new))
                sc_p = tol.abs_tol + tol.rel_tol * max(abs(p), abs(p_new))
                sc_pp = tol.abs_tol + tol.rel_tol * max(abs(pp), abs(pp_new))
                err = math.sqrt(((err_w / sc_w) ** 2 + (err_p / sc_p) ** 2
                                 + (err_pp / sc_pp) ** 2) / 3.0)
                if err > 1.0:
                    fac11 = err ** _EXPO
                    h = h / min(1.0 / _MIN_FACTOR, fac11 / _SAFETY)
                    if abs(h) <= 16.0 * abs(q) * 1e-16 + 1e-300:
                        raise NonFiniteState(
                            f"step size underflow at q={q}")
                    continue
                fac11 = err ** _EXPO if err > 0.0 else 1e-10
                fac = fac11 / (facold ** _BETA)
                factor = 1.0 / min(1.0 / _MIN_FACTOR,
                                   max(1.0 / _MAX_FACTOR, fac / _SAFETY))
                facold = max(err, 1e-4)
            else:
                factor = 1.0

            sol.starts.append(q)
            sol.hs.append(h)
            sol.ys.append((w, p, pp))
            sol.ks.append((k1, k2, k3, k4, k5, k6, k7))

            q = qb if clamped else q + h
            w, p, pp = w_new, p_new, pp_new
            k1 = k7
            if replay_iter is None:
                h = h * factor

            if p <= p_floor:
                sol.freeze_q = q
                sol.freeze_y = (w, p, pp)
                break

        if sol.freeze_q is not None:
            break

    sol.final_q = q_end
    if sol.freeze_q is not None:
        sol.final_y = sol.freeze_y
    else:
        sol.final_y = (w, p, pp)
    return sol


def integrate(potential: Potential, energy: float | EnergyValue,
              microstate: Microstate, q_end: float, n_out: int = 4000,
              tol: Tolerances | None = None, *, split: bool = True,
              max_step: float | None = None) -> ReducedActionGrid:
    """Solve for the reduced action from the microstate's q0 out to q_end.

    Returns n_out equally spaced samples of (W, p, pp), q0 and q_end
    inclusive.  The endpoint value comes from the stepped solution (the
    final step is clamped to land exactly on q_end), interior samples from
    the dense interpolant.
    """
    if n_out < 2:
        raise ValueError("n_out must be at least 2")
    tol = tol or Tolerances()
    ev = as_energy(energy)
    c = potential.constants
    w0, p0, pp0 = microstate.resolve(ev.value, c.mass)
    sol = _solve(potential, ev.value, (w0, p0, pp0), microstate.q0, q_end,
                 tol, split=split, max_step=max_step)
    qs = np.linspace(microstate.q0, q_end, n_out)
    w, p, pp = sol.evaluate(qs)
    return ReducedActionGrid(qs=qs, w=w, p=p, pp=pp, energy=ev,
                             microstate=microstate, potential=potential,
                             frozen_from=sol.first_frozen_index(qs))


def divergence_product(grid: ReducedActionGrid) -> np.ndarray:
    """p(q) * exp(m w q^2 / 2 hbar) on an oscillator grid.

    In the forbidden region the momentum decays faster than the bound-state
    envelope, so this product still attenuates; it is the standard
    diagnostic that the integration has not been captured by a growing
    solution.
    """
    if not isinstance(grid.potential, HarmonicOscillator):
        raise WrongPotential("divergence product is oscillator-only")
    c = grid.potential.constants
    with np.errstate(over="ignore"):
        return grid.p * np.exp(c.mass * c.omega * grid.qs**2 / (2.0 * c.hbar))


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_grid_csv(grid: ReducedActionGrid, path) -> None:
    """Write the grid as CSV with header q,W,p,pp (17 significant digits)."""
    with open(path, "w", newline="\n") as fh:
        fh.write("q,W,p,pp\n")
        for q, w, p, pp in zip(grid.qs, grid.w, grid.p, grid.pp):
            fh.write(f"{_fmt(q)},{_fmt(w)},{_fmt(p)},{_fmt(pp)}\n")
