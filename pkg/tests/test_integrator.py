"""Adaptive integration of the motion for the reduced action.

Closed-form anchors used below:

* Oscillator ground energy E = 0.5 (hbar = m = omega = 1) with the start
  {W, p, pp} = {0, 1, 0}: the two real ground solutions are e^(-q^2/2) and
  e^(-q^2/2) * integral_0^q e^(t^2) dt, whose ratio gives

      W(q) = atan((sqrt(pi)/2) * erfi(q)),

  which rises to pi/2 as q -> infinity.
* Square well: W = hbar*k*q inside the well for the start {0, hbar*k, 0},
  and the module's analytic exterior continuation outside.
"""

import math

import numpy as np
import pytest
from scipy.special import erfi

from qshje import squarewell
from qshje.errors import (
    MomentumUnderflow,
    MonotonicityViolation,
    NonFiniteState,
    StepLimitExceeded,
    WrongPotential,
)
from qshje.integrator import (
    OdeState,
    Tolerances,
    _solve,
    divergence_product,
    integrate,
    qshje_rhs,
    write_grid_csv,
)
from qshje.model import FiniteSquareWell, HarmonicOscillator, Microstate

LHO = HarmonicOscillator()
CANON = Microstate.fixed(1.0)


def ground_closed_form(q: float) -> float:
    return math.atan(0.5 * math.sqrt(math.pi) * erfi(q))


class TestRhs:
    def test_ground_state_stationary_start(self):
        # p^2/2m + V - E = 0.5 - 0.5 and pp = 0: both terms vanish.
        assert qshje_rhs(OdeState(0.0, 1.0, 0.0), 0.0, 0.5, LHO) == 0.0

    def test_hand_value(self):
        # 1.5*pp^2/p - 4*p*(p^2/2 + V - E)
        #   = 0 - 4*0.5*(0.125 + 0 - 0.4) = 0.55
        assert qshje_rhs((0.0, 0.5, 0.0), 0.0, 0.4, LHO) == pytest.approx(
            0.55, abs=1e-15)

    def test_well_interior_uniform(self):
        well = FiniteSquareWell(1.0, 1.0)
        k = math.sqrt(2.0 * 0.3)
        assert qshje_rhs((0.0, k, 0.0), 0.5, 0.3, well) == pytest.approx(
            0.0, abs=1e-15)

    def test_rejects_nonpositive_momentum(self):
        with pytest.raises(MonotonicityViolation):
            qshje_rhs((0.0, 0.0, 0.0), 0.0, 0.5, LHO)
        with pytest.raises(MonotonicityViolation):
            qshje_rhs((0.0, -1.0, 0.0), 0.0, 0.5, LHO)

    def test_underflow_floor(self):
        with pytest.raises(MomentumUnderflow):
            qshje_rhs((0.0, 1e-260, 0.0), 0.0, 0.5, LHO)
        # a custom floor moves the threshold
        with pytest.raises(MomentumUnderflow):
            qshje_rhs((0.0, 1e-9, 0.0), 0.0, 0.5, LHO, p_floor=1e-8)


class TestGroundStateClosedForm:
    def test_matches_erfi_form_on_grid(self):
        grid = integrate(LHO, 0.5, CANON, 3.0, n_out=61)
        for q, w in zip(grid.qs, grid.w):
            assert w == pytest.approx(ground_closed_form(q), abs=1e-12)

    def test_far_field_asymptote(self):
        grid = integrate(LHO, 0.5, CANON, 10.0, n_out=2)
        assert grid.w[-1] == pytest.approx(math.pi / 2, abs=1e-9)

    def test_asymmetric_start_endpoints(self):
        # Start {0, 1, 0.5}: pinned endpoint values of an E = 0.5 run whose
        # two-sided span is exactly half an action quantum, 2*(W+ - W-) = 2*pi.
        ms = Microstate.fixed(1.0, pp0=0.5)
        w_plus = integrate(LHO, 0.5, ms, 10.0, n_out=2).w[-1]
        w_minus = integrate(LHO, 0.5, ms, -10.0, n_out=2).w[-1]
        assert w_plus == pytest.approx(1.815774989921758, abs=1e-8)
        assert w_minus == pytest.approx(-1.325817663668034, abs=1e-8)
        assert (w_plus - w_minus) / math.pi == pytest.approx(1.0, abs=1e-9)


class TestEquationResidual:
    def test_dense_samples_satisfy_the_equation(self):
        """Five-point derivatives of the returned samples close the system.

        dW/dq must reproduce p, dp/dq must reproduce pp, and dpp/dq must
        reproduce the equation's third derivative, all to 1e-8 relative.
        """
        n = 6001
        g = integrate(LHO, 0.5, CANON, 3.0, n_out=n)
        h = g.qs[1] - g.qs[0]
        i = np.arange(2, n - 2)

        def deriv(y):
            return (-y[i + 2] + 8 * y[i + 1] - 8 * y[i - 1] + y[i - 2]) / (12 * h)

        rhs = np.array([qshje_rhs((w, p, pp), q, 0.5, LHO)
                        for w, p, pp, q in zip(g.w[i], g.p[i], g.pp[i], g.qs[i])])
        assert np.max(np.abs(deriv(g.w) - g.p[i])
                      / np.maximum(np.abs(g.p[i]), 1.0)) <= 1e-8
        assert np.max(np.abs(deriv(g.p) - g.pp[i])
                      / np.maximum(np.abs(g.pp[i]), 1.0)) <= 1e-8
        assert np.max(np.abs(deriv(g.pp) - rhs)
                      / np.maximum(np.abs(rhs), 1.0)) <= 1e-8


class TestStepControl:
    def test_tolerance_halving_invariance(self):
        w_coarse = integrate(LHO, 0.5, CANON, 6.0, n_out=2,
                             tol=Tolerances(abs_tol=2e-13, rel_tol=2e-13)).w[-1]
        w_fine = integrate(LHO, 0.5, CANON, 6.0, n_out=2,
                           tol=Tolerances(abs_tol=1e-13, rel_tol=1e-13)).w[-1]
        assert abs(w_coarse - w_fine) <= 10 * 1e-13

    def test_symmetry_of_directions(self):
        for e in (0.5, 0.9, 1.5):
            fwd = integrate(LHO, e, CANON, 6.0, n_out=2).w[-1]
            bwd = integrate(LHO, e, CANON, -6.0, n_out=2).w[-1]
            assert abs(fwd + bwd) <= 1e-10

    def test_step_budget(self):
        with pytest.raises(StepLimitExceeded):
            integrate(LHO, 0.5, CANON, 10.0, tol=Tolerances(max_steps=20))

    def test_momentum_bounce_is_resolved(self):
        # A plunging momentum (pp0 = -5) approaches zero but the 1.5*pp^2/p
        # term repels it; the adaptive stepper must ride through the bounce.
        ms = Microstate.fixed(0.5, pp0=-5.0)
        grid = integrate(LHO, 0.5, ms, 2.0, n_out=101)
        assert np.all(grid.p > 0.0)


class TestSplitting:
    def test_breakpoint_split_matches_tiny_steps(self):
        well = FiniteSquareWell(1.0, math.pi / 4)
        ms = Microstate.fixed(1.0)
        q_end = well.half_width + 5.0
        w_split = integrate(well, 0.5, ms, q_end, n_out=2).w[-1]
        w_tiny = integrate(well, 0.5, ms, q_end, n_out=2, split=False,
                           max_step=5e-4).w[-1]
        assert abs(w_split - w_tiny) <= 1e-9

    def test_split_matches_closed_form(self):
        well = FiniteSquareWell(1.0, math.pi / 4)
        q_end = well.half_width + 5.0
        w_num = integrate(well, 0.5, Microstate.fixed(1.0), q_end, n_out=2).w[-1]
        assert w_num == pytest.approx(
            squarewell.reduced_action(well, 0.5, q_end), abs=1e-10)


class TestFreezing:
    def test_forbidden_tail_freezes(self):
        g = integrate(LHO, 0.5, CANON, 30.0, n_out=4000)
        assert g.frozen_from is not None
        i = g.frozen_from
        assert g.p[i] <= 1e-250
        assert np.all(g.w[i:] == g.w[i])
        assert np.all(g.p[i:] == g.p[i])
        # the asymptote is reached before the freeze
        assert g.w[-1] == pytest.approx(math.pi / 2, abs=1e-9)

    def test_monotone_samples(self):
        g = integrate(LHO, 0.5, CANON, 30.0, n_out=4000)
        d = np.diff(g.w)
        assert np.all(d >= 0.0)
        # where the increment is well above round-off it must be strict
        strict = g.p[:-1] * np.diff(g.qs) > 50 * np.spacing(np.abs(g.w[:-1]) + 1.0)
        assert np.all(d[strict] > 0.0)


class TestDivergenceProduct:
    def test_attenuates_in_forbidden_region(self):
        g = integrate(LHO, 1.0, CANON, 6.0, n_out=1201)
        prod = divergence_product(g)
        assert prod[0] == 1.0
        i4 = np.searchsorted(g.qs, 4.0)
        assert prod[-1] < prod[i4]
        assert np.all(np.diff(prod[i4:]) <= 0.0)

    def test_oscillator_only(self):
        well = FiniteSquareWell(1.0, 1.0)
        g = integrate(well, 0.5, CANON, 2.0, n_out=11)
        with pytest.raises(WrongPotential):
            divergence_product(g)


class TestReplay:
    def test_replayed_steps_are_identical(self):
        plus = _solve(LHO, 0.5 + 1e-5, (0.0, 1.0, 0.0), 0.0, 5.0, Tolerances())
        minus = _solve(LHO, 0.5 - 1e-5, (0.0, 1.0, 0.0), 0.0, 5.0, Tolerances(),
                       replay=plus.hs)
        assert minus.hs == plus.hs
        assert minus.starts == plus.starts

    def test_replay_detects_lost_positivity(self):
        plus = _solve(LHO, 0.5, (0.0, 1.0, 0.0), 0.0, 5.0, Tolerances())
        with pytest.raises(MonotonicityViolation):
            _solve(LHO, 400.0, (0.0, 1e-6, -50.0), 0.0, 5.0, Tolerances(),
                   replay=plus.hs)

    def test_replay_rejects_short_sequences(self):
        plus = _solve(LHO, 0.5, (0.0, 1.0, 0.0), 0.0, 5.0, Tolerances())
        with pytest.raises(ValueError):
            _solve(LHO, 0.5, (0.0, 1.0, 0.0), 0.0, 5.0, Tolerances(),
                   replay=plus.hs[:3])

    def test_replay_may_end_early_freezes(self):
        # the recorded path froze before q_end; the replay must freeze too
        plus = _solve(LHO, 0.5, (0.0, 1.0, 0.0), 0.0, 30.0, Tolerances())
        assert plus.freeze_q is not None
        minus = _solve(LHO, 0.5 - 1e-5, (0.0, 1.0, 0.0), 0.0, 30.0, Tolerances(),
                       replay=plus.hs, replay_may_end_early=True)
        assert minus.freeze_q is not None


class TestValidation:
    def test_bad_grid_requests(self):
        with pytest.raises(ValueError):
            integrate(LHO, 0.5, CANON, 3.0, n_out=1)
        with pytest.raises(ValueError):
            integrate(LHO, 0.5, CANON, 0.0)

    def test_bad_initial_states(self):
        with pytest.raises(MonotonicityViolation):
            _solve(LHO, 0.5, (0.0, -1.0, 0.0), 0.0, 1.0, Tolerances())
        with pytest.raises(NonFiniteState):
            _solve(LHO, 0.5, (math.inf, 1.0, 0.0), 0.0, 1.0, Tolerances())

    def test_tolerances_validation(self):
        with pytest.raises(ValueError):
            Tolerances(abs_tol=0.0)
        with pytest.raises(ValueError):
            Tolerances(p_floor=-1.0)
        with pytest.raises(ValueError):
            Tolerances(max_steps=0)


class TestGridOutput:
    def test_states_accessors(self):
        g = integrate(LHO, 0.5, CANON, 1.0, n_out=5)
        s = g.state_at(0)
        assert (s.w, s.p, s.pp) == (0.0, 1.0, 0.0)
        assert len(g.states) == 5

    def test_csv_round_trip(self, tmp_path):
        g = integrate(LHO, 0.5, CANON, 2.0, n_out=9)
        path = tmp_path / "grid.csv"
        write_grid_csv(g, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "q,W,p,pp"
        assert len(lines) == 10
        for line, q, w, p, pp in zip(lines[1:], g.qs, g.w, g.p, g.pp):
            cols = [float(c) for c in line.split(",")]
            assert cols == [q, w, p, pp]  # 17 digits re-parse exactly
