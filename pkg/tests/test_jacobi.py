"""Trajectory time from the energy derivative of the reduced action.

t - tau = dW/dE is taken by a central difference at E +/- epsilon; both
integrations share one adaptive step sequence so truncation error cancels
in the difference.  The square well doubles as the closed-form cross-check:
its canonical-start difference must land on m*q/(hbar*k) inside the well and
on the module's closed exterior form beyond it.
"""

import math

import pytest

from qshje import jacobi, squarewell
from qshje.errors import ConfigError, ModeViolation, PolicyViolation
from qshje.model import FiniteSquareWell, HarmonicOscillator, Microstate

LHO = HarmonicOscillator()
CANON = Microstate.fixed(1.0)
WELL = FiniteSquareWell(1.0, math.pi / 4)


class TestOscillatorTrajectory:
    def test_epoch_at_origin(self):
        pts = jacobi.time_parametrize(LHO, 0.5, CANON, [0.0, 1.0])
        assert pts[0].t_minus_tau == 0.0

    def test_antisymmetric_in_q(self):
        qs = [-3.0, -1.5, -0.5, 0.0, 0.5, 1.5, 3.0]
        pts = jacobi.time_parametrize(LHO, 0.5, CANON, qs)
        n = len(qs)
        for i in range(n):
            assert pts[i].t_minus_tau == pytest.approx(
                -pts[n - 1 - i].t_minus_tau, abs=1e-10)

    def test_levels_off_past_the_turning_region(self):
        pts = jacobi.time_parametrize(LHO, 0.5, CANON, [7.0, 10.0])
        assert abs(pts[1].t_minus_tau - pts[0].t_minus_tau) < 1e-9

    def test_ground_state_quarter_exceeds_classical(self):
        # The quantum quarter transit at E = 0.5 overshoots pi/2 by about
        # 0.202 for the start {0, sqrt(2E), 0} = {0, 1, 0}.
        report = jacobi.quarter_transit(LHO, 0.5, CANON)
        assert report.classical_quarter == pytest.approx(math.pi / 2)
        assert report.delta == pytest.approx(0.202, rel=0.05)
        assert report.quarter_time - report.classical_quarter == report.delta

    def test_first_excited_quarter_undershoots(self):
        ms = Microstate.fixed(math.sqrt(3.0))
        report = jacobi.quarter_transit(LHO, 1.5, ms)
        assert report.delta == pytest.approx(-0.0358, rel=0.05)

    def test_interior_times_disperse_across_starts(self):
        times = {}
        for label, p0 in (("A", 0.5), ("C", 1.0), ("D", 2.0)):
            (pt,) = jacobi.time_parametrize(LHO, 0.5, Microstate.fixed(p0), [2.0])
            times[label] = pt.t_minus_tau
        gaps = [abs(a - b) for i, a in enumerate(times.values())
                for b in list(times.values())[i + 1:]]
        assert min(gaps) > 1e-3


class TestGuards:
    def test_energy_scaled_start_is_rejected(self):
        with pytest.raises(PolicyViolation):
            jacobi.time_parametrize(LHO, 0.5, Microstate.energy_scaled(), [1.0])
        with pytest.raises(PolicyViolation):
            jacobi.quarter_transit(LHO, 0.5, Microstate.energy_scaled())

    def test_epsilon_guards(self):
        with pytest.raises(ConfigError):
            jacobi.time_parametrize(LHO, 0.5, CANON, [1.0], epsilon=0.0)
        with pytest.raises(ConfigError):
            jacobi.time_parametrize(LHO, 1e-6, CANON, [1.0], epsilon=1e-5)

    def test_cycle_needs_symmetric_start(self):
        with pytest.raises(ModeViolation):
            jacobi.cycle_time(LHO, 0.5, Microstate.fixed(1.0, pp0=0.5))


class TestSquareWell:
    def test_quarter_transit_hits_the_classical_wall_time(self):
        # uniform interior motion: t(a) = m*a/(hbar*k) = pi/4 at E = 0.5
        report = jacobi.quarter_transit(WELL, 0.5, CANON)
        assert report.classical_quarter == pytest.approx(math.pi / 4, abs=1e-15)
        assert abs(report.delta) <= 1e-10

    def test_cycle_time_is_the_classical_period(self):
        assert jacobi.cycle_time(WELL, 0.5, CANON) == pytest.approx(
            math.pi, abs=1e-9)

    @pytest.mark.parametrize("e", [0.5, 0.3, 0.7])
    def test_canonical_difference_matches_closed_form(self, e):
        qs = [0.2, 0.5, WELL.half_width]
        pts = jacobi.canonical_fd_trajectory(WELL, e, qs)
        for pt in pts:
            ref = squarewell.time_parametrization(WELL, e, pt.q)
            assert pt.t_minus_tau == pytest.approx(ref, abs=1e-6)

    def test_canonical_difference_guards(self):
        with pytest.raises(ConfigError):
            jacobi.canonical_fd_trajectory(WELL, 1e-6, [0.2])
        with pytest.raises(ConfigError):
            # E + eps would cross the well top
            jacobi.canonical_fd_trajectory(WELL, 1.0 - 1e-6, [0.2])
        with pytest.raises(ConfigError):
            jacobi.canonical_fd_trajectory(WELL, 0.5, [0.2], epsilon=-1.0)


class TestCsv:
    def test_round_trip(self, tmp_path):
        pts = jacobi.time_parametrize(LHO, 0.5, CANON, [0.0, 1.0, 2.0])
        path = tmp_path / "traj.csv"
        jacobi.write_trajectory_csv(pts, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "q,t_minus_tau"
        assert len(lines) == 4
        for line, pt in zip(lines[1:], pts):
            q, t = (float(c) for c in line.split(","))
            assert (q, t) == (pt.q, pt.t_minus_tau)
