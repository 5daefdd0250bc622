"""Regression against the published oscillator reference tables.

Each table is recomputed cell by cell from the module operations and compared
against embedded reference constants, stored at their printed precision and
never "improved".  Comparison bars are per table: 3 significant figures for
the action tables (1 and 2), 2 significant figures for the correspondence
table (3), and 5% relative for the transit-time table (4).

Rows marked informational carry a printed value that cannot be compared
head-on (a solver-specific round-off bound, or a cell with a typographical
defect); they are reported with an attainable pass basis instead and do not
gate on the printed digits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .model import HarmonicOscillator, Microstate
from . import jacobi, milne

TWO_PI = 2.0 * math.pi

#: Eigenvalue residual bar reused for the informational eigen-row checks:
#: the printed 1e-15-scale residuals are specific to the solver that produced
#: them, so eigen rows instead assert |J/(2pi) - n| at this bar.
EIGEN_ROW_BAR = 1e-9


@dataclass(frozen=True)
class TableRow:
    """One compared cell: computed vs. reference within tolerance."""

    label: str
    computed: float
    reference: float
    tolerance: float
    passed: bool
    informational: bool = False
    note: str = ""


@dataclass(frozen=True)
class TableReport:
    """All rows of one recomputed table; overall_pass ands the row passes."""

    table_id: int
    rows: list[TableRow] = field(default_factory=list)

    @property
    def overall_pass(self) -> bool:
        return all(row.passed for row in self.rows)


def sig_fig_tolerance(reference: float, figures: int) -> float:
    """Half a unit in the last place of `reference` kept to `figures` digits."""
    if reference == 0.0:
        return 0.5 * 10.0 ** (1 - figures)
    exponent = math.floor(math.log10(abs(reference)))
    return 0.5 * 10.0 ** (exponent - figures + 1)


def _compare(label: str, computed: float, reference: float, figures: int,
             **kwargs) -> TableRow:
    tolerance = sig_fig_tolerance(reference, figures)
    return TableRow(label=label, computed=computed, reference=reference,
                    tolerance=tolerance,
                    passed=abs(computed - reference) <= tolerance, **kwargs)


def _case_microstate(case: str) -> Microstate:
    if case == "A":
        return Microstate.fixed(0.5)
    if case == "B":
        return Microstate.energy_scaled()
    if case == "C":
        return Microstate.fixed(1.0)
    if case == "D":
        return Microstate.fixed(2.0)
    raise ValueError(f"unknown case {case!r}")


_CASES = ("A", "B", "C", "D")

# Table 1: J/pi (first tuple) and J/(2pi) - E - 0.5 (second tuple) for the
# four initial-momentum cases at each energy.  None in the residual slot
# marks an eigen row, whose printed residual is a solver round-off bound.
# The (A, 0.7) action is printed "2.882 \pi6" (stray digit); stored as 2.882
# and kept informational.  The (D, 1.6) residual is printed
# "+0.00934e-3", inconsistent with its own action column (4.219/2 - 2.1 =
# +0.0095); the row is informational and checked against the recomputed
# action instead.
_TABLE1 = (
    (0.4, (1.592, 1.766, 1.791, 1.895), (-0.104, -0.0168, -0.00473, +0.0473)),
    (0.5, (2.0, 2.0, 2.0, 2.0), None),
    (0.6, (2.464, 2.220, 2.240, 2.121), (+0.132, +0.00979, +0.0200, -0.0395)),
    (0.7, (2.882, 2.430, 2.501, 2.261), (+0.241, +0.0148, +0.0505, -0.0697)),
    (0.8, (3.199, 2.633, 2.766, 2.421), (+0.299, +0.0166, +0.0834, -0.0895)),
    (0.9, (3.423, 2.832, 3.017, 2.604), (+0.312, +0.0162, +0.109, -0.0978)),
    (1.0, (3.585, 3.029, 3.243, 2.811), (+0.293, +0.0143, +0.122, -0.0946)),
    (1.1, (3.705, 3.223, 3.439, 3.038), (+0.253, +0.0124, +0.120, -0.0812)),
    (1.2, (3.799, 3.417, 3.608, 3.279), (+0.200, +0.00856, +0.104, -0.0607)),
    (1.3, (3.876, 3.611, 3.754, 3.525), (+0.138, +0.00544, +0.0770, -0.0374)),
    (1.4, (3.941, 3.805, 3.883, 3.768), (+0.0707, +0.00252, +0.0410, -0.0161)),
    (1.5, (4.0, 4.0, 4.0, 4.0), None),
    (1.6, (4.055, 4.196, 4.110, 4.219), (-0.0724, -0.00201, -0.0450, None)),
)

_TABLE1_INFORMATIONAL_ACTION = {(0.7, "A")}

# Table 2: (J - 2pi)/pi near the ground state.  The middle (E=0.5) row prints
# 1e-15-scale residuals (5.329e-15 etc.), solver-specific; its rows assert
# the eigen bar instead.
_TABLE2 = (
    (0.499, (-0.004510, -0.002257, -0.002255, -0.001128)),
    (0.501, (+0.004517, +0.002256, +0.002258, +0.001129)),
)
_TABLE2_EIGEN_PRINTED = (5.329e-15, 3.997e-15, 3.997e-15, 1.312e-15)

# Table 3: J/(2pi) - E - 0.5 for the energy-scaled start at midpoints
# between eigenvalues.
_TABLE3 = (
    (1.0, +0.0287),
    (2.0, -0.00883),
    (4.0, -0.00240),
    (8.0, -6.16e-4),
    (16.0, -1.55e-4),
    (32.0, -3.89e-5),
)

# Table 4: quarter-transit time minus the classical pi/2, with the fixed
# initial momentum sqrt(2E) of each row (the E~=4 momentum cell prints
# "2^{5/2}"; the column's sqrt(2E) pattern and the printed time both give
# 2^{3/2}, which is what the recomputation uses).  Eigen and virtual rows
# interleave in the printed layout; here they are kept as two runs.
_TABLE4_EIGEN = (
    (0.5, +2.02e-1),
    (1.5, -3.58e-2),
    (2.5, +1.45e-2),
    (3.5, -7.64e-3),
    (4.5, +4.72e-3),
    (9.5, -1.08e-3),
    (14.5, +4.66e-4),
)
_TABLE4_VIRTUAL = (
    (1.0, +2.13e-1),
    (2.0, -1.19e-1),
    (3.0, +8.12e-2),
    (4.0, -6.14e-2),
    (5.0, +5.05e-2),
    (10.0, -2.50e-2),
    (15.0, +1.66e-2),
)


def _action_over_2pi(potential, e: float, case: str) -> float:
    av = milne.action_variable(potential, e, _case_microstate(case))
    return av.j / (TWO_PI * potential.constants.hbar)


def _table1() -> TableReport:
    lho = HarmonicOscillator()
    rows = []
    for e, actions, residuals in _TABLE1:
        computed = {case: _action_over_2pi(lho, e, case) for case in _CASES}
        for case, printed in zip(_CASES, actions):
            info = (e, case) in _TABLE1_INFORMATIONAL_ACTION
            rows.append(_compare(
                f"E={e} case {case}: J/pi", 2.0 * computed[case], printed, 3,
                informational=info,
                note="printed with a stray digit" if info else ""))
        if residuals is None:
            for case in _CASES:
                resid = computed[case] - e - 0.5
                rows.append(TableRow(
                    label=f"E={e} case {case}: |J/(2pi)-E-0.5|",
                    computed=resid, reference=0.0, tolerance=EIGEN_ROW_BAR,
                    passed=abs(resid) <= EIGEN_ROW_BAR, informational=True,
                    note="printed bound is solver round-off"))
            continue
        for case, printed in zip(_CASES, residuals):
            resid = computed[case] - e - 0.5
            if printed is None:
                # Residual implied by the printed action column, compared
                # within that column's propagated print precision (half an
                # ulp of the 4-digit J/pi value, i.e. 0.0005/2 in J/(2pi)).
                implied = 4.219 / 2.0 - e - 0.5
                window = 0.5 * 1e-3 / 2.0
                rows.append(TableRow(
                    label=f"E={e} case {case}: J/(2pi)-E-0.5",
                    computed=resid, reference=implied, tolerance=window,
                    passed=abs(resid - implied) <= window, informational=True,
                    note="printed residual +0.00934e-3 conflicts with its "
                         "action column; compared to the column value"))
            else:
                rows.append(_compare(
                    f"E={e} case {case}: J/(2pi)-E-0.5", resid, printed, 3))
    return TableReport(table_id=1, rows=rows)


def _table2() -> TableReport:
    lho = HarmonicOscillator()
    rows = []
    for e, printed_row in _TABLE2:
        for case, printed in zip(_CASES, printed_row):
            value = (_action_over_2pi(lho, e, case) - 1.0) * 2.0
            rows.append(_compare(
                f"E={e} case {case}: (J-2pi)/pi", value, printed, 3))
    for case, printed in zip(_CASES, _TABLE2_EIGEN_PRINTED):
        resid = _action_over_2pi(lho, 0.5, case) - 1.0
        rows.append(TableRow(
            label=f"E=0.5 case {case}: |J/(2pi)-1|",
            computed=resid, reference=printed, tolerance=EIGEN_ROW_BAR,
            passed=abs(resid) <= EIGEN_ROW_BAR, informational=True,
            note="printed value is solver round-off"))
    return TableReport(table_id=2, rows=rows)


def _table3() -> TableReport:
    lho = HarmonicOscillator()
    rows = []
    magnitudes = []
    for e, printed in _TABLE3:
        resid = _action_over_2pi(lho, e, "B") - e - 0.5
        magnitudes.append(abs(resid))
        rows.append(_compare(f"E={e} case B: J/(2pi)-E-0.5", resid, printed, 2))
    decreasing = all(b < a for a, b in zip(magnitudes, magnitudes[1:]))
    rows.append(TableRow(
        label="|J/(2pi)-E-0.5| strictly decreasing along E=1..32",
        computed=1.0 if decreasing else 0.0, reference=1.0, tolerance=0.0,
        passed=decreasing))
    return TableReport(table_id=3, rows=rows)


def _table4() -> TableReport:
    lho = HarmonicOscillator()
    rows = []
    for name, data in (("eigen", _TABLE4_EIGEN), ("virtual", _TABLE4_VIRTUAL)):
        deltas = []
        for e, printed in data:
            ms = Microstate.fixed(math.sqrt(2.0 * e))
            report = jacobi.quarter_transit(lho, e, ms)
            deltas.append(report.delta)
            tolerance = 0.05 * abs(printed)
            rows.append(TableRow(
                label=f"E={e} ({name}): T/4 - pi/2",
                computed=report.delta, reference=printed, tolerance=tolerance,
                passed=abs(report.delta - printed) <= tolerance))
        alternating = all(a * b < 0.0 for a, b in zip(deltas, deltas[1:]))
        shrinking = all(abs(b) < abs(a) for a, b in zip(deltas, deltas[1:]))
        rows.append(TableRow(
            label=f"{name} deltas alternate in sign",
            computed=1.0 if alternating else 0.0, reference=1.0,
            tolerance=0.0, passed=alternating))
        rows.append(TableRow(
            label=f"{name} deltas decrease in magnitude",
            computed=1.0 if shrinking else 0.0, reference=1.0,
            tolerance=0.0, passed=shrinking))
    return TableReport(table_id=4, rows=rows)


_RUNNERS = {1: _table1, 2: _table2, 3: _table3, 4: _table4}


def run_table(table_id: int) -> TableReport:
    """Recompute every cell of the numbered table and compare.

    Cells are evaluated in a fixed order, so repeated runs produce identical
    reports.
    """
    try:
        runner = _RUNNERS[table_id]
    except KeyError:
        raise ValueError(f"table_id must be 1..4, got {table_id!r}") from None
    return runner()
