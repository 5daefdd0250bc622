"""Command-line surface: emit grids, curves, trajectories, and eigen reports.

Subcommands map one-to-one onto module operations:

  solve   integrate the motion on a grid           -> q,W,p,pp CSV
  action  action variable across an energy list    -> E,J_over_2pi,residual,case CSV
  eigen   shooting eigensolver on a bracket        -> n,parity,E,J_over_2pi,residual CSV
  time    trajectory time along the motion         -> q,t_minus_tau CSV
  well    closed-form square-well bound states     -> n,parity,E,J_over_2pi,residual CSV
  table   recompute a reference table and compare  -> report rows (optionally CSV)

Options may come from a flat ``key = value`` config file (--config); explicit
flags override the file and unknown keys are rejected.  Every file-emitting
run writes a JSON metadata sidecar (<out>.meta.json) carrying the command,
the resolved configuration, the tool version, and the wall time.  CSV floats
carry 17 significant digits, so each value re-parses to the identical binary
double, and rows are emitted in a fixed order: identical configurations
produce byte-identical data files.  --plot additionally renders a PNG figure
next to the data file (off by default).

Exit codes: 0 success, 1 usage or configuration error, 2 numerical failure,
3 tolerance failure in a table comparison.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import re
import sys
import time as _time
from pathlib import Path

from . import __version__, integrator, jacobi, milne, squarewell, tables
from .errors import QshjeError
from .model import (
    ENERGY_SCALED,
    FIXED,
    Constants,
    FiniteSquareWell,
    HarmonicOscillator,
    Microstate,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2
EXIT_TOLERANCE = 3


class UsageError(Exception):
    """Configuration or argument problem; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad arguments by default; the exit-code contract
    # reserves 2 for numerical failures, so route usage problems to 1.
    def error(self, message):
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_float_list(text: str) -> list[float]:
    parts = [p for p in re.split(r"[,\s]+", text.strip()) if p]
    return [float(p) for p in parts]


# How to turn a config-file string into the option's value, per dest.
_CONVERTERS = {
    "potential": str,
    "out": str,
    "format": str,
    "mode": str,
    "policy": str,
    "plot": _parse_bool,
    "energy": _parse_float_list,
    "bracket": _parse_float_list,
    "epsilon": float,
    "qmax": float,
    "omega": float,
    "v0": float,
    "half_width": float,
    "w0": float,
    "p0": float,
    "pp0": float,
    "abs_tol": float,
    "rel_tol": float,
    "e_tol": float,
    "points": int,
    "n": int,
    "grid": int,
    "table_id": int,
}


def _add_common_output(sub) -> None:
    sub.add_argument("--out", help="output data file path")
    sub.add_argument("--format", choices=("csv", "json"), default=None,
                     help="data file format (default csv)")
    sub.add_argument("--plot", action=argparse.BooleanOptionalAction,
                     default=None,
                     help="render a PNG figure next to the data file")


def _add_potential(sub) -> None:
    sub.add_argument("--potential", choices=("lho", "well"), default=None,
                     help="potential: lho (harmonic) or well (square well)")
    sub.add_argument("--omega", type=float, default=None,
                     help="oscillator angular frequency (default 1)")
    sub.add_argument("--v0", type=float, default=None, help="well depth")
    sub.add_argument("--half-width", type=float, default=None,
                     dest="half_width", help="well half-width a")


def _add_microstate(sub) -> None:
    sub.add_argument("--w0", type=float, default=None,
                     help="initial reduced action at q=0 (default 0)")
    sub.add_argument("--p0", type=float, default=None,
                     help="initial conjugate momentum at q=0")
    sub.add_argument("--pp0", type=float, default=None,
                     help="initial momentum derivative at q=0 (default 0)")
    sub.add_argument("--policy", choices=(FIXED, ENERGY_SCALED), default=None,
                     help="initial momentum policy (default fixed)")


def _add_tolerances(sub) -> None:
    sub.add_argument("--abs-tol", type=float, default=None, dest="abs_tol",
                     help="integrator absolute tolerance (default 1e-13)")
    sub.add_argument("--rel-tol", type=float, default=None, dest="rel_tol",
                     help="integrator relative tolerance (default 1e-13)")


def build_parser() -> _Parser:
    parser = _Parser(prog="qshje",
                     description="Quantum Hamilton-Jacobi trajectories: "
                                 "solve, quantize, and time 1-D motion.")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    solve = subs.add_parser("solve",
                            help="integrate the reduced action on a grid")
    action = subs.add_parser("action",
                             help="action variable over an energy list")
    eigen = subs.add_parser("eigen",
                            help="shooting eigensolver on an energy bracket")
    timec = subs.add_parser("time",
                            help="trajectory time parametrization on a grid")
    well = subs.add_parser("well",
                           help="closed-form square-well bound states")
    table = subs.add_parser("table",
                            help="recompute a reference table and compare")

    for sub in (solve, action, eigen, timec, well, table):
        sub.add_argument("--config",
                         help="flat key = value config file; flags override")

    for sub in (solve, action, eigen, timec):
        _add_potential(sub)
        _add_microstate(sub)
        _add_tolerances(sub)
        sub.add_argument("--qmax", type=float, default=None,
                         help="far-field cutoff (default per potential)")
    for sub in (solve, action, eigen, timec, well):
        _add_common_output(sub)

    for sub in (solve, action, timec):
        sub.add_argument("--energy", type=float, action="append", default=None,
                         help="energy; repeat the flag for a list")
    solve.add_argument("--points", type=int, default=None,
                       help="number of grid samples (default by spacing)")
    timec.add_argument("--points", type=int, default=None,
                       help="number of grid samples (default 801)")
    timec.add_argument("--epsilon", type=float, default=None,
                       help="energy half-step for the difference (default 1e-5)")

    eigen.add_argument("--n", type=int, default=None,
                       help="target quantum number (J = 2 pi n hbar)")
    eigen.add_argument("--bracket", type=float, nargs=2, default=None,
                       metavar=("LO", "HI"), help="energy bracket")
    eigen.add_argument("--e-tol", type=float, default=None, dest="e_tol",
                       help="energy convergence tolerance (default 1e-10)")

    well.add_argument("--v0", type=float, default=None, help="well depth")
    well.add_argument("--half-width", type=float, default=None,
                      dest="half_width", help="well half-width a")
    well.add_argument("--grid", type=int, default=None,
                      help="root-scan resolution (default 4096)")

    table.add_argument("table_id", type=int, nargs="?", default=None,
                       help="table number, 1..4")
    table.add_argument("--out", help="write the report rows as a data file")
    table.add_argument("--format", choices=("csv", "json"), default=None,
                       help="report file format (default csv)")

    return parser


def _apply_config_file(cfg: dict, path: str) -> None:
    """Fill unset options from a flat key = value file; reject unknown keys."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key, _, value = line.partition("=")
        dest = key.strip().replace("-", "_")
        if dest not in cfg or dest in ("config", "command"):
            raise UsageError(f"{path}:{lineno}: unknown key {key.strip()!r}")
        if cfg[dest] is None:
            try:
                cfg[dest] = _CONVERTERS[dest](value.strip())
            except ValueError as exc:
                raise UsageError(f"{path}:{lineno}: bad value for "
                                 f"{key.strip()!r}: {exc}") from exc


def _default(cfg: dict, key: str, value) -> None:
    if cfg.get(key) is None:
        cfg[key] = value


def _require(cfg: dict, key: str, flag: str):
    if cfg.get(key) is None:
        raise UsageError(f"{flag} is required")
    return cfg[key]


def _build_potential(cfg: dict):
    name = _require(cfg, "potential", "--potential")
    if name == "lho":
        _default(cfg, "omega", 1.0)
        return HarmonicOscillator(Constants(omega=cfg["omega"]))
    if name == "well":
        v0 = _require(cfg, "v0", "--v0")
        a = _require(cfg, "half_width", "--half-width")
        try:
            return FiniteSquareWell(v0=v0, half_width=a)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    raise UsageError(f"unknown potential {name!r}")


def _build_microstate(cfg: dict) -> Microstate:
    _default(cfg, "policy", FIXED)
    _default(cfg, "w0", 0.0)
    _default(cfg, "pp0", 0.0)
    if cfg["policy"] == ENERGY_SCALED:
        return Microstate.energy_scaled(w0=cfg["w0"], pp0=cfg["pp0"])
    p0 = _require(cfg, "p0", "--p0")
    return Microstate.fixed(p0, w0=cfg["w0"], pp0=cfg["pp0"])


def _build_tolerances(cfg: dict):
    if cfg.get("abs_tol") is None and cfg.get("rel_tol") is None:
        return None
    base = integrator.Tolerances()
    return integrator.Tolerances(
        abs_tol=cfg["abs_tol"] if cfg.get("abs_tol") is not None else base.abs_tol,
        rel_tol=cfg["rel_tol"] if cfg.get("rel_tol") is not None else base.rel_tol,
    )


def _energies(cfg: dict) -> list[float]:
    if not cfg.get("energy"):
        raise UsageError("--energy is required (repeat the flag for a list)")
    return list(cfg["energy"])


def _single_energy(cfg: dict) -> float:
    energies = _energies(cfg)
    if len(energies) != 1:
        raise UsageError("this command takes exactly one --energy")
    return energies[0]


def _json_rows(rows: list[dict], path) -> None:
    with open(path, "w", newline="\n") as fh:
        json.dump(rows, fh, indent=2)
        fh.write("\n")


def _write_sidecar(out_path, command: str, cfg: dict, elapsed: float) -> None:
    config_echo = {k: v for k, v in sorted(cfg.items())
                   if k not in ("command", "config") and v is not None}
    sidecar = {
        "command": command,
        "config": config_echo,
        "tool_version": __version__,
        "elapsed_seconds": round(elapsed, 6),
    }
    with open(str(out_path) + ".meta.json", "w", newline="\n") as fh:
        json.dump(sidecar, fh, indent=2)
        fh.write("\n")


def _cmd_solve(cfg: dict) -> int:
    potential = _build_potential(cfg)
    microstate = _build_microstate(cfg)
    tol = _build_tolerances(cfg)
    e = _single_energy(cfg)
    out = _require(cfg, "out", "--out")
    _default(cfg, "qmax", milne.default_q_max(potential, e))
    _default(cfg, "points", milne.default_n_out(microstate.q0, cfg["qmax"]))
    _default(cfg, "format", "csv")
    grid = integrator.integrate(potential, e, microstate, cfg["qmax"],
                                n_out=cfg["points"], tol=tol)
    if cfg["format"] == "json":
        _json_rows([{"q": q, "W": w, "p": p, "pp": pp}
                    for q, w, p, pp in zip(grid.qs, grid.w, grid.p, grid.pp)],
                   out)
    else:
        integrator.write_grid_csv(grid, out)
    if cfg.get("plot"):
        from . import plots
        plots.plot_grid(grid, plots.figure_path(out))
    return EXIT_OK


def _cmd_action(cfg: dict) -> int:
    potential = _build_potential(cfg)
    microstate = _build_microstate(cfg)
    tol = _build_tolerances(cfg)
    energies = _energies(cfg)
    out = _require(cfg, "out", "--out")
    _default(cfg, "format", "csv")
    case = "energy-scaled" if microstate.policy == ENERGY_SCALED \
        else f"p0={microstate.p0:g}"
    points = milne.j_curve(potential, energies, microstate, cfg.get("qmax"),
                           case_label=case, tol=tol)
    hbar = potential.constants.hbar
    if cfg["format"] == "json":
        _json_rows([{"E": pt.e,
                     "J_over_2pi": None if pt.j is None
                     else pt.j / (2.0 * math.pi * hbar),
                     "residual": pt.residual,
                     "case": pt.case_label,
                     **({"error": pt.error} if pt.error else {})}
                    for pt in points], out)
    else:
        milne.write_jcurve_csv(points, out, hbar=hbar)
    if cfg.get("plot"):
        from . import plots
        plots.plot_jcurve(points, plots.figure_path(out), hbar=hbar)
    return EXIT_OK


def _cmd_eigen(cfg: dict) -> int:
    potential = _build_potential(cfg)
    microstate = _build_microstate(cfg)
    tol = _build_tolerances(cfg)
    n = _require(cfg, "n", "--n")
    bracket = _require(cfg, "bracket", "--bracket")
    _default(cfg, "e_tol", 1e-10)
    _default(cfg, "format", "csv")
    e = milne.shoot_eigenvalue(potential, n, tuple(bracket), microstate,
                               cfg.get("qmax"), cfg["e_tol"], tol=tol)
    av = milne.action_variable(potential, e, microstate, cfg.get("qmax"), tol)
    hbar = potential.constants.hbar
    state = squarewell.WellEigenvalue(
        e=e, parity="symmetric" if n % 2 == 1 else "antisymmetric",
        n=n, j=av.j, residual=av.residual)
    out = cfg.get("out")
    if out is not None:
        if cfg["format"] == "json":
            _json_rows([{"n": state.n, "parity": state.parity, "E": state.e,
                         "J_over_2pi": state.j / (2.0 * math.pi * hbar),
                         "residual": state.residual}], out)
        else:
            squarewell.write_eigen_csv([state], out, hbar=hbar)
    print(f"n={n} E={e:.17g} J/(2 pi hbar)={av.j / (2.0 * math.pi * hbar):.17g} "
          f"residual={av.residual:.3e}")
    return EXIT_OK


def _cmd_time(cfg: dict) -> int:
    potential = _build_potential(cfg)
    tol = _build_tolerances(cfg)
    e = _single_energy(cfg)
    out = _require(cfg, "out", "--out")
    _default(cfg, "epsilon", 1e-5)
    _default(cfg, "qmax", milne.default_q_max(potential, e))
    _default(cfg, "points", 801)
    _default(cfg, "format", "csv")
    qs = [cfg["qmax"] * i / (cfg["points"] - 1) for i in range(cfg["points"])]
    if isinstance(potential, FiniteSquareWell):
        # The well's trajectory is closed form along the canonical family;
        # microstate flags are not consulted here.
        points = [jacobi.TrajectoryPoint(
            q=q, t_minus_tau=squarewell.time_parametrization(potential, e, q))
            for q in qs]
    else:
        microstate = _build_microstate(cfg)
        points = jacobi.time_parametrize(potential, e, microstate, qs,
                                         cfg["epsilon"], tol=tol)
    if cfg["format"] == "json":
        _json_rows([{"q": pt.q, "t_minus_tau": pt.t_minus_tau}
                    for pt in points], out)
    else:
        jacobi.write_trajectory_csv(points, out)
    if cfg.get("plot"):
        from . import plots
        plots.plot_trajectory(points, plots.figure_path(out))
    return EXIT_OK


def _cmd_well(cfg: dict) -> int:
    v0 = _require(cfg, "v0", "--v0")
    a = _require(cfg, "half_width", "--half-width")
    _default(cfg, "grid", 4096)
    _default(cfg, "format", "csv")
    try:
        well = FiniteSquareWell(v0=v0, half_width=a)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    states = squarewell.eigenvalues(well, grid=cfg["grid"])
    hbar = well.constants.hbar
    out = cfg.get("out")
    if out is not None:
        if cfg["format"] == "json":
            _json_rows([{"n": s.n, "parity": s.parity, "E": s.e,
                         "J_over_2pi": s.j / (2.0 * math.pi * hbar),
                         "residual": s.residual} for s in states], out)
        else:
            squarewell.write_eigen_csv(states, out, hbar=hbar)
        if cfg.get("plot"):
            from . import plots
            plots.plot_eigen(states, plots.figure_path(out))
    for s in states:
        print(f"n={s.n} ({s.parity}) E={s.e:.17g} "
              f"J/(2 pi hbar)={s.j / (2.0 * math.pi * hbar):.17g} "
              f"residual={s.residual:.3e}")
    return EXIT_OK


def _cmd_table(cfg: dict) -> int:
    table_id = cfg.get("table_id")
    if table_id is None:
        raise UsageError("table number (1..4) is required")
    if table_id not in (1, 2, 3, 4):
        raise UsageError(f"table number must be 1..4, got {table_id}")
    _default(cfg, "format", "csv")
    report = tables.run_table(table_id)
    for row in report.rows:
        verdict = "PASS" if row.passed else "FAIL"
        info = " [informational]" if row.informational else ""
        print(f"{verdict}{info} {row.label}: computed {row.computed:+.9g} "
              f"reference {row.reference:+.9g} tol {row.tolerance:.3g}")
    n_pass = sum(row.passed for row in report.rows)
    print(f"table {table_id}: {'PASS' if report.overall_pass else 'FAIL'} "
          f"({n_pass}/{len(report.rows)} rows)")
    out = cfg.get("out")
    if out is not None:
        rows = [{"label": r.label, "computed": r.computed,
                 "reference": r.reference, "tolerance": r.tolerance,
                 "pass": r.passed, "informational": r.informational,
                 "note": r.note} for r in report.rows]
        if cfg["format"] == "json":
            _json_rows(rows, out)
        else:
            with open(out, "w", newline="\n") as fh:
                writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
                writer.writeheader()
                for row in rows:
                    writer.writerow(row)
    return EXIT_OK if report.overall_pass else EXIT_TOLERANCE


_COMMANDS = {
    "solve": _cmd_solve,
    "action": _cmd_action,
    "eigen": _cmd_eigen,
    "time": _cmd_time,
    "well": _cmd_well,
    "table": _cmd_table,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg = vars(args)
    started = _time.perf_counter()
    try:
        if cfg.get("config"):
            _apply_config_file(cfg, cfg["config"])
        status = _COMMANDS[cfg["command"]](cfg)
    except UsageError as exc:
        print(f"qshje: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except QshjeError as exc:
        print(f"qshje: numerical failure: {type(exc).__name__}: {exc}",
              file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"qshje: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    if cfg.get("out") is not None:
        _write_sidecar(cfg["out"], cfg["command"], cfg,
                       _time.perf_counter() - started)
    return status


if __name__ == "__main__":
    sys.exit(main())
