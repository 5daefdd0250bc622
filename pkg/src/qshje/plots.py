"""Render report figures to files, next to the delimited output.

Each plotter takes the same data that went into the CSV and writes a PNG.
The Agg backend is forced so rendering works headless; nothing is ever
shown interactively.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)


def figure_path(out_path) -> Path:
    """PNG sibling of a data file: same directory and stem, .png suffix."""
    return Path(out_path).with_suffix(".png")


def _save(fig, path) -> Path:
    path = Path(path)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_grid(grid, path) -> Path:
    """Reduced action, conjugate momentum, and its derivative over q."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.plot(grid.qs, grid.w, label="W(q)")
    ax.plot(grid.qs, grid.p, label=r"$\partial_q W$")
    ax.plot(grid.qs, grid.pp, label=r"$\partial_q^2 W$", linestyle="--")
    ax.set_xlabel("q")
    ax.set_title(f"Reduced action at E = {grid.energy.value:g} "
                 f"({grid.energy.kind})")
    ax.legend()
    ax.grid(True, alpha=0.3)
    return _save(fig, path)


def plot_jcurve(points, path, *, hbar: float = 1.0) -> Path:
    """J/(2 pi hbar) against energy; points that errored are skipped."""
    ok = [pt for pt in points if pt.j is not None]
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    if ok:
        es = [pt.e for pt in ok]
        js = [pt.j / (2.0 * math.pi * hbar) for pt in ok]
        ax.plot(es, js, marker="o", linestyle="-")
    ax.set_xlabel("E")
    ax.set_ylabel(r"$J / 2\pi\hbar$")
    ax.set_title("Action variable against energy")
    ax.grid(True, alpha=0.3)
    return _save(fig, path)


def plot_trajectory(points, path) -> Path:
    """Trajectory time t - tau against position."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.plot([pt.q for pt in points], [pt.t_minus_tau for pt in points])
    ax.set_xlabel("q")
    ax.set_ylabel(r"$t - \tau$")
    ax.set_title("Trajectory time parametrization")
    ax.grid(True, alpha=0.3)
    return _save(fig, path)


def plot_eigen(states, path) -> Path:
    """Bound-state energies by index, marked by parity."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for parity, marker in (("symmetric", "o"), ("antisymmetric", "s")):
        ns = [s.n for s in states if s.parity == parity]
        es = [s.e for s in states if s.parity == parity]
        if ns:
            ax.plot(ns, es, marker=marker, linestyle="none", label=parity)
    ax.set_xlabel("n")
    ax.set_ylabel("E")
    ax.set_title("Bound-state energies")
    if states:
        ax.legend()
    ax.grid(True, alpha=0.3)
    return _save(fig, path)
