"""Quantum stationary Hamilton-Jacobi solver for one-dimensional potentials.

Integrates the reduced action W(q) of the quantum stationary
Hamilton-Jacobi equation, quantizes bound states through the action
variable J = 2 pi n hbar, parametrizes trajectory time by differentiating
W with respect to energy, and cross-validates everything against a fully
analytic finite-square-well solution.
"""

__version__ = "0.1.0"

from . import (  # noqa: F401,E402
    errors,
    model,
    integrator,
    milne,
    jacobi,
    squarewell,
    tables,
)

# qshje.plots (matplotlib) and qshje.cli are imported on demand so that
# library use never drags in a rendering backend.
