"""Exception taxonomy shared across the package.

Every failure mode that callers are expected to distinguish gets its own
class; all inherit from :class:`QshjeError` so blanket handling stays easy.
"""


class QshjeError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(QshjeError):
    """Invalid or inconsistent run configuration (CLI / config file)."""


class ClassicallyForbidden(QshjeError):
    """A classical-mechanics helper was evaluated outside the allowed region."""


class WrongPotential(QshjeError):
    """An operation specific to one potential received a different one."""


class MomentumUnderflow(QshjeError):
    """The conjugate momentum fell to or below the configured floor."""


class MonotonicityViolation(QshjeError):
    """The conjugate momentum reached zero or went negative.

    The reduced action must be strictly increasing; a non-positive momentum
    means the integration has been taken over by a parasitic solution.
    """


class StepLimitExceeded(QshjeError):
    """The adaptive integrator used up its step budget."""


class NonFiniteState(QshjeError):
    """An integration state component became NaN or infinite."""


class ModeViolation(QshjeError):
    """An action-variable or cycle computation was asked to use a mode its
    initial data cannot support (e.g. quarter-wave mode without symmetric
    initial conditions)."""


class PolicyViolation(QshjeError):
    """A microstate resolution policy is not allowed in this context."""


class NoSignChange(QshjeError):
    """A bracketing root finder was given endpoints with equal residual sign."""


class MaxIterations(QshjeError):
    """An iterative solver exhausted its iteration budget."""


class EnergyOutOfRange(QshjeError):
    """Energy outside the domain of the requested closed-form operation."""


class ThresholdDegenerate(QshjeError):
    """Square-well operation evaluated exactly at the continuum threshold
    (vanishing exterior decay constant), where the requested quantity is
    degenerate."""


class ActionOutOfRange(QshjeError):
    """Requested action value lies outside the attainable range of the well."""
