"""Exception hierarchy for the toolkit.

Every error carries the process exit code the command line reports for it.
"""


class ToolkitError(Exception):
    exit_code = 1


class ConfigError(ToolkitError):
    """Malformed scenario document or invalid inputs."""
    exit_code = 2


class ParameterError(ConfigError):
    """System parameters violate the standing assumptions."""


class StateError(ConfigError):
    """A state lies outside [0,1]^n x [-0.5,0.5]^n."""


class PreconditionError(ConfigError):
    """An operation was called outside its documented domain."""


class NumericError(ToolkitError):
    exit_code = 3


class NonConvergence(NumericError):
    """Power iteration exhausted its iteration budget."""


class SizeCap(NumericError):
    """Matrix is larger than the dense eigensolver cap."""


class StepTooLarge(NumericError):
    """Integrator step left the invariant box by more than the tolerance."""


class SingularSolve(NumericError):
    """A linear system that must be nonsingular was not."""


class OnSwitchingSurface(NumericError):
    """Jacobian requested where some opinion is exactly zero."""


class EquilibriumInconsistency(NumericError):
    """An accepted equilibrium violates a guaranteed property."""


class StabilityDisagreement(NumericError):
    """R-based and Jacobian-based verdicts disagree outside the marginal band."""


class HorizonExceeded(NumericError):
    """No equilibrium was reached within the simulation horizon budget."""


class InfeasibleError(ToolkitError):
    exit_code = 4


class RegimeUnreachable(InfeasibleError):
    """Scenario generation could not hit the requested regime."""


class Infeasible(InfeasibleError):
    """No intervention satisfies the eradication criterion."""


class RegimeMismatch(InfeasibleError):
    """The system is not in the regime the operation requires."""
