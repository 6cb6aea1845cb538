"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid experiment configuration: message names the offending field."""


class NumericalError(RuntimeError):
    """A numerical routine failed; ``context`` carries 'module.operation'."""

    def __init__(self, context: str, message: str):
        self.context = context
        super().__init__(f"{context}: {message}")


class StepUnderflowError(NumericalError):
    """Integrator step size underflowed (usually an evaluator singularity)."""


class ConvergenceError(NumericalError):
    """An iterative scheme exhausted its budget without meeting tolerance."""
