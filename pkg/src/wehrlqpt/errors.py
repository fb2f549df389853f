"""Exception types shared across the package."""


class WehrlError(Exception):
    """Base class for all package errors."""


class ParameterError(WehrlError, ValueError):
    """Model parameters or basis sizes outside their valid domain."""


class ConvergenceError(WehrlError, RuntimeError):
    """An iterative procedure ran out of budget before meeting its tolerance.

    ``diagnostics`` carries whatever the procedure knew when it gave up
    (best residual, last values, cutoffs tried, ...).
    """

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


class GeometryError(WehrlError, ValueError):
    """A quadrature grid does not match the phase space of a state."""


class ConfigError(WehrlError, ValueError):
    """A run configuration failed validation.

    ``violations`` lists every problem found, not only the first.
    """

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))
