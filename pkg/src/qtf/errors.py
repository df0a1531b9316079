"""Exception types shared across the solver modules."""


class QtfError(Exception):
    """Base class for solver failures."""


class StepRejected(QtfError):
    """A time step violated a stability limit; the caller may retry smaller."""

    def __init__(self, message, dt, dt_limit):
        super().__init__(message)
        self.dt = dt
        self.dt_limit = dt_limit


class SolverError(QtfError):
    """A linear solve failed; carries the residual that was reached."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class ConfigError(QtfError):
    """Invalid run configuration or manifest."""
