"""Exception types shared across the package."""


class LagrangasError(Exception):
    """Base class for all package-specific errors."""


class ParamError(LagrangasError, ValueError):
    """A physical parameter violates its positivity constraint."""

    def __init__(self, field, message):
        super().__init__(message)
        self.field = field


class RegimeError(ParamError):
    """Parameters are outside the degenerate-conductivity regime (beta > 0)."""


class ConstructionError(LagrangasError, ValueError):
    """Initial data cannot be built (positivity or normalization failure)."""


class FormatError(LagrangasError, ValueError):
    """A table file does not match the expected layout."""


class ConfigError(LagrangasError, ValueError):
    """A run configuration is malformed; carries the offending key and line."""

    def __init__(self, message, key=None, line=None):
        loc = ""
        if key is not None:
            loc += f" (key {key!r}"
            loc += f", line {line})" if line is not None else ")"
        elif line is not None:
            loc += f" (line {line})"
        super().__init__(message + loc)
        self.key = key
        self.line = line


class StepRejected(LagrangasError):
    """A time step was refused; the caller may retry with a smaller dt.

    ``dt_stab`` carries the computed stability limit when the rejection came
    from the explicit scheme's step-size bound, else None.
    """

    def __init__(self, message, dt_stab=None):
        super().__init__(message)
        self.dt_stab = dt_stab


class NumericalBreakdown(LagrangasError):
    """A linear solve hit a non-positive pivot; the state is unusable."""


class SimulationFailure(LagrangasError):
    """Time integration could not continue; carries the last good state and,
    when available, the partial trajectory accumulated so far."""

    def __init__(self, message, last_state=None, trajectory=None):
        super().__init__(message)
        self.last_state = last_state
        self.t = None if last_state is None else last_state.t
        self.trajectory = trajectory


class InsufficientDataError(LagrangasError, ValueError):
    """Too few usable samples for a fit."""


class NoRootsError(LagrangasError, ValueError):
    """x - ln x = e0 has no roots (e0 below the minimum value 1)."""
