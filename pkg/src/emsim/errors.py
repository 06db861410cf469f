"""Exception hierarchy shared by all emsim modules."""


class EmsimError(Exception):
    """Base class for all toolkit errors."""


class DimensionError(EmsimError, ValueError):
    """Matrix or signal dimensions are inconsistent with the operation."""


class NumericalError(EmsimError):
    """A numerical routine failed to converge or to meet its residual bound."""


class SingularEquationError(NumericalError):
    """The linear matrix equation has no (unique) solution."""


class SynthesisError(EmsimError):
    """Controller or estimator synthesis is infeasible for the given system."""


class WeightError(SynthesisError):
    """A cost or noise weight violates its definiteness requirements."""


class SimulationDiverged(EmsimError):
    """The integrated state left the admissible region.

    Carries the simulation time at which divergence was detected.
    """

    def __init__(self, message: str, time: float):
        super().__init__(message)
        self.time = time


class ConfigError(EmsimError):
    """Configuration text is malformed or violates an invariant."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        if line is not None:
            loc = f"line {line}" + (f", column {column}" if column is not None else "")
            message = f"{message} ({loc})"
        super().__init__(message)
        self.line = line
        self.column = column
