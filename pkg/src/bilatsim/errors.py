"""Exception types shared across the package."""


class BilatsimError(Exception):
    """Base class for all errors raised by this package."""


class NonFiniteInputError(BilatsimError, ValueError):
    """A numeric argument was NaN or infinite."""


class ValidationError(BilatsimError, ValueError):
    """A configuration or register value violates a documented constraint."""


class StateError(BilatsimError, RuntimeError):
    """An operation was invoked in a state that cannot serve it."""


class DivergenceError(BilatsimError, RuntimeError):
    """A simulated position left the sane range; carries the failing step."""

    def __init__(self, message: str, step: int):
        super().__init__(message)
        self.step = step


class AnalysisError(BilatsimError, ValueError):
    """A metric was requested on a trace that cannot support it."""


class UnknownRegisterError(BilatsimError, KeyError):
    """A register name is not part of the register map."""


class ReadOnlyRegisterError(BilatsimError, PermissionError):
    """A client tried to write a register only the servo may update."""


class ConfigError(BilatsimError, ValueError):
    """Configuration text could not be parsed; carries a line number."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class TraceFormatError(BilatsimError, ValueError):
    """A delimited trace file violates the documented schema."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line
