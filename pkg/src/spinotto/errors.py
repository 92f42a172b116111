"""Exception types shared across the engine modules."""


class EngineError(Exception):
    """Base class for all engine-specific failures."""


class NonPhysicalState(EngineError):
    """A density matrix (or its 5-vector image) left the physical cone."""


class InvalidTemperature(EngineError):
    """Bath temperature must be strictly positive."""


class DegenerateScale(EngineError):
    """An operation required a nonzero instantaneous energy scale."""


class NoContraction(EngineError):
    """The composed cycle map does not contract, so no unique limit cycle exists."""


class InvalidSigma(EngineError):
    """Segment-time noise amplitude incompatible with the selected distribution."""


class InfeasibleSchedule(EngineError):
    """No valid time allocation could be produced for the requested cycle time."""


class ParseError(EngineError):
    """Malformed configuration text; carries the offending line number."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationError(EngineError):
    """A configuration value violates a named constraint."""
