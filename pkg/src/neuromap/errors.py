"""Exception types shared across the toolkit."""


class NeuromapError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(NeuromapError):
    """Input data violates a structural or semantic constraint."""


class ParseError(ValidationError):
    """A file could not be parsed; carries the offending line number."""

    def __init__(self, message: str, path=None, line: int | None = None):
        loc = ""
        if path is not None:
            loc = f"{path}:"
        if line is not None:
            loc += f"{line}: "
        elif loc:
            loc += " "
        super().__init__(f"{loc}{message}")
        self.path = path
        self.line = line


class InfeasibleError(NeuromapError):
    """The requested problem has no feasible solution (e.g. fewer crossbars than clusters)."""


class SimulationStall(NeuromapError):
    """The interconnect simulator made no progress for too many cycles."""
