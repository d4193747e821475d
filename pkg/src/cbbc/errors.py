"""Exception hierarchy shared by every module of the toolkit."""


class CbbcError(Exception):
    """Base class for all toolkit errors."""


class InputError(CbbcError):
    """Malformed or inconsistent user input."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ParseError(InputError):
    pass


class DomainError(CbbcError):
    """A state left the declared state set."""


class UnsupportedError(CbbcError):
    pass


class LabelingError(CbbcError):
    pass


class SolverError(CbbcError):
    """The linear solver failed for numerical reasons (not infeasibility)."""


class ResourceError(CbbcError):
    pass


class LiftError(CbbcError):
    pass
