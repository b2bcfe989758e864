"""Exception hierarchy.

Input-shaped problems derive from :class:`InputError`, numerical
failures from :class:`SolverError`; the CLI maps the two branches to
distinct exit codes.
"""


class GraphPotentialError(Exception):
    """Base class for all package errors."""


class InputError(GraphPotentialError):
    """Invalid graph data, vertex keys, or configuration."""


class SolverError(GraphPotentialError):
    """A numerical routine could not meet its contract."""


class NonPositiveWeight(InputError):
    pass


class NonPositiveMeasure(InputError):
    pass


class SelfLoop(InputError):
    pass


class DuplicateEdge(InputError):
    pass


class AsymmetricInput(InputError):
    pass


class UnknownVertex(InputError):
    pass


class ParseError(InputError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class InvalidClampRange(InputError):
    pass


class Disconnected(InputError):
    pass


class DisconnectedWindow(InputError):
    pass


class NotBoundaryVertex(InputError):
    pass


class WindowTooSmall(InputError):
    pass


class PotentialPresent(InputError):
    pass


class SingularSystem(SolverError):
    pass


class NonConvergence(SolverError):
    def __init__(self, message: str, iterations: int = 0):
        super().__init__(message)
        self.iterations = iterations


class NotMonotone(SolverError):
    pass


class TimeOverflow(SolverError):
    pass
