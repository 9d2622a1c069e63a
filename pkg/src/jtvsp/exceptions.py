"""Exception types raised by jtvsp."""


class JtvspError(Exception):
    """Base class for library errors."""


class InputError(JtvspError, ValueError):
    """Invalid user input: shapes, files, parameters."""


class GraphConstructionError(InputError):
    """A graph could not be built from the given coordinates.

    Attributes
    ----------
    vertex : int or None
        Index of the offending vertex, when one is known.
    """

    def __init__(self, message, vertex=None):
        super().__init__(message)
        self.vertex = vertex


class NonRealOutputError(JtvspError, ValueError):
    """A filter meant to map real signals to real signals produced a
    significant imaginary part (response not symmetric in time frequency)."""


class ConvergenceError(JtvspError, RuntimeError):
    """An iterative solve did not reach its residual tolerance.

    The partial :class:`~jtvsp.wiener.SolveReport` is attached as ``report``.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
