"""Exception types raised across the package."""


class PsGraphError(Exception):
    """Base class for all package errors."""


# graph construction
class GraphError(PsGraphError):
    pass


class NotRegular(GraphError):
    pass


class NotSimple(GraphError):
    pass


class NotConnected(GraphError):
    pass


class QTooSmall(GraphError):
    pass


class UnknownName(GraphError):
    pass


class ParityError(GraphError):
    pass


class RetryExhausted(GraphError):
    pass


class MalformedInput(GraphError):
    pass


# numerics
class NumericalError(PsGraphError):
    pass


class ConvergenceFailure(NumericalError):
    pass


class ExceptionalParameter(NumericalError):
    pass


class NotAnEigenfunction(NumericalError):
    pass


class JordanBlock(NumericalError):
    pass


class SingularGram(NumericalError):
    pass


class BandEdge(NumericalError):
    pass


# cover oracle
class CoverError(PsGraphError):
    pass


class DepthTooLarge(CoverError):
    pass


class CylinderTooShallow(CoverError):
    pass


class CylindersOverlap(CoverError):
    pass


class DepthTooSmall(CoverError):
    pass


class SupportTooWide(CoverError):
    pass


class TemperedParameter(CoverError):
    pass
