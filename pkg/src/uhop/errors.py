"""Exception types raised across the package."""


class UHopError(Exception):
    """Base class for all package errors."""


class MalformedMagic(UHopError, ValueError):
    pass


class TruncatedPayload(UHopError, ValueError):
    pass


class EmptyDataset(UHopError, ValueError):
    pass


class DimensionError(UHopError, ValueError):
    pass


class DegenerateSet(UHopError, ValueError):
    """Raised when an operation needs at least two memories."""


class AlphaError(UHopError, ValueError):
    pass


class RankError(UHopError, ValueError):
    pass


class BisectionFailure(UHopError, ArithmeticError):
    pass


class LineSearchFailure(UHopError, ArithmeticError):
    pass
