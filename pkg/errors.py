"""Exception types shared by the cbct modules."""


class CbctError(Exception):
    """Base class for every error the toolkit raises on purpose."""


class InvalidParameterError(CbctError, ValueError):
    pass


class ConvergenceError(CbctError):
    pass


class NoSignChangeError(CbctError, ValueError):
    pass


class ApproximationDomainError(CbctError, ValueError):
    """Raised when the good-channel approximation is used outside z <= 1."""


class UnreachableGainError(CbctError):
    pass


class DimensionMismatchError(CbctError, ValueError):
    pass


class UnboundedProblemError(CbctError):
    pass


class NoRouteError(CbctError):
    pass


class NoSuchLinkError(CbctError, KeyError):
    pass


class FlowInvariantError(CbctError):
    pass


class DuplicatePositionError(CbctError, ValueError):
    pass
