"""Exception types shared across the package."""


class DegmoyalError(Exception):
    """Base class for all errors raised by this package."""


class MalformedGraph(DegmoyalError):
    """Graph description violates the file schema or port discipline."""


class InvalidMap(DegmoyalError):
    """Combinatorial map is inconsistent (e.g. odd Euler defect)."""


class UnknownEdge(DegmoyalError):
    pass


class MissingScale(DegmoyalError):
    """Scale attribution does not cover an edge, or has the wrong shape."""


class AttributionMismatch(DegmoyalError):
    """Attribution refers to unknown edges or wrong segment counts."""


class NotGeneralised(DegmoyalError):
    pass


class Disconnected(DegmoyalError):
    pass


class InconsistentAssignment(DegmoyalError):
    """Momentum assignment violates a vertex conservation constraint."""


class InconsistentNode(DegmoyalError):
    """Power-counting node data is self-contradictory."""


class InvalidTopology(DegmoyalError):
    pass


class QuadratureFailure(DegmoyalError):
    pass


class UnboundedRatio(DegmoyalError):
    pass


class MCVarianceTooHigh(DegmoyalError):
    pass
