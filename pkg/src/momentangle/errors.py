"""Exception hierarchy.

Every error raised by the library derives from :class:`MomentAngleError`, so
callers (the CLI in particular) can separate library failures from bugs.
"""


class MomentAngleError(Exception):
    """Base class for all library errors."""


# geometry

class PolytopeError(MomentAngleError, ValueError):
    """The H-representation does not describe a valid simple polytope."""


class NotFullRank(PolytopeError):
    pass


class Unbounded(PolytopeError):
    pass


class NotSimple(PolytopeError):
    pass


class RedundantFacet(PolytopeError):
    pass


class Empty(PolytopeError):
    pass


class SingularChartMatrix(MomentAngleError):
    pass


class NotInImage(MomentAngleError, ValueError):
    pass


class NotEquivalent(MomentAngleError):
    pass


class SearchBudgetExceeded(MomentAngleError):
    pass


class InputParseError(MomentAngleError, ValueError):
    pass


# manifold

class OutsidePolytope(MomentAngleError, ValueError):
    pass


class NotOnManifold(MomentAngleError, ValueError):
    pass


class RankDeficient(MomentAngleError):
    pass


class RejectionBudgetExceeded(MomentAngleError):
    pass


# atlas

class NotInChart(MomentAngleError, ValueError):
    pass


class NotInChartDomain(MomentAngleError, ValueError):
    pass


class NotInOverlap(MomentAngleError, ValueError):
    pass


class SmoothnessViolation(MomentAngleError):
    def __init__(self, message, worst_probe=None, residual=None):
        super().__init__(message)
        self.worst_probe = worst_probe
        self.residual = residual


# collar

class MonotonicityFailure(MomentAngleError):
    pass


class WidthTooLarge(MomentAngleError):
    pass


class LeftPolytope(MomentAngleError):
    pass


class CollarInversionFailure(MomentAngleError):
    pass


# diffeo

class NotAffinelyEquivalent(MomentAngleError):
    pass


class TargetMembershipViolation(MomentAngleError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class C1Violation(MomentAngleError):
    def __init__(self, message, worst_probe=None, pair=None, residual=None):
        super().__init__(message)
        self.worst_probe = worst_probe
        self.pair = pair
        self.residual = residual


class ExternalMapError(MomentAngleError):
    """An external evaluator failed or answered outside the line protocol."""
