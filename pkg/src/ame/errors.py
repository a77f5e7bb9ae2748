"""Exception and warning types shared across the market, solver, and CLI layers."""


class AmeError(Exception):
    """Base class for all errors raised by this package."""


class EmptyMarket(AmeError):
    """Market has no exchanges."""


class NegativeLambda(AmeError):
    """An exchange was configured with a non-positive traffic share."""


class IndexOutOfRange(AmeError, IndexError):
    """Exchange or breakpoint index outside 1..m."""


class NotRegular(AmeError):
    """Virtual value is not strictly increasing on the validation grid."""


class SolverDiverged(AmeError):
    """Breakpoint search or segment integration failed to meet tolerance."""


class DegenerateSegment(AmeError):
    """A segment demands a positive start bid at a point of zero win probability."""


class HypothesisViolated(AmeError):
    """A theorem verifier was called on a market outside the theorem's hypothesis."""


class ParseError(AmeError):
    """Scenario input is not valid JSON."""


class SchemaError(AmeError):
    """Scenario JSON contains unknown keys or has the wrong schema version."""


class ValidationError(AmeError):
    """Scenario JSON is well-formed but a field value is invalid."""


class ReserveAboveSupport(UserWarning):
    """A reserve at or above the top of the value support: that exchange never sells."""
