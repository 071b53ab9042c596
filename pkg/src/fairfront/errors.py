"""Exception hierarchy shared across the package."""


class FairFrontError(Exception):
    """Base class for all package errors."""


class SchemaError(FairFrontError):
    """Schema document or CSV header is inconsistent."""


class ParseError(FairFrontError):
    """A CSV cell could not be parsed."""

    def __init__(self, message, row=None):
        super().__init__(message if row is None else f"row {row}: {message}")
        self.row = row


class RangeError(FairFrontError):
    """A numeric value falls outside every declared interval."""


class DegenerateDistributionError(FairFrontError):
    """Some (group, label) cell has zero empirical mass."""


class ImputationError(FairFrontError):
    """A column has no observed value to impute from."""


class SolverError(FairFrontError):
    """The LP solver broke down (distinct from infeasible/unbounded)."""


class CutSearchError(FairFrontError):
    """Every restart of the cut search failed."""


class OracleCapError(FairFrontError):
    """Problem too large for the dense exact oracle or brute force."""
