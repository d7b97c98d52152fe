"""Exception hierarchy.

Everything derives from :class:`EinError` so callers (and the CLI) can tell
operational failures apart from mathematical verdicts, which are returned as
values rather than raised.
"""


class EinError(Exception):
    """Base class for all library errors."""


class ValidationError(EinError, ValueError):
    """Malformed input: wrong shape, non-unit vector, bad parameter."""


class DegenerateRayError(EinError):
    """A null vector whose time or space half vanished."""


class PreconditionError(EinError):
    """An operation was called outside the hypotheses it needs."""


class PrecisionError(EinError):
    """A numerically ambiguous decision (e.g. a winding cocycle near pi)."""


class NonUniquenessError(EinError):
    """Correspondences do not determine a unique conformal transformation."""


class OrientationError(EinError):
    """Fitted scales disagree in sign, or a transform is not liftable."""


class DomainError(EinError):
    """A point lies outside the chart domain of an inverse map."""


class NonConvergenceError(EinError):
    """A sequence of curves failed to produce a convergent subsequence."""


class ImpossibilityError(EinError):
    """Requested construction cannot exist (e.g. perturbing a null geodesic)."""


class ResolutionError(EinError):
    """A sampled boundary point could not be decided at the given mesh."""


class DomainTooThinError(EinError):
    """Rejection sampling efficiency fell below the supported floor."""


class GluingFailure(EinError):
    """Union of two domains failed re-validation; carries the report."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
