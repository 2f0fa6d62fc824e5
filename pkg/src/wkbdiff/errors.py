"""Exception types shared by the wkbdiff modules."""


class WkbError(Exception):
    """Base class for all wkbdiff computation errors."""


class EvaluationRangeError(WkbError):
    """Evaluating a trigonometric polynomial would overflow double precision."""


class DegenerateInputError(WkbError):
    """Input violates a structural precondition (zero polynomial, defective matrix, ...)."""


class BranchError(WkbError):
    """Analytic continuation of the momentum failed or is ambiguous."""


class PoleProximityError(WkbError):
    """A requested evaluation point or path sits too close to a pole or turning point."""


class QuadratureError(WkbError):
    """Adaptive quadrature failed to reach the requested tolerance."""


class SearchError(WkbError):
    """Root search could not account for all roots predicted by the argument principle."""
