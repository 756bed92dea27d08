"""Exception hierarchy for collrisk."""


class CollRiskError(ValueError):
    """Base class for all input and numerical errors raised by collrisk."""


class NonGridInput(CollRiskError):
    pass


class BadMass(CollRiskError):
    pass


class BadSpec(CollRiskError):
    pass


class ZeroVariance(CollRiskError):
    pass


class EmptySupport(CollRiskError):
    pass


class Underflow(CollRiskError):
    pass


class TooLarge(CollRiskError):
    pass


class MassAtZero(CollRiskError):
    pass


class DegenerateP(CollRiskError):
    pass


class DomainError(CollRiskError):
    pass


class QuadratureFailure(CollRiskError):
    pass


class InvalidDistortion(CollRiskError):
    pass


class NonConvergence(CollRiskError):
    pass


class DegenerateData(CollRiskError):
    pass


class NotStandardized(CollRiskError):
    pass


class InsufficientPoints(CollRiskError):
    pass


class NonPositiveError(CollRiskError):
    pass
