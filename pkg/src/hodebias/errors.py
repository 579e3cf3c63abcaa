"""Exception types raised across the package."""


class EstimationError(ValueError):
    """Base class for all domain errors raised by hodebias."""


class DimensionMismatch(EstimationError):
    pass


class ArityExceedsSample(EstimationError):
    pass


class EnumerationCapExceeded(EstimationError):
    pass


class EmptySample(EstimationError):
    pass


class AsymmetricForm(EstimationError):
    pass


class PilotOutsideDomain(EstimationError):
    pass


class OrderExceedsFamily(EstimationError):
    pass


class OrderNotCovered(EstimationError):
    pass


class UnequalSplit(EstimationError):
    pass


class SingularInput(EstimationError):
    pass


class SingularShift(SingularInput):
    pass


class NonPositiveDeterminant(EstimationError):
    pass


class DomainTooTight(EstimationError):
    pass


class TooManyBlocks(EstimationError):
    pass


class NonSymmetric(EstimationError):
    pass


class InsufficientData(EstimationError):
    pass


class DegenerateResample(EstimationError):
    pass


class DimensionTooSmall(EstimationError):
    pass


class EmptyStudy(EstimationError):
    pass


class ConfigError(EstimationError):
    pass
