"""Exception and warning types shared across the package."""


class RegPoisonError(Exception):
    """Base class for all errors raised by this package."""


# dataset pipeline
class MissingFile(RegPoisonError):
    pass


class MissingTargetColumn(RegPoisonError):
    pass


class EmptyAfterFiltering(RegPoisonError):
    pass


class DimensionMismatch(RegPoisonError):
    pass


class ConstantTargetColumn(RegPoisonError):
    pass


class TooFewRows(RegPoisonError):
    pass


# regressors
class SingularSystem(RegPoisonError):
    pass


class NonConvergenceWarning(UserWarning):
    """Iteration budget exhausted; the best iterate is returned anyway."""


# attacks
class SubstituteTooSmall(RegPoisonError):
    pass


class DegenerateDomain(RegPoisonError):
    pass


class OracleFailure(RegPoisonError):
    pass


class NotPositiveDefinite(RegPoisonError):
    pass


# defenses
class TooFewRetained(RegPoisonError):
    pass


# metrics
class LengthMismatch(RegPoisonError):
    pass


class EmptyInput(RegPoisonError):
    pass


# harness
class MissingCells(RegPoisonError):
    pass


class ConfigInvalid(RegPoisonError):
    pass


class DatasetUnavailable(RegPoisonError):
    pass
