"""Exception types shared across the package."""


class VagtError(Exception):
    """Base class for all package errors."""


class NonHermitianError(VagtError):
    pass


class BadDimensionError(VagtError):
    pass


class SizeMismatchError(VagtError):
    pass


class TableTooLargeError(VagtError):
    pass


class AsymmetricGeneratorError(VagtError):
    pass


class NumericalBreakdownError(VagtError):
    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class OnlyTwoQubitsError(VagtError):
    pass


class BadEffectiveOperatorError(VagtError):
    pass


class ConfigError(VagtError):
    pass
