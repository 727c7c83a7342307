"""Exception hierarchy shared by all modules."""


class WeylSamplError(Exception):
    """Base class for every error raised by this package."""


class InvalidInputError(WeylSamplError, ValueError):
    pass


class UnsupportedModelError(InvalidInputError):
    pass


class OutOfBandError(InvalidInputError):
    """Requested band exceeds the completeness threshold of a basis."""


class ParseError(InvalidInputError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NumericalFailure(WeylSamplError, RuntimeError):
    """A numerical routine did not produce a trustworthy result."""


class TruncationUnsafeError(NumericalFailure):
    pass


class NotASamplingSetError(NumericalFailure):
    def __init__(self, message, sigma_min=None, required_points=None):
        self.sigma_min = sigma_min
        self.required_points = required_points
        super().__init__(message)


class SearchFailure(NumericalFailure):
    pass


class FitFailure(NumericalFailure):
    pass
