"""Exception hierarchy. CLI exit codes are attached to the classes."""


class AirylineError(Exception):
    exit_code = 1


class ConfigError(AirylineError, ValueError):
    """Invalid parameters, detected before any sampling starts."""

    exit_code = 2


class PreconditionError(ConfigError):
    pass


class InsufficientDataError(ConfigError):
    pass


class RangeError(ConfigError):
    """Argument outside the documented numerical range."""


class NumericalError(AirylineError, ArithmeticError):
    exit_code = 3

    def __init__(self, message, matrix=None):
        super().__init__(message)
        self.matrix = matrix


class RejectionFailure(AirylineError):
    """Rejection sampler ran out of attempts."""

    exit_code = 3

    def __init__(self, attempts, where=None):
        msg = f"no accepted sample after {attempts} attempts"
        if where is not None:
            msg += f" ({where})"
        super().__init__(msg)
        self.attempts = attempts
        self.where = where
