"""Exception hierarchy.

Everything raised on purpose by the library derives from :class:`OpgaugeError`.
The CLI maps :class:`InputError` (and its subclasses) to exit status 2 and any
other :class:`OpgaugeError` to exit status 3.
"""


class OpgaugeError(Exception):
    pass


class InputError(OpgaugeError, ValueError):
    """Malformed or inconsistent user input (shapes, fields, files)."""

    def __init__(self, message, path=None):
        self.detail = message
        self.path = path
        if path:
            message = f"{path}: {message}"
        super().__init__(message)

    def nested(self, prefix):
        """Same error with its field path placed under ``prefix``."""
        path = prefix if not self.path else f"{prefix}.{self.path}"
        return type(self)(self.detail, path)


class EmptyOperatorError(InputError):
    pass


class ParameterError(InputError):
    pass


class ThresholdError(InputError):
    """Threshold policy that cannot be resolved, e.g. epsilon below delta."""


class CompositionError(InputError):
    pass


class UnsupportedError(OpgaugeError):
    """Requested route or stage is not available for this operator."""


class InsufficientSpectrumError(OpgaugeError):
    pass


class StrategyError(OpgaugeError):
    pass


class StageError(OpgaugeError):
    pass
