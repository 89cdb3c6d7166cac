"""Exception hierarchy shared across the package."""


class LVSelectError(Exception):
    """Base class for all package errors."""


class InvalidInput(LVSelectError, ValueError):
    pass


class DegenerateNullclines(LVSelectError):
    """The two nullclines are parallel or identical."""


class BlowUp(LVSelectError):
    """An integrated solution left the admissible box."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class OutOfRange(LVSelectError, ValueError):
    pass


class InvalidWindow(LVSelectError, ValueError):
    pass


class ConfigurationError(LVSelectError, ValueError):
    pass


class NumericalOverflow(LVSelectError, FloatingPointError):
    """A loss term became non-finite; ``term`` names the offender."""

    def __init__(self, message, term=None, history=None):
        super().__init__(message)
        self.term = term
        self.history = history if history is not None else []


class DegenerateRecovery(LVSelectError):
    pass


class IllConditioned(LVSelectError):
    pass


class NothingToEliminate(LVSelectError):
    pass


class ConfigError(LVSelectError, ValueError):
    """Experiment configuration could not be parsed; ``key`` names the culprit."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key
