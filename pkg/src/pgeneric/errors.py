"""Exception hierarchy shared by every module.

The CLI maps these to exit codes: precondition violations exit with 2,
resource caps with 3. I/O failures surface as ``OSError`` and exit with 4.
"""


class PreconditionError(ValueError):
    """An argument violates an operation's documented precondition."""


class DigitFormatError(PreconditionError):
    """A digit file or symbol cannot be decoded for the requested base."""


class ResourceCapError(RuntimeError):
    """A request would exceed a configured memory or enumeration cap."""


class NoAdmissibleDigit(RuntimeError):
    """The digit-selection algorithm found no branch above its threshold."""

    def __init__(self, message, step=None, measures=None, threshold=None):
        super().__init__(message)
        self.step = step
        self.measures = measures
        self.threshold = threshold
