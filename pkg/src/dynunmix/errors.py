"""Exception hierarchy shared by all modules."""


class UnmixError(Exception):
    """Base class for every error raised by dynunmix."""


class DimensionError(UnmixError, ValueError):
    """Array shapes are inconsistent with each other or with the declared dims."""


class ConfigurationError(UnmixError, ValueError):
    """A generator or solver parameter is outside its admissible range."""


class DomainError(UnmixError, ValueError):
    """A function was evaluated outside its mathematical domain."""


class NumericError(UnmixError, FloatingPointError):
    """Non-finite values were found where finite ones are required."""


class DegeneracyError(UnmixError, ValueError):
    """Endmember extraction hit a rank-deficient configuration."""


class FormatError(UnmixError, ValueError):
    """A file does not follow the expected on-disk format.

    Parameters
    ----------
    message : str
        Human readable description.
    offset : int
        Byte offset in the file where the problem was detected.
    """

    def __init__(self, message, offset=0):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset
