"""Exception hierarchy shared by every mcam module."""


class MCAMError(Exception):
    """Base class for all errors raised by mcam."""


class ContractError(MCAMError, ValueError):
    """A precondition on the inputs of an operation was violated."""


class BoundsError(MCAMError, IndexError):
    """A slice index fell outside the tensor dimensions."""

    def __init__(self, mode, index, size):
        self.mode = mode
        self.index = index
        self.size = size
        super().__init__(f"mode-{mode} index {index} out of range [0, {size})")


class FormatError(MCAMError, ValueError):
    """A tensor or CSV file could not be parsed."""

    def __init__(self, message, offset=None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)


class DegenerateInputError(MCAMError, ValueError):
    """The input carries no signal (e.g. an all-zero tensor or affinity)."""


class NumericError(MCAMError, ArithmeticError):
    """An iterative numerical routine failed to converge."""

    def __init__(self, message, iterations=None):
        self.iterations = iterations
        if iterations is not None:
            message = f"{message} after {iterations} iterations"
        super().__init__(message)


class ConfigError(MCAMError, ValueError):
    """A run or sweep configuration is invalid."""
